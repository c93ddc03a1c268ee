// One PASS/FAIL line per acceptance criterion; exit status 1 if any fail.
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <numeric>
#include <sstream>

#include "crisisspot/cli.hpp"
#include "crisisspot/grad_check.hpp"
#include "crisisspot/synthetic.hpp"
#include "crisisspot/training.hpp"
#include "micro_model.hpp"
#include "test_util.hpp"

using namespace crisisspot;
namespace fs = std::filesystem;
using testutil::random_matrix;

namespace {

// Tolerances and budgets.
constexpr double kShapeBudgetSeconds = 10.0;
constexpr double kGradBudgetSeconds = 120.0;
constexpr double kGradTolDouble = 1e-6;
constexpr double kGradTolFloat = 1e-3;
constexpr std::size_t kGradProbes = 300;
constexpr double kRowSumTol = 1e-6;
constexpr double kNegationTol = 1e-6;
constexpr double kEntropySlack = 1e-12;
constexpr double kUnitNormTol = 1e-6;
constexpr double kEquivarianceTol = 1e-12;
constexpr double kScfTol = 1e-9;
constexpr double kKappaTol = 1e-9;
constexpr double kTrainAccMin = 0.95;
constexpr double kValAccMin = 0.90;
constexpr double kHumanitarianValAccMin = 0.80;
constexpr double kLearningBudgetSeconds = 300.0;

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
    std::ostringstream s;
    s << std::setprecision(prec) << v;
    return s.str();
}

// 1 ------------------------------------------------------------------------
Outcome shape_fidelity() {
    const auto t0 = std::chrono::steady_clock::now();
    const CorpusDims cd{128, 768, 1024, 512};
    ModelOptions opt;
    auto model = build_model<float>(ModelDims::from_profile("paper", cd), opt);
    std::mt19937_64 rng(1);
    const std::size_t B = 2;
    BatchInputs<float> in;
    in.text = random_matrix<float>(B * cd.seq_len, cd.text_dim, rng);
    in.image = random_matrix<float>(B * cd.seq_len, cd.image_dim, rng);
    in.nodes = {0, 1};

    // SHV from a real record.
    PostRecord r;
    r.post_id = "p1";
    r.user_id = "u1";
    r.text = "flood rescue now, stay safe";
    r.informative_label = 1;
    const auto lex = synthetic_lexicons();
    const auto norm = social::fit_norm_stats({r}, lex.crisis);
    const auto shv = social::build_shv(r, lex, norm).flatten();
    in.shv = Tensor2D(B, shv.size());
    for (std::size_t b = 0; b < B; ++b)
        for (std::size_t c = 0; c < shv.size(); ++c) in.shv(b, c) = static_cast<float>(shv[c]);

    GraphInputs<float> g;
    g.joint_text = random_matrix<float>(B, cd.joint_dim, rng);
    g.joint_image = random_matrix<float>(B, cd.joint_dim, rng);
    g.text_neighbors = sample_neighborhoods(similarity_graph(g.joint_text), 2, 10, std::nullopt);
    g.image_neighbors = sample_neighborhoods(similarity_graph(g.joint_image), 2, 10, std::nullopt);

    Tape<float> tape;
    auto out = forward(model, tape, in, g, Mode::eval, rng);
    const std::size_t fav = out.fav.cols();
    const std::size_t jfln_in = model.fusion.jfln.in();
    const std::size_t concat = model.fusion.maln.out() + out.shv_hidden.cols() + out.graph_hidden.cols();
    const std::size_t gfln = out.graph_hidden.cols();
    const double secs = seconds_since(t0);
    const bool ok = fav == 1792 && shv.size() == 21 && in.shv.cols() == 21 && jfln_in == 264 && concat == 264 &&
                    gfln == 128 && secs < kShapeBudgetSeconds;
    return {ok, "fav=" + std::to_string(fav) + " shv=" + std::to_string(shv.size()) + " jfln_in=" +
                    std::to_string(jfln_in) + " gfln_out=" + std::to_string(gfln) + " (" + fmt(secs, 3) + " s)"};
}

// 2 ------------------------------------------------------------------------
Outcome gradient_correctness() {
    const auto t0 = std::chrono::steady_clock::now();
    double worst_d = 0, worst_f = 0;
    std::size_t min_probes = kGradProbes;
    for (Task task : {Task::informative, Task::humanitarian}) {
        auto ds = testutil::micro_setup<double>(task, 0.2);
        auto dloss = [&](Tape<double>& t) { return testutil::micro_loss(ds, t); };
        GradCheckOptions o;
        o.probe_count = kGradProbes;
        o.eps = 1e-5;
        o.denominator_floor = 1e-4;
        auto rd = grad_check<double>(dloss, ds.model.store, o);

        auto fs_ = testutil::micro_setup<float>(task, 0.2);
        auto floss = [&](Tape<float>& t) { return testutil::micro_loss(fs_, t); };
        GradCheckOptions m;
        m.probe_count = kGradProbes;
        m.denominator_floor = 1e-4;
        auto rf = grad_check_mixed(floss, fs_.model.store, dloss, ds.model.store, m);
        worst_d = std::max(worst_d, rd.max_relative_error);
        worst_f = std::max(worst_f, rf.max_relative_error);
        min_probes = std::min({min_probes, rd.probes, rf.probes});
    }
    const double secs = seconds_since(t0);
    const bool ok = worst_d < kGradTolDouble && worst_f < kGradTolFloat && min_probes >= 200 &&
                    secs < kGradBudgetSeconds;
    return {ok, "double " + fmt(worst_d, 3) + " < " + fmt(kGradTolDouble) + ", float " + fmt(worst_f, 3) + " < " +
                    fmt(kGradTolFloat) + ", probes " + std::to_string(min_probes) + " (" + fmt(secs, 3) + " s)"};
}

// 3 ------------------------------------------------------------------------
Outcome attention_invariants() {
    std::mt19937_64 rng(3);
    std::uniform_int_distribution<std::size_t> dsz(2, 8), wsz(2, 6);
    double worst_sum = 0, worst_neg = 0, worst_entropy = 0;
    for (int trial = 0; trial < 1000; ++trial) {
        const std::size_t d = dsz(rng), dt = wsz(rng), dv = wsz(rng);
        Tape<double> t;
        auto s = t.constant(random_matrix(d, d, rng, -3, 3));
        auto ht = t.constant(random_matrix(d, dt, rng));
        auto hv = t.constant(random_matrix(d, dv, rng));
        auto ham = harmonious_attention(s, ht, hv, kHarmoniousTemperature);
        auto cam = contrary_attention(s, ht, hv, kContraryTemperature);
        for (const auto* w : {&ham.weights.value(), &cam.weights.value()})
            for (std::size_t r = 0; r < d; ++r) {
                double sum = 0;
                for (double v : w->row(r)) sum += v;
                worst_sum = std::max(worst_sum, std::abs(sum - 1.0));
            }
        auto ham_eq = harmonious_attention(s, ht, hv, 1.0);
        auto cam_eq = contrary_attention(s, ht, hv, 1.0, false);
        for (std::size_t i = 0; i < ham_eq.text.value().size(); ++i)
            worst_neg = std::max(worst_neg, std::abs(cam_eq.text.value()[i] + ham_eq.text.value()[i]));
        for (std::size_t i = 0; i < ham_eq.vis.value().size(); ++i)
            worst_neg = std::max(worst_neg, std::abs(cam_eq.vis.value()[i] + ham_eq.vis.value()[i]));
        auto hot = harmonious_attention(s, ht, hv, 1.65).weights.value();
        auto cold = harmonious_attention(s, ht, hv, 0.75).weights.value();
        for (std::size_t r = 0; r < d; ++r)
            worst_entropy = std::max(worst_entropy, testutil::row_entropy(cold, r) - testutil::row_entropy(hot, r));
    }
    const bool ok = worst_sum <= kRowSumTol && worst_neg <= kNegationTol && worst_entropy <= kEntropySlack;
    return {ok, "1000 trials: max |row sum - 1| " + fmt(worst_sum, 3) + ", max |CAM + HAM| " + fmt(worst_neg, 3) +
                    ", max entropy deficit " + fmt(std::max(0.0, worst_entropy), 3)};
}

// 4 ------------------------------------------------------------------------
Outcome graph_invariants() {
    std::mt19937_64 rng(4);
    std::uniform_int_distribution<std::size_t> nsz(5, 30), dsz(3, 8);
    std::uniform_real_distribution<double> thr(-0.5, 0.9);
    std::size_t asym = 0, loops = 0, mono = 0;
    for (int trial = 0; trial < 100; ++trial) {
        auto h = random_matrix(nsz(rng), dsz(rng), rng);
        const double t1 = thr(rng), t2 = std::min(1.0, t1 + 0.2);
        auto g = similarity_graph(h, t1), g2 = similarity_graph(h, t2);
        for (std::size_t i = 0; i < g.n; ++i) {
            loops += g.has_edge(i, i);
            for (std::size_t j = 0; j < g.n; ++j) {
                asym += g.has_edge(i, j) != g.has_edge(j, i);
                mono += g2.has_edge(i, j) && !g.has_edge(i, j);
            }
        }
    }

    double worst_norm = 0, worst_equiv = 0;
    std::size_t zero_rows = 0;
    for (int trial = 0; trial < 20; ++trial) {
        const std::size_t n = 8, dim = 6;
        auto h0 = random_matrix(n, dim, rng);
        auto g = similarity_graph(h0, 0.0);
        ParameterStore<double> store;
        std::mt19937_64 init(trial);
        auto params = make_sage_params(store, "sage", dim, {7, 5}, n, init);
        auto nbrs = sample_neighborhoods(g, 2, n, std::nullopt);
        Tape<double> t;
        auto out = propagate(t.constant(h0), nbrs, params).value();
        for (std::size_t r = 0; r < n; ++r) {
            double s = 0;
            for (double v : out.row(r)) s += v * v;
            if (s == 0.0) {
                ++zero_rows;
                continue;
            }
            worst_norm = std::max(worst_norm, std::abs(std::sqrt(s) - 1.0));
        }
        std::vector<std::size_t> perm(n);
        std::iota(perm.begin(), perm.end(), 0);
        std::shuffle(perm.begin(), perm.end(), rng);
        Matrix<double> hp(n, dim);
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < dim; ++c) hp(perm[i], c) = h0(i, c);
        Tape<double> tp;
        auto outp = propagate(tp.constant(hp), sample_neighborhoods(similarity_graph(hp, 0.0), 2, n, std::nullopt),
                              params)
                        .value();
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t c = 0; c < out.cols(); ++c)
                worst_equiv = std::max(worst_equiv, std::abs(outp(perm[i], c) - out(i, c)));
    }
    const bool ok = asym == 0 && loops == 0 && mono == 0 && worst_norm <= kUnitNormTol &&
                    worst_equiv <= kEquivarianceTol;
    return {ok, "100 graphs: asymmetric " + std::to_string(asym) + ", self-loops " + std::to_string(loops) +
                    ", monotonicity violations " + std::to_string(mono) + "; max |norm - 1| " + fmt(worst_norm, 3) +
                    " (" + std::to_string(zero_rows) + " all-zero rows), max permutation gap " +
                    fmt(worst_equiv, 3)};
}

// 5 ------------------------------------------------------------------------
// Brute-force oracles written against the definitions, not the library code.
std::vector<std::string> oracle_words(const std::string& text) {
    std::vector<std::string> words;
    std::string cur;
    for (char ch : text) {
        const unsigned char c = static_cast<unsigned char>(ch);
        const bool word = (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || (c >= '0' && c <= '9') || c >= 0x80;
        if (word) {
            cur += (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a') : ch;
        } else if (!cur.empty()) {
            words.push_back(cur);
            cur.clear();
        }
    }
    if (!cur.empty()) words.push_back(cur);
    return words;
}

double oracle_minmax(double v, const std::vector<double>& fit) {
    double lo = fit[0], hi = fit[0];
    for (double x : fit) {
        if (x < lo) lo = x;
        if (x > hi) hi = x;
    }
    if (!(hi > lo)) return 0.0;
    double s = (v - lo) / (hi - lo);
    return s < 0 ? 0 : (s > 1 ? 1 : s);
}

Outcome scf_oracles() {
    SyntheticConfig sc;
    sc.seed = 5;
    sc.n_samples = 125;  // 100 training records plus 25 held out
    sc.val_fraction = 0.2;
    auto data = generate_synthetic(sc);
    const auto& lex = data.lexicons;
    std::vector<PostRecord> train, all = data.corpus.records;
    for (const auto& r : all)
        if (r.split == Split::train) train.push_back(r);
    const auto norm = social::fit_norm_stats(train, lex.crisis);
    const double alpha = 0.5;

    std::vector<double> train_counts;
    std::array<std::vector<double>, social::kEngagementDims> train_eng;
    std::map<std::string, std::array<double, 3>> users;  // total, informative, non-informative
    for (const auto& r : train) {
        double c = 0;
        for (const auto& w : oracle_words(r.text))
            for (const auto& term : lex.crisis.terms) c += w == term;
        train_counts.push_back(c);
        const double e[5] = {double(r.favourites), double(r.retweets), double(r.followers), double(r.friends),
                             double(r.statuses)};
        for (int k = 0; k < 5; ++k) train_eng[k].push_back(e[k]);
        auto& u = users[r.user_id];
        u[0] += 1;
        const bool inf = *r.informative_label == 1;
        u[1] += inf;
        u[2] += !inf;
    }
    std::vector<double> raw_uis;
    for (const auto& [_, u] : users) raw_uis.push_back((u[1] - u[2]) / u[0]);

    std::size_t count_mismatch = 0;
    double worst[6] = {0, 0, 0, 0, 0, 0};  // cis uis ucis uem senti emo
    std::vector<std::string> texts;
    std::vector<double> counts;
    for (const auto& r : all) {
        const auto words = oracle_words(r.text);
        double c = 0;
        for (const auto& w : words)
            for (const auto& term : lex.crisis.terms) c += w == term;
        count_mismatch += social::crisis_term_count(r.text, lex.crisis) != static_cast<std::size_t>(c);
        texts.push_back(r.text);
        counts.push_back(c);

        const auto shv = social::build_shv(r, lex, norm);
        const double cis_o = oracle_minmax(c, train_counts);
        worst[0] = std::max(worst[0], std::abs(shv.cis - cis_o));
        double uis_o = 0.5;
        if (auto it = users.find(r.user_id); it != users.end())
            uis_o = oracle_minmax((it->second[1] - it->second[2]) / it->second[0], raw_uis);
        worst[1] = std::max(worst[1], std::abs(shv.uis - uis_o));
        worst[2] = std::max(worst[2],
                            std::abs(social::record_ucis(r, lex, norm, alpha) - (alpha * uis_o + (1 - alpha) * cis_o)));
        const double e[5] = {double(r.favourites), double(r.retweets), double(r.followers), double(r.friends),
                             double(r.statuses)};
        for (int k = 0; k < 5; ++k)
            worst[3] = std::max(worst[3], std::abs(shv.engagement[k] - oracle_minmax(e[k], train_eng[k])));

        double pos = 0, neu = 0, neg = 0;
        for (const auto& w : words) {
            double v = 0;
            for (const auto& [word, val] : lex.sentiment.valence)
                if (word == w) v = val;
            if (v > 0) pos += v;
            else if (v < 0) neg -= v;
            else neu += 1;
        }
        const double tot = pos + neu + neg;
        const double so[3] = {tot ? pos / tot : 0, tot ? neu / tot : 1, tot ? neg / tot : 0};
        for (int k = 0; k < 3; ++k) worst[4] = std::max(worst[4], std::abs(shv.sentiment[k] - so[k]));

        for (std::size_t cat = 0; cat < social::kEmotionDims; ++cat) {
            double hits = 0;
            for (const auto& w : words)
                for (const auto& [word, tags] : lex.emotion.tags)
                    if (word == w && tags.test(cat)) hits += 1;
            const double eo = words.empty() ? 0.0 : hits / double(words.size());
            worst[5] = std::max(worst[5], std::abs(shv.emotion[cat] - eo));
        }
    }
    // Batch CIS over the same texts (min-max fitted on them).
    const auto batch = social::cis(texts, lex.crisis);
    for (std::size_t i = 0; i < texts.size(); ++i)
        worst[0] = std::max(worst[0], std::abs(batch[i] - oracle_minmax(counts[i], counts)));

    bool ok = count_mismatch == 0;
    for (double w : worst) ok = ok && w <= kScfTol;
    return {ok, std::to_string(all.size()) + " records, count mismatches " + std::to_string(count_mismatch) +
                    "; max err cis " + fmt(worst[0], 2) + " uis " + fmt(worst[1], 2) + " ucis " + fmt(worst[2], 2) +
                    " uem " + fmt(worst[3], 2) + " senti " + fmt(worst[4], 2) + " emo " + fmt(worst[5], 2)};
}

// 6 ------------------------------------------------------------------------
Outcome kappa_fixture() {
    const double k = cohen_kappa(std::vector<int>{1, 1, 2, 2}, std::vector<int>{1, 2, 2, 2});
    const double same = cohen_kappa(std::vector<int>{1, 2, 2, 3}, std::vector<int>{1, 2, 2, 3});
    const bool ok = std::abs(k - 0.5) <= kKappaTol && same == 1.0;
    return {ok, "fixture kappa " + fmt(k, 12) + ", identical " + fmt(same, 12)};
}

// 7 ------------------------------------------------------------------------
struct LearnResult {
    double train_acc, val_acc;
    std::size_t best_epoch;
};

LearnResult learn(Task task, int classes) {
    SyntheticConfig sc;
    sc.seed = 7;
    sc.n_samples = 250;
    sc.val_fraction = 0.2;  // 200 train / 50 val
    sc.separation = 4.0;
    sc.task = task;
    sc.num_classes = classes;
    auto data = generate_synthetic(sc);
    TrainConfig cfg;  // paper hyper-parameters: lr 5e-5, batch 32, dropout 0.2
    cfg.task = task;
    cfg.epochs = 50;
    cfg.seed = 7;
    cfg.profile = "paper";
    auto res = train(data.corpus, data.lexicons, cfg);
    auto tr = prepare_rows(data.corpus, split_rows(data.corpus, Split::train), data.lexicons, res.norm, cfg, true);
    auto va = prepare_rows(data.corpus, split_rows(data.corpus, Split::val), data.lexicons, res.norm, cfg, true);
    return {evaluate(res.model, data.corpus, tr).metrics->accuracy,
            evaluate(res.model, data.corpus, va).metrics->accuracy, res.best_epoch};
}

Outcome end_to_end_learning() {
    const auto t0 = std::chrono::steady_clock::now();
    const auto inf = learn(Task::informative, 8);
    const auto hum = learn(Task::humanitarian, 4);
    const double secs = seconds_since(t0);
    const bool ok = inf.train_acc >= kTrainAccMin && inf.val_acc >= kValAccMin && hum.val_acc >= kHumanitarianValAccMin &&
                    secs < kLearningBudgetSeconds;
    return {ok, "informative train " + fmt(inf.train_acc) + " val " + fmt(inf.val_acc) + " (epoch " +
                    std::to_string(inf.best_epoch) + "), humanitarian-4 val " + fmt(hum.val_acc) + " (epoch " +
                    std::to_string(hum.best_epoch) + "), " + fmt(secs, 3) + " s"};
}

// 8 ------------------------------------------------------------------------
Outcome ablation_direction() {
    const BranchMask variants[4] = {{true, true, true}, {true, true, false}, {true, false, true}, {false, true, true}};
    double mean[4] = {0, 0, 0, 0};
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        SyntheticConfig sc;
        sc.seed = seed;
        sc.n_samples = 600;
        sc.separation = 1.0;
        sc.joint_separation = 1.5;
        sc.scf_signal = 0.5;
        auto data = generate_synthetic(sc);
        for (int v = 0; v < 4; ++v) {
            TrainConfig cfg;
            cfg.profile = "small";
            cfg.learning_rate = 1e-3;
            cfg.epochs = 30;
            cfg.seed = seed;
            cfg.branches = variants[v];
            auto res = train(data.corpus, data.lexicons, cfg);
            mean[v] += res.history[res.best_epoch - 1].val->f1_weighted / 5.0;
        }
    }
    const bool ok = mean[0] >= mean[1] && mean[0] >= mean[2] && mean[0] >= mean[3];
    return {ok, "mean val weighted F1 over 5 seeds: full " + fmt(mean[0]) + ", w/o SCF " + fmt(mean[1]) +
                    ", w/o graph " + fmt(mean[2]) + ", w/o IDEA " + fmt(mean[3])};
}

// 9 ------------------------------------------------------------------------
std::uint64_t fnv1a(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::uint64_t h = 1469598103934665603ULL;
    for (char c; in.get(c);) h = (h ^ static_cast<unsigned char>(c)) * 1099511628211ULL;
    return h;
}

Outcome determinism() {
    const auto dir = fs::temp_directory_path() / "crisisspot_acceptance_determinism";
    fs::remove_all(dir);
    std::ostringstream sink;
    auto run = [&](std::vector<std::string> args) {
        if (run_cli(args, sink, sink) != 0) throw std::runtime_error("command failed: " + sink.str());
    };
    run({"generate", "--seed", "9", "--n", "80", "--out", (dir / "data").string()});
    for (const char* name : {"a", "b"})
        run({"train", "--manifest", (dir / "data" / "manifest.jsonl").string(), "--out", (dir / name).string(),
             "--seed", "9", "--epochs", "4", "--profile", "small", "--lr", "1e-3"});
    const auto ca = fnv1a(dir / "a" / "checkpoint.cspk"), cb = fnv1a(dir / "b" / "checkpoint.cspk");
    const auto ha = fnv1a(dir / "a" / "history.csv"), hb = fnv1a(dir / "b" / "history.csv");
    char buf[160];
    std::snprintf(buf, sizeof buf, "checkpoint %016llx vs %016llx, history %016llx vs %016llx",
                  static_cast<unsigned long long>(ca), static_cast<unsigned long long>(cb),
                  static_cast<unsigned long long>(ha), static_cast<unsigned long long>(hb));
    return {ca == cb && ha == hb, buf};
}

}  // namespace

int main() {
    const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
        {"shape fidelity at paper dims", shape_fidelity},
        {"gradient correctness on the micro-model", gradient_correctness},
        {"attention invariants", attention_invariants},
        {"graph invariants", graph_invariants},
        {"social feature oracle equivalence", scf_oracles},
        {"kappa fixture", kappa_fixture},
        {"end-to-end learning on a separable corpus", end_to_end_learning},
        {"ablation direction", ablation_direction},
        {"determinism of training outputs", determinism},
    };
    int failed = 0;
    for (std::size_t i = 0; i < criteria.size(); ++i) {
        Outcome o;
        try {
            o = criteria[i].second();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        failed += !o.pass;
        std::cout << (o.pass ? "PASS " : "FAIL ") << i + 1 << " " << criteria[i].first << ": " << o.detail
                  << std::endl;
    }
    return failed ? 1 : 0;
}
