#include "crisisspot/training.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <map>
#include <numeric>
#include <ostream>

#include "crisisspot/optim.hpp"

namespace crisisspot {

namespace {

const std::set<std::string> kConfigKeys = {
    "learning_rate", "batch_size", "epochs",    "dropout",    "seed",    "task",     "graph_layers",
    "sample_size",   "threshold",  "t_ham",     "t_cam",      "ucis_alpha", "profile", "shared_dim",
    "branches"};

template <typename V>
void read_key(const nlohmann::json& j, const char* key, V& dst) {
    if (!j.contains(key)) return;
    try {
        dst = j.at(key).get<V>();
    } catch (const nlohmann::json::exception&) {
        throw ParameterError(std::string("config: key '") + key + "' has the wrong type");
    }
}

}  // namespace

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b) {
    auto splitmix = [](std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    };
    return splitmix(splitmix(splitmix(seed) ^ a) ^ b);
}

void TrainConfig::validate() const {
    if (!(learning_rate >= 0.0) || !std::isfinite(learning_rate))
        throw ParameterError("learning_rate must be a finite value >= 0");
    if (batch_size == 0) throw ParameterError("batch_size must be at least 1");
    if (epochs == 0) throw ParameterError("epochs must be at least 1");
    if (!(dropout >= 0.0 && dropout < 1.0)) throw ParameterError("dropout must lie in [0, 1)");
    if (graph_layers == 0) throw ParameterError("graph_layers must be at least 1");
    if (sample_size == 0) throw ParameterError("sample_size must be at least 1");
    if (!(threshold >= -1.0 && threshold <= 1.0)) throw ParameterError("threshold must lie in [-1, 1]");
    if (!(t_ham > 0.0) || !(t_cam > 0.0)) throw ParameterError("temperatures must be positive");
    if (!(ucis_alpha >= 0.0 && ucis_alpha <= 1.0)) throw ParameterError("ucis_alpha must lie in [0, 1]");
    if (profile != "paper" && profile != "small" && profile != "micro")
        throw ParameterError("profile must be paper, small or micro");
}

ModelOptions TrainConfig::model_options() const {
    ModelOptions o;
    o.task = task;
    o.dropout = dropout;
    o.sample_size = sample_size;
    o.t_ham = t_ham;
    o.t_cam = t_cam;
    o.branches = branches;
    o.seed = seed;
    return o;
}

nlohmann::json to_json(const TrainConfig& c) {
    return {{"learning_rate", c.learning_rate},
            {"batch_size", c.batch_size},
            {"epochs", c.epochs},
            {"dropout", c.dropout},
            {"seed", c.seed},
            {"task", to_string(c.task)},
            {"graph_layers", c.graph_layers},
            {"sample_size", c.sample_size},
            {"threshold", c.threshold},
            {"t_ham", c.t_ham},
            {"t_cam", c.t_cam},
            {"ucis_alpha", c.ucis_alpha},
            {"profile", c.profile},
            {"shared_dim", c.shared_dim},
            {"branches", {{"idea", c.branches.idea}, {"graph", c.branches.graph}, {"social", c.branches.social}}}};
}

TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig c, const std::set<std::string>& extra) {
    if (!j.is_object()) throw ParameterError("config: expected a JSON object");
    for (const auto& [key, _] : j.items())
        if (!kConfigKeys.count(key) && !extra.count(key)) throw ParameterError("config: unknown key '" + key + "'");
    read_key(j, "learning_rate", c.learning_rate);
    read_key(j, "batch_size", c.batch_size);
    read_key(j, "epochs", c.epochs);
    read_key(j, "dropout", c.dropout);
    read_key(j, "seed", c.seed);
    if (j.contains("task")) {
        std::string t;
        read_key(j, "task", t);
        c.task = parse_task(t);
    }
    read_key(j, "graph_layers", c.graph_layers);
    read_key(j, "sample_size", c.sample_size);
    read_key(j, "threshold", c.threshold);
    read_key(j, "t_ham", c.t_ham);
    read_key(j, "t_cam", c.t_cam);
    read_key(j, "ucis_alpha", c.ucis_alpha);
    read_key(j, "profile", c.profile);
    read_key(j, "shared_dim", c.shared_dim);
    if (j.contains("branches")) {
        const auto& b = j.at("branches");
        if (!b.is_object()) throw ParameterError("config: 'branches' must be an object");
        for (const auto& [key, _] : b.items())
            if (key != "idea" && key != "graph" && key != "social")
                throw ParameterError("config: unknown key 'branches." + key + "'");
        read_key(b, "idea", c.branches.idea);
        read_key(b, "graph", c.branches.graph);
        read_key(b, "social", c.branches.social);
    }
    c.validate();
    return c;
}

std::optional<int> task_label(const PostRecord& r, Task task) {
    if (task == Task::informative) {
        auto f = r.informative();
        if (!f) return std::nullopt;
        return *f ? 1 : 0;
    }
    return r.humanitarian_label;
}

std::vector<std::size_t> split_rows(const Corpus& corpus, Split split) {
    std::vector<std::size_t> rows;
    bool any_tag = false;
    for (std::size_t i = 0; i < corpus.size(); ++i) {
        const auto& s = corpus.records[i].split;
        any_tag = any_tag || s.has_value();
        if (s == split) rows.push_back(i);
    }
    if (!any_tag && split == Split::train) {
        rows.resize(corpus.size());
        std::iota(rows.begin(), rows.end(), 0);
    }
    return rows;
}

PreparedSplit prepare_rows(const Corpus& corpus, std::vector<std::size_t> rows, const social::Lexicons& lex,
                           const social::NormStats& norm, const TrainConfig& cfg, bool require_labels) {
    PreparedSplit p;
    p.rows = std::move(rows);
    const std::size_t n = p.rows.size();
    const std::size_t joint = corpus.dims.joint_dim;
    p.shv = Tensor2D(n, social::kShvDims);
    p.joint_text = Tensor2D(n, joint);
    p.joint_image = Tensor2D(n, joint);
    std::vector<int> labels;
    bool all_labeled = true;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t row = p.rows.at(i);
        if (row >= corpus.size()) throw ShapeError("prepare: corpus row out of range");
        const auto& r = corpus.records[row];
        const auto shv = social::build_shv(r, lex, norm).flatten();
        for (std::size_t c = 0; c < shv.size(); ++c) p.shv(i, c) = static_cast<float>(shv[c]);
        p.ucis.push_back(social::record_ucis(r, lex, norm, cfg.ucis_alpha));
        const auto& t = corpus.tensors[row];
        std::copy(t.joint_text.data().begin(), t.joint_text.data().end(), p.joint_text.row(i).begin());
        std::copy(t.joint_image.data().begin(), t.joint_image.data().end(), p.joint_image.row(i).begin());
        auto y = task_label(r, cfg.task);
        if (!y) {
            if (require_labels)
                throw DataError("record " + r.post_id + " has no " + to_string(cfg.task) + " label");
            all_labeled = false;
        } else {
            labels.push_back(*y);
        }
    }
    if (all_labeled) p.labels = std::move(labels);
    if (n > 0) {
        p.text_graph = similarity_graph(p.joint_text, cfg.threshold);
        p.image_graph = similarity_graph(p.joint_image, cfg.threshold);
    }
    return p;
}

BatchInputs<float> make_batch(const Corpus& corpus, const PreparedSplit& split,
                              const std::vector<std::size_t>& positions) {
    const auto& d = corpus.dims;
    BatchInputs<float> b;
    b.text = Tensor2D(positions.size() * d.seq_len, d.text_dim);
    b.image = Tensor2D(positions.size() * d.seq_len, d.image_dim);
    b.shv = Tensor2D(positions.size(), split.shv.cols());
    b.nodes = positions;
    for (std::size_t i = 0; i < positions.size(); ++i) {
        const std::size_t pos = positions[i];
        const auto& t = corpus.tensors.at(split.rows.at(pos));
        std::copy(t.text.data().begin(), t.text.data().end(), b.text.data().begin() + i * d.seq_len * d.text_dim);
        std::copy(t.image.data().begin(), t.image.data().end(),
                  b.image.data().begin() + i * d.seq_len * d.image_dim);
        std::copy(split.shv.row(pos).begin(), split.shv.row(pos).end(), b.shv.row(i).begin());
    }
    return b;
}

GraphInputs<float> make_graph_inputs(const PreparedSplit& split, std::size_t layers, std::size_t sample_size,
                                     std::optional<std::uint64_t> seed) {
    GraphInputs<float> g;
    g.joint_text = split.joint_text;
    g.joint_image = split.joint_image;
    std::optional<std::uint64_t> ts, is;
    if (seed) {
        ts = mix_seed(*seed, 1);
        is = mix_seed(*seed, 2);
    }
    g.text_neighbors = sample_neighborhoods(split.text_graph, layers, sample_size, ts);
    g.image_neighbors = sample_neighborhoods(split.image_graph, layers, sample_size, is);
    return g;
}

void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history) {
    out << "epoch,train_loss,val_accuracy,val_precision,val_recall,val_f1_macro,val_f1_weighted\n";
    const auto old = out.precision(9);
    for (const auto& e : history) {
        out << e.epoch << ',' << e.train_loss;
        if (e.val) {
            out << ',' << e.val->accuracy << ',' << e.val->precision_macro << ',' << e.val->recall_macro << ','
                << e.val->f1_macro << ',' << e.val->f1_weighted;
        } else {
            out << ",,,,,";
        }
        out << '\n';
    }
    out.precision(old);
}

double batch_loss(Model<float>& model, const Corpus& corpus, const PreparedSplit& split,
                  const std::vector<std::size_t>& positions, const GraphInputs<float>& graph, Mode mode,
                  std::mt19937_64& rng) {
    Tape<float> tape;
    auto out = forward(model, tape, make_batch(corpus, split, positions), graph, mode, rng);
    std::vector<int> y;
    for (std::size_t p : positions) y.push_back(split.labels.at(p));
    return task_loss(out.probs, y, model.options.task).value()(0, 0);
}

EvalResult evaluate(Model<float>& model, const Corpus& corpus, const PreparedSplit& split, std::size_t batch_size) {
    if (split.size() == 0) throw ParameterError("evaluate: split is empty");
    if (batch_size == 0) throw ParameterError("evaluate: batch_size must be at least 1");
    const auto graph = make_graph_inputs(split, model.dims.sage.size(), model.options.sample_size, std::nullopt);
    std::mt19937_64 rng(0);  // unused in eval mode
    EvalResult res;
    std::vector<int> predicted;
    for (std::size_t start = 0; start < split.size(); start += batch_size) {
        std::vector<std::size_t> pos;
        for (std::size_t p = start; p < std::min(split.size(), start + batch_size); ++p) pos.push_back(p);
        Tape<float> tape;
        const auto probs = forward(model, tape, make_batch(corpus, split, pos), graph, Mode::eval, rng).probs.value();
        for (std::size_t i = 0; i < pos.size(); ++i) {
            Prediction pr;
            pr.post_id = corpus.records[split.rows[pos[i]]].post_id;
            for (float v : probs.row(i)) pr.probs.push_back(v);
            pr.label = model.options.task == Task::informative ? informative_label(probs(i, 0))
                                                               : static_cast<int>(argmax_row(probs, i)) + 1;
            predicted.push_back(pr.label);
            res.predictions.push_back(std::move(pr));
        }
    }
    if (split.labeled()) res.metrics = compute_metrics(split.labels, predicted);
    return res;
}

TrainResult train(const Corpus& corpus, const social::Lexicons& lex, const TrainConfig& cfg,
                  const TrainHooks& hooks) {
    cfg.validate();
    const auto train_idx = split_rows(corpus, Split::train);
    const auto val_idx = split_rows(corpus, Split::val);
    if (train_idx.empty()) throw DataError("train: corpus has no training records");

    std::vector<PostRecord> train_records;
    for (std::size_t i : train_idx) train_records.push_back(corpus.records[i]);
    TrainResult res;
    res.norm = social::fit_norm_stats(train_records, lex.crisis);
    const auto train_split = prepare_rows(corpus, train_idx, lex, res.norm, cfg, true);
    std::optional<PreparedSplit> val_split;
    if (!val_idx.empty()) val_split = prepare_rows(corpus, val_idx, lex, res.norm, cfg, true);

    const auto dims = ModelDims::from_profile(cfg.profile, corpus.dims, cfg.graph_layers, cfg.shared_dim);
    res.model = build_model<float>(dims, cfg.model_options());
    Model<float>& model = res.model;

    const std::size_t n = train_split.size();
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), 0);
    {
        // Dry run: surfaces shape problems before any update.
        std::mt19937_64 unused(0);
        std::vector<std::size_t> first(order.begin(), order.begin() + std::min(n, cfg.batch_size));
        batch_loss(model, corpus, train_split, first,
                   make_graph_inputs(train_split, cfg.graph_layers, cfg.sample_size, std::nullopt), Mode::eval,
                   unused);
    }

    AdamState<float> adam;
    std::mt19937_64 shuffle_rng(mix_seed(cfg.seed, 0x5348));
    std::mt19937_64 dropout_rng(mix_seed(cfg.seed, 0x4450));
    std::map<std::string, Tensor2D> best;
    double best_f1 = -1.0;
    auto snapshot = [&] {
        best.clear();
        for (const auto& [name, p] : model.store) best.emplace(name, p.value);
    };

    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        const auto graph = make_graph_inputs(train_split, cfg.graph_layers, cfg.sample_size,
                                             mix_seed(cfg.seed, 0x4752, epoch));
        std::shuffle(order.begin(), order.end(), shuffle_rng);
        double loss_sum = 0.0;
        std::size_t batch_index = 0;
        for (std::size_t start = 0; start < n; start += cfg.batch_size, ++batch_index) {
            std::vector<std::size_t> pos(order.begin() + start, order.begin() + std::min(n, start + cfg.batch_size));
            model.store.zero_grad();
            Tape<float> tape;
            auto out = forward(model, tape, make_batch(corpus, train_split, pos), graph, Mode::train, dropout_rng);
            std::vector<int> y;
            for (std::size_t p : pos) y.push_back(train_split.labels[p]);
            Var<float> loss = task_loss(out.probs, y, cfg.task);
            const double l = loss.value()(0, 0);
            tape.backward(loss);
            adam_step(model.store, adam, cfg.learning_rate);
            loss_sum += l * static_cast<double>(pos.size());
            if (hooks.on_batch) hooks.on_batch(epoch, batch_index, l);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.train_loss = loss_sum / static_cast<double>(n);
        if (val_split) {
            rec.val = evaluate(model, corpus, *val_split, cfg.batch_size).metrics;
            if (rec.val->f1_weighted > best_f1) {
                best_f1 = rec.val->f1_weighted;
                res.best_epoch = epoch;
                snapshot();
            }
        }
        if (hooks.log) {
            *hooks.log << "epoch " << epoch << " loss " << rec.train_loss;
            if (rec.val) *hooks.log << " val_acc " << rec.val->accuracy << " val_f1w " << rec.val->f1_weighted;
            *hooks.log << '\n';
        }
        res.history.push_back(std::move(rec));
    }
    if (best.empty()) {
        res.best_epoch = cfg.epochs;
    } else {
        for (auto& [name, p] : model.store) p.value = best.at(name);
    }
    return res;
}

}  // namespace crisisspot
