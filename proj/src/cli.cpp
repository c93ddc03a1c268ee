#include "crisisspot/cli.hpp"

#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "crisisspot/parallel.hpp"
#include "crisisspot/synthetic.hpp"
#include "crisisspot/training.hpp"

namespace crisisspot {

namespace fs = std::filesystem;

namespace {

constexpr std::size_t kMinGenerate = 4;

std::string format_double(double v) {
    std::ostringstream s;
    s << std::setprecision(12) << v;
    std::string r = s.str();
    if (r.find_first_of(".en") == std::string::npos) r += ".0";
    return r;
}

CorpusDims parse_dims(const std::string& text) {
    std::vector<std::size_t> v;
    std::stringstream ss(text);
    std::string part;
    while (std::getline(ss, part, ',')) {
        try {
            std::size_t used = 0;
            const long long x = std::stoll(part, &used);
            if (used != part.size() || x <= 0) throw std::invalid_argument(part);
            v.push_back(static_cast<std::size_t>(x));
        } catch (const std::logic_error&) {
            throw ParameterError("--dims expects four positive integers d,dt,dv,joint; got '" + text + "'");
        }
    }
    if (v.size() != 4) throw ParameterError("--dims expects four positive integers d,dt,dv,joint; got '" + text + "'");
    return {v[0], v[1], v[2], v[3]};
}

std::ostream& open_output(const std::string& path, std::ofstream& file, std::ostream& fallback) {
    if (path.empty() || path == "-") return fallback;
    file.open(path, std::ios::binary);
    if (!file) throw DataError("cannot write " + path);
    return file;
}

std::vector<std::string> read_label_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open " + path);
    std::vector<std::string> labels;
    std::string line;
    std::size_t n = 0;
    while (std::getline(in, line)) {
        ++n;
        const auto b = line.find_first_not_of(" \t\r");
        const auto e = line.find_last_not_of(" \t\r");
        if (b == std::string::npos) throw DataError(path + ":" + std::to_string(n) + ": empty label");
        labels.push_back(line.substr(b, e - b + 1));
    }
    return labels;
}

nlohmann::json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open config " + path);
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw DataError("config " + path + ": " + e.what());
    }
}

std::vector<std::size_t> rows_for(const Corpus& corpus, const std::string& split) {
    if (split == "all") {
        std::vector<std::size_t> rows(corpus.size());
        for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = i;
        return rows;
    }
    auto rows = split_rows(corpus, parse_split(split));
    if (rows.empty()) throw DataError("manifest has no records in split '" + split + "'");
    return rows;
}

void check_dims(const Corpus& corpus, const ModelDims& d) {
    const CorpusDims want{d.idea.seq_len, d.idea.text_dim, d.idea.image_dim, d.joint_dim};
    if (!(corpus.dims == want)) {
        auto str = [](const CorpusDims& c) {
            return std::to_string(c.seq_len) + "," + std::to_string(c.text_dim) + "," + std::to_string(c.image_dim) +
                   "," + std::to_string(c.joint_dim);
        };
        throw DataError("manifest dims " + str(corpus.dims) + " do not match checkpoint dims " + str(want));
    }
}

social::Lexicons lexicons_for(const std::string& flag, const std::string& manifest) {
    if (!flag.empty()) return social::load_lexicons(flag);
    const auto guess = fs::path(manifest).parent_path() / "lexicons";
    if (fs::is_directory(guess)) return social::load_lexicons(guess);
    throw ParameterError("--lexicons is required (no lexicons/ directory next to the manifest)");
}

struct TrainFlags {
    std::string config, manifest, lexicons, out, task, profile;
    double lr = 0, dropout = 0, threshold = 0, t_ham = 0, t_cam = 0, ucis_alpha = 0;
    std::size_t batch_size = 0, epochs = 0, graph_layers = 0, sample_size = 0, shared_dim = 0;
    std::uint64_t seed = 0;
    bool no_idea = false, no_graph = false, no_social = false;
};

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Crisis post classification with multimodal attention, graph and social features", "crisisspot"};
    app.require_subcommand(1);
    app.fallthrough();
    app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
    std::size_t threads = 1;
    app.add_option("--threads", threads, "Worker threads for dense kernels (results do not depend on it)")
        ->check(CLI::PositiveNumber);

    // generate
    auto* gen = app.add_subcommand("generate", "Write a synthetic corpus (manifest, tensors, lexicons)");
    SyntheticConfig gc;
    std::string gen_task = "informative", gen_dims = "8,16,16,16", gen_out;
    gen->add_option("--seed", gc.seed, "Random seed");
    gen->add_option("--n", gc.n_samples, "Number of posts (at least 4)");
    gen->add_option("--task", gen_task, "informative or humanitarian");
    gen->add_option("--dims", gen_dims, "seq_len,text_dim,image_dim,joint_dim");
    gen->add_option("--separation", gc.separation, "Class-mean distance of token embeddings, in noise stds");
    gen->add_option("--joint-separation", gc.joint_separation, "Same for joint embeddings (-1: use --separation)");
    gen->add_option("--scf-signal", gc.scf_signal, "Label signal in social fields, 0..1");
    gen->add_option("--classes", gc.num_classes, "Humanitarian classes in use (labels 1..classes)");
    gen->add_option("--val-fraction", gc.val_fraction, "Fraction of posts in the val split");
    gen->add_option("--test-fraction", gc.test_fraction, "Fraction of posts in the test split");
    gen->add_option("--out", gen_out, "Output directory")->required();

    // train
    auto* tr = app.add_subcommand("train", "Train a model; writes checkpoint.cspk and history.csv");
    TrainConfig defaults;
    TrainFlags tf;
    tf.lr = defaults.learning_rate;
    tf.batch_size = defaults.batch_size;
    tf.epochs = defaults.epochs;
    tf.dropout = defaults.dropout;
    tf.threshold = defaults.threshold;
    tf.t_ham = defaults.t_ham;
    tf.t_cam = defaults.t_cam;
    tf.ucis_alpha = defaults.ucis_alpha;
    tf.graph_layers = defaults.graph_layers;
    tf.sample_size = defaults.sample_size;
    tf.profile = defaults.profile;
    tf.task = to_string(defaults.task);
    tr->add_option("--config", tf.config, "JSON config; flags override its values");
    tr->add_option("--manifest", tf.manifest, "Corpus manifest (JSON lines)");
    tr->add_option("--lexicons", tf.lexicons, "Lexicon directory (default: lexicons/ next to the manifest)");
    tr->add_option("--out", tf.out, "Output directory");
    auto* o_task = tr->add_option("--task", tf.task, "informative or humanitarian");
    auto* o_seed = tr->add_option("--seed", tf.seed, "Random seed");
    auto* o_lr = tr->add_option("--lr", tf.lr, "Adam learning rate");
    auto* o_bs = tr->add_option("--batch-size", tf.batch_size, "Batch size");
    auto* o_ep = tr->add_option("--epochs", tf.epochs, "Epochs");
    auto* o_do = tr->add_option("--dropout", tf.dropout, "Dropout probability");
    auto* o_prof = tr->add_option("--profile", tf.profile, "Hidden widths: paper, small or micro");
    auto* o_gl = tr->add_option("--graph-layers", tf.graph_layers, "GraphSAGE layers K");
    auto* o_ss = tr->add_option("--sample-size", tf.sample_size, "Neighbors sampled per node and layer");
    auto* o_th = tr->add_option("--threshold", tf.threshold, "Cosine threshold for graph edges");
    auto* o_th1 = tr->add_option("--t-ham", tf.t_ham, "Harmonious attention temperature");
    auto* o_th2 = tr->add_option("--t-cam", tf.t_cam, "Contrary attention temperature");
    auto* o_ua = tr->add_option("--ucis-alpha", tf.ucis_alpha, "UIS weight in UCIS");
    auto* o_sd = tr->add_option("--shared-dim", tf.shared_dim, "Shared attention width (0: profile default)");
    auto* o_ni = tr->add_flag("--no-idea", tf.no_idea, "Disable the attention branch");
    auto* o_ng = tr->add_flag("--no-graph", tf.no_graph, "Disable the graph branch");
    auto* o_ns = tr->add_flag("--no-social", tf.no_social, "Disable the social branch");

    // eval / predict
    auto* ev = app.add_subcommand("eval", "Metrics of a checkpoint on a labeled split (JSON)");
    std::string ev_ckpt, ev_manifest, ev_split = "val", ev_out;
    ev->add_option("--checkpoint", ev_ckpt, "Checkpoint file")->required();
    ev->add_option("--manifest", ev_manifest, "Corpus manifest")->required();
    ev->add_option("--split", ev_split, "train, val, test or all");
    ev->add_option("--out", ev_out, "Output file (default stdout)");

    auto* pr = app.add_subcommand("predict", "Per-post predictions as JSON lines");
    std::string pr_ckpt, pr_manifest, pr_split = "all", pr_out;
    pr->add_option("--checkpoint", pr_ckpt, "Checkpoint file")->required();
    pr->add_option("--manifest", pr_manifest, "Corpus manifest")->required();
    pr->add_option("--split", pr_split, "train, val, test or all");
    pr->add_option("--out", pr_out, "Output file (default stdout)");

    // score-social
    auto* ss = app.add_subcommand("score-social", "Social holistic vectors and UCIS as CSV");
    std::string ss_manifest, ss_lex, ss_out;
    double ss_alpha = 0.5;
    ss->add_option("--manifest", ss_manifest, "Corpus manifest")->required();
    ss->add_option("--lexicons", ss_lex, "Lexicon directory (default: lexicons/ next to the manifest)");
    ss->add_option("--alpha", ss_alpha, "UIS weight in UCIS")->check(CLI::Range(0.0, 1.0));
    ss->add_option("--out", ss_out, "Output file (default stdout)");

    // build-graph
    auto* bg = app.add_subcommand("build-graph", "Cosine-threshold graph over joint embeddings (edge list)");
    std::string bg_manifest, bg_modality = "text", bg_split = "all", bg_out;
    double bg_threshold = kGraphThreshold;
    bg->add_option("--manifest", bg_manifest, "Corpus manifest")->required();
    bg->add_option("--threshold", bg_threshold, "Edge when cosine similarity exceeds this")
        ->check(CLI::Range(-1.0, 1.0));
    bg->add_option("--modality", bg_modality, "text or image")->check(CLI::IsMember({"text", "image"}));
    bg->add_option("--split", bg_split, "train, val, test or all");
    bg->add_option("--out", bg_out, "Output file (default stdout)");

    // expand-lexicon
    auto* el = app.add_subcommand("expand-lexicon", "Grow a crisis lexicon with embedding neighbors");
    std::string el_seed, el_emb, el_out;
    double el_threshold = 0.8;
    el->add_option("--seed-lexicon", el_seed, "Seed lexicon, one term per line")->required();
    el->add_option("--embeddings", el_emb, "Word embeddings, 'word v1 v2 ...' per line")->required();
    el->add_option("--threshold", el_threshold, "Add words whose cosine to a seed term exceeds this");
    el->add_option("--out", el_out, "Output lexicon file (default stdout)");

    // kappa
    auto* kp = app.add_subcommand("kappa", "Cohen's kappa of two annotation files (one label per line)");
    std::string kp_a, kp_b;
    kp->add_option("--a", kp_a, "First annotator")->required();
    kp->add_option("--b", kp_b, "Second annotator")->required();

    std::vector<std::string> argv_store{"crisisspot"};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<const char*> argv;
    for (const auto& a : argv_store) argv.push_back(a.c_str());

    try {
        try {
            app.parse(static_cast<int>(argv.size()), argv.data());
        } catch (const CLI::CallForHelp&) {
            out << (app.get_subcommands().empty() ? app.help() : app.get_subcommands().front()->help());
            return 0;
        } catch (const CLI::CallForAllHelp&) {
            out << app.help("", CLI::AppFormatMode::All);
            return 0;
        } catch (const CLI::ParseError& e) {
            err << "error category=usage: " << e.what() << '\n';
            return 2;
        }
        set_num_threads(threads);

        if (gen->parsed()) {
            if (gc.n_samples < kMinGenerate)
                throw ParameterError("--n must be at least " + std::to_string(kMinGenerate));
            gc.task = parse_task(gen_task);
            gc.dims = parse_dims(gen_dims);
            auto sc = generate_synthetic(gc);
            const auto manifest = save_corpus(sc.corpus, gen_out);
            social::save_lexicons(fs::path(gen_out) / "lexicons", sc.lexicons);
            std::size_t counts[3] = {0, 0, 0};
            for (const auto& r : sc.corpus.records) ++counts[static_cast<int>(*r.split)];
            out << nlohmann::json{{"manifest", manifest.string()},
                                  {"records", sc.corpus.size()},
                                  {"train", counts[static_cast<int>(Split::train)]},
                                  {"val", counts[static_cast<int>(Split::val)]},
                                  {"test", counts[static_cast<int>(Split::test)]},
                                  {"task", to_string(gc.task)}}
                       .dump()
                << '\n';
            return 0;
        }

        if (tr->parsed()) {
            TrainConfig cfg;
            std::string manifest = tf.manifest, lex_dir = tf.lexicons, out_dir = tf.out;
            if (!tf.config.empty()) {
                const auto j = read_json_file(tf.config);
                cfg = train_config_from_json(j, cfg, {"manifest", "lexicons", "out"});
                const auto base = fs::path(tf.config).parent_path();
                auto path_key = [&](const char* key, std::string& dst) {
                    if (dst.empty() && j.contains(key)) {
                        if (!j.at(key).is_string()) throw ParameterError(std::string("config: '") + key + "' must be a string");
                        fs::path p = j.at(key).get<std::string>();
                        dst = (p.is_relative() ? base / p : p).string();
                    }
                };
                path_key("manifest", manifest);
                path_key("lexicons", lex_dir);
                path_key("out", out_dir);
            }
            if (o_task->count()) cfg.task = parse_task(tf.task);
            if (o_seed->count()) cfg.seed = tf.seed;
            if (o_lr->count()) cfg.learning_rate = tf.lr;
            if (o_bs->count()) cfg.batch_size = tf.batch_size;
            if (o_ep->count()) cfg.epochs = tf.epochs;
            if (o_do->count()) cfg.dropout = tf.dropout;
            if (o_prof->count()) cfg.profile = tf.profile;
            if (o_gl->count()) cfg.graph_layers = tf.graph_layers;
            if (o_ss->count()) cfg.sample_size = tf.sample_size;
            if (o_th->count()) cfg.threshold = tf.threshold;
            if (o_th1->count()) cfg.t_ham = tf.t_ham;
            if (o_th2->count()) cfg.t_cam = tf.t_cam;
            if (o_ua->count()) cfg.ucis_alpha = tf.ucis_alpha;
            if (o_sd->count()) cfg.shared_dim = tf.shared_dim;
            if (o_ni->count()) cfg.branches.idea = false;
            if (o_ng->count()) cfg.branches.graph = false;
            if (o_ns->count()) cfg.branches.social = false;
            cfg.validate();
            if (manifest.empty()) throw ParameterError("train: --manifest is required (flag or config)");
            if (out_dir.empty()) throw ParameterError("train: --out is required (flag or config)");

            const Corpus corpus = load_manifest(manifest);
            const auto lex = lexicons_for(lex_dir, manifest);
            TrainHooks hooks;
            hooks.log = &err;
            auto res = train(corpus, lex, cfg, hooks);
            std::error_code ec;
            fs::create_directories(out_dir, ec);
            if (ec) throw DataError("cannot create output directory " + out_dir + ": " + ec.message());
            const auto ckpt = fs::path(out_dir) / "checkpoint.cspk";
            const auto hist = fs::path(out_dir) / "history.csv";
            save_checkpoint(ckpt, res.model, cfg, res.norm, lex, res.best_epoch);
            std::ofstream h(hist, std::ios::binary);
            if (!h) throw DataError("cannot write " + hist.string());
            write_history_csv(h, res.history);
            nlohmann::json summary{{"checkpoint", ckpt.string()},
                                   {"history", hist.string()},
                                   {"best_epoch", res.best_epoch},
                                   {"final_train_loss", res.history.back().train_loss}};
            const auto& best = res.history[res.best_epoch - 1];
            if (best.val) summary["val_f1_weighted"] = best.val->f1_weighted;
            out << summary.dump() << '\n';
            return 0;
        }

        if (ev->parsed() || pr->parsed()) {
            const bool is_eval = ev->parsed();
            const auto& ckpt_path = is_eval ? ev_ckpt : pr_ckpt;
            const auto& manifest = is_eval ? ev_manifest : pr_manifest;
            const auto& split = is_eval ? ev_split : pr_split;
            auto ck = load_checkpoint(ckpt_path);
            const Corpus corpus = load_manifest(manifest);
            check_dims(corpus, ck.model.dims);
            auto prepared = prepare_rows(corpus, rows_for(corpus, split), ck.lexicons, ck.norm, ck.config, is_eval);
            auto res = evaluate(ck.model, corpus, prepared, ck.config.batch_size);
            std::ofstream file;
            std::ostream& dst = open_output(is_eval ? ev_out : pr_out, file, out);
            if (is_eval) {
                auto j = to_json(*res.metrics);
                j["task"] = to_string(ck.config.task);
                j["split"] = split;
                dst << j.dump(2) << '\n';
            } else {
                for (const auto& p : res.predictions)
                    dst << nlohmann::json{{"post_id", p.post_id}, {"label", p.label}, {"probs", p.probs}}.dump()
                        << '\n';
            }
            return 0;
        }

        if (ss->parsed()) {
            const Corpus corpus = load_manifest(ss_manifest);
            const auto lex = lexicons_for(ss_lex, ss_manifest);
            std::vector<PostRecord> fit;
            for (auto i : split_rows(corpus, Split::train)) fit.push_back(corpus.records[i]);
            const auto norm = social::fit_norm_stats(fit, lex.crisis);
            std::ofstream file;
            std::ostream& dst = open_output(ss_out, file, out);
            dst << "post_id,sent_neg,sent_neu,sent_pos";
            for (std::size_t i = 0; i < social::kEmotionDims; ++i) dst << ",emo_" << i;
            dst << ",cis,eng_favourites,eng_retweets,eng_followers,eng_friends,eng_statuses,uis,ucis\n";
            dst << std::setprecision(9);
            for (const auto& r : corpus.records) {
                dst << r.post_id;
                for (double v : social::build_shv(r, lex, norm).flatten()) dst << ',' << v;
                dst << ',' << social::record_ucis(r, lex, norm, ss_alpha) << '\n';
            }
            return 0;
        }

        if (bg->parsed()) {
            const Corpus corpus = load_manifest(bg_manifest);
            const auto rows = rows_for(corpus, bg_split);
            Tensor2D h(rows.size(), corpus.dims.joint_dim);
            for (std::size_t i = 0; i < rows.size(); ++i) {
                const auto& t = corpus.tensors[rows[i]];
                const auto& src = bg_modality == "text" ? t.joint_text : t.joint_image;
                std::copy(src.data().begin(), src.data().end(), h.row(i).begin());
            }
            std::ofstream file;
            write_edge_list(open_output(bg_out, file, out), similarity_graph(h, bg_threshold));
            return 0;
        }

        if (el->parsed()) {
            auto res = social::expand_lexicon(social::load_crisis_lexicon(el_seed),
                                              social::load_word_embeddings(el_emb), el_threshold);
            for (const auto& w : res.warnings) err << "warning: " << w << '\n';
            if (el_out.empty() || el_out == "-") {
                for (const auto& term : res.lexicon.terms) out << term << '\n';
            } else {
                social::save_crisis_lexicon(el_out, res.lexicon);
            }
            return 0;
        }

        if (kp->parsed()) {
            out << format_double(cohen_kappa(read_label_file(kp_a), read_label_file(kp_b))) << '\n';
            return 0;
        }
        err << "error category=usage: no command given\n";
        return 2;
    } catch (const Error& e) {
        err << "error category=" << category_name(e.category()) << ": " << e.what() << '\n';
        return exit_code_for(e.category());
    } catch (const nlohmann::json::exception& e) {
        err << "error category=data: " << e.what() << '\n';
        return 3;
    } catch (const std::exception& e) {
        err << "error category=internal: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace crisisspot
