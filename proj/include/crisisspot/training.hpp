#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "crisisspot/data_model.hpp"
#include "crisisspot/metrics.hpp"
#include "crisisspot/model.hpp"
#include "crisisspot/social_context.hpp"
#include "json.hpp"

namespace crisisspot {

struct TrainConfig {
    double learning_rate = 5e-5;
    std::size_t batch_size = 32;
    std::size_t epochs = 100;
    double dropout = 0.2;
    std::uint64_t seed = 0;
    Task task = Task::informative;
    std::size_t graph_layers = 2;
    std::size_t sample_size = 10;
    double threshold = kGraphThreshold;
    double t_ham = kHarmoniousTemperature;
    double t_cam = kContraryTemperature;
    double ucis_alpha = 0.5;
    /// Hidden-width profile: "paper", "small" or "micro".
    std::string profile = "paper";
    /// Overrides the profile's shared attention width when nonzero.
    std::size_t shared_dim = 0;
    BranchMask branches;

    void validate() const;
    ModelOptions model_options() const;
};

nlohmann::json to_json(const TrainConfig& c);
/// Reads the keys present in `j` over `base`. Keys outside the schema
/// raise ParameterError unless listed in `extra_keys`.
TrainConfig train_config_from_json(const nlohmann::json& j, TrainConfig base = {},
                                   const std::set<std::string>& extra_keys = {});

/// Task label for a record: the binary flag for the informative task
/// (derived from the humanitarian class when absent), the 1..8 class for
/// the humanitarian task.
std::optional<int> task_label(const PostRecord& r, Task task);

/// Everything a split needs at run time: SHVs, graph inputs and labels.
struct PreparedSplit {
    std::vector<std::size_t> rows;  // corpus indices, in corpus order
    std::vector<int> labels;        // empty when the split is unlabeled
    Tensor2D shv;                   // [n x 21]
    std::vector<double> ucis;
    Tensor2D joint_text;   // [n x joint]
    Tensor2D joint_image;  // [n x joint]
    AdjacencyGraph text_graph;
    AdjacencyGraph image_graph;

    std::size_t size() const { return rows.size(); }
    bool labeled() const { return !labels.empty(); }
};

PreparedSplit prepare_rows(const Corpus& corpus, std::vector<std::size_t> rows, const social::Lexicons& lex,
                           const social::NormStats& norm, const TrainConfig& cfg, bool require_labels);
/// Rows of `split`, or every row when the corpus carries no split tags and
/// `split` is train.
std::vector<std::size_t> split_rows(const Corpus& corpus, Split split);

BatchInputs<float> make_batch(const Corpus& corpus, const PreparedSplit& split,
                              const std::vector<std::size_t>& positions);
/// Deterministic lowest-index neighborhoods without a seed.
GraphInputs<float> make_graph_inputs(const PreparedSplit& split, std::size_t layers, std::size_t sample_size,
                                     std::optional<std::uint64_t> seed);

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    std::optional<MetricsReport> val;
};

/// epoch,train_loss,val_accuracy,val_precision,val_recall,val_f1_macro,val_f1_weighted
/// (precision and recall are macro averages; empty cells without a val split).
void write_history_csv(std::ostream& out, const std::vector<EpochRecord>& history);

struct TrainHooks {
    std::function<void(std::size_t epoch, std::size_t batch, double loss)> on_batch;
    std::ostream* log = nullptr;
};

struct TrainResult {
    Model<float> model;
    social::NormStats norm;
    std::vector<EpochRecord> history;
    std::size_t best_epoch = 0;
};

/// Joint training of every branch with Adam. The returned model holds the
/// parameters of the epoch with the best validation weighted F1 (the last
/// epoch without a validation split).
TrainResult train(const Corpus& corpus, const social::Lexicons& lex, const TrainConfig& cfg,
                  const TrainHooks& hooks = {});

/// Mean task loss of one batch in the given mode.
double batch_loss(Model<float>& model, const Corpus& corpus, const PreparedSplit& split,
                  const std::vector<std::size_t>& positions, const GraphInputs<float>& graph, Mode mode,
                  std::mt19937_64& rng);

struct Prediction {
    std::string post_id;
    int label = 0;
    std::vector<double> probs;
};

struct EvalResult {
    std::vector<Prediction> predictions;
    std::optional<MetricsReport> metrics;
};

EvalResult evaluate(Model<float>& model, const Corpus& corpus, const PreparedSplit& split,
                    std::size_t batch_size = 32);

struct Checkpoint {
    TrainConfig config;
    social::NormStats norm;
    social::Lexicons lexicons;
    std::size_t best_epoch = 0;
    Model<float> model;
};

void save_checkpoint(const std::filesystem::path& path, const Model<float>& model, const TrainConfig& cfg,
                     const social::NormStats& norm, const social::Lexicons& lex, std::size_t best_epoch);
Checkpoint load_checkpoint(const std::filesystem::path& path);

/// Deterministic 64-bit mixing of a seed with stream tags.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0);

}  // namespace crisisspot
