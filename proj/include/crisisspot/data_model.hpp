#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "crisisspot/tensor.hpp"

namespace crisisspot {

enum class Split { train, val, test };
enum class Task { informative, humanitarian };

/// Humanitarian classes 1..8; 8 is "not relevant or can't judge".
inline constexpr int kHumanitarianClasses = 8;
inline constexpr int kNotRelevantClass = 8;

std::string to_string(Split s);
std::string to_string(Task t);
Split parse_split(const std::string& s);
Task parse_task(const std::string& s);

struct PostRecord {
    std::string post_id;
    std::string user_id;
    std::string text;
    std::uint64_t favourites = 0;
    std::uint64_t retweets = 0;
    std::uint64_t followers = 0;
    std::uint64_t friends = 0;
    std::uint64_t statuses = 0;
    std::optional<int> informative_label;
    std::optional<int> humanitarian_label;
    std::string text_embedding_ref;
    std::string image_embedding_ref;
    std::string joint_text_ref;
    std::string joint_image_ref;
    std::optional<Split> split;

    /// Informative flag used for user history: the binary label when
    /// present, otherwise "humanitarian class is not 8".
    std::optional<bool> informative() const;

    friend bool operator==(const PostRecord&, const PostRecord&) = default;
};

struct UserStats {
    std::string user_id;
    std::size_t total = 0;
    std::size_t informative = 0;
    std::size_t non_informative = 0;
};

/// Per-user counts over a set of labeled records.
std::map<std::string, UserStats> user_stats_from(const std::vector<PostRecord>& records);

struct CorpusDims {
    std::size_t seq_len = 0;    // d
    std::size_t text_dim = 0;   // dt
    std::size_t image_dim = 0;  // dv
    std::size_t joint_dim = 0;  // CLIP-style joint embedding width

    friend bool operator==(const CorpusDims&, const CorpusDims&) = default;
};

/// Embedding tensors of one post.
struct SampleTensors {
    Tensor2D text;         // d x dt
    Tensor2D image;        // d x dv
    Tensor2D joint_text;   // 1 x joint
    Tensor2D joint_image;  // 1 x joint

    friend bool operator==(const SampleTensors&, const SampleTensors&) = default;
};

/// Records sorted by post_id with their tensors at the same index, so
/// manifest line order never leaks into results.
struct Corpus {
    std::vector<PostRecord> records;
    std::vector<SampleTensors> tensors;
    CorpusDims dims;
    std::optional<Split> split;

    std::size_t size() const { return records.size(); }
    Corpus subset(Split s) const;
    std::optional<std::size_t> index_of(const std::string& post_id) const;
    /// Throws DataError when an invariant fails.
    void validate() const;
};

PostRecord parse_record(const std::string& json_line, const std::string& context);
std::string serialize_record(const PostRecord& r);

/// Loads a JSON-lines manifest; embedding refs are resolved relative to the
/// manifest directory.
Corpus load_manifest(const std::filesystem::path& path);

/// Writes tensors under `dir/tensors/` and the manifest at `dir/manifest_name`,
/// rewriting each record's refs to point there.
std::filesystem::path save_corpus(Corpus corpus, const std::filesystem::path& dir,
                                  const std::string& manifest_name = "manifest.jsonl");

}  // namespace crisisspot
