#include "crisisspot/data_model.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "crisisspot/errors.hpp"
#include "crisisspot/tensor_io.hpp"
#include "json.hpp"

namespace crisisspot {

using nlohmann::json;

std::string to_string(Split s) {
    switch (s) {
        case Split::train: return "train";
        case Split::val: return "val";
        case Split::test: return "test";
    }
    return "?";
}

std::string to_string(Task t) {
    return t == Task::informative ? "informative" : "humanitarian";
}

Split parse_split(const std::string& s) {
    if (s == "train") return Split::train;
    if (s == "val") return Split::val;
    if (s == "test") return Split::test;
    throw ParameterError("unknown split '" + s + "' (expected train, val or test)");
}

Task parse_task(const std::string& s) {
    if (s == "informative") return Task::informative;
    if (s == "humanitarian") return Task::humanitarian;
    throw ParameterError("unknown task '" + s + "' (expected informative or humanitarian)");
}

std::optional<bool> PostRecord::informative() const {
    if (informative_label) return *informative_label == 1;
    if (humanitarian_label) return *humanitarian_label != kNotRelevantClass;
    return std::nullopt;
}

std::map<std::string, UserStats> user_stats_from(const std::vector<PostRecord>& records) {
    std::map<std::string, UserStats> out;
    for (const auto& r : records) {
        auto& u = out[r.user_id];
        u.user_id = r.user_id;
        ++u.total;
        if (auto info = r.informative()) ++(*info ? u.informative : u.non_informative);
    }
    return out;
}

namespace {

const std::set<std::string> kRecordFields = {
    "post_id",   "user_id",           "text",               "favourites",         "retweets",
    "followers", "friends",           "statuses",           "informative_label",  "humanitarian_label",
    "text_embedding_ref", "image_embedding_ref", "joint_text_ref", "joint_image_ref", "split"};

std::uint64_t count_field(const json& j, const char* key, const std::string& context) {
    if (!j.contains(key)) return 0;
    const auto& v = j.at(key);
    if (v.is_number_unsigned()) return v.get<std::uint64_t>();
    if (v.is_number_integer() && v.get<std::int64_t>() >= 0) return v.get<std::uint64_t>();
    throw DataError(context + ": field '" + key + "' must be a non-negative integer");
}

std::string string_field(const json& j, const char* key, const std::string& context,
                         bool required) {
    if (!j.contains(key)) {
        if (required) throw DataError(context + ": missing field '" + key + "'");
        return {};
    }
    if (!j.at(key).is_string()) throw DataError(context + ": field '" + key + "' must be a string");
    return j.at(key).get<std::string>();
}

std::optional<int> label_field(const json& j, const char* key, const std::string& context) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    if (!j.at(key).is_number_integer())
        throw DataError(context + ": field '" + key + "' must be an integer");
    return j.at(key).get<int>();
}

}  // namespace

PostRecord parse_record(const std::string& line, const std::string& context) {
    json j;
    try {
        j = json::parse(line);
    } catch (const json::parse_error& e) {
        throw DataError(context + ": malformed JSON (" + e.what() + ")");
    }
    if (!j.is_object()) throw DataError(context + ": record must be a JSON object");
    for (const auto& [key, _] : j.items())
        if (!kRecordFields.count(key)) throw DataError(context + ": unknown field '" + key + "'");

    PostRecord r;
    r.post_id = string_field(j, "post_id", context, true);
    const std::string where = context + " (post " + r.post_id + ")";
    r.user_id = string_field(j, "user_id", where, true);
    r.text = string_field(j, "text", where, false);
    r.favourites = count_field(j, "favourites", where);
    r.retweets = count_field(j, "retweets", where);
    r.followers = count_field(j, "followers", where);
    r.friends = count_field(j, "friends", where);
    r.statuses = count_field(j, "statuses", where);
    r.informative_label = label_field(j, "informative_label", where);
    r.humanitarian_label = label_field(j, "humanitarian_label", where);
    if (r.informative_label && *r.informative_label != 0 && *r.informative_label != 1)
        throw DataError(where + ": informative_label " + std::to_string(*r.informative_label) +
                        " outside label domain {0,1}");
    if (r.humanitarian_label &&
        (*r.humanitarian_label < 1 || *r.humanitarian_label > kHumanitarianClasses))
        throw DataError(where + ": humanitarian_label " + std::to_string(*r.humanitarian_label) +
                        " outside label domain 1..8");
    // Text-only or image-only posts are rejected: every ref is required.
    r.text_embedding_ref = string_field(j, "text_embedding_ref", where, true);
    r.image_embedding_ref = string_field(j, "image_embedding_ref", where, true);
    r.joint_text_ref = string_field(j, "joint_text_ref", where, true);
    r.joint_image_ref = string_field(j, "joint_image_ref", where, true);
    if (j.contains("split")) r.split = parse_split(string_field(j, "split", where, true));
    return r;
}

std::string serialize_record(const PostRecord& r) {
    // ordered_json keeps a stable, readable field order in manifests.
    nlohmann::ordered_json j;
    j["post_id"] = r.post_id;
    j["user_id"] = r.user_id;
    j["text"] = r.text;
    j["favourites"] = r.favourites;
    j["retweets"] = r.retweets;
    j["followers"] = r.followers;
    j["friends"] = r.friends;
    j["statuses"] = r.statuses;
    if (r.informative_label) j["informative_label"] = *r.informative_label;
    if (r.humanitarian_label) j["humanitarian_label"] = *r.humanitarian_label;
    j["text_embedding_ref"] = r.text_embedding_ref;
    j["image_embedding_ref"] = r.image_embedding_ref;
    j["joint_text_ref"] = r.joint_text_ref;
    j["joint_image_ref"] = r.joint_image_ref;
    if (r.split) j["split"] = to_string(*r.split);
    return j.dump();
}

Corpus Corpus::subset(Split s) const {
    Corpus out;
    out.dims = dims;
    out.split = s;
    for (std::size_t i = 0; i < records.size(); ++i) {
        if (records[i].split == s) {
            out.records.push_back(records[i]);
            out.tensors.push_back(tensors[i]);
        }
    }
    return out;
}

std::optional<std::size_t> Corpus::index_of(const std::string& post_id) const {
    auto it = std::lower_bound(records.begin(), records.end(), post_id,
                               [](const PostRecord& r, const std::string& id) { return r.post_id < id; });
    if (it == records.end() || it->post_id != post_id) return std::nullopt;
    return static_cast<std::size_t>(it - records.begin());
}

void Corpus::validate() const {
    if (records.size() != tensors.size()) throw DataError("corpus: records/tensors size mismatch");
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        const auto& t = tensors[i];
        auto check = [&](const Tensor2D& m, std::size_t rows, std::size_t cols, const char* what) {
            if (m.rows() != rows || m.cols() != cols) {
                throw DataError("post " + r.post_id + ": " + what + " tensor is " + m.shape_string() +
                                ", corpus expects " + std::to_string(rows) + "x" +
                                std::to_string(cols));
            }
        };
        check(t.text, dims.seq_len, dims.text_dim, "text");
        check(t.image, dims.seq_len, dims.image_dim, "image");
        check(t.joint_text, 1, dims.joint_dim, "joint text");
        check(t.joint_image, 1, dims.joint_dim, "joint image");
        if (i > 0 && !(records[i - 1].post_id < r.post_id))
            throw DataError("corpus: post ids must be unique and sorted (" + r.post_id + ")");
    }
}

Corpus load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open manifest: " + path.string());
    const auto base = path.parent_path();

    Corpus corpus;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        corpus.records.push_back(parse_record(line, path.string() + ":" + std::to_string(lineno)));
    }
    if (corpus.records.empty()) throw DataError("manifest has no records: " + path.string());

    std::sort(corpus.records.begin(), corpus.records.end(),
              [](const PostRecord& a, const PostRecord& b) { return a.post_id < b.post_id; });
    for (std::size_t i = 1; i < corpus.records.size(); ++i)
        if (corpus.records[i].post_id == corpus.records[i - 1].post_id)
            throw DataError("duplicate post_id " + corpus.records[i].post_id + " in " + path.string());

    auto load_ref = [&](const PostRecord& r, const std::string& ref, const char* field) {
        if (ref.empty()) throw DataError("post " + r.post_id + ": empty " + field);
        const auto p = base / ref;
        if (!std::filesystem::exists(p))
            throw DataError("post " + r.post_id + ": unresolved " + field + " '" + ref + "'");
        return load_tensor(p);
    };
    for (const auto& r : corpus.records) {
        corpus.tensors.push_back(SampleTensors{load_ref(r, r.text_embedding_ref, "text_embedding_ref"),
                                               load_ref(r, r.image_embedding_ref, "image_embedding_ref"),
                                               load_ref(r, r.joint_text_ref, "joint_text_ref"),
                                               load_ref(r, r.joint_image_ref, "joint_image_ref")});
    }
    const auto& first = corpus.tensors.front();
    corpus.dims = CorpusDims{first.text.rows(), first.text.cols(), first.image.cols(),
                             first.joint_text.cols()};
    corpus.validate();
    return corpus;
}

std::filesystem::path save_corpus(Corpus corpus, const std::filesystem::path& dir,
                                  const std::string& manifest_name) {
    std::error_code ec;
    std::filesystem::create_directories(dir / "tensors", ec);
    if (ec) throw DataError("cannot create output directory " + dir.string() + ": " + ec.message());
    const auto manifest = dir / manifest_name;
    std::ofstream out(manifest);
    if (!out) throw DataError("cannot write manifest: " + manifest.string());
    for (std::size_t i = 0; i < corpus.records.size(); ++i) {
        auto& r = corpus.records[i];
        const auto& t = corpus.tensors[i];
        const std::string stem = "tensors/" + r.post_id;
        r.text_embedding_ref = stem + ".text.cspt";
        r.image_embedding_ref = stem + ".image.cspt";
        r.joint_text_ref = stem + ".joint_text.cspt";
        r.joint_image_ref = stem + ".joint_image.cspt";
        save_tensor(dir / r.text_embedding_ref, t.text);
        save_tensor(dir / r.image_embedding_ref, t.image);
        save_tensor(dir / r.joint_text_ref, t.joint_text);
        save_tensor(dir / r.joint_image_ref, t.joint_image);
        out << serialize_record(r) << '\n';
    }
    if (!out) throw DataError("failed writing manifest: " + manifest.string());
    return manifest;
}

}  // namespace crisisspot
