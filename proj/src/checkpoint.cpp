#include <cstring>
#include <fstream>

#include "crisisspot/tensor_io.hpp"
#include "crisisspot/training.hpp"

namespace crisisspot {

namespace {

constexpr char kMagic[4] = {'C', 'S', 'P', 'K'};
constexpr std::uint16_t kVersion = 1;

void put_u32(std::ostream& out, std::uint32_t v) {
    const unsigned char b[4] = {static_cast<unsigned char>(v), static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v >> 16), static_cast<unsigned char>(v >> 24)};
    out.write(reinterpret_cast<const char*>(b), 4);
}

std::uint32_t get_u32(std::istream& in, const std::string& path) {
    unsigned char b[4];
    if (!in.read(reinterpret_cast<char*>(b), 4)) throw DataError(path + ": truncated checkpoint header");
    return static_cast<std::uint32_t>(b[0]) | static_cast<std::uint32_t>(b[1]) << 8 |
           static_cast<std::uint32_t>(b[2]) << 16 | static_cast<std::uint32_t>(b[3]) << 24;
}

}  // namespace

// Layout: "CSPK", u16 version, u32 meta length, meta JSON (config, dims,
// normalization, lexicons, tensor manifest), then one CSPT block per
// manifest entry in order.
void save_checkpoint(const std::filesystem::path& path, const Model<float>& model, const TrainConfig& cfg,
                     const social::NormStats& norm, const social::Lexicons& lex, std::size_t best_epoch) {
    nlohmann::json manifest = nlohmann::json::array();
    for (const auto& [name, p] : model.store)
        manifest.push_back({{"name", name}, {"rows", p.value.rows()}, {"cols", p.value.cols()}});
    const nlohmann::json meta = {{"config", to_json(cfg)},
                                 {"dims", to_json(model.dims)},
                                 {"norm", social::to_json(norm)},
                                 {"lexicons", social::to_json(lex)},
                                 {"best_epoch", best_epoch},
                                 {"tensors", manifest}};
    const std::string blob = meta.dump();

    std::ofstream out(path, std::ios::binary);
    if (!out) throw DataError("cannot write checkpoint " + path.string());
    out.write(kMagic, 4);
    const unsigned char ver[2] = {static_cast<unsigned char>(kVersion & 0xff), static_cast<unsigned char>(kVersion >> 8)};
    out.write(reinterpret_cast<const char*>(ver), 2);
    put_u32(out, static_cast<std::uint32_t>(blob.size()));
    out.write(blob.data(), static_cast<std::streamsize>(blob.size()));
    for (const auto& [name, p] : model.store) write_tensor(out, p.value);
    if (!out) throw DataError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
    const std::string where = path.string();
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open checkpoint " + where);
    char magic[4];
    unsigned char ver[2];
    if (!in.read(magic, 4) || !in.read(reinterpret_cast<char*>(ver), 2))
        throw DataError(where + ": truncated checkpoint header");
    if (std::memcmp(magic, kMagic, 4) != 0) throw DataError(where + ": not a checkpoint (bad magic)");
    const std::uint16_t version = static_cast<std::uint16_t>(ver[0] | ver[1] << 8);
    if (version != kVersion) throw DataError(where + ": unsupported checkpoint version " + std::to_string(version));
    const std::uint32_t len = get_u32(in, where);
    std::string blob(len, '\0');
    if (!in.read(blob.data(), len)) throw DataError(where + ": truncated checkpoint metadata");

    nlohmann::json meta;
    try {
        meta = nlohmann::json::parse(blob);
    } catch (const nlohmann::json::exception& e) {
        throw DataError(where + ": corrupt checkpoint metadata: " + e.what());
    }
    Checkpoint ck;
    try {
        ck.config = train_config_from_json(meta.at("config"));
        ck.norm = social::norm_stats_from_json(meta.at("norm"));
        ck.lexicons = social::lexicons_from_json(meta.at("lexicons"));
        ck.best_epoch = meta.at("best_epoch").get<std::size_t>();
        ck.model = build_model<float>(model_dims_from_json(meta.at("dims")), ck.config.model_options());
    } catch (const nlohmann::json::exception& e) {
        throw DataError(where + ": checkpoint metadata: " + e.what());
    }
    const auto& manifest = meta.at("tensors");
    if (manifest.size() != ck.model.store.size())
        throw DataError(where + ": checkpoint holds " + std::to_string(manifest.size()) + " tensors, model expects " +
                        std::to_string(ck.model.store.size()));
    for (const auto& entry : manifest) {
        const std::string name = entry.at("name").get<std::string>();
        if (!ck.model.store.contains(name)) throw DataError(where + ": unexpected tensor " + name);
        auto& p = ck.model.store.at(name);
        Tensor2D t = read_tensor(in, where + ":" + name);
        if (t.rows() != entry.at("rows").get<std::size_t>() || t.cols() != entry.at("cols").get<std::size_t>() ||
            !t.same_shape(p.value))
            throw DataError(where + ": tensor " + name + " has shape " + t.shape_string() + ", model expects " +
                            p.value.shape_string());
        p.value = std::move(t);
    }
    return ck;
}

}  // namespace crisisspot
