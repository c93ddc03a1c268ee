#include "crisisspot/model.hpp"

namespace crisisspot {

void ModelDims::finalize() {
    if (sage.empty() || gfln.empty() || fusion.maln.empty() || fusion.shln.empty() || fusion.jfln.empty())
        throw ParameterError("model dims: every stack needs at least one layer");
    if (joint_dim == 0) throw ParameterError("model dims: joint_dim must be positive");
    fusion.fav_dim = idea.fav_dim();
    fusion.gfln_dim = gfln.back();
}

ModelDims ModelDims::from_profile(const std::string& profile, const CorpusDims& corpus,
                                  std::size_t graph_layers, std::size_t shared_dim) {
    if (graph_layers == 0) throw ParameterError("graph_layers must be at least 1");
    ModelDims d;
    d.idea.seq_len = corpus.seq_len;
    d.idea.text_dim = corpus.text_dim;
    d.idea.image_dim = corpus.image_dim;
    d.joint_dim = corpus.joint_dim;
    std::size_t sage_width = 0;
    if (profile == "paper") {
        d.idea.shared_dim = 1024;
        sage_width = 512;
        d.gfln = {512, 256, 128};
        d.fusion.maln = {1024, 512, 256, 128};
        d.fusion.jfln = {256, 128, 64};
    } else if (profile == "small") {
        d.idea.shared_dim = 16;
        sage_width = 16;
        d.gfln = {32, 16};
        d.fusion.maln = {64, 32, 16};
        d.fusion.jfln = {32, 16};
    } else if (profile == "micro") {
        d.idea.shared_dim = 5;
        sage_width = 6;
        d.gfln = {8, 4};
        d.fusion.maln = {8, 6};
        d.fusion.jfln = {8, 6};
    } else {
        throw ParameterError("unknown model profile '" + profile + "' (expected paper, small or micro)");
    }
    d.fusion.shln = {16, 8};
    if (shared_dim != 0) d.idea.shared_dim = shared_dim;
    d.sage.assign(graph_layers, sage_width);
    d.finalize();
    return d;
}

nlohmann::json to_json(const ModelDims& d) {
    return {{"seq_len", d.idea.seq_len},
            {"text_dim", d.idea.text_dim},
            {"image_dim", d.idea.image_dim},
            {"shared_dim", d.idea.shared_dim},
            {"joint_dim", d.joint_dim},
            {"sage", d.sage},
            {"gfln", d.gfln},
            {"maln", d.fusion.maln},
            {"shln", d.fusion.shln},
            {"jfln", d.fusion.jfln}};
}

ModelDims model_dims_from_json(const nlohmann::json& j) {
    try {
        ModelDims d;
        d.idea.seq_len = j.at("seq_len").get<std::size_t>();
        d.idea.text_dim = j.at("text_dim").get<std::size_t>();
        d.idea.image_dim = j.at("image_dim").get<std::size_t>();
        d.idea.shared_dim = j.at("shared_dim").get<std::size_t>();
        d.joint_dim = j.at("joint_dim").get<std::size_t>();
        d.sage = j.at("sage").get<std::vector<std::size_t>>();
        d.gfln = j.at("gfln").get<std::vector<std::size_t>>();
        d.fusion.maln = j.at("maln").get<std::vector<std::size_t>>();
        d.fusion.shln = j.at("shln").get<std::vector<std::size_t>>();
        d.fusion.jfln = j.at("jfln").get<std::vector<std::size_t>>();
        d.finalize();
        return d;
    } catch (const nlohmann::json::exception& e) {
        throw DataError(std::string("model dims: ") + e.what());
    }
}

}  // namespace crisisspot
