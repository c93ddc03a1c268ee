#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

#include "crisisspot/data_model.hpp"
#include "crisisspot/synthetic.hpp"
#include "crisisspot/tensor_io.hpp"
#include "doctest.h"
#include "test_util.hpp"

using namespace crisisspot;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
    auto dir = fs::temp_directory_path() / ("crisisspot_test_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string record_line(const std::string& id, const std::string& extra = "") {
    return R"({"post_id":")" + id + R"(","user_id":"u1","text":"quake rescue","favourites":1,)" +
           R"("retweets":0,"followers":10,"friends":5,"statuses":7,"informative_label":1,)" +
           R"("text_embedding_ref":"t.cspt","image_embedding_ref":"i.cspt",)" +
           R"("joint_text_ref":"jt.cspt","joint_image_ref":"ji.cspt")" + extra + "}";
}

void write_small_tensors(const fs::path& dir) {
    save_tensor(dir / "t.cspt", Tensor2D(3, 4, 0.5f));
    save_tensor(dir / "i.cspt", Tensor2D(3, 5, -0.5f));
    save_tensor(dir / "jt.cspt", Tensor2D(1, 2, 1.0f));
    save_tensor(dir / "ji.cspt", Tensor2D(1, 2, 2.0f));
}

void write_lines(const fs::path& path, const std::vector<std::string>& lines) {
    std::ofstream out(path);
    for (const auto& l : lines) out << l << '\n';
}

// Logistic-regression probe trained by full-batch gradient descent on
// mean-pooled text and image embeddings; returns training accuracy.
double linear_probe_accuracy(const Corpus& c) {
    const std::size_t n = c.size();
    const std::size_t p = c.dims.text_dim + c.dims.image_dim;
    std::vector<std::vector<double>> x(n, std::vector<double>(p, 0.0));
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const auto& t = c.tensors[i];
        for (std::size_t r = 0; r < t.text.rows(); ++r) {
            for (std::size_t k = 0; k < c.dims.text_dim; ++k) x[i][k] += t.text(r, k) / t.text.rows();
            for (std::size_t k = 0; k < c.dims.image_dim; ++k)
                x[i][c.dims.text_dim + k] += t.image(r, k) / t.image.rows();
        }
        y[i] = *c.records[i].informative_label;
    }
    std::vector<double> w(p, 0.0);
    double b = 0.0;
    for (int it = 0; it < 500; ++it) {
        std::vector<double> gw(p, 0.0);
        double gb = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            double z = b;
            for (std::size_t k = 0; k < p; ++k) z += w[k] * x[i][k];
            const double err = 1.0 / (1.0 + std::exp(-z)) - y[i];
            for (std::size_t k = 0; k < p; ++k) gw[k] += err * x[i][k] / n;
            gb += err / n;
        }
        for (std::size_t k = 0; k < p; ++k) w[k] -= 0.5 * gw[k];
        b -= 0.5 * gb;
    }
    std::size_t correct = 0;
    for (std::size_t i = 0; i < n; ++i) {
        double z = b;
        for (std::size_t k = 0; k < p; ++k) z += w[k] * x[i][k];
        correct += (z >= 0.0) == (y[i] == 1.0);
    }
    return static_cast<double>(correct) / n;
}

}  // namespace

TEST_CASE("tensor save/load round trip is bit-exact") {
    auto dir = fresh_dir("roundtrip");
    std::mt19937_64 rng(1);
    auto m = testutil::random_matrix<float>(128, 768, rng, -100.0, 100.0);
    m(0, 0) = 1e-40f;  // subnormal
    m(0, 1) = -0.0f;
    save_tensor(dir / "m.cspt", m);
    auto back = load_tensor(dir / "m.cspt");
    REQUIRE(back.rows() == 128);
    REQUIRE(back.cols() == 768);
    CHECK(std::memcmp(back.data().data(), m.data().data(), m.size() * sizeof(float)) == 0);
    CHECK(fs::file_size(dir / "m.cspt") == 14 + 128 * 768 * 4);
}

TEST_CASE("tensor loader errors") {
    auto dir = fresh_dir("tensor_errors");
    save_tensor(dir / "ok.cspt", Tensor2D(4, 4, 1.0f));

    SUBCASE("truncated payload") {
        fs::resize_file(dir / "ok.cspt", 14 + 10);
        CHECK_THROWS_WITH_AS(load_tensor(dir / "ok.cspt"), doctest::Contains("truncated"), DataError);
    }
    SUBCASE("bad magic") {
        std::ofstream(dir / "bad.cspt", std::ios::binary) << "NOPE0000000000000000";
        CHECK_THROWS_WITH_AS(load_tensor(dir / "bad.cspt"), doctest::Contains("magic"), DataError);
    }
    SUBCASE("zero rows") {
        std::ofstream out(dir / "empty.cspt", std::ios::binary);
        const char header[14] = {'C', 'S', 'P', 'T', 1, 0, 0, 0, 0, 0, 3, 0, 0, 0};
        out.write(header, 14);
        out.close();
        CHECK_THROWS_WITH_AS(load_tensor(dir / "empty.cspt"), doctest::Contains("empty tensor"), DataError);
    }
    SUBCASE("missing file") {
        CHECK_THROWS_AS(load_tensor(dir / "absent.cspt"), DataError);
    }
}

TEST_CASE("load_manifest") {
    auto dir = fresh_dir("manifest");
    write_small_tensors(dir);

    SUBCASE("valid two-record manifest") {
        write_lines(dir / "m.jsonl", {record_line("b"), record_line("a", R"(,"split":"val")")});
        auto c = load_manifest(dir / "m.jsonl");
        REQUIRE(c.size() == 2);
        CHECK(c.records[0].post_id == "a");
        CHECK(c.records[0].split == Split::val);
        CHECK(c.dims == CorpusDims{3, 4, 5, 2});
        CHECK(c.tensors[1].image(2, 4) == -0.5f);
        CHECK(c.index_of("b") == 1u);
        CHECK_FALSE(c.index_of("zzz").has_value());
    }
    SUBCASE("absent tensor names the ref") {
        auto line = record_line("a");
        line.replace(line.find("i.cspt"), 6, "gone.cspt");
        write_lines(dir / "m.jsonl", {line});
        CHECK_THROWS_WITH_AS(load_manifest(dir / "m.jsonl"), doctest::Contains("gone.cspt"), DataError);
    }
    SUBCASE("humanitarian label 9 is outside the label domain") {
        write_lines(dir / "m.jsonl", {record_line("a", R"(,"humanitarian_label":9)")});
        CHECK_THROWS_WITH_AS(load_manifest(dir / "m.jsonl"), doctest::Contains("label domain"), DataError);
    }
    SUBCASE("unknown fields are rejected") {
        write_lines(dir / "m.jsonl", {record_line("a", R"(,"likes":3)")});
        CHECK_THROWS_WITH_AS(load_manifest(dir / "m.jsonl"), doctest::Contains("unknown field"), DataError);
    }
    SUBCASE("negative counts are rejected") {
        auto line = record_line("a");
        line.replace(line.find("\"retweets\":0"), 12, "\"retweets\":-3");
        write_lines(dir / "m.jsonl", {line});
        CHECK_THROWS_AS(load_manifest(dir / "m.jsonl"), DataError);
    }
    SUBCASE("a post without an image ref is rejected") {
        auto line = record_line("a");
        line.replace(line.find(R"("image_embedding_ref":"i.cspt",)"), 31, "");
        write_lines(dir / "m.jsonl", {line});
        CHECK_THROWS_WITH_AS(load_manifest(dir / "m.jsonl"), doctest::Contains("image_embedding_ref"),
                             DataError);
    }
    SUBCASE("shape mismatch between records") {
        save_tensor(dir / "t2.cspt", Tensor2D(3, 9, 0.0f));
        auto line = record_line("b");
        line.replace(line.find("\"t.cspt\""), 8, "\"t2.cspt\"");
        write_lines(dir / "m.jsonl", {record_line("a"), line});
        CHECK_THROWS_WITH_AS(load_manifest(dir / "m.jsonl"), doctest::Contains("corpus expects"), DataError);
    }
    SUBCASE("duplicate ids") {
        write_lines(dir / "m.jsonl", {record_line("a"), record_line("a")});
        CHECK_THROWS_WITH_AS(load_manifest(dir / "m.jsonl"), doctest::Contains("duplicate"), DataError);
    }
}

TEST_CASE("manifest line order does not change the loaded corpus") {
    SyntheticConfig cfg;
    cfg.seed = 3;
    cfg.n_samples = 12;
    cfg.dims = {3, 4, 4, 3};
    auto gen = generate_synthetic(cfg);
    auto dir = fresh_dir("order");
    auto manifest = save_corpus(gen.corpus, dir);
    auto a = load_manifest(manifest);

    std::vector<std::string> lines;
    {
        std::ifstream in(manifest);
        for (std::string l; std::getline(in, l);) lines.push_back(l);
    }
    std::mt19937_64 rng(5);
    std::shuffle(lines.begin(), lines.end(), rng);
    write_lines(dir / "shuffled.jsonl", lines);
    auto b = load_manifest(dir / "shuffled.jsonl");
    CHECK(a.records == b.records);
    CHECK(a.tensors == b.tensors);
    CHECK(a.tensors == gen.corpus.tensors);
}

TEST_CASE("generate_synthetic") {
    SyntheticConfig cfg;
    cfg.seed = 42;
    cfg.n_samples = 40;
    cfg.dims = {4, 6, 8, 6};

    SUBCASE("same seed gives identical corpora") {
        auto a = generate_synthetic(cfg);
        auto b = generate_synthetic(cfg);
        CHECK(a.corpus.records == b.corpus.records);
        CHECK(a.corpus.tensors == b.corpus.tensors);
        cfg.seed = 43;
        auto c = generate_synthetic(cfg);
        CHECK_FALSE(a.corpus.tensors == c.corpus.tensors);
    }
    SUBCASE("preconditions") {
        cfg.n_samples = 3;
        CHECK_THROWS_AS(generate_synthetic(cfg), ParameterError);
        cfg.n_samples = 10;
        cfg.dims.text_dim = 1;
        CHECK_THROWS_AS(generate_synthetic(cfg), ParameterError);
    }
    SUBCASE("split fractions") {
        cfg.val_fraction = 0.25;
        cfg.test_fraction = 0.25;
        auto c = generate_synthetic(cfg).corpus;
        CHECK(c.subset(Split::train).size() == 20);
        CHECK(c.subset(Split::val).size() == 10);
        CHECK(c.subset(Split::test).size() == 10);
    }
    SUBCASE("humanitarian variant uses labels 1..k") {
        cfg.task = Task::humanitarian;
        cfg.num_classes = 4;
        auto c = generate_synthetic(cfg).corpus;
        std::set<int> seen;
        for (const auto& r : c.records) {
            REQUIRE(r.humanitarian_label.has_value());
            CHECK_FALSE(r.informative_label.has_value());
            seen.insert(*r.humanitarian_label);
        }
        CHECK(seen == std::set<int>{1, 2, 3, 4});
    }
}

TEST_CASE("generated corpora satisfy corpus invariants for 100 seeds") {
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        SyntheticConfig cfg;
        cfg.seed = seed;
        cfg.n_samples = 4 + seed % 9;
        cfg.dims = {2 + seed % 3, 2 + seed % 4, 2 + seed % 5, 2 + seed % 2};
        cfg.task = seed % 2 ? Task::humanitarian : Task::informative;
        auto c = generate_synthetic(cfg).corpus;
        CHECK_NOTHROW(c.validate());
        for (const auto& r : c.records) {
            if (r.humanitarian_label) {
                CHECK(*r.humanitarian_label >= 1);
                CHECK(*r.humanitarian_label <= 8);
            }
            for (const auto& t : c.tensors) CHECK(t.text.all_finite());
        }
        for (const auto& [_, u] : user_stats_from(c.records)) {
            CHECK(u.total >= 1);
            CHECK(u.informative + u.non_informative <= u.total);
        }
    }
}

TEST_CASE("zero separation makes class-conditional means coincide") {
    SyntheticConfig cfg;
    cfg.seed = 9;
    cfg.n_samples = 2000;
    cfg.dims = {2, 3, 3, 3};
    cfg.separation = 0.0;
    auto c = generate_synthetic(cfg).corpus;
    // Per-class mean of the pooled first text coordinate; pooled noise has
    // variance 1 + 1/2, so the difference of two class means has std ~0.055.
    double m[2] = {0, 0};
    std::size_t n[2] = {0, 0};
    for (std::size_t i = 0; i < c.size(); ++i) {
        const int y = *c.records[i].informative_label;
        m[y] += (c.tensors[i].text(0, 0) + c.tensors[i].text(1, 0)) / 2.0;
        ++n[y];
    }
    CHECK(std::abs(m[0] / n[0] - m[1] / n[1]) < 0.22);
}

TEST_CASE("4-sigma separation is linearly separable on 200 samples") {
    SyntheticConfig cfg;
    cfg.seed = 7;
    cfg.n_samples = 200;
    cfg.dims = {4, 6, 8, 6};
    cfg.separation = 4.0;
    auto c = generate_synthetic(cfg).corpus;
    CHECK(linear_probe_accuracy(c) >= 0.95);
}

TEST_CASE("save_corpus then load_manifest restores the corpus") {
    SyntheticConfig cfg;
    cfg.seed = 1;
    cfg.n_samples = 8;
    cfg.dims = {2, 3, 4, 2};
    auto gen = generate_synthetic(cfg);
    auto dir = fresh_dir("save");
    auto c = load_manifest(save_corpus(gen.corpus, dir));
    CHECK(c.tensors == gen.corpus.tensors);
    CHECK(c.records.size() == gen.corpus.records.size());
    CHECK(c.records[3].text == gen.corpus.records[3].text);
    CHECK(c.records[3].split == gen.corpus.records[3].split);
}
