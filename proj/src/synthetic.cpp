#include "crisisspot/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <string>
#include <vector>

#include "crisisspot/errors.hpp"

namespace crisisspot {
namespace {

const std::vector<std::string> kFiller = {
    "the",   "a",     "today", "city",  "people", "photo", "look",   "new",    "street", "near",
    "just",  "see",   "this",  "our",   "now",    "here",  "town",   "update", "video",  "morning",
    "night", "house", "road",  "south", "north",  "area",  "please", "share",  "news",   "local"};

const std::vector<std::string> kCrisis = {
    "earthquake", "rescue",    "rubble",   "injured", "aftershock", "evacuate", "shelter",
    "donation",   "victims",   "trapped",  "emergency", "damage",   "relief",   "survivors",
    "casualties", "debris",    "magnitude", "tremor",  "collapsed",  "aid"};

const std::vector<std::pair<std::string, double>> kPositive = {
    {"hope", 2.0}, {"safe", 1.5}, {"thank", 1.5}, {"grateful", 2.0}, {"love", 2.5},
    {"strong", 1.0}, {"support", 1.2}, {"brave", 1.8}};

const std::vector<std::pair<std::string, double>> kNegative = {
    {"destroyed", -2.5}, {"tragic", -3.0}, {"sad", -2.0},      {"terrible", -2.5},
    {"dead", -3.0},      {"lost", -1.5},   {"devastated", -3.0}, {"pain", -2.0}};

// Eleven emotion categories, two cue words each; a few words are shared.
const std::vector<std::vector<std::string>> kEmotionWords = {
    {"furious", "outrage"},  {"awaiting", "soon"},    {"disgusting", "filthy"},
    {"afraid", "panic"},     {"joyful", "relieved"},  {"mourning", "grief"},
    {"sudden", "shocking"},  {"reliable", "trusted"}, {"grief", "awful"},
    {"cheerful", "relieved"}, {"anxious", "worried"}};

std::vector<std::vector<double>> class_means(std::size_t classes, std::size_t dim, double separation,
                                             std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<std::vector<double>> dirs;
    for (std::size_t k = 0; k < classes; ++k) {
        std::vector<double> v(dim);
        for (auto& x : v) x = gauss(rng);
        if (k < dim) {
            for (const auto& d : dirs) {
                double dot = 0.0;
                for (std::size_t i = 0; i < dim; ++i) dot += v[i] * d[i];
                for (std::size_t i = 0; i < dim; ++i) v[i] -= dot * d[i];
            }
        }
        double n = 0.0;
        for (double x : v) n += x * x;
        n = std::sqrt(n);
        for (auto& x : v) x /= n;
        dirs.push_back(std::move(v));
    }
    // Two classes sit antipodally; more classes sit on scaled orthonormal
    // directions. Either way neighbouring means are `separation` apart.
    if (classes == 2) {
        for (std::size_t i = 0; i < dim; ++i) dirs[1][i] = -dirs[0][i];
        for (auto& d : dirs)
            for (auto& x : d) x *= separation / 2.0;
    } else {
        for (auto& d : dirs)
            for (auto& x : d) x *= separation / std::sqrt(2.0);
    }
    return dirs;
}

Tensor2D sample_rows(const std::vector<double>& mean, std::size_t rows, double sample_noise,
                     double token_noise, std::mt19937_64& rng) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    const std::size_t dim = mean.size();
    std::vector<double> shared(dim);
    for (auto& x : shared) x = sample_noise * gauss(rng);
    Tensor2D m(rows, dim);
    for (std::size_t r = 0; r < rows; ++r)
        for (std::size_t c = 0; c < dim; ++c)
            m(r, c) = static_cast<float>(mean[c] + shared[c] + token_noise * gauss(rng));
    return m;
}

template <typename C>
const auto& pick(const C& c, std::mt19937_64& rng) {
    std::uniform_int_distribution<std::size_t> u(0, c.size() - 1);
    return c[u(rng)];
}

std::string zero_pad(const char* prefix, std::size_t i, int width) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%s%0*zu", prefix, width, i);
    return buf;
}

}  // namespace

social::Lexicons synthetic_lexicons() {
    social::Lexicons lex;
    for (const auto& w : kCrisis) lex.crisis.add(w, "synthetic");
    for (const auto& [w, v] : kPositive) lex.sentiment.valence[w] = v;
    for (const auto& [w, v] : kNegative) lex.sentiment.valence[w] = v;
    for (std::size_t c = 0; c < kEmotionWords.size(); ++c)
        for (const auto& w : kEmotionWords[c]) lex.emotion.tags[w].set(c);
    return lex;
}

SyntheticCorpus generate_synthetic(const SyntheticConfig& cfg) {
    if (cfg.n_samples < 4) throw ParameterError("generate_synthetic: n_samples must be >= 4");
    const auto& d = cfg.dims;
    if (d.seq_len < 2 || d.text_dim < 2 || d.image_dim < 2 || d.joint_dim < 2)
        throw ParameterError("generate_synthetic: all dims must be >= 2");
    if (cfg.task == Task::humanitarian && (cfg.num_classes < 2 || cfg.num_classes > kHumanitarianClasses))
        throw ParameterError("generate_synthetic: num_classes must lie in 2..8");
    if (cfg.val_fraction < 0 || cfg.test_fraction < 0 || cfg.val_fraction + cfg.test_fraction >= 1.0)
        throw ParameterError("generate_synthetic: split fractions must be non-negative and sum below 1");
    if (cfg.scf_signal < 0 || cfg.scf_signal > 1)
        throw ParameterError("generate_synthetic: scf_signal must lie in [0, 1]");

    std::mt19937_64 rng(cfg.seed);
    const std::size_t classes =
        cfg.task == Task::informative ? 2 : static_cast<std::size_t>(cfg.num_classes);
    const double joint_sep = cfg.joint_separation < 0 ? cfg.separation : cfg.joint_separation;
    const auto text_means = class_means(classes, d.text_dim, cfg.separation, rng);
    const auto image_means = class_means(classes, d.image_dim, cfg.separation, rng);
    const auto jt_means = class_means(classes, d.joint_dim, joint_sep * cfg.joint_noise, rng);
    const auto ji_means = class_means(classes, d.joint_dim, joint_sep * cfg.joint_noise, rng);

    const std::size_t n = cfg.n_samples;
    const std::size_t n_users = cfg.n_users ? cfg.n_users : std::max<std::size_t>(2, n / 5);
    std::vector<std::size_t> cls(n);
    for (std::size_t i = 0; i < n; ++i) cls[i] = i % classes;
    std::shuffle(cls.begin(), cls.end(), rng);

    const auto n_val = static_cast<std::size_t>(std::llround(cfg.val_fraction * static_cast<double>(n)));
    const auto n_test = static_cast<std::size_t>(std::llround(cfg.test_fraction * static_cast<double>(n)));
    const std::size_t n_train = n - n_val - n_test;

    std::uniform_real_distribution<double> unif(0.0, 1.0);
    std::uniform_int_distribution<int> length(8, 16);
    const double s = cfg.scf_signal;

    SyntheticCorpus out;
    out.lexicons = synthetic_lexicons();
    Corpus& corpus = out.corpus;
    corpus.dims = d;
    for (std::size_t i = 0; i < n; ++i) {
        const std::size_t k = cls[i];
        // "Informative" drives crisis vocabulary and user history.
        const bool informative = cfg.task == Task::informative
                                     ? k == 1
                                     : static_cast<int>(k) + 1 != kNotRelevantClass;
        PostRecord r;
        r.post_id = zero_pad("p", i, 6);
        r.split = i < n_train ? Split::train : (i < n_train + n_val ? Split::val : Split::test);
        if (cfg.task == Task::informative) {
            r.informative_label = static_cast<int>(k);
        } else {
            r.humanitarian_label = static_cast<int>(k) + 1;
        }

        // Users come in two leanings; a post picks a matching user with
        // probability 0.5 + 0.45 * signal.
        const bool matching = unif(rng) < 0.5 + 0.45 * s;
        const bool lean = matching ? informative : !informative;
        std::uniform_int_distribution<std::size_t> half(0, (n_users - 1) / 2);
        std::size_t u = 2 * half(rng) + (lean ? 1 : 0);
        if (u >= n_users) u = lean ? 1 : 0;
        r.user_id = zero_pad("u", u, 4);

        std::vector<std::string> words;
        const int len = length(rng);
        for (int w = 0; w < len; ++w) words.push_back(pick(kFiller, rng));
        const double p_crisis = informative ? 0.5 + 0.45 * s : 0.5 - 0.45 * s;
        for (int c = 0; c < 3; ++c)
            if (unif(rng) < p_crisis) words.push_back(pick(kCrisis, rng));
        const double p_neg = informative ? 0.3 + 0.4 * s : 0.3 - 0.2 * s;
        if (unif(rng) < p_neg) words.push_back(pick(kNegative, rng).first);
        if (unif(rng) < 0.3) words.push_back(pick(kPositive, rng).first);
        const std::size_t emo_cat =
            cfg.task == Task::informative ? (informative ? 3 : 4) : k % kEmotionWords.size();
        if (unif(rng) < 0.9 * s) words.push_back(pick(kEmotionWords[emo_cat], rng));
        if (unif(rng) < 0.3) words.push_back(pick(pick(kEmotionWords, rng), rng));
        std::shuffle(words.begin(), words.end(), rng);
        for (std::size_t w = 0; w < words.size(); ++w) {
            if (w) r.text += ' ';
            if (w == 0 && informative && unif(rng) < 0.3) r.text += '#';
            r.text += words[w];
        }

        auto geometric = [&](double mean) {
            std::geometric_distribution<std::uint64_t> g(1.0 / (1.0 + mean));
            return g(rng);
        };
        const double boost = informative ? 1.0 + 3.0 * s : 1.0;
        r.favourites = geometric(4.0 * boost);
        r.retweets = geometric(2.0 * boost);
        r.followers = geometric(300.0 * (informative ? 1.0 + s : 1.0));
        r.friends = geometric(150.0);
        r.statuses = geometric(2000.0);

        SampleTensors t;
        t.text = sample_rows(text_means[k], d.seq_len, 1.0, cfg.token_noise, rng);
        t.image = sample_rows(image_means[k], d.seq_len, 1.0, cfg.token_noise, rng);
        t.joint_text = sample_rows(jt_means[k], 1, cfg.joint_noise, 0.0, rng);
        t.joint_image = sample_rows(ji_means[k], 1, cfg.joint_noise, 0.0, rng);
        corpus.records.push_back(std::move(r));
        corpus.tensors.push_back(std::move(t));
    }
    // Ids are zero-padded in generation order, so the corpus is already sorted.
    corpus.validate();
    return out;
}

}  // namespace crisisspot
