#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <numeric>
#include <random>

#include "crisisspot/social_context.hpp"
#include "crisisspot/synthetic.hpp"
#include "doctest.h"

using namespace crisisspot;
using namespace crisisspot::social;
namespace fs = std::filesystem;

namespace {

SentimentLexicon toy_sentiment() {
    SentimentLexicon s;
    s.valence = {{"good", 1.0}, {"great", 2.5}, {"bad", -1.5}, {"awful", -3.0}, {"meh", 0.0}};
    return s;
}

EmotionLexicon toy_emotion() {
    EmotionLexicon e;
    e.tags["afraid"].set(3);
    e.tags["panic"].set(3);
    e.tags["panic"].set(7);
    e.tags["joy"].set(5);
    return e;
}

PostRecord record(const std::string& user, const std::string& text, int informative,
                  std::uint64_t fav = 0) {
    PostRecord r;
    r.post_id = "p" + std::to_string(fav) + user;
    r.user_id = user;
    r.text = text;
    r.favourites = fav;
    r.informative_label = informative;
    return r;
}

}  // namespace

TEST_CASE("tokenize") {
    CHECK(tokenize("Flood #Rescue @red_cross now!!") ==
          std::vector<std::string>{"flood", "rescue", "red", "cross", "now"});
    CHECK(tokenize("").empty());
    CHECK(tokenize("  ,,  ").empty());
    CHECK(tokenize("caf\xc3\xa9 ok") == std::vector<std::string>{"caf\xc3\xa9", "ok"});
}

TEST_CASE("senti_quotient") {
    const auto lex = toy_sentiment();
    SUBCASE("no lexicon hits is all neutral") {
        auto s = senti_quotient("the river rose", lex);
        CHECK(s[0] == 0.0);
        CHECK(s[1] == 1.0);
        CHECK(s[2] == 0.0);
    }
    SUBCASE("empty text") {
        auto s = senti_quotient("", lex);
        CHECK(s == std::array<double, 3>{0, 1, 0});
    }
    SUBCASE("good good") {
        auto s = senti_quotient("good good", lex);
        CHECK(s == std::array<double, 3>{1, 0, 0});
    }
    SUBCASE("mixed sentence matches a word-loop oracle") {
        const std::string text = "Great news but awful roads, meh";
        double pos = 0, neu = 0, neg = 0;
        for (const std::string w : {"great", "news", "but", "awful", "roads", "meh"}) {
            auto it = lex.valence.find(w);
            const double v = it == lex.valence.end() ? 0.0 : it->second;
            if (v > 0) pos += v;
            else if (v < 0) neg += -v;
            else neu += 1;
        }
        const double total = pos + neu + neg;
        auto s = senti_quotient(text, lex);
        CHECK(s[0] == doctest::Approx(pos / total).epsilon(1e-12));
        CHECK(s[1] == doctest::Approx(neu / total).epsilon(1e-12));
        CHECK(s[2] == doctest::Approx(neg / total).epsilon(1e-12));
        CHECK(s[0] + s[1] + s[2] == doctest::Approx(1.0).epsilon(1e-12));
    }
}

TEST_CASE("emo_quotient") {
    const auto lex = toy_emotion();
    CHECK(emo_quotient("water everywhere", lex) == std::array<double, kEmotionDims>{});
    CHECK(emo_quotient("", lex) == std::array<double, kEmotionDims>{});

    auto e = emo_quotient("afraid and panic here", lex);
    CHECK(e[3] == 0.5);
    CHECK(e[7] == 0.25);
    CHECK(std::accumulate(e.begin(), e.end(), 0.0) == doctest::Approx(0.75));

    // Category-loop oracle over a multi-tag sentence.
    const std::vector<std::string> words = {"panic", "joy", "panic", "afraid", "calm"};
    std::string text;
    for (const auto& w : words) text += w + " ";
    auto got = emo_quotient(text, lex);
    for (std::size_t c = 0; c < kEmotionDims; ++c) {
        double hits = 0;
        for (const auto& w : words) {
            auto it = lex.tags.find(w);
            if (it != lex.tags.end() && it->second.test(c)) hits += 1;
        }
        CHECK(got[c] == doctest::Approx(hits / words.size()));
    }
}

TEST_CASE("cis") {
    CrisisLexicon lex;
    lex.add("earthquake", "seed");
    lex.add("rescue", "seed");
    lex.add("flood", "seed");
    lex.add("fire", "seed");

    CHECK(crisis_term_count("Earthquake rescue underway", lex) == 2);
    auto scores = cis({"nothing here", "earthquake rescue", "flood fire earthquake rescue"}, lex);
    CHECK(scores == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(cis({"flood now", "flood now", "flood now"}, lex) == std::vector<double>{0, 0, 0});
    CHECK_THROWS_AS(cis({"x"}, CrisisLexicon{}), ParameterError);

    SUBCASE("word order does not matter") {
        std::vector<std::string> words = {"the", "flood", "took", "fire", "and", "rescue", "flood"};
        std::mt19937_64 rng(2);
        const auto base = crisis_term_count("the flood took fire and rescue flood", lex);
        for (int i = 0; i < 20; ++i) {
            std::shuffle(words.begin(), words.end(), rng);
            std::string t;
            for (const auto& w : words) t += w + " ";
            CHECK(crisis_term_count(t, lex) == base);
        }
    }
}

TEST_CASE("uis and ucis") {
    CHECK(uis_raw(UserStats{"a", 10, 10, 0}) == 1.0);
    CHECK(uis_raw(UserStats{"a", 10, 5, 5}) == 0.0);
    CHECK(uis_raw(UserStats{"a", 10, 3, 7}) == doctest::Approx(-0.4));
    CHECK_THROWS_AS(uis_raw(UserStats{"a", 0, 0, 0}), ParameterError);

    CHECK(ucis(0.8, 0.4, 1.0) == 0.8);
    CHECK(ucis(0.8, 0.4, 0.0) == 0.4);
    CHECK(ucis(0.8, 0.4, 0.5) == doctest::Approx(0.6));
    CHECK_THROWS_AS(ucis(0.8, 0.4, 1.5), ParameterError);
    CHECK_THROWS_AS(ucis(0.8, 0.4, -0.1), ParameterError);
}

TEST_CASE("MinMax") {
    auto m = MinMax::fit({2.0, 6.0, 4.0});
    CHECK(m.apply(2.0) == 0.0);
    CHECK(m.apply(6.0) == 1.0);
    CHECK(m.apply(4.0) == 0.5);
    CHECK(m.apply(100.0) == 1.0);
    CHECK(m.apply(-3.0) == 0.0);
    CHECK(MinMax::fit({3.0, 3.0}).apply(3.0) == 0.0);
}

TEST_CASE("norm stats and uem") {
    CrisisLexicon lex;
    lex.add("flood", "seed");
    std::vector<PostRecord> train = {record("u1", "flood", 1, 0), record("u1", "flood flood", 1, 10),
                                     record("u2", "calm day", 0, 20), record("u2", "flood", 1, 5)};
    auto norm = fit_norm_stats(train, lex);

    EngagementCounts c{};
    c[0] = 0;
    CHECK(uem(c, norm)[0] == 0.0);
    c[0] = 20;
    CHECK(uem(c, norm)[0] == 1.0);
    c[0] = 10;
    CHECK(uem(c, norm)[0] == 0.5);
    c[0] = 50;
    CHECK(uem(c, norm)[0] == 1.0);
    CHECK(uem(c, norm)[1] == 0.0);  // constant retweets

    // u1 raw 1, u2 raw 0: normalized 1 and 0.
    CHECK(uis_for_user("u1", norm) == 1.0);
    CHECK(uis_for_user("u2", norm) == 0.0);
    CHECK(uis_for_user("nobody", norm) == 0.5);
    CHECK(norm.cis.apply(2.0) == 1.0);
    CHECK(norm.cis.apply(1.0) == 0.5);

    auto back = norm_stats_from_json(to_json(norm));
    CHECK(back.cis.min == norm.cis.min);
    CHECK(back.cis.max == norm.cis.max);
    CHECK(back.users.size() == 2);
    CHECK(back.users.at("u1").informative == 2);
    CHECK(uis_for_user("u2", back) == 0.0);
}

TEST_CASE("build_shv") {
    SUBCASE("all-degenerate record") {
        Lexicons lex;
        lex.crisis.add("flood", "seed");
        lex.sentiment = toy_sentiment();
        lex.emotion = toy_emotion();
        auto r = record("u1", "", 1);
        auto norm = fit_norm_stats({r}, lex.crisis);
        auto v = build_shv(r, lex, norm).flatten();
        std::array<double, kShvDims> expected{};
        expected[1] = 1.0;
        CHECK(v.size() == 21);
        CHECK(v == expected);
    }
    SUBCASE("slices equal the independent sub-op outputs and stay in range") {
        SyntheticConfig cfg;
        cfg.seed = 11;
        cfg.n_samples = 60;
        cfg.dims = {2, 2, 2, 2};
        cfg.val_fraction = 0.3;
        auto gen = generate_synthetic(cfg);
        auto train = gen.corpus.subset(Split::train).records;
        auto norm = fit_norm_stats(train, gen.lexicons.crisis);
        for (const auto& r : gen.corpus.records) {
            auto shv = build_shv(r, gen.lexicons, norm);
            auto v = shv.flatten();
            auto s = senti_quotient(r.text, gen.lexicons.sentiment);
            auto e = emo_quotient(r.text, gen.lexicons.emotion);
            auto u = uem(engagement_counts(r), norm);
            CHECK(std::equal(s.begin(), s.end(), v.begin()));
            CHECK(std::equal(e.begin(), e.end(), v.begin() + 3));
            CHECK(v[14] == norm.cis.apply(crisis_term_count(r.text, gen.lexicons.crisis)));
            CHECK(std::equal(u.begin(), u.end(), v.begin() + 15));
            CHECK(v[20] == uis_for_user(r.user_id, norm));
            for (double x : v) {
                CHECK(x >= 0.0);
                CHECK(x <= 1.0);
            }
            CHECK(s[0] + s[1] + s[2] == doctest::Approx(1.0).epsilon(1e-6));
            CHECK(record_ucis(r, gen.lexicons, norm, 0.5) ==
                  doctest::Approx(0.5 * v[20] + 0.5 * v[14]));
        }
    }
}

TEST_CASE("expand_lexicon") {
    WordEmbeddings emb = {{"flood", {1, 0, 0}},   {"deluge", {1, 0, 0}},      {"water", {0.9, 0.3, 0}},
                          {"fire", {0, 1, 0}},    {"blaze", {0.1, 0.95, 0.1}}, {"picnic", {0, 0, 1}},
                          {"music", {0.2, 0, 1}}};
    CrisisLexicon seed;
    seed.add("flood", "seed");
    seed.add("fire", "seed");

    SUBCASE("identical embedding is added; threshold 1 returns the seed") {
        auto r = expand_lexicon(seed, emb, 0.99);
        CHECK(r.lexicon.terms == std::set<std::string>{"deluge", "fire", "flood"});
        CHECK(r.lexicon.source.at("deluge") != "seed");
        emb.erase("deluge");
        CHECK(expand_lexicon(seed, emb, 1.0).lexicon.terms == seed.terms);
    }
    SUBCASE("matches an exhaustive pairwise-cosine oracle") {
        for (double th : {0.5, 0.8, 0.9, 0.99}) {
            std::set<std::string> expected = seed.terms;
            for (const auto& [w, v] : emb) {
                double best = -1;
                for (const auto& s : seed.terms) {
                    const auto& a = emb.at(s);
                    double dot = 0, na = 0, nb = 0;
                    for (int k = 0; k < 3; ++k) {
                        dot += a[k] * v[k];
                        na += a[k] * a[k];
                        nb += v[k] * v[k];
                    }
                    best = std::max(best, dot / std::sqrt(na * nb));
                }
                if (best > th) expected.insert(w);
            }
            CHECK(expand_lexicon(seed, emb, th).lexicon.terms == expected);
        }
    }
    SUBCASE("lower threshold yields a superset") {
        auto hi = expand_lexicon(seed, emb, 0.95).lexicon.terms;
        auto lo = expand_lexicon(seed, emb, 0.6).lexicon.terms;
        CHECK(std::includes(lo.begin(), lo.end(), hi.begin(), hi.end()));
        CHECK(lo.size() > hi.size());
    }
    SUBCASE("seed term without embedding is kept with a warning") {
        seed.add("tsunami", "seed");
        auto r = expand_lexicon(seed, emb, 0.8);
        CHECK(r.lexicon.contains("tsunami"));
        REQUIRE(r.warnings.size() == 1);
        CHECK(r.warnings[0].find("tsunami") != std::string::npos);
    }
    SUBCASE("threshold domain") {
        CHECK_THROWS_AS(expand_lexicon(seed, emb, 0.0), ParameterError);
        CHECK_THROWS_AS(expand_lexicon(seed, emb, 1.2), ParameterError);
    }
}

TEST_CASE("lexicon files round trip") {
    auto dir = fs::temp_directory_path() / "crisisspot_test_lex";
    fs::remove_all(dir);
    fs::create_directories(dir);
    auto lex = synthetic_lexicons();
    save_lexicons(dir, lex);
    auto back = load_lexicons(dir);
    CHECK(back.crisis.terms == lex.crisis.terms);
    CHECK(back.sentiment.valence == lex.sentiment.valence);
    CHECK(back.emotion.tags == lex.emotion.tags);

    std::ofstream(dir / "c.txt") << "# comment\nFlood\n\nflood\nWildfire\n";
    CHECK(load_crisis_lexicon(dir / "c.txt").terms == std::set<std::string>{"flood", "wildfire"});

    std::ofstream(dir / "e.tsv") << "scared\t12\n";
    CHECK_THROWS_AS(load_emotion_lexicon(dir / "e.tsv"), DataError);

    auto j = lexicons_from_json(to_json(lex));
    CHECK(j.crisis.terms == lex.crisis.terms);
    CHECK(j.emotion.tags == lex.emotion.tags);
}
