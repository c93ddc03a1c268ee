#include "crisisspot/social_context.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>

#include "crisisspot/errors.hpp"

namespace crisisspot::social {
namespace {

bool is_word_byte(unsigned char c) { return std::isalnum(c) || c >= 0x80; }

std::string lowercase(std::string s) {
    for (auto& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::ifstream open_or_throw(const std::filesystem::path& path, const char* what) {
    std::ifstream in(path);
    if (!in) throw DataError(std::string("cannot open ") + what + ": " + path.string());
    return in;
}

std::ofstream create_or_throw(const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw DataError("cannot write " + path.string());
    return out;
}

// Splits "word<TAB>value" lines; '#' comments and blank lines are skipped.
template <typename F>
void for_each_tsv(const std::filesystem::path& path, const char* what, F&& f) {
    auto in = open_or_throw(path, what);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const auto tab = t.find('\t');
        if (tab == std::string::npos)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": expected word<TAB>value");
        f(lowercase(trim(t.substr(0, tab))), trim(t.substr(tab + 1)),
          path.string() + ":" + std::to_string(lineno));
    }
}

}  // namespace

std::vector<std::string> tokenize(std::string_view text) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : text) {
        const auto c = static_cast<unsigned char>(ch);
        if (is_word_byte(c)) {
            cur.push_back(static_cast<char>(std::tolower(c)));
        } else if (!cur.empty()) {
            out.push_back(std::move(cur));
            cur.clear();
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

void CrisisLexicon::add(std::string term, const std::string& tag) {
    term = lowercase(trim(term));
    if (term.empty()) return;
    if (terms.insert(term).second) source[term] = tag;
}

CrisisLexicon load_crisis_lexicon(const std::filesystem::path& path) {
    auto in = open_or_throw(path, "crisis lexicon");
    CrisisLexicon lex;
    std::string line;
    const std::string tag = path.filename().string();
    while (std::getline(in, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        lex.add(t, tag);
    }
    return lex;
}

void save_crisis_lexicon(const std::filesystem::path& path, const CrisisLexicon& lex) {
    auto out = create_or_throw(path);
    for (const auto& t : lex.terms) out << t << '\n';
}

SentimentLexicon load_sentiment_lexicon(const std::filesystem::path& path) {
    SentimentLexicon lex;
    for_each_tsv(path, "sentiment lexicon",
                 [&](std::string word, const std::string& value, const std::string& where) {
                     double v = 0.0;
                     try {
                         std::size_t used = 0;
                         v = std::stod(value, &used);
                         if (used != value.size()) throw std::invalid_argument("trailing");
                     } catch (const std::exception&) {
                         throw DataError(where + ": invalid valence '" + value + "'");
                     }
                     if (!std::isfinite(v)) throw DataError(where + ": non-finite valence");
                     lex.valence[std::move(word)] = v;
                 });
    return lex;
}

void save_sentiment_lexicon(const std::filesystem::path& path, const SentimentLexicon& lex) {
    auto out = create_or_throw(path);
    out.precision(17);
    for (const auto& [w, v] : lex.valence) out << w << '\t' << v << '\n';
}

EmotionLexicon load_emotion_lexicon(const std::filesystem::path& path) {
    EmotionLexicon lex;
    for_each_tsv(path, "emotion lexicon",
                 [&](std::string word, const std::string& value, const std::string& where) {
                     int idx = -1;
                     try {
                         std::size_t used = 0;
                         idx = std::stoi(value, &used);
                         if (used != value.size()) idx = -1;
                     } catch (const std::exception&) {
                         idx = -1;
                     }
                     if (idx < 0 || idx >= static_cast<int>(kEmotionDims))
                         throw DataError(where + ": emotion category '" + value + "' outside 0..10");
                     lex.tags[std::move(word)].set(static_cast<std::size_t>(idx));
                 });
    return lex;
}

void save_emotion_lexicon(const std::filesystem::path& path, const EmotionLexicon& lex) {
    auto out = create_or_throw(path);
    for (const auto& [w, bits] : lex.tags)
        for (std::size_t c = 0; c < kEmotionDims; ++c)
            if (bits.test(c)) out << w << '\t' << c << '\n';
}

Lexicons load_lexicons(const std::filesystem::path& dir) {
    return Lexicons{load_crisis_lexicon(dir / "crisis.txt"), load_sentiment_lexicon(dir / "sentiment.tsv"),
                    load_emotion_lexicon(dir / "emotion.tsv")};
}

void save_lexicons(const std::filesystem::path& dir, const Lexicons& lex) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw DataError("cannot create " + dir.string() + ": " + ec.message());
    save_crisis_lexicon(dir / "crisis.txt", lex.crisis);
    save_sentiment_lexicon(dir / "sentiment.tsv", lex.sentiment);
    save_emotion_lexicon(dir / "emotion.tsv", lex.emotion);
}

std::array<double, kSentimentDims> senti_quotient(std::string_view text, const SentimentLexicon& lex) {
    double pos = 0.0, neu = 0.0, neg = 0.0;
    for (const auto& w : tokenize(text)) {
        auto it = lex.valence.find(w);
        const double v = it == lex.valence.end() ? 0.0 : it->second;
        if (v > 0.0) pos += v;
        else if (v < 0.0) neg += -v;
        else neu += 1.0;
    }
    const double total = pos + neu + neg;
    if (total == 0.0) return {0.0, 1.0, 0.0};
    return {pos / total, neu / total, neg / total};
}

std::array<double, kEmotionDims> emo_quotient(std::string_view text, const EmotionLexicon& lex) {
    std::array<double, kEmotionDims> out{};
    const auto words = tokenize(text);
    if (words.empty()) return out;
    for (const auto& w : words) {
        auto it = lex.tags.find(w);
        if (it == lex.tags.end()) continue;
        for (std::size_t c = 0; c < kEmotionDims; ++c)
            if (it->second.test(c)) out[c] += 1.0;
    }
    for (auto& v : out) v /= static_cast<double>(words.size());
    return out;
}

std::size_t crisis_term_count(std::string_view text, const CrisisLexicon& lex) {
    std::size_t n = 0;
    for (const auto& w : tokenize(text)) n += lex.contains(w);
    return n;
}

MinMax MinMax::fit(const std::vector<double>& values) {
    MinMax m;
    if (values.empty()) return m;
    auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    m.min = *lo;
    m.max = *hi;
    return m;
}

double MinMax::apply(double v) const {
    if (!(max > min)) return 0.0;
    return std::clamp((v - min) / (max - min), 0.0, 1.0);
}

std::vector<double> cis(const std::vector<std::string>& texts, const CrisisLexicon& lex) {
    if (lex.terms.empty()) throw ParameterError("cis: crisis lexicon is empty");
    std::vector<double> counts;
    counts.reserve(texts.size());
    for (const auto& t : texts) counts.push_back(static_cast<double>(crisis_term_count(t, lex)));
    const MinMax m = MinMax::fit(counts);
    for (auto& c : counts) c = m.apply(c);
    return counts;
}

double uis_raw(const UserStats& s) {
    if (s.total == 0) throw ParameterError("uis: user " + s.user_id + " has zero total posts");
    return (static_cast<double>(s.informative) - static_cast<double>(s.non_informative)) /
           static_cast<double>(s.total);
}

double ucis(double uis_norm, double cis_norm, double alpha) {
    if (!(alpha >= 0.0 && alpha <= 1.0))
        throw ParameterError("ucis: alpha must lie in [0, 1], got " + std::to_string(alpha));
    return alpha * uis_norm + (1.0 - alpha) * cis_norm;
}

EngagementCounts engagement_counts(const PostRecord& r) {
    return {static_cast<double>(r.favourites), static_cast<double>(r.retweets),
            static_cast<double>(r.followers), static_cast<double>(r.friends),
            static_cast<double>(r.statuses)};
}

NormStats fit_norm_stats(const std::vector<PostRecord>& train, const CrisisLexicon& lex) {
    if (lex.terms.empty()) throw ParameterError("fit_norm_stats: crisis lexicon is empty");
    NormStats n;
    std::vector<double> counts;
    std::array<std::vector<double>, kEngagementDims> eng;
    for (const auto& r : train) {
        counts.push_back(static_cast<double>(crisis_term_count(r.text, lex)));
        const auto e = engagement_counts(r);
        for (std::size_t k = 0; k < kEngagementDims; ++k) eng[k].push_back(e[k]);
    }
    n.cis = MinMax::fit(counts);
    for (std::size_t k = 0; k < kEngagementDims; ++k) n.engagement[k] = MinMax::fit(eng[k]);
    n.users = user_stats_from(train);
    std::vector<double> raw;
    for (const auto& [_, u] : n.users) raw.push_back(uis_raw(u));
    n.uis = MinMax::fit(raw);
    return n;
}

double uis(const UserStats& stats, const NormStats& norm) { return norm.uis.apply(uis_raw(stats)); }

double uis_for_user(const std::string& user_id, const NormStats& norm) {
    auto it = norm.users.find(user_id);
    if (it == norm.users.end()) return 0.5;
    return uis(it->second, norm);
}

std::array<double, kEngagementDims> uem(const EngagementCounts& counts, const NormStats& norm) {
    std::array<double, kEngagementDims> out{};
    for (std::size_t k = 0; k < kEngagementDims; ++k) {
        if (counts[k] < 0.0) throw ParameterError("uem: negative engagement count");
        out[k] = norm.engagement[k].apply(counts[k]);
    }
    return out;
}

std::array<double, kShvDims> SocialHolisticVector::flatten() const {
    std::array<double, kShvDims> out{};
    auto it = std::copy(sentiment.begin(), sentiment.end(), out.begin());
    it = std::copy(emotion.begin(), emotion.end(), it);
    *it++ = cis;
    it = std::copy(engagement.begin(), engagement.end(), it);
    *it = uis;
    return out;
}

SocialHolisticVector build_shv(const PostRecord& record, const Lexicons& lex, const NormStats& norm) {
    SocialHolisticVector v;
    v.sentiment = senti_quotient(record.text, lex.sentiment);
    v.emotion = emo_quotient(record.text, lex.emotion);
    v.cis = norm.cis.apply(static_cast<double>(crisis_term_count(record.text, lex.crisis)));
    v.engagement = uem(engagement_counts(record), norm);
    v.uis = uis_for_user(record.user_id, norm);
    return v;
}

double record_ucis(const PostRecord& record, const Lexicons& lex, const NormStats& norm, double alpha) {
    const double c = norm.cis.apply(static_cast<double>(crisis_term_count(record.text, lex.crisis)));
    return ucis(uis_for_user(record.user_id, norm), c, alpha);
}

WordEmbeddings load_word_embeddings(const std::filesystem::path& path) {
    auto in = open_or_throw(path, "word embeddings");
    WordEmbeddings out;
    std::string line;
    std::size_t lineno = 0, dim = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::istringstream ss(line);
        std::string word;
        if (!(ss >> word) || word[0] == '#') continue;
        std::vector<double> vec;
        double x;
        while (ss >> x) vec.push_back(x);
        if (!ss.eof() || vec.empty())
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": malformed embedding line");
        if (dim == 0) dim = vec.size();
        if (vec.size() != dim)
            throw DataError(path.string() + ":" + std::to_string(lineno) + ": embedding width " +
                            std::to_string(vec.size()) + " differs from " + std::to_string(dim));
        out[lowercase(word)] = std::move(vec);
    }
    return out;
}

namespace {

double cosine(const std::vector<double>& a, const std::vector<double>& b) {
    double dot = 0.0, na = 0.0, nb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        dot += a[i] * b[i];
        na += a[i] * a[i];
        nb += b[i] * b[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    return std::clamp(dot / (std::sqrt(na) * std::sqrt(nb)), -1.0, 1.0);
}

}  // namespace

ExpansionResult expand_lexicon(const CrisisLexicon& seed, const WordEmbeddings& embeddings,
                               double threshold) {
    if (!(threshold > 0.0 && threshold <= 1.0))
        throw ParameterError("expand_lexicon: threshold must lie in (0, 1], got " +
                             std::to_string(threshold));
    ExpansionResult res;
    res.lexicon = seed;
    std::vector<const std::vector<double>*> anchors;
    for (const auto& term : seed.terms) {
        auto it = embeddings.find(term);
        if (it == embeddings.end()) {
            res.warnings.push_back("seed term '" + term + "' has no embedding; kept but unused");
            continue;
        }
        anchors.push_back(&it->second);
    }
    for (const auto& [word, vec] : embeddings) {
        if (seed.contains(word)) continue;
        double best = -1.0;
        for (const auto* a : anchors) {
            if (a->size() != vec.size()) continue;
            best = std::max(best, cosine(*a, vec));
        }
        if (best > threshold) res.lexicon.add(word, "expanded");
    }
    return res;
}

nlohmann::json to_json(const NormStats& n) {
    nlohmann::json j;
    j["cis"] = {n.cis.min, n.cis.max};
    j["uis"] = {n.uis.min, n.uis.max};
    auto eng = nlohmann::json::array();
    for (const auto& m : n.engagement) eng.push_back({m.min, m.max});
    j["engagement"] = eng;
    auto users = nlohmann::json::object();
    for (const auto& [id, u] : n.users) users[id] = {u.total, u.informative, u.non_informative};
    j["users"] = users;
    return j;
}

NormStats norm_stats_from_json(const nlohmann::json& j) {
    auto mm = [](const nlohmann::json& a) { return MinMax{a.at(0).get<double>(), a.at(1).get<double>()}; };
    NormStats n;
    n.cis = mm(j.at("cis"));
    n.uis = mm(j.at("uis"));
    const auto& eng = j.at("engagement");
    if (eng.size() != kEngagementDims) throw DataError("norm stats: engagement must have 5 ranges");
    for (std::size_t k = 0; k < kEngagementDims; ++k) n.engagement[k] = mm(eng.at(k));
    for (const auto& [id, u] : j.at("users").items())
        n.users[id] = UserStats{id, u.at(0).get<std::size_t>(), u.at(1).get<std::size_t>(),
                                u.at(2).get<std::size_t>()};
    return n;
}

nlohmann::json to_json(const Lexicons& l) {
    nlohmann::json j;
    j["crisis"] = l.crisis.terms;
    j["sentiment"] = l.sentiment.valence;
    auto emo = nlohmann::json::object();
    for (const auto& [w, bits] : l.emotion.tags) emo[w] = bits.to_ulong();
    j["emotion"] = emo;
    return j;
}

Lexicons lexicons_from_json(const nlohmann::json& j) {
    Lexicons l;
    for (const auto& t : j.at("crisis")) l.crisis.add(t.get<std::string>(), "checkpoint");
    l.sentiment.valence = j.at("sentiment").get<std::map<std::string, double>>();
    for (const auto& [w, bits] : j.at("emotion").items())
        l.emotion.tags[w] = std::bitset<kEmotionDims>(bits.get<unsigned long>());
    return l;
}

}  // namespace crisisspot::social
