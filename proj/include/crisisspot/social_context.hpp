#pragma once

#include <array>
#include <bitset>
#include <cstddef>
#include <filesystem>
#include <map>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "crisisspot/data_model.hpp"
#include "json.hpp"

namespace crisisspot::social {

inline constexpr std::size_t kSentimentDims = 3;
inline constexpr std::size_t kEmotionDims = 11;
inline constexpr std::size_t kEngagementDims = 5;
inline constexpr std::size_t kShvDims = kSentimentDims + kEmotionDims + 1 + kEngagementDims + 1;
static_assert(kShvDims == 21);

/// Lowercases and splits on anything that is not an ASCII letter or digit.
/// Bytes >= 0x80 are kept as word characters so UTF-8 words stay whole;
/// '#' and '@' markers fall away as separators.
std::vector<std::string> tokenize(std::string_view text);

struct CrisisLexicon {
    std::set<std::string> terms;
    std::map<std::string, std::string> source;  // term -> tag ("seed", "expanded", file name...)

    bool contains(const std::string& w) const { return terms.count(w) != 0; }
    void add(std::string term, const std::string& tag);
};

struct SentimentLexicon {
    std::map<std::string, double> valence;
};

struct EmotionLexicon {
    std::map<std::string, std::bitset<kEmotionDims>> tags;
};

struct Lexicons {
    CrisisLexicon crisis;
    SentimentLexicon sentiment;
    EmotionLexicon emotion;
};

/// One term per line; '#' lines are comments. Terms are lowercased.
CrisisLexicon load_crisis_lexicon(const std::filesystem::path& path);
void save_crisis_lexicon(const std::filesystem::path& path, const CrisisLexicon& lex);
/// "word<TAB>valence" per line.
SentimentLexicon load_sentiment_lexicon(const std::filesystem::path& path);
void save_sentiment_lexicon(const std::filesystem::path& path, const SentimentLexicon& lex);
/// "word<TAB>category_index" per line, one line per category of a word.
EmotionLexicon load_emotion_lexicon(const std::filesystem::path& path);
void save_emotion_lexicon(const std::filesystem::path& path, const EmotionLexicon& lex);

/// Reads crisis.txt, sentiment.tsv and emotion.tsv from `dir`.
Lexicons load_lexicons(const std::filesystem::path& dir);
void save_lexicons(const std::filesystem::path& dir, const Lexicons& lex);

/// (positive, neutral, negative), summing to 1. Positive and negative mass
/// are summed valence magnitudes; each unscored word adds 1 to neutral.
std::array<double, kSentimentDims> senti_quotient(std::string_view text, const SentimentLexicon& lex);

/// Per category: fraction of the text's words tagged with it.
std::array<double, kEmotionDims> emo_quotient(std::string_view text, const EmotionLexicon& lex);

std::size_t crisis_term_count(std::string_view text, const CrisisLexicon& lex);

/// Min-max scaling fitted once and then frozen. Constant features map to 0;
/// values outside the fitted range are clamped into [0, 1].
struct MinMax {
    double min = 0.0;
    double max = 0.0;

    static MinMax fit(const std::vector<double>& values);
    double apply(double v) const;
};

/// Normalized crisis scores over `texts`, with min-max fitted on the same texts.
std::vector<double> cis(const std::vector<std::string>& texts, const CrisisLexicon& lex);

/// (informative - non_informative) / total, in [-1, 1].
double uis_raw(const UserStats& stats);

double ucis(double uis_norm, double cis_norm, double alpha);

using EngagementCounts = std::array<double, kEngagementDims>;
EngagementCounts engagement_counts(const PostRecord& r);

/// Everything fitted on the training split: scaling ranges and user history.
struct NormStats {
    MinMax cis;
    MinMax uis;
    std::array<MinMax, kEngagementDims> engagement;
    std::map<std::string, UserStats> users;
};

NormStats fit_norm_stats(const std::vector<PostRecord>& train_records, const CrisisLexicon& lex);

/// Normalized UIS of `stats` under the fitted range.
double uis(const UserStats& stats, const NormStats& norm);
/// Normalized UIS from the user's training history; 0.5 for unseen users.
double uis_for_user(const std::string& user_id, const NormStats& norm);

std::array<double, kEngagementDims> uem(const EngagementCounts& counts, const NormStats& norm);

struct SocialHolisticVector {
    std::array<double, kSentimentDims> sentiment{};
    std::array<double, kEmotionDims> emotion{};
    double cis = 0.0;
    std::array<double, kEngagementDims> engagement{};
    double uis = 0.0;

    /// sentiment | emotion | cis | engagement | uis
    std::array<double, kShvDims> flatten() const;
};

SocialHolisticVector build_shv(const PostRecord& record, const Lexicons& lex, const NormStats& norm);

/// User-crisis blend for a record, as reported next to the SHV.
double record_ucis(const PostRecord& record, const Lexicons& lex, const NormStats& norm, double alpha);

using WordEmbeddings = std::map<std::string, std::vector<double>>;

/// Whitespace-separated "word v1 v2 ..." lines.
WordEmbeddings load_word_embeddings(const std::filesystem::path& path);

struct ExpansionResult {
    CrisisLexicon lexicon;
    std::vector<std::string> warnings;
};

/// Adds every vocabulary word whose best cosine similarity to a seed term
/// exceeds `threshold`. Seed terms without an embedding are kept and reported.
ExpansionResult expand_lexicon(const CrisisLexicon& seed, const WordEmbeddings& embeddings,
                               double threshold = 0.8);

nlohmann::json to_json(const NormStats& n);
NormStats norm_stats_from_json(const nlohmann::json& j);
nlohmann::json to_json(const Lexicons& l);
Lexicons lexicons_from_json(const nlohmann::json& j);

}  // namespace crisisspot::social
