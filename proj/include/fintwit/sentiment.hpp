#pragma once

#include <string>
#include <unordered_map>
#include <vector>

namespace fintwit::sentiment {

struct SentimentScores {
    long long afinn = 0;
    double vader = 0.0;
    int polarity = 0;  // {-1, 0, +1}
};

using AfinnLexicon = std::unordered_map<std::string, int>;

// word TAB integer valence in [-5, 5].
AfinnLexicon load_afinn(const std::string& path);
const AfinnLexicon& default_afinn();

// Sum of valences over matched tokens; unmatched tokens contribute 0.
// Tokens must be lowercase and unstemmed (stems are not lexicon keys).
long long afinn_score(const std::vector<std::string>& tokens, const AfinnLexicon& lexicon);

// Rule-based scorer producing the compound score in [-1, 1] from raw text:
// lexicon valences, booster/dampener words, negation within a three-token
// window, ALL-CAPS and exclamation emphasis, and "but" clause reweighting,
// normalized as s / sqrt(s^2 + 15).
class VaderScorer {
public:
    explicit VaderScorer(const std::string& lexicon_path);
    static const VaderScorer& instance();  // bundled lexicon

    double compound(const std::string& raw_text) const;

private:
    std::unordered_map<std::string, double> lexicon_;
};

inline double vader_score(const std::string& raw_text) {
    return VaderScorer::instance().compound(raw_text);
}

constexpr double kDefaultPolarityThreshold = 0.05;

// Sign bucketing of the compound score; thresholds are inclusive.
int polarity(double vader, double pos_threshold = kDefaultPolarityThreshold,
             double neg_threshold = kDefaultPolarityThreshold);

}  // namespace fintwit::sentiment
