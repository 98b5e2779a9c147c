#include "fintwit/sentiment.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <sstream>
#include <unordered_set>

#include "fintwit/common.hpp"

namespace fintwit::sentiment {

AfinnLexicon load_afinn(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open AFINN lexicon: " + path);
    AfinnLexicon lex;
    std::string line;
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) continue;
        const std::string word = line.substr(0, tab);
        const int valence = std::atoi(line.c_str() + tab + 1);
        if (valence < -5 || valence > 5) throw FatalError("AFINN valence out of range: " + line);
        lex[word] = valence;
    }
    return lex;
}

const AfinnLexicon& default_afinn() {
    static const AfinnLexicon lex = load_afinn(data_dir() + "/afinn_en.txt");
    return lex;
}

long long afinn_score(const std::vector<std::string>& tokens, const AfinnLexicon& lexicon) {
    long long total = 0;
    for (const auto& token : tokens) {
        if (auto it = lexicon.find(token); it != lexicon.end()) total += it->second;
    }
    return total;
}

int polarity(double vader, double pos_threshold, double neg_threshold) {
    if (vader >= pos_threshold) return 1;
    if (vader <= -neg_threshold) return -1;
    return 0;
}

// ---------------------------------------------------------------------------
// VADER
// ---------------------------------------------------------------------------

namespace {

constexpr double kBoostIncr = 0.293;
constexpr double kBoostDecr = -0.293;
constexpr double kCapsIncr = 0.733;
constexpr double kNegationScalar = -0.74;
constexpr double kExclamationStep = 0.292;
constexpr double kNormalizationAlpha = 15.0;

const std::unordered_map<std::string, double>& booster_dict() {
    static const std::unordered_map<std::string, double> dict = {
        {"absolutely", kBoostIncr}, {"amazingly", kBoostIncr},   {"awfully", kBoostIncr},
        {"completely", kBoostIncr}, {"considerably", kBoostIncr},{"decidedly", kBoostIncr},
        {"deeply", kBoostIncr},     {"enormously", kBoostIncr},  {"entirely", kBoostIncr},
        {"especially", kBoostIncr}, {"exceptionally", kBoostIncr},{"extremely", kBoostIncr},
        {"fabulously", kBoostIncr}, {"fully", kBoostIncr},       {"greatly", kBoostIncr},
        {"highly", kBoostIncr},     {"hugely", kBoostIncr},      {"incredibly", kBoostIncr},
        {"intensely", kBoostIncr},  {"majorly", kBoostIncr},     {"more", kBoostIncr},
        {"most", kBoostIncr},       {"particularly", kBoostIncr},{"purely", kBoostIncr},
        {"quite", kBoostIncr},      {"really", kBoostIncr},      {"remarkably", kBoostIncr},
        {"so", kBoostIncr},         {"substantially", kBoostIncr},{"thoroughly", kBoostIncr},
        {"totally", kBoostIncr},    {"tremendously", kBoostIncr},{"unbelievably", kBoostIncr},
        {"unusually", kBoostIncr},  {"utterly", kBoostIncr},     {"very", kBoostIncr},
        {"almost", kBoostDecr},     {"barely", kBoostDecr},      {"hardly", kBoostDecr},
        {"kinda", kBoostDecr},      {"less", kBoostDecr},        {"little", kBoostDecr},
        {"marginally", kBoostDecr}, {"occasionally", kBoostDecr},{"partly", kBoostDecr},
        {"scarcely", kBoostDecr},   {"slightly", kBoostDecr},    {"somewhat", kBoostDecr},
        {"sorta", kBoostDecr},
    };
    return dict;
}

const std::unordered_set<std::string>& negate_set() {
    static const std::unordered_set<std::string> set = {
        "aint",     "arent",    "cannot",   "cant",      "couldnt", "darent",   "didnt",
        "doesnt",   "ain't",    "aren't",   "can't",     "couldn't","daren't",  "didn't",
        "doesn't",  "dont",     "hadnt",    "hasnt",     "havent",  "isnt",     "mightnt",
        "mustnt",   "neither",  "don't",    "hadn't",    "hasn't",  "haven't",  "isn't",
        "mightn't", "mustn't",  "neednt",   "needn't",   "never",   "none",     "nope",
        "nor",      "not",      "nothing",  "nowhere",   "oughtnt", "shant",    "shouldnt",
        "uhuh",     "wasnt",    "werent",   "oughtn't",  "shan't",  "shouldn't","uh-uh",
        "wasn't",   "weren't",  "without",  "wont",      "wouldnt", "won't",    "wouldn't",
        "rarely",   "seldom",   "despite",
    };
    return set;
}

std::string to_lower(const std::string& s) {
    std::string out = s;
    for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return out;
}

bool is_all_caps(const std::string& word) {
    bool has_alpha = false;
    for (char c : word) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalpha(u)) {
            has_alpha = true;
            if (!std::isupper(u)) return false;
        }
    }
    return has_alpha;
}

// Strip surrounding punctuation unless that would destroy a short token
// (keeps emoticons intact).
std::string strip_punct(const std::string& token) {
    std::size_t lo = 0, hi = token.size();
    while (lo < hi && std::ispunct(static_cast<unsigned char>(token[lo]))) ++lo;
    while (hi > lo && std::ispunct(static_cast<unsigned char>(token[hi - 1]))) --hi;
    std::string stripped = token.substr(lo, hi - lo);
    return stripped.size() <= 2 ? token : stripped;
}

std::vector<std::string> words_and_emoticons(const std::string& text) {
    std::vector<std::string> out;
    std::istringstream stream(text);
    std::string token;
    while (stream >> token) out.push_back(strip_punct(token));
    return out;
}

double sign(double v) { return v < 0 ? -1.0 : 1.0; }

// Booster contribution of a preceding word, scaled for caps emphasis.
double scalar_inc_dec(const std::string& word, const std::string& lower, double valence,
                      bool cap_diff) {
    const auto it = booster_dict().find(lower);
    if (it == booster_dict().end()) return 0.0;
    double scalar = it->second;
    if (valence < 0) scalar = -scalar;
    if (cap_diff && is_all_caps(word)) scalar += sign(valence) * kCapsIncr;
    return scalar;
}

double punctuation_emphasis(const std::string& text) {
    const long exclamations =
        std::min<long>(std::count(text.begin(), text.end(), '!'), 4);
    double amp = exclamations * kExclamationStep;
    const long questions = std::count(text.begin(), text.end(), '?');
    if (questions > 1) amp += questions <= 3 ? questions * 0.18 : 0.96;
    return amp;
}

}  // namespace

VaderScorer::VaderScorer(const std::string& lexicon_path) {
    std::ifstream in(lexicon_path);
    if (!in) throw FatalError("cannot open VADER lexicon: " + lexicon_path);
    std::string line;
    while (std::getline(in, line)) {
        const auto tab = line.find('\t');
        if (tab == std::string::npos) continue;
        lexicon_[line.substr(0, tab)] = std::atof(line.c_str() + tab + 1);
    }
}

const VaderScorer& VaderScorer::instance() {
    static const VaderScorer scorer(data_dir() + "/vader_lexicon_en.txt");
    return scorer;
}

double VaderScorer::compound(const std::string& raw_text) const {
    const auto words = words_and_emoticons(raw_text);
    if (words.empty()) return 0.0;

    std::vector<std::string> lowers(words.size());
    for (std::size_t i = 0; i < words.size(); ++i) lowers[i] = to_lower(words[i]);

    // Caps emphasis only applies when the text mixes cased and ALL-CAPS words.
    std::size_t n_caps = 0;
    for (const auto& w : words) {
        if (is_all_caps(w)) ++n_caps;
    }
    const bool cap_diff = n_caps > 0 && n_caps < words.size();

    std::vector<double> sentiments(words.size(), 0.0);
    for (std::size_t i = 0; i < words.size(); ++i) {
        if (booster_dict().count(lowers[i])) continue;
        const auto it = lexicon_.find(lowers[i]);
        if (it == lexicon_.end()) continue;
        if (negate_set().count(lowers[i])) continue;
        double valence = it->second;

        if (cap_diff && is_all_caps(words[i])) valence += sign(valence) * kCapsIncr;

        for (std::size_t back = 1; back <= 3 && back <= i; ++back) {
            const std::size_t j = i - back;
            if (lexicon_.count(lowers[j])) continue;  // lexicon words are not modifiers

            double scalar = scalar_inc_dec(words[j], lowers[j], valence, cap_diff);
            if (back == 2) scalar *= 0.95;
            if (back == 3) scalar *= 0.9;
            valence += scalar;

            // Negation window, with the "never so/this" intensifier exception.
            if (back == 1) {
                if (lowers[j] == "least") {
                    if (i < 2 || lowers[i - 2] != "at") valence *= kNegationScalar;
                } else if (negate_set().count(lowers[j])) {
                    valence *= kNegationScalar;
                }
            } else if (back == 2) {
                if (lowers[j] == "never" && (lowers[j + 1] == "so" || lowers[j + 1] == "this")) {
                    valence *= 1.25;
                } else if (lowers[j] == "without" && lowers[j + 1] == "doubt") {
                    // no-op
                } else if (negate_set().count(lowers[j])) {
                    valence *= kNegationScalar;
                }
            } else {
                if (lowers[j] == "never" &&
                    (lowers[j + 1] == "so" || lowers[j + 1] == "this" || lowers[j + 2] == "so" ||
                     lowers[j + 2] == "this")) {
                    valence *= 1.25;
                } else if (lowers[j] == "without" &&
                           (lowers[j + 1] == "doubt" || lowers[j + 2] == "doubt")) {
                    // no-op
                } else if (negate_set().count(lowers[j])) {
                    valence *= kNegationScalar;
                }
            }
        }
        sentiments[i] = valence;
    }

    // "but" shifts weight towards the clause after it.
    for (std::size_t b = 0; b < lowers.size(); ++b) {
        if (lowers[b] != "but") continue;
        for (std::size_t i = 0; i < sentiments.size(); ++i) {
            if (i < b) sentiments[i] *= 0.5;
            else if (i > b) sentiments[i] *= 1.5;
        }
        break;
    }

    double total = 0.0;
    for (double v : sentiments) total += v;
    if (total == 0.0) return 0.0;

    const double punct = punctuation_emphasis(raw_text);
    total += total > 0 ? punct : -punct;

    const double compound = total / std::sqrt(total * total + kNormalizationAlpha);
    return std::clamp(compound, -1.0, 1.0);
}

}  // namespace fintwit::sentiment
