#include "fintwit/textprep.hpp"

#include <cctype>
#include <fstream>
#include <sstream>

#include "fintwit/common.hpp"

namespace fintwit::textprep {

namespace {

bool is_url(const std::string& chunk) {
    return chunk.rfind("http://", 0) == 0 || chunk.rfind("https://", 0) == 0 ||
           chunk.rfind("www.", 0) == 0;
}

// Lowercase a chunk and keep only ASCII alphanumerics, so punctuation,
// emoji and other non-ASCII content disappear. "@AAPL" and "#bullish"
// reduce to the bare word.
std::string clean_chunk(std::string chunk) {
    if (!chunk.empty() && (chunk[0] == '@' || chunk[0] == '#')) chunk.erase(0, 1);
    std::string out;
    out.reserve(chunk.size());
    for (char c : chunk) {
        const auto u = static_cast<unsigned char>(c);
        if (std::isalnum(u) && u < 128) out += static_cast<char>(std::tolower(u));
    }
    return out;
}

}  // namespace

NormalizedText normalize(const std::string& text, const StopwordSet& stopwords) {
    NormalizedText result;
    std::istringstream stream(text);
    std::string chunk;
    while (stream >> chunk) {
        std::string lowered = chunk;
        for (char& c : lowered) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        if (is_url(lowered)) continue;
        const std::string token = clean_chunk(lowered);
        if (token.empty()) continue;
        if (stopwords.count(token)) continue;
        result.unstemmed.push_back(token);
        result.tokens.push_back(porter_stem(token));
    }
    return result;
}

StopwordSet load_stopwords(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw FatalError("cannot open stopword list: " + path);
    StopwordSet set;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        const std::string token = clean_chunk(line);
        if (!token.empty()) set.insert(token);
    }
    return set;
}

StopwordSet default_stopwords() { return load_stopwords(data_dir() + "/stopwords_en.txt"); }

}  // namespace fintwit::textprep
