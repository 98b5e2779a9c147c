#pragma once

#include <string>
#include <unordered_set>
#include <vector>

namespace fintwit::textprep {

using StopwordSet = std::unordered_set<std::string>;

// Classic Porter (1980) stemmer over lowercase ASCII words. Words shorter
// than three letters or containing non-letters are returned unchanged.
std::string porter_stem(const std::string& word);

struct NormalizedText {
    std::vector<std::string> tokens;     // stemmed
    std::vector<std::string> unstemmed;  // same tokens before stemming (lexicon keys)
};

// Fixed pipeline: lowercase -> whitespace split -> strip punctuation ->
// drop stopwords -> Porter stem. URLs and emoji are dropped; @mentions and
// #hashtags are reduced to the bare word. Each whitespace chunk yields at
// most one token.
NormalizedText normalize(const std::string& text, const StopwordSet& stopwords);

// One word per line, UTF-8. Entries are cleaned with the same rules as
// tokens so that e.g. "don't" matches the token "dont".
StopwordSet load_stopwords(const std::string& path);

// Bundled English list (179 words).
StopwordSet default_stopwords();

}  // namespace fintwit::textprep
