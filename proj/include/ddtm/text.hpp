#pragma once

#include <set>
#include <string>
#include <vector>

namespace ddtm {

enum class StemmerKind { none, snowball_english };

struct PipelineConfig {
    bool lowercase = true;
    bool strip_special_chars = true;
    bool url_to_domain_token = true;
    StemmerKind stemmer = StemmerKind::none;
    std::set<std::string> stopword_list;  // matched against post-stem tokens
    int vocab_cap = 10000;                // K
};

// Deterministic tokenization: URLs become url_<domain> tokens, the remaining
// text is lowercased, stripped of non-alphanumeric characters, split on
// whitespace, stemmed, and finally filtered against the stopword list.
std::vector<std::string> preprocess_text(const std::string& body, const PipelineConfig& cfg);

// First label of the registrable domain of a URL-ish string (heuristic: drop a
// leading www/m label, then take the second-to-last label). "https://youtu.be/x"
// -> "youtu", "www.businessinsider.com/a" -> "businessinsider".
std::string url_domain_label(const std::string& url);

}  // namespace ddtm
