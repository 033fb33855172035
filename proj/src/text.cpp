#include "ddtm/text.hpp"

#include <cctype>

#include "ddtm/stemmer.hpp"

namespace ddtm {
namespace {

bool is_url_char(char c) {
    // characters that may appear inside a URL; terminates on whitespace and
    // common punctuation that closes a markdown link
    return !std::isspace(static_cast<unsigned char>(c)) && c != ')' && c != ']' &&
           c != '>' && c != '"' && c != '\'';
}

size_t find_url(const std::string& text, size_t from, size_t* len) {
    static const char* prefixes[] = {"http://", "https://", "www."};
    size_t best = std::string::npos;
    for (const char* p : prefixes) {
        size_t pos = from;
        while ((pos = text.find(p, pos)) != std::string::npos) {
            // must start at a word boundary ("awww." is not a URL)
            if (pos == 0 || !std::isalnum(static_cast<unsigned char>(text[pos - 1]))) break;
            ++pos;
        }
        if (pos != std::string::npos && pos < best) best = pos;
    }
    if (best == std::string::npos) return best;
    size_t end = best;
    while (end < text.size() && is_url_char(text[end])) ++end;
    *len = end - best;
    return best;
}

std::string lower(std::string s) {
    for (char& c : s) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    return s;
}

}  // namespace

std::string url_domain_label(const std::string& url) {
    std::string u = lower(url);
    size_t host_begin = 0;
    size_t scheme = u.find("://");
    if (scheme != std::string::npos) host_begin = scheme + 3;
    size_t host_end = u.find_first_of("/?#:", host_begin);
    if (host_end == std::string::npos) host_end = u.size();
    std::string host = u.substr(host_begin, host_end - host_begin);

    std::vector<std::string> labels;
    size_t start = 0;
    while (start <= host.size()) {
        size_t dot = host.find('.', start);
        if (dot == std::string::npos) {
            labels.push_back(host.substr(start));
            break;
        }
        labels.push_back(host.substr(start, dot - start));
        start = dot + 1;
    }
    if (!labels.empty() && (labels.front() == "www" || labels.front() == "m")) {
        labels.erase(labels.begin());
    }
    if (labels.empty() || labels.front().empty()) return "unknown";
    if (labels.size() >= 2) return labels[labels.size() - 2];
    return labels[0];
}

std::vector<std::string> preprocess_text(const std::string& body, const PipelineConfig& cfg) {
    // Split the body into plain segments and URL tokens first; URL tokens are
    // exempt from special-character stripping and stemming.
    std::vector<std::pair<std::string, bool>> segments;  // (text, is_url_token)
    size_t pos = 0;
    while (pos < body.size()) {
        size_t len = 0;
        size_t at = cfg.url_to_domain_token ? find_url(body, pos, &len) : std::string::npos;
        if (at == std::string::npos) {
            segments.emplace_back(body.substr(pos), false);
            break;
        }
        if (at > pos) segments.emplace_back(body.substr(pos, at - pos), false);
        segments.emplace_back("url_" + url_domain_label(body.substr(at, len)), true);
        pos = at + len;
    }

    std::vector<std::string> tokens;
    for (auto& [seg, is_url] : segments) {
        if (is_url) {
            tokens.push_back(seg);
            continue;
        }
        std::string text = cfg.lowercase ? lower(seg) : seg;
        if (cfg.strip_special_chars) {
            for (char& c : text) {
                if (!std::isalnum(static_cast<unsigned char>(c))) c = ' ';
            }
        }
        size_t start = 0;
        while (start < text.size()) {
            while (start < text.size() && std::isspace(static_cast<unsigned char>(text[start]))) ++start;
            size_t end = start;
            while (end < text.size() && !std::isspace(static_cast<unsigned char>(text[end]))) ++end;
            if (end > start) tokens.push_back(text.substr(start, end - start));
            start = end;
        }
    }

    std::vector<std::string> out;
    out.reserve(tokens.size());
    for (auto& tok : tokens) {
        std::string t = tok;
        if (cfg.stemmer == StemmerKind::snowball_english && tok.rfind("url_", 0) != 0) {
            t = stem_english(t);
        }
        // stopword removal happens after stemming
        if (cfg.stopword_list.count(t)) continue;
        out.push_back(std::move(t));
    }
    return out;
}

}  // namespace ddtm
