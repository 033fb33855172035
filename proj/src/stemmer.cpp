#include "ddtm/stemmer.hpp"

#include <array>
#include <cstring>
#include <vector>

namespace ddtm {
namespace {

bool is_vowel(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

// 'y' marked as consonant during the prelude.
bool is_vowel_marked(char c) {
    return c == 'a' || c == 'e' || c == 'i' || c == 'o' || c == 'u' || c == 'y';
}

bool ends_with(const std::string& w, const char* suf) {
    size_t n = std::strlen(suf);
    return w.size() >= n && w.compare(w.size() - n, n, suf) == 0;
}

bool is_double(const std::string& w) {
    if (w.size() < 2) return false;
    char a = w[w.size() - 2], b = w[w.size() - 1];
    if (a != b) return false;
    return a == 'b' || a == 'd' || a == 'f' || a == 'g' || a == 'm' || a == 'n' ||
           a == 'p' || a == 'r' || a == 't';
}

bool valid_li_ending(char c) {
    return c == 'c' || c == 'd' || c == 'e' || c == 'g' || c == 'h' || c == 'k' ||
           c == 'm' || c == 'n' || c == 'r' || c == 't';
}

// Vowel followed by a non-vowel other than w/x/Y preceded by a non-vowel, or a
// vowel at the start of the word followed by a non-vowel.
bool ends_in_short_syllable(const std::string& w) {
    size_t n = w.size();
    if (n == 2 && is_vowel_marked(w[0]) && !is_vowel_marked(w[1])) return true;
    if (n >= 3) {
        char c0 = w[n - 3], c1 = w[n - 2], c2 = w[n - 1];
        if (!is_vowel_marked(c0) && is_vowel_marked(c1) && !is_vowel_marked(c2) &&
            c2 != 'w' && c2 != 'x' && c2 != 'Y') {
            return true;
        }
    }
    return false;
}

struct Stemmer {
    std::string w;
    size_t r1 = 0;
    size_t r2 = 0;

    bool suffix_in_r1(size_t len) const { return w.size() >= len && w.size() - len >= r1; }
    bool suffix_in_r2(size_t len) const { return w.size() >= len && w.size() - len >= r2; }

    bool has_vowel_before(size_t end) const {
        for (size_t i = 0; i < end; ++i) {
            if (is_vowel_marked(w[i])) return true;
        }
        return false;
    }

    void mark_regions() {
        size_t n = w.size();
        r1 = n;
        if (w.rfind("gener", 0) == 0 || w.rfind("arsen", 0) == 0) {
            r1 = 5;
        } else if (w.rfind("commun", 0) == 0) {
            r1 = 6;
        } else {
            for (size_t i = 1; i < n; ++i) {
                if (!is_vowel_marked(w[i]) && is_vowel_marked(w[i - 1])) {
                    r1 = i + 1;
                    break;
                }
            }
        }
        r2 = n;
        for (size_t i = r1 + 1; i < n; ++i) {
            if (!is_vowel_marked(w[i]) && is_vowel_marked(w[i - 1])) {
                r2 = i + 1;
                break;
            }
        }
    }

    void prelude() {
        if (!w.empty() && w[0] == '\'') w.erase(0, 1);
        if (!w.empty() && w[0] == 'y') w[0] = 'Y';
        for (size_t i = 1; i < w.size(); ++i) {
            if (w[i] == 'y' && is_vowel(w[i - 1])) w[i] = 'Y';
        }
    }

    void step0() {
        if (ends_with(w, "'s'")) {
            w.erase(w.size() - 3);
        } else if (ends_with(w, "'s")) {
            w.erase(w.size() - 2);
        } else if (ends_with(w, "'")) {
            w.erase(w.size() - 1);
        }
    }

    void step1a() {
        if (ends_with(w, "sses")) {
            w.erase(w.size() - 2);
        } else if (ends_with(w, "ied") || ends_with(w, "ies")) {
            if (w.size() > 4) {
                w.erase(w.size() - 2);
            } else {
                w.erase(w.size() - 1);
            }
        } else if (ends_with(w, "us") || ends_with(w, "ss")) {
            // leave alone
        } else if (ends_with(w, "s")) {
            // delete if the preceding part contains a vowel not immediately
            // before the s
            for (size_t i = 0; i + 2 <= w.size(); ++i) {
                if (i == w.size() - 2) break;
                if (is_vowel_marked(w[i])) {
                    w.erase(w.size() - 1);
                    break;
                }
            }
        }
    }

    void step1b() {
        const char* suffix = nullptr;
        if (ends_with(w, "eedly")) {
            if (suffix_in_r1(5)) w.replace(w.size() - 5, 5, "ee");
            return;
        }
        if (ends_with(w, "eed")) {
            if (suffix_in_r1(3)) w.replace(w.size() - 3, 3, "ee");
            return;
        }
        if (ends_with(w, "ingly")) {
            suffix = "ingly";
        } else if (ends_with(w, "edly")) {
            suffix = "edly";
        } else if (ends_with(w, "ing")) {
            suffix = "ing";
        } else if (ends_with(w, "ed")) {
            suffix = "ed";
        } else {
            return;
        }
        size_t len = std::strlen(suffix);
        if (!has_vowel_before(w.size() - len)) return;
        w.erase(w.size() - len);
        if (ends_with(w, "at") || ends_with(w, "bl") || ends_with(w, "iz")) {
            w += 'e';
        } else if (is_double(w)) {
            w.erase(w.size() - 1);
        } else if (ends_in_short_syllable(w) && r1 >= w.size()) {
            w += 'e';
        }
    }

    void step1c() {
        size_t n = w.size();
        if (n < 3) return;
        char last = w[n - 1];
        if ((last == 'y' || last == 'Y') && !is_vowel_marked(w[n - 2])) {
            w[n - 1] = 'i';
        }
    }

    void step2() {
        struct Rule {
            const char* suffix;
            const char* repl;
        };
        // longest-first; the first suffix match binds
        static const std::array<Rule, 24> rules = {{
            {"ization", "ize"}, {"ational", "ate"}, {"fulness", "ful"},
            {"ousness", "ous"}, {"iveness", "ive"}, {"tional", "tion"},
            {"biliti", "ble"},  {"lessli", "less"}, {"entli", "ent"},
            {"ation", "ate"},   {"alism", "al"},    {"aliti", "al"},
            {"ousli", "ous"},   {"iviti", "ive"},   {"fulli", "ful"},
            {"enci", "ence"},   {"anci", "ance"},   {"abli", "able"},
            {"izer", "ize"},    {"ator", "ate"},    {"alli", "al"},
            {"bli", "ble"},     {"ogi", "og"},      {"li", ""},
        }};
        for (const auto& r : rules) {
            size_t len = std::strlen(r.suffix);
            if (!ends_with(w, r.suffix)) continue;
            if (!suffix_in_r1(len)) return;
            if (std::strcmp(r.suffix, "ogi") == 0) {
                if (w.size() >= 4 && w[w.size() - 4] == 'l') w.replace(w.size() - 3, 3, "og");
            } else if (std::strcmp(r.suffix, "li") == 0) {
                if (w.size() >= 3 && valid_li_ending(w[w.size() - 3])) w.erase(w.size() - 2);
            } else {
                w.replace(w.size() - len, len, r.repl);
            }
            return;
        }
    }

    void step3() {
        struct Rule {
            const char* suffix;
            const char* repl;
        };
        static const std::array<Rule, 9> rules = {{
            {"ational", "ate"}, {"tional", "tion"}, {"alize", "al"},
            {"icate", "ic"},    {"iciti", "ic"},    {"ative", ""},
            {"ical", "ic"},     {"ness", ""},       {"ful", ""},
        }};
        for (const auto& r : rules) {
            size_t len = std::strlen(r.suffix);
            if (!ends_with(w, r.suffix)) continue;
            if (!suffix_in_r1(len)) return;
            if (std::strcmp(r.suffix, "ative") == 0) {
                if (suffix_in_r2(len)) w.erase(w.size() - len);
            } else {
                w.replace(w.size() - len, len, r.repl);
            }
            return;
        }
    }

    void step4() {
        static const std::array<const char*, 18> suffixes = {
            "ement", "ance", "ence", "able", "ible", "ment", "ant", "ent", "ism",
            "ate",   "iti",  "ous",  "ive",  "ize",  "ion",  "al",  "er",  "ic",
        };
        for (const char* suf : suffixes) {
            size_t len = std::strlen(suf);
            if (!ends_with(w, suf)) continue;
            if (!suffix_in_r2(len)) return;
            if (std::strcmp(suf, "ion") == 0) {
                char prev = w.size() >= 4 ? w[w.size() - 4] : '\0';
                if (prev == 's' || prev == 't') w.erase(w.size() - 3);
            } else {
                w.erase(w.size() - len);
            }
            return;
        }
    }

    void step5() {
        if (ends_with(w, "e")) {
            if (suffix_in_r2(1)) {
                w.erase(w.size() - 1);
            } else if (suffix_in_r1(1)) {
                std::string head = w.substr(0, w.size() - 1);
                if (!ends_in_short_syllable(head)) w.erase(w.size() - 1);
            }
            return;
        }
        if (ends_with(w, "ll") && suffix_in_r2(1)) {
            w.erase(w.size() - 1);
        }
    }

    void postlude() {
        for (char& c : w) {
            if (c == 'Y') c = 'y';
        }
    }
};

struct Exception {
    const char* word;
    const char* stem;
};

const std::array<Exception, 18> kException1 = {{
    {"skis", "ski"},     {"skies", "sky"},   {"dying", "die"},
    {"lying", "lie"},    {"tying", "tie"},   {"idly", "idl"},
    {"gently", "gentl"}, {"ugly", "ugli"},   {"early", "earli"},
    {"only", "onli"},    {"singly", "singl"},{"sky", "sky"},
    {"news", "news"},    {"howe", "howe"},   {"atlas", "atlas"},
    {"cosmos", "cosmos"},{"bias", "bias"},   {"andes", "andes"},
}};

const std::array<const char*, 8> kException2 = {
    "inning", "outing", "canning", "herring",
    "earring", "proceed", "exceed", "succeed",
};

}  // namespace

std::string stem_english(const std::string& word) {
    for (const auto& e : kException1) {
        if (word == e.word) return e.stem;
    }
    if (word.size() <= 2) return word;

    Stemmer s;
    s.w = word;
    s.prelude();
    s.mark_regions();
    s.step0();
    s.step1a();

    bool stop = false;
    for (const char* e : kException2) {
        if (s.w == e) {
            stop = true;
            break;
        }
    }
    if (!stop) {
        s.step1b();
        s.step1c();
        s.step2();
        s.step3();
        s.step4();
        s.step5();
    }
    s.postlude();
    return s.w;
}

}  // namespace ddtm
