#pragma once

#include <string>

namespace ddtm {

// Snowball English (Porter2) stemmer. Expects a lowercase ASCII token;
// non-letter characters are treated as consonants and survive untouched.
std::string stem_english(const std::string& word);

}  // namespace ddtm
