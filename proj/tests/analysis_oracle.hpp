#pragma once

// Brute-force reference implementations for the analysis module, written
// without reusing any of its code.

#include <cctype>
#include <map>
#include <string>
#include <vector>

#include "colloquy/analysis.hpp"

namespace colloquy::testing {

inline bool oracle_word(char c) {
    const auto u = static_cast<unsigned char>(c);
    return u >= 0x80 || std::isalnum(u) != 0;
}

/// Character-level tokenizer: a byte survives if it is a word byte, or a
/// '-'/'\'' with word bytes on both sides; every other byte is a separator.
inline std::vector<std::string> oracle_tokens(const std::string& text) {
    std::string kept(text.size(), ' ');
    for (std::size_t i = 0; i < text.size(); ++i) {
        const char c = text[i];
        if (oracle_word(c)) {
            kept[i] = (c >= 'A' && c <= 'Z') ? static_cast<char>(c + 32) : c;
        } else if ((c == '-' || c == '\'') && i > 0 && i + 1 < text.size() && oracle_word(text[i - 1]) &&
                   oracle_word(text[i + 1])) {
            kept[i] = c;
        }
    }
    std::vector<std::string> out;
    std::string cur;
    for (char c : kept) {
        if (c == ' ') {
            if (!cur.empty()) out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(cur);
    return out;
}

inline std::map<std::string, int> oracle_frequency(const std::string& text) {
    std::map<std::string, int> m;
    for (const auto& t : oracle_tokens(text)) ++m[t];
    return m;
}

/// Non-overlapping occurrences found by plain substring search over the
/// space-joined token stream.
inline int oracle_count(const std::string& text, const std::string& phrase) {
    std::string hay = " ";
    for (const auto& t : oracle_tokens(text)) hay += t + " ";
    std::string needle = " ";
    for (const auto& t : oracle_tokens(phrase)) needle += t + " ";
    if (needle == " ") return 0;
    int n = 0;
    for (std::size_t pos = hay.find(needle); pos != std::string::npos; pos = hay.find(needle, pos + needle.size() - 1)) {
        ++n;
    }
    return n;
}

}  // namespace colloquy::testing
