#include "bon/text.hpp"

#include <cctype>

namespace bon {

namespace {

inline bool is_ws(unsigned char c) {
    return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}

inline bool is_word_byte(unsigned char c) {
    return std::isalnum(c) != 0 || c >= 0x80;
}

} // namespace

std::string lowercase(std::string_view text) {
    std::string out;
    out.reserve(text.size());
    for (size_t i = 0; i < text.size(); ++i) {
        unsigned char c = static_cast<unsigned char>(text[i]);
        if (c < 0x80) {
            out.push_back(static_cast<char>(std::tolower(c)));
            continue;
        }
        // Latin-1 supplement uppercase letters are encoded in UTF-8 as
        // 0xC3 0x80..0x9E; lowercase forms are 0xC3 0xA0..0xBE (0x9F=ß has
        // no two-byte uppercase and 0x97 is the multiplication sign).
        if (c == 0xC3 && i + 1 < text.size()) {
            unsigned char next = static_cast<unsigned char>(text[i + 1]);
            if (next >= 0x80 && next <= 0x9E && next != 0x97) {
                out.push_back(static_cast<char>(c));
                out.push_back(static_cast<char>(next + 0x20));
                ++i;
                continue;
            }
        }
        out.push_back(static_cast<char>(c));
    }
    return out;
}

std::vector<std::string> whitespace_tokens(std::string_view text) {
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < text.size()) {
        while (i < text.size() && is_ws(static_cast<unsigned char>(text[i]))) ++i;
        size_t start = i;
        while (i < text.size() && !is_ws(static_cast<unsigned char>(text[i]))) ++i;
        if (i > start) tokens.emplace_back(text.substr(start, i - start));
    }
    return tokens;
}

std::vector<std::string> analyze(std::string_view text) {
    std::string lowered = lowercase(text);
    std::vector<std::string> tokens;
    size_t i = 0;
    while (i < lowered.size()) {
        while (i < lowered.size() && !is_word_byte(static_cast<unsigned char>(lowered[i]))) ++i;
        size_t start = i;
        while (i < lowered.size() && is_word_byte(static_cast<unsigned char>(lowered[i]))) ++i;
        if (i > start) tokens.emplace_back(lowered.substr(start, i - start));
    }
    return tokens;
}

bool is_blank(std::string_view text) {
    for (char c : text) {
        if (!is_ws(static_cast<unsigned char>(c))) return false;
    }
    return true;
}

std::string_view trim(std::string_view text) {
    size_t b = 0;
    size_t e = text.size();
    while (b < e && is_ws(static_cast<unsigned char>(text[b]))) ++b;
    while (e > b && is_ws(static_cast<unsigned char>(text[e - 1]))) --e;
    return text.substr(b, e - b);
}

std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 14695981039346656037ull;
    for (char c : s) {
        h ^= static_cast<unsigned char>(c);
        h *= 1099511628211ull;
    }
    return h;
}

} // namespace bon
