#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace bon {

// Lowercases a UTF-8 string. ASCII A-Z and the Latin-1 supplement letters
// (U+00C0..U+00DE, except the multiplication sign) are mapped; all other
// code points pass through unchanged.
std::string lowercase(std::string_view text);

// Maximal runs of non-whitespace bytes. Whitespace = ASCII space, tab,
// newline, CR, FF, VT. The input text is not case-folded.
std::vector<std::string> whitespace_tokens(std::string_view text);

// Retrieval analyzer: lowercase, then split on non-alphanumeric ASCII.
// Bytes >= 0x80 count as word characters so UTF-8 text forms tokens.
// No stemming, no stopword removal.
std::vector<std::string> analyze(std::string_view text);

// True if the string is empty or all ASCII whitespace.
bool is_blank(std::string_view text);

// Trims ASCII whitespace from both ends.
std::string_view trim(std::string_view text);

// FNV-1a 64-bit hash, used for feature hashing.
std::uint64_t fnv1a64(std::string_view s);

} // namespace bon
