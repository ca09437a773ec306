#pragma once

#include <string>
#include <string_view>

namespace g2p::utf8 {

// Strict decoding: rejects overlong forms, surrogates and truncated
// sequences with DecodeError.
std::u32string decode(std::string_view bytes);

std::string encode(char32_t cp);
std::string encode(std::u32string_view cps);

// Simple one-to-one case mapping covering ASCII, Latin-1, Latin Extended-A,
// basic Greek and Cyrillic. Other code points are returned unchanged.
char32_t to_upper(char32_t cp);
std::string to_upper(std::string_view bytes);

}  // namespace g2p::utf8
