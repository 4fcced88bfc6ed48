#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "lpbias/backend.hpp"

namespace lpbias::text {

// ASCII lowercasing; bytes >= 0x80 pass through so UTF-8 stays intact and
// byte offsets are preserved.
std::string lowercase(std::string_view s);

std::string_view trim(std::string_view s);

std::vector<std::string> split(std::string_view s, char delim);

// Byte offset of the `codepoint`-th code point in UTF-8 `s`; npos if past the end.
std::size_t utf8_byte_offset(std::string_view s, std::size_t codepoint);

// 1-based line number of byte `offset`.
std::size_t line_of_offset(std::string_view s, std::size_t offset);

// Basic pretokenizer: runs of ASCII alphanumerics and non-ASCII bytes form
// one token, each ASCII punctuation character is its own token, whitespace
// separates. Upper-case bracketed specials such as "[MASK]" stay intact.
std::vector<TokenSpan> basic_tokenize(std::string_view s);

// Lowercased alphanumeric word tokens for bag-of-words models.
std::vector<std::string> word_tokens(std::string_view s);

}  // namespace lpbias::text
