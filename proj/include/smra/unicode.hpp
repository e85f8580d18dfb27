#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

namespace smra::unicode {

// All span arithmetic in the corpus is in Unicode code points, not bytes:
// the texts are Portuguese and multi-byte characters are routine.
// Invalid UTF-8 bytes are treated as one code point each so offsets stay
// total functions of the input.

// Byte offset of each code point, plus one past-the-end entry.
std::vector<std::size_t> codepoint_byte_offsets(const std::string& utf8);

std::size_t length(const std::string& utf8);

// Substring [begin, end) in code points.
std::string substr(const std::string& utf8, std::size_t begin, std::size_t end);

// Decoded code points (replacement value 0xFFFD for malformed bytes).
std::vector<char32_t> decode(const std::string& utf8);

bool is_space(char32_t cp);

// ASCII punctuation plus a few common typographic marks; used by the word
// tokenizer to split punctuation into standalone tokens.
bool is_punct(char32_t cp);

}  // namespace smra::unicode
