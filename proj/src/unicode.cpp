#include "smra/unicode.hpp"

namespace smra::unicode {

namespace {

// Length of the UTF-8 sequence starting at s[i], or 1 for malformed bytes.
std::size_t seq_len(const std::string& s, std::size_t i) {
  const auto b = static_cast<unsigned char>(s[i]);
  std::size_t n = 1;
  if ((b & 0x80) == 0x00) {
    n = 1;
  } else if ((b & 0xE0) == 0xC0) {
    n = 2;
  } else if ((b & 0xF0) == 0xE0) {
    n = 3;
  } else if ((b & 0xF8) == 0xF0) {
    n = 4;
  } else {
    return 1;  // stray continuation byte
  }
  if (i + n > s.size()) return 1;
  for (std::size_t k = 1; k < n; ++k) {
    if ((static_cast<unsigned char>(s[i + k]) & 0xC0) != 0x80) return 1;
  }
  return n;
}

}  // namespace

std::vector<std::size_t> codepoint_byte_offsets(const std::string& utf8) {
  std::vector<std::size_t> offsets;
  std::size_t i = 0;
  while (i < utf8.size()) {
    offsets.push_back(i);
    i += seq_len(utf8, i);
  }
  offsets.push_back(utf8.size());
  return offsets;
}

std::size_t length(const std::string& utf8) {
  return codepoint_byte_offsets(utf8).size() - 1;
}

std::string substr(const std::string& utf8, std::size_t begin, std::size_t end) {
  const auto offs = codepoint_byte_offsets(utf8);
  const std::size_t n = offs.size() - 1;
  if (begin > n) begin = n;
  if (end > n) end = n;
  if (begin >= end) return "";
  return utf8.substr(offs[begin], offs[end] - offs[begin]);
}

std::vector<char32_t> decode(const std::string& utf8) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < utf8.size()) {
    const std::size_t n = seq_len(utf8, i);
    const auto b0 = static_cast<unsigned char>(utf8[i]);
    char32_t cp = 0xFFFD;
    if (n == 1) {
      cp = (b0 & 0x80) == 0 ? b0 : 0xFFFD;
    } else {
      static const unsigned char first_mask[5] = {0, 0x7F, 0x1F, 0x0F, 0x07};
      cp = b0 & first_mask[n];
      for (std::size_t k = 1; k < n; ++k) {
        cp = (cp << 6) | (static_cast<unsigned char>(utf8[i + k]) & 0x3F);
      }
    }
    out.push_back(cp);
    i += n;
  }
  return out;
}

bool is_space(char32_t cp) {
  return cp == U' ' || cp == U'\t' || cp == U'\n' || cp == U'\r' || cp == U'\f' ||
         cp == U'\v' || cp == 0x00A0;
}

bool is_punct(char32_t cp) {
  if (cp < 0x80) {
    return (cp >= U'!' && cp <= U'/') || (cp >= U':' && cp <= U'@') ||
           (cp >= U'[' && cp <= U'`') || (cp >= U'{' && cp <= U'~');
  }
  switch (cp) {
    case 0x2018:  // quotes and dashes seen in social-media text
    case 0x2019:
    case 0x201C:
    case 0x201D:
    case 0x2013:
    case 0x2014:
    case 0x2026:
    case 0x00A1:
    case 0x00BF:
      return true;
    default:
      return false;
  }
}

}  // namespace smra::unicode
