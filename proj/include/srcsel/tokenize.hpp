#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace srcsel {

namespace detail {

// Bytes >= 0x80 are UTF-8 sequence parts and are treated as word characters.
inline bool is_word_byte(unsigned char c) {
  return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') ||
         (c >= '0' && c <= '9') || c >= 0x80;
}

inline bool is_digit(unsigned char c) { return c >= '0' && c <= '9'; }

inline char lower(unsigned char c) {
  return (c >= 'A' && c <= 'Z') ? static_cast<char>(c - 'A' + 'a')
                                : static_cast<char>(c);
}

}  // namespace detail

// Lowercases and splits on whitespace and punctuation. Hyphens, slashes and
// apostrophes survive between two word characters ("x-ray", "km/h", "don't");
// a dot survives between two digits ("13.7").
inline std::vector<std::string> tokenize(std::string_view text) {
  std::vector<std::string> tokens;
  std::string current;
  const auto flush = [&] {
    if (!current.empty()) tokens.push_back(std::move(current));
    current.clear();
  };
  const std::size_t n = text.size();
  for (std::size_t i = 0; i < n; ++i) {
    const auto c = static_cast<unsigned char>(text[i]);
    if (detail::is_word_byte(c)) {
      current.push_back(detail::lower(c));
      continue;
    }
    const bool has_next = i + 1 < n;
    const auto next = has_next ? static_cast<unsigned char>(text[i + 1]) : 0;
    const auto prev = i > 0 ? static_cast<unsigned char>(text[i - 1]) : 0;
    bool joiner = false;
    if (!current.empty() && has_next) {
      if (c == '-' || c == '/' || c == '\'') {
        joiner = detail::is_word_byte(prev) && detail::is_word_byte(next);
      } else if (c == '.') {
        joiner = detail::is_digit(prev) && detail::is_digit(next);
      }
    }
    if (joiner) {
      current.push_back(static_cast<char>(c));
    } else {
      flush();
    }
  }
  flush();
  return tokens;
}

}  // namespace srcsel
