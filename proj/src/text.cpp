#include "lpbias/text.hpp"

#include <cctype>

namespace lpbias::text {

namespace {

bool is_space(unsigned char c) { return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v'; }

bool is_word_byte(unsigned char c) { return c >= 0x80 || std::isalnum(c) != 0; }

}  // namespace

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out) {
    auto u = static_cast<unsigned char>(c);
    if (u < 0x80) c = static_cast<char>(std::tolower(u));
  }
  return out;
}

std::string_view trim(std::string_view s) {
  std::size_t b = 0;
  std::size_t e = s.size();
  while (b < e && is_space(static_cast<unsigned char>(s[b]))) ++b;
  while (e > b && is_space(static_cast<unsigned char>(s[e - 1]))) --e;
  return s.substr(b, e - b);
}

std::vector<std::string> split(std::string_view s, char delim) {
  std::vector<std::string> out;
  std::size_t start = 0;
  for (std::size_t i = 0; i <= s.size(); ++i) {
    if (i == s.size() || s[i] == delim) {
      out.emplace_back(s.substr(start, i - start));
      start = i + 1;
    }
  }
  return out;
}

std::size_t utf8_byte_offset(std::string_view s, std::size_t codepoint) {
  std::size_t seen = 0;
  for (std::size_t i = 0; i < s.size(); ++i) {
    auto u = static_cast<unsigned char>(s[i]);
    if ((u & 0xC0) == 0x80) continue;  // continuation byte
    if (seen == codepoint) return i;
    ++seen;
  }
  return seen == codepoint ? s.size() : std::string_view::npos;
}

std::vector<TokenSpan> basic_tokenize(std::string_view s) {
  std::vector<TokenSpan> out;
  std::size_t i = 0;
  while (i < s.size()) {
    auto c = static_cast<unsigned char>(s[i]);
    if (is_space(c)) {
      ++i;
      continue;
    }
    if (c == '[') {
      auto close = s.find(']', i);
      if (close != std::string_view::npos) {
        bool special = close > i + 1;
        for (std::size_t j = i + 1; j < close && special; ++j) {
          auto u = static_cast<unsigned char>(s[j]);
          special = std::isupper(u) != 0 || u == '_';
        }
        if (special) {
          out.push_back({std::string(s.substr(i, close + 1 - i)), i, close + 1});
          i = close + 1;
          continue;
        }
      }
    }
    if (is_word_byte(c)) {
      std::size_t j = i;
      while (j < s.size() && is_word_byte(static_cast<unsigned char>(s[j]))) ++j;
      out.push_back({std::string(s.substr(i, j - i)), i, j});
      i = j;
    } else {
      out.push_back({std::string(1, s[i]), i, i + 1});
      ++i;
    }
  }
  return out;
}

std::vector<std::string> word_tokens(std::string_view s) {
  std::vector<std::string> out;
  std::string cur;
  for (char ch : s) {
    auto u = static_cast<unsigned char>(ch);
    if (u < 0x80 && std::isalnum(u) != 0) {
      cur.push_back(static_cast<char>(std::tolower(u)));
    } else if (u >= 0x80) {
      cur.push_back(ch);
    } else if (!cur.empty()) {
      out.push_back(std::move(cur));
      cur.clear();
    }
  }
  if (!cur.empty()) out.push_back(std::move(cur));
  return out;
}

std::size_t line_of_offset(std::string_view s, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < s.size(); ++i)
    if (s[i] == '\n') ++line;
  return line;
}

}  // namespace lpbias::text
