#include "biascope/text.hpp"

#include <cctype>

namespace biascope::text {

namespace {

bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\n' || c == '\r' || c == '\f' || c == '\v';
}
bool is_upper(char c) { return c >= 'A' && c <= 'Z'; }
bool is_lower(char c) { return c >= 'a' && c <= 'z'; }

}  // namespace

std::string lowercase(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (is_upper(c)) c = static_cast<char>(c - 'A' + 'a');
  return out;
}

std::string uppercase(std::string_view s) {
  std::string out(s);
  for (char& c : out)
    if (is_lower(c)) c = static_cast<char>(c - 'a' + 'A');
  return out;
}

bool is_ascii_punct(char c) {
  auto u = static_cast<unsigned char>(c);
  return u < 0x80 && std::ispunct(u);
}

bool is_alphabetic(std::string_view s) {
  if (s.empty()) return false;
  for (char c : s)
    if (!is_upper(c) && !is_lower(c)) return false;
  return true;
}

Tokens split_whitespace(std::string_view line) {
  Tokens out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && is_space(line[i])) ++i;
    std::size_t j = i;
    while (j < line.size() && !is_space(line[j])) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

Affixed split_affixes(std::string_view token) {
  std::size_t b = 0, e = token.size();
  while (b < e && is_ascii_punct(token[b])) ++b;
  while (e > b && is_ascii_punct(token[e - 1])) --e;
  return {token.substr(0, b), token.substr(b, e - b), token.substr(e)};
}

Tokens tokenize(std::string_view line) {
  Tokens out;
  for (auto& raw : split_whitespace(line)) {
    auto core = split_affixes(raw).core;
    if (!core.empty()) out.emplace_back(core);
  }
  return out;
}

Tokens tokenize(std::string_view line, bool pretokenized) {
  return pretokenized ? split_whitespace(line) : tokenize(line);
}

CasePattern case_pattern(std::string_view word) {
  int letters = 0, upper = 0;
  bool first_upper = false, first_seen = false;
  for (char c : word) {
    if (!is_upper(c) && !is_lower(c)) continue;
    ++letters;
    if (is_upper(c)) ++upper;
    if (!first_seen) {
      first_upper = is_upper(c);
      first_seen = true;
    }
  }
  if (upper == 0) return CasePattern::Lower;
  if (first_upper && upper == 1) return CasePattern::Initial;
  if (upper == letters) return CasePattern::Upper;
  return CasePattern::Mixed;
}

std::string apply_case(std::string_view lower_word, CasePattern pattern) {
  switch (pattern) {
    case CasePattern::Upper: {
      // A one-letter replacement cannot express ALL-CAPS distinctly.
      return uppercase(lower_word);
    }
    case CasePattern::Initial: {
      std::string out(lower_word);
      for (char& c : out) {
        if (is_lower(c)) {
          c = static_cast<char>(c - 'a' + 'A');
          break;
        }
        if (is_upper(c)) break;
      }
      return out;
    }
    case CasePattern::Lower:
    case CasePattern::Mixed:
      break;
  }
  return std::string(lower_word);
}

std::string join(const Tokens& tokens, std::string_view sep) {
  std::string out;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += sep;
    out += tokens[i];
  }
  return out;
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

}  // namespace biascope::text
