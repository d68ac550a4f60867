#pragma once

#include <string>
#include <string_view>
#include <vector>

namespace biascope::text {

using Tokens = std::vector<std::string>;

// ASCII case folding; bytes >= 0x80 pass through untouched.
std::string lowercase(std::string_view s);
std::string uppercase(std::string_view s);

bool is_ascii_punct(char c);
bool is_alphabetic(std::string_view s);

// Split on ASCII whitespace; no empty tokens.
Tokens split_whitespace(std::string_view line);

// Whitespace split, then strip leading/trailing ASCII punctuation.
// Tokens that are pure punctuation are dropped.
Tokens tokenize(std::string_view line);

// Tokenizer used by the corpus scanner: `pretokenized` means tokens are taken
// verbatim from the whitespace split.
Tokens tokenize(std::string_view line, bool pretokenized);

// A token split into leading punctuation, core and trailing punctuation.
struct Affixed {
  std::string_view prefix;
  std::string_view core;
  std::string_view suffix;
};
Affixed split_affixes(std::string_view token);

enum class CasePattern { Lower, Initial, Upper, Mixed };

CasePattern case_pattern(std::string_view word);
std::string apply_case(std::string_view lower_word, CasePattern pattern);

std::string join(const Tokens& tokens, std::string_view sep = " ");
std::vector<std::string> split(std::string_view s, char delim);

}  // namespace biascope::text
