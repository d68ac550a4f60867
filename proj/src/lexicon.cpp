#include "biascope/lexicon.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "biascope/error.hpp"
#include "biascope/text.hpp"

namespace biascope {

char gender_code(Gender g) { return g == Gender::Male ? 'M' : 'F'; }
char stereotype_code(Stereotype s) { return s == Stereotype::MaleBiased ? 'M' : 'F'; }

namespace {

std::string rule_name(AmbiguityRule r) {
  return r == AmbiguityRule::PossessiveObjective ? "possessive_objective"
                                                 : "standalone_possessive";
}

[[noreturn]] void fail_line(std::size_t line, const std::string& what) {
  throw ParseError("lexicon line " + std::to_string(line) + ": " + what);
}

std::string single_token(std::size_t line, const std::string& field) {
  auto toks = text::split_whitespace(field);
  if (toks.size() != 1) fail_line(line, "expected a single token, got '" + field + "'");
  return text::lowercase(toks[0]);
}

}  // namespace

void GenderLexicon::validate() {
  if (male_pronouns.empty()) throw ValidationError("lexicon defines no male pronouns");
  if (female_pronouns.empty()) throw ValidationError("lexicon defines no female pronouns");
  for (const auto& p : male_pronouns)
    if (female_pronouns.count(p))
      throw ValidationError("pronoun '" + p + "' is listed as both male and female");

  std::map<std::vector<std::string>, Stereotype> seen_occ;
  max_occ_len_ = 0;
  occ_by_first_.clear();
  for (std::size_t i = 0; i < occupations.size(); ++i) {
    const auto& occ = occupations[i];
    if (occ.surface.empty()) throw ValidationError("occupation with empty surface form");
    if (!seen_occ.emplace(occ.surface, occ.stereotype).second)
      throw ValidationError("occupation '" + text::join(occ.surface) + "' listed more than once");
    max_occ_len_ = std::max(max_occ_len_, occ.surface.size());
    occ_by_first_[occ.surface.front()].push_back(i);
  }

  ambiguous_index_.clear();
  for (std::size_t i = 0; i < ambiguous_rules.size(); ++i) {
    const auto& r = ambiguous_rules[i];
    if (r.source == r.possessive_or_default || r.source == r.alternative)
      throw ValidationError("ambiguous rule for '" + r.source + "' maps to itself");
    if (!ambiguous_index_.emplace(r.source, i).second)
      throw ValidationError("duplicate ambiguous rule for '" + r.source + "'");
  }

  // Words that are sources of an ambiguous rule are resolved by that rule;
  // every other word must have exactly one counterpart.
  counterpart_.clear();
  std::set<std::pair<std::string, std::string>> seen_pairs;
  auto bind = [&](const std::string& from, const std::string& to, const char* column) {
    if (ambiguous_index_.count(from)) return;
    auto [it, inserted] = counterpart_.emplace(from, to);
    if (!inserted && it->second != to)
      throw ValidationError("swap word '" + from + "' appears more than once in the " + column +
                            " column ('" + it->second + "' and '" + to + "')");
  };
  for (const auto& p : swap_pairs) {
    if (p.male == p.female) throw ValidationError("swap pair maps '" + p.male + "' to itself");
    const bool unambiguous = !ambiguous_index_.count(p.male) && !ambiguous_index_.count(p.female);
    if (!seen_pairs.emplace(p.male, p.female).second && unambiguous)
      throw ValidationError("duplicate swap pair '" + p.male + "' / '" + p.female + "'");
    bind(p.male, p.female, "male");
    bind(p.female, p.male, "female");
  }
}

const std::string* GenderLexicon::counterpart(const std::string& lower) const {
  auto it = counterpart_.find(lower);
  return it == counterpart_.end() ? nullptr : &it->second;
}

const std::vector<std::size_t>* GenderLexicon::occupations_starting_with(
    const std::string& lower) const {
  auto it = occ_by_first_.find(lower);
  return it == occ_by_first_.end() ? nullptr : &it->second;
}

const AmbiguousSwap* GenderLexicon::ambiguous(const std::string& lower) const {
  auto it = ambiguous_index_.find(lower);
  return it == ambiguous_index_.end() ? nullptr : &ambiguous_rules[it->second];
}

std::optional<Gender> GenderLexicon::pronoun_gender(const std::string& lower) const {
  if (male_pronouns.count(lower)) return Gender::Male;
  if (female_pronouns.count(lower)) return Gender::Female;
  return std::nullopt;
}

std::uint64_t GenderLexicon::hash() const {
  std::ostringstream canon;
  for (const auto& p : male_pronouns) canon << "pm\t" << p << '\n';
  for (const auto& p : female_pronouns) canon << "pf\t" << p << '\n';
  std::vector<std::string> occ;
  for (const auto& o : occupations)
    occ.push_back(text::join(o.surface) + '\t' + stereotype_code(o.stereotype));
  std::sort(occ.begin(), occ.end());
  for (const auto& o : occ) canon << "oc\t" << o << '\n';
  std::vector<std::string> pairs;
  for (const auto& p : swap_pairs) pairs.push_back(p.male + '\t' + p.female);
  std::sort(pairs.begin(), pairs.end());
  for (const auto& p : pairs) canon << "pa\t" << p << '\n';
  std::vector<std::string> amb;
  for (const auto& a : ambiguous_rules)
    amb.push_back(a.source + '\t' + a.possessive_or_default + ',' + a.alternative + '\t' +
                  rule_name(a.rule));
  std::sort(amb.begin(), amb.end());
  for (const auto& a : amb) canon << "am\t" << a << '\n';

  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : canon.str()) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string GenderLexicon::hash_hex() const {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(hash()));
  return buf;
}

GenderLexicon GenderLexicon::pronoun_only() const {
  GenderLexicon out;
  out.male_pronouns = male_pronouns;
  out.female_pronouns = female_pronouns;
  auto is_pronoun = [&](const std::string& w) { return pronoun_gender(w).has_value(); };
  for (const auto& p : swap_pairs)
    if (is_pronoun(p.male) && is_pronoun(p.female)) out.swap_pairs.push_back(p);
  for (const auto& a : ambiguous_rules)
    if (is_pronoun(a.source)) out.ambiguous_rules.push_back(a);
  out.validate();
  return out;
}

GenderLexicon parse_lexicon(std::istream& in) {
  GenderLexicon lex;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (text::split_whitespace(line).empty() || line.front() == '#') continue;
    auto fields = text::split(line, '\t');
    const std::string& kind = fields[0];
    auto want = [&](std::size_t n) {
      if (fields.size() != n)
        fail_line(lineno, "record '" + kind + "' expects " + std::to_string(n - 1) +
                              " field(s), got " + std::to_string(fields.size() - 1));
    };
    if (kind == "pronoun_m") {
      want(2);
      lex.male_pronouns.insert(single_token(lineno, fields[1]));
    } else if (kind == "pronoun_f") {
      want(2);
      lex.female_pronouns.insert(single_token(lineno, fields[1]));
    } else if (kind == "occ") {
      want(3);
      Occupation occ;
      for (auto& t : text::split_whitespace(fields[1])) occ.surface.push_back(text::lowercase(t));
      if (occ.surface.empty()) fail_line(lineno, "empty occupation");
      if (fields[2] == "M")
        occ.stereotype = Stereotype::MaleBiased;
      else if (fields[2] == "F")
        occ.stereotype = Stereotype::FemaleBiased;
      else
        fail_line(lineno, "occupation label must be M or F, got '" + fields[2] + "'");
      lex.occupations.push_back(std::move(occ));
    } else if (kind == "pair") {
      want(3);
      lex.swap_pairs.push_back({single_token(lineno, fields[1]), single_token(lineno, fields[2])});
    } else if (kind == "ambig") {
      want(4);
      auto targets = text::split(fields[2], ',');
      if (targets.size() != 2) fail_line(lineno, "ambig record needs exactly two targets");
      AmbiguousSwap a;
      a.source = single_token(lineno, fields[1]);
      a.possessive_or_default = single_token(lineno, targets[0]);
      a.alternative = single_token(lineno, targets[1]);
      if (fields[3] == "possessive_objective")
        a.rule = AmbiguityRule::PossessiveObjective;
      else if (fields[3] == "standalone_possessive")
        a.rule = AmbiguityRule::StandalonePossessive;
      else
        fail_line(lineno, "unknown disambiguation tag '" + fields[3] + "'");
      lex.ambiguous_rules.push_back(std::move(a));
    } else {
      fail_line(lineno, "unknown record kind '" + kind + "'");
    }
  }
  lex.validate();
  return lex;
}

GenderLexicon load_lexicon(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open lexicon " + path.string());
  return parse_lexicon(in);
}

std::filesystem::path default_lexicon_path() {
  return std::filesystem::path(BIASCOPE_DATA_DIR) / "lexicon_default.tsv";
}

}  // namespace biascope
