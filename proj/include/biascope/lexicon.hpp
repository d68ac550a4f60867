#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace biascope {

enum class Gender { Male, Female };
enum class Stereotype { MaleBiased, FemaleBiased };

char gender_code(Gender g);
char stereotype_code(Stereotype s);

struct Occupation {
  std::vector<std::string> surface;  // lowercase tokens
  Stereotype stereotype;
};

struct SwapPair {
  std::string male;
  std::string female;
};

// How an `ambig` record picks between its two targets.
//   PossessiveObjective: PRP$ -> first target, PRP -> second; without a usable
//     tag, "followed by an alphabetic non-auxiliary word" -> first, else second.
//   StandalonePossessive: PRP -> second target; everything else -> first.
enum class AmbiguityRule { PossessiveObjective, StandalonePossessive };

struct AmbiguousSwap {
  std::string source;
  std::string possessive_or_default;
  std::string alternative;
  AmbiguityRule rule;
};

class GenderLexicon {
 public:
  std::set<std::string> male_pronouns;
  std::set<std::string> female_pronouns;
  std::vector<Occupation> occupations;
  std::vector<SwapPair> swap_pairs;
  std::vector<AmbiguousSwap> ambiguous_rules;

  // Checks every invariant and builds the lookup tables. Throws ValidationError.
  void validate();

  // Counterpart of an unambiguous word (lowercase), if any.
  const std::string* counterpart(const std::string& lower) const;
  const AmbiguousSwap* ambiguous(const std::string& lower) const;

  std::optional<Gender> pronoun_gender(const std::string& lower) const;
  std::size_t max_occupation_length() const { return max_occ_len_; }
  // Indices of occupations whose surface form starts with `lower`.
  const std::vector<std::size_t>* occupations_starting_with(const std::string& lower) const;

  // FNV-1a over a canonical serialization; identifies the lexicon in stats.
  std::uint64_t hash() const;
  std::string hash_hex() const;

  // Restriction to the pronoun pairs only (pair/ambig records whose words are
  // all pronouns), used by the pronoun-only swap properties.
  GenderLexicon pronoun_only() const;

 private:
  std::map<std::string, std::string> counterpart_;
  std::map<std::string, std::size_t> ambiguous_index_;
  std::map<std::string, std::vector<std::size_t>> occ_by_first_;
  std::size_t max_occ_len_ = 0;
};

GenderLexicon parse_lexicon(std::istream& in);
GenderLexicon load_lexicon(const std::filesystem::path& path);

// Lexicon shipped in data/lexicon_default.tsv.
std::filesystem::path default_lexicon_path();

}  // namespace biascope
