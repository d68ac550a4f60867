#pragma once

#include <array>
#include <cstdint>
#include <istream>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "biascope/lexicon.hpp"
#include "biascope/text.hpp"

namespace biascope {

// Pronoun occurrence totals and sentence-level pronoun x occupation pair counts.
// Co-occurrence is pair-counted: a sentence with p pronouns of gender g and q
// occupations of stereotype s adds p*q to cooc(g, s).
struct CorpusStats {
  std::uint64_t male_total = 0;
  std::uint64_t female_total = 0;
  std::array<std::uint64_t, 4> cooc{};  // index = 2*gender + stereotype
  std::uint64_t sentences_seen = 0;
  std::uint64_t tokens_seen = 0;
  std::uint64_t lexicon_hash = 0;

  std::uint64_t& at(Gender g, Stereotype s) {
    return cooc[2 * static_cast<int>(g) + static_cast<int>(s)];
  }
  std::uint64_t at(Gender g, Stereotype s) const {
    return cooc[2 * static_cast<int>(g) + static_cast<int>(s)];
  }

  static CorpusStats zero(const GenderLexicon& lexicon);

  friend bool operator==(const CorpusStats&, const CorpusStats&) = default;
};

// Field-wise sum. Throws MergeError when the lexicon hashes differ.
CorpusStats merge(const CorpusStats& a, const CorpusStats& b);

// Counts for one tokenized sentence (tokens are case-folded internally).
void accumulate_sentence(const text::Tokens& tokens, const GenderLexicon& lexicon,
                         CorpusStats& stats);

// Serial reference scan over already tokenized sentences.
CorpusStats scan(std::span<const text::Tokens> sentences, const GenderLexicon& lexicon);

// Splits the sentences into `shards` contiguous shards, scans them on up to
// `threads` OpenMP threads and merges in shard order.
CorpusStats scan_sharded(std::span<const text::Tokens> sentences, const GenderLexicon& lexicon,
                         int shards, int threads = 0);

struct ScanOptions {
  bool pretokenized = false;
  int threads = 1;
  std::size_t batch_lines = 16384;
};

// Streams a one-sentence-per-line corpus. Blank lines are skipped.
CorpusStats scan_stream(std::istream& in, const GenderLexicon& lexicon, const ScanOptions& opts);

nlohmann::ordered_json to_json(const CorpusStats& stats);
CorpusStats corpus_stats_from_json(const nlohmann::json& j);

}  // namespace biascope
