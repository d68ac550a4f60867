#pragma once

#include <optional>
#include <string>
#include <vector>

#include "biascope/lexicon.hpp"
#include "biascope/text.hpp"

namespace biascope {

struct SwapRecord {
  std::size_t position;
  std::string original;
  std::string replacement;
  std::string rule;  // "pair", "ambig:<tag>:pos" or "ambig:<tag>:heuristic"
};

struct SwapResult {
  text::Tokens tokens;
  std::vector<std::size_t> swapped_positions;
  std::vector<SwapRecord> direction_map;
};

// Replaces every gendered token by its opposite-gender counterpart, keeping
// leading/trailing punctuation and the capitalization pattern of the word.
// `pos`, when given, must have one tag per token.
SwapResult swap_sentence(const text::Tokens& tokens, const GenderLexicon& lexicon,
                         const std::vector<std::string>* pos = nullptr);

struct CorefSpan {
  int cluster;
  std::size_t sentence;
  std::size_t start;
  std::size_t end;  // inclusive
  friend bool operator==(const CorefSpan&, const CorefSpan&) = default;
  friend auto operator<=>(const CorefSpan&, const CorefSpan&) = default;
};

struct CorefDocument {
  std::string doc_id;
  std::vector<text::Tokens> sentences;
  std::optional<std::vector<std::vector<std::string>>> pos;
  std::optional<std::vector<std::vector<std::string>>> ner;  // bracketed CoNLL NER column
  std::vector<CorefSpan> coref_spans;

  // Throws ValidationError on out-of-range spans, start > end, mis-sized tag
  // layers or a mention listed in more than one cluster.
  void validate() const;

  friend bool operator==(const CorefDocument&, const CorefDocument&) = default;
};

struct SwapOptions {
  bool anonymize = false;
};

CorefDocument swap_coref_document(const CorefDocument& doc, const GenderLexicon& lexicon,
                                  const SwapOptions& options = {});

// Originals followed by their swapped companions (ids suffixed "_swapped").
std::vector<CorefDocument> augment_corpus(const std::vector<CorefDocument>& docs,
                                          const GenderLexicon& lexicon,
                                          const SwapOptions& options = {}, int threads = 1);

// Token-level PERSON spans of a bracketed NER column: (start, end) inclusive.
std::vector<std::pair<std::size_t, std::size_t>> person_spans(const std::vector<std::string>& ner);

}  // namespace biascope
