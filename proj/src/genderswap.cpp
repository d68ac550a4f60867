#include "biascope/genderswap.hpp"

#include <array>
#include <map>
#include <set>

#include "biascope/error.hpp"
#include "biascope/kernels.hpp"

namespace biascope {

namespace {

constexpr std::array<const char*, 23> kAuxiliaries = {
    "am",   "is",    "are",   "was",   "were",  "be",    "been", "being",
    "has",  "have",  "had",   "do",    "does",  "did",   "will", "would",
    "shall", "should", "can", "could", "may",   "might", "must"};

bool is_auxiliary(const std::string& lower) {
  for (const char* a : kAuxiliaries)
    if (lower == a) return true;
  return false;
}

std::string rule_tag(AmbiguityRule r) {
  return r == AmbiguityRule::PossessiveObjective ? "possessive_objective"
                                                 : "standalone_possessive";
}

// Possessive reading when the next token is a bare alphabetic word that is
// not an auxiliary verb.
bool heuristic_possessive(const text::Tokens& tokens, std::size_t i, std::string_view suffix) {
  if (!suffix.empty() || i + 1 >= tokens.size()) return false;
  auto next = text::split_affixes(tokens[i + 1]);
  if (!next.prefix.empty() || !text::is_alphabetic(next.core)) return false;
  return !is_auxiliary(text::lowercase(next.core));
}

}  // namespace

SwapResult swap_sentence(const text::Tokens& tokens, const GenderLexicon& lexicon,
                         const std::vector<std::string>* pos) {
  if (tokens.empty()) throw ValidationError("swap_sentence: empty token sequence");
  if (pos && pos->size() != tokens.size())
    throw ValidationError("swap_sentence: " + std::to_string(pos->size()) + " POS tags for " +
                          std::to_string(tokens.size()) + " tokens");

  SwapResult out;
  out.tokens = tokens;
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    const std::string& tok = tokens[i];
    std::string_view prefix, word = tok, suffix;
    std::string key = text::lowercase(tok);
    if (!lexicon.counterpart(key) && !lexicon.ambiguous(key)) {
      auto parts = text::split_affixes(tok);
      prefix = parts.prefix;
      word = parts.core;
      suffix = parts.suffix;
      key = text::lowercase(word);
    }
    if (word.empty()) continue;

    std::string target;
    std::string rule;
    if (const auto* amb = lexicon.ambiguous(key)) {
      const std::string tag = pos ? (*pos)[i] : std::string();
      bool first = true;
      bool by_pos = false;
      if (amb->rule == AmbiguityRule::PossessiveObjective) {
        if (tag == "PRP$") {
          by_pos = true;
        } else if (tag == "PRP") {
          first = false;
          by_pos = true;
        } else {
          first = heuristic_possessive(tokens, i, suffix);
        }
      } else if (tag == "PRP") {
        first = false;
        by_pos = true;
      } else {
        by_pos = pos != nullptr;
      }
      target = first ? amb->possessive_or_default : amb->alternative;
      rule = "ambig:" + rule_tag(amb->rule) + (by_pos ? ":pos" : ":heuristic");
    } else if (const auto* cp = lexicon.counterpart(key)) {
      target = *cp;
      rule = "pair";
    } else {
      continue;
    }

    std::string replacement(prefix);
    replacement += text::apply_case(target, text::case_pattern(word));
    replacement += suffix;
    out.tokens[i] = replacement;
    out.swapped_positions.push_back(i);
    out.direction_map.push_back({i, tok, std::move(replacement), std::move(rule)});
  }
  return out;
}

void CorefDocument::validate() const {
  auto check_layer = [&](const auto& layer, const char* name) {
    if (!layer) return;
    if (layer->size() != sentences.size())
      throw ValidationError(doc_id + ": " + name + " layer has wrong sentence count");
    for (std::size_t s = 0; s < sentences.size(); ++s)
      if ((*layer)[s].size() != sentences[s].size())
        throw ValidationError(doc_id + ": " + name + " layer length mismatch in sentence " +
                              std::to_string(s));
  };
  check_layer(pos, "POS");
  check_layer(ner, "NER");

  std::set<std::tuple<std::size_t, std::size_t, std::size_t>> mentions;
  for (const auto& sp : coref_spans) {
    if (sp.sentence >= sentences.size())
      throw ValidationError(doc_id + ": coref span references sentence " +
                            std::to_string(sp.sentence) + " of " +
                            std::to_string(sentences.size()));
    if (sp.start > sp.end || sp.end >= sentences[sp.sentence].size())
      throw ValidationError(doc_id + ": coref span (" + std::to_string(sp.start) + "," +
                            std::to_string(sp.end) + ") out of bounds in sentence " +
                            std::to_string(sp.sentence));
    if (!mentions.emplace(sp.sentence, sp.start, sp.end).second)
      throw ValidationError(doc_id + ": mention (" + std::to_string(sp.sentence) + "," +
                            std::to_string(sp.start) + "," + std::to_string(sp.end) +
                            ") belongs to more than one cluster");
  }
}

std::vector<std::pair<std::size_t, std::size_t>> person_spans(const std::vector<std::string>& ner) {
  std::vector<std::pair<std::size_t, std::size_t>> spans;
  std::string open_label;
  std::size_t open_start = 0;
  bool open = false;
  for (std::size_t i = 0; i < ner.size(); ++i) {
    const std::string& tag = ner[i];
    if (!tag.empty() && tag.front() == '(') {
      std::size_t stop = tag.find_first_of("*)");
      open_label = tag.substr(1, stop == std::string::npos ? std::string::npos : stop - 1);
      open_start = i;
      open = true;
    }
    if (open && tag.find(')') != std::string::npos) {
      if (open_label == "PERSON") spans.emplace_back(open_start, i);
      open = false;
    }
  }
  return spans;
}

CorefDocument swap_coref_document(const CorefDocument& doc, const GenderLexicon& lexicon,
                                  const SwapOptions& options) {
  doc.validate();
  CorefDocument out = doc;
  for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
    if (doc.sentences[s].empty()) continue;
    const std::vector<std::string>* tags = doc.pos ? &(*doc.pos)[s] : nullptr;
    out.sentences[s] = swap_sentence(doc.sentences[s], lexicon, tags).tokens;
  }
  if (options.anonymize && doc.ner) {
    std::map<std::string, std::string> placeholders;
    for (std::size_t s = 0; s < doc.sentences.size(); ++s) {
      for (auto [b, e] : person_spans((*doc.ner)[s])) {
        text::Tokens words(doc.sentences[s].begin() + static_cast<long>(b),
                           doc.sentences[s].begin() + static_cast<long>(e) + 1);
        auto key = text::lowercase(text::join(words));
        auto it = placeholders.find(key);
        if (it == placeholders.end())
          it = placeholders.emplace(key, "E" + std::to_string(placeholders.size() + 1)).first;
        for (std::size_t t = b; t <= e; ++t) out.sentences[s][t] = it->second;
      }
    }
  }
  return out;
}

std::vector<CorefDocument> augment_corpus(const std::vector<CorefDocument>& docs,
                                          const GenderLexicon& lexicon,
                                          const SwapOptions& options, int threads) {
  for (const auto& d : docs) d.validate();
  const std::size_t n = docs.size();
  std::vector<CorefDocument> out(2 * n);
  std::vector<std::string> failures(n);
  const long long nn = static_cast<long long>(n);
#pragma omp parallel for schedule(dynamic) num_threads(kernels::resolve_threads(threads))
  for (long long i = 0; i < nn; ++i) {
    const auto u = static_cast<std::size_t>(i);
    out[u] = docs[u];
    try {
      out[n + u] = swap_coref_document(docs[u], lexicon, options);
      out[n + u].doc_id += "_swapped";
    } catch (const Error& e) {
      failures[u] = e.what();
    }
  }
  for (const auto& f : failures)
    if (!f.empty()) throw ValidationError(f);
  return out;
}

}  // namespace biascope
