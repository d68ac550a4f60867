#include "biascope/corpus_stats.hpp"

#include <omp.h>

#include <algorithm>
#include <cstdio>

#include "biascope/error.hpp"
#include "biascope/kernels.hpp"

namespace biascope {

namespace {

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

const char* kCellNames[4] = {"M_MaleBiased", "M_FemaleBiased", "F_MaleBiased", "F_FemaleBiased"};

}  // namespace

CorpusStats CorpusStats::zero(const GenderLexicon& lexicon) {
  CorpusStats s;
  s.lexicon_hash = lexicon.hash();
  return s;
}

CorpusStats merge(const CorpusStats& a, const CorpusStats& b) {
  if (a.lexicon_hash != b.lexicon_hash)
    throw MergeError("cannot merge stats from different lexicons (" + hex64(a.lexicon_hash) +
                     " vs " + hex64(b.lexicon_hash) + ")");
  CorpusStats out = a;
  out.male_total += b.male_total;
  out.female_total += b.female_total;
  for (std::size_t i = 0; i < out.cooc.size(); ++i) out.cooc[i] += b.cooc[i];
  out.sentences_seen += b.sentences_seen;
  out.tokens_seen += b.tokens_seen;
  return out;
}

void accumulate_sentence(const text::Tokens& tokens, const GenderLexicon& lexicon,
                         CorpusStats& stats) {
  std::vector<std::string> lower;
  lower.reserve(tokens.size());
  for (const auto& t : tokens) lower.push_back(text::lowercase(t));

  std::uint64_t pron[2] = {0, 0};
  std::uint64_t occ[2] = {0, 0};
  std::size_t i = 0;
  while (i < lower.size()) {
    // Longest occupation starting here wins; matches never overlap.
    std::size_t best_len = 0;
    Stereotype best_kind{};
    if (const auto* candidates = lexicon.occupations_starting_with(lower[i])) {
      for (std::size_t idx : *candidates) {
        const auto& o = lexicon.occupations[idx];
        const std::size_t len = o.surface.size();
        if (len <= best_len || i + len > lower.size()) continue;
        if (std::equal(o.surface.begin(), o.surface.end(), lower.begin() + static_cast<long>(i))) {
          best_len = len;
          best_kind = o.stereotype;
        }
      }
    }
    if (best_len > 0) {
      ++occ[static_cast<int>(best_kind)];
      i += best_len;
      continue;
    }
    if (auto g = lexicon.pronoun_gender(lower[i])) ++pron[static_cast<int>(*g)];
    ++i;
  }

  stats.male_total += pron[0];
  stats.female_total += pron[1];
  for (int g = 0; g < 2; ++g)
    for (int s = 0; s < 2; ++s) stats.cooc[2 * g + s] += pron[g] * occ[s];
  stats.sentences_seen += 1;
  stats.tokens_seen += tokens.size();
}

CorpusStats scan(std::span<const text::Tokens> sentences, const GenderLexicon& lexicon) {
  CorpusStats stats = CorpusStats::zero(lexicon);
  for (const auto& s : sentences) accumulate_sentence(s, lexicon, stats);
  return stats;
}

CorpusStats scan_sharded(std::span<const text::Tokens> sentences, const GenderLexicon& lexicon,
                         int shards, int threads) {
  shards = std::max(1, shards);
  const std::size_t n = sentences.size();
  std::vector<CorpusStats> partial(static_cast<std::size_t>(shards), CorpusStats::zero(lexicon));
#pragma omp parallel for schedule(static) num_threads(kernels::resolve_threads(threads))
  for (int s = 0; s < shards; ++s) {
    const std::size_t begin = n * static_cast<std::size_t>(s) / static_cast<std::size_t>(shards);
    const std::size_t end = n * static_cast<std::size_t>(s + 1) / static_cast<std::size_t>(shards);
    partial[static_cast<std::size_t>(s)] = scan(sentences.subspan(begin, end - begin), lexicon);
  }
  CorpusStats out = CorpusStats::zero(lexicon);
  for (const auto& p : partial) out = merge(out, p);
  return out;
}

CorpusStats scan_stream(std::istream& in, const GenderLexicon& lexicon, const ScanOptions& opts) {
  CorpusStats total = CorpusStats::zero(lexicon);
  std::vector<text::Tokens> batch;
  batch.reserve(opts.batch_lines);
  auto flush = [&] {
    if (batch.empty()) return;
    const int threads = kernels::resolve_threads(opts.threads);
    total = merge(total, threads <= 1 ? scan(batch, lexicon)
                                      : scan_sharded(batch, lexicon, threads, threads));
    batch.clear();
  };
  std::string line;
  while (std::getline(in, line)) {
    auto tokens = text::tokenize(line, opts.pretokenized);
    if (tokens.empty()) continue;
    batch.push_back(std::move(tokens));
    if (batch.size() >= opts.batch_lines) flush();
  }
  flush();
  return total;
}

nlohmann::ordered_json to_json(const CorpusStats& stats) {
  nlohmann::ordered_json cooc;
  for (int i = 0; i < 4; ++i) cooc[kCellNames[i]] = stats.cooc[static_cast<std::size_t>(i)];
  nlohmann::ordered_json j;
  j["male_total"] = stats.male_total;
  j["female_total"] = stats.female_total;
  j["cooc"] = cooc;
  j["sentences_seen"] = stats.sentences_seen;
  j["tokens_seen"] = stats.tokens_seen;
  j["lexicon_hash"] = hex64(stats.lexicon_hash);
  j["cooc_counting"] = "sentence_pairs";
  return j;
}

CorpusStats corpus_stats_from_json(const nlohmann::json& j) {
  try {
    CorpusStats s;
    s.male_total = j.at("male_total").get<std::uint64_t>();
    s.female_total = j.at("female_total").get<std::uint64_t>();
    for (int i = 0; i < 4; ++i)
      s.cooc[static_cast<std::size_t>(i)] = j.at("cooc").at(kCellNames[i]).get<std::uint64_t>();
    s.sentences_seen = j.at("sentences_seen").get<std::uint64_t>();
    s.tokens_seen = j.at("tokens_seen").get<std::uint64_t>();
    s.lexicon_hash = std::stoull(j.at("lexicon_hash").get<std::string>(), nullptr, 16);
    return s;
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("stats json: ") + e.what());
  }
}

}  // namespace biascope
