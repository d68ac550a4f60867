#include "biascope/neutralize.hpp"

#include <cmath>
#include <set>

#include <omp.h>

#include "biascope/error.hpp"
#include "biascope/kernels.hpp"

namespace biascope {

NeutralizedSentence neutralize_pair(const AlignedPair& pair) {
  const auto& a = pair.vectors_a;
  const auto& b = pair.vectors_b;
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw AlignmentError("neutralize: shape mismatch for sentence '" + pair.sentence_id + "'");
  NeutralizedSentence out{pair.sentence_id, pair.tokens_a, FloatMatrix(a.rows(), a.cols())};
  const auto& da = a.data();
  const auto& db = b.data();
  auto& dst = out.vectors.data();
  for (std::size_t i = 0; i < da.size(); ++i) {
    if (!std::isfinite(da[i]) || !std::isfinite(db[i]))
      throw ValidationError("neutralize: non-finite value in sentence '" + pair.sentence_id + "'");
    dst[i] = static_cast<float>((static_cast<double>(da[i]) + static_cast<double>(db[i])) / 2.0);
  }
  return out;
}

EmbeddingStore neutralize_store(const EmbeddingStore& a, const EmbeddingStore& b, const std::filesystem::path& out,
                                int threads) {
  const auto ids_a = a.ids();
  const auto ids_b = b.ids();
  const std::set<std::string> set_a(ids_a.begin(), ids_a.end()), set_b(ids_b.begin(), ids_b.end());
  std::vector<std::string> only_a, only_b;
  for (const auto& id : set_a)
    if (!set_b.count(id)) only_a.push_back(id);
  for (const auto& id : set_b)
    if (!set_a.count(id)) only_b.push_back(id);
  if (!only_a.empty() || !only_b.empty()) {
    std::string msg = "neutralize: sentence id sets differ;";
    if (!only_a.empty()) msg += " only in " + a.path().string() + ": " + text::join(only_a, ",") + ";";
    if (!only_b.empty()) msg += " only in " + b.path().string() + ": " + text::join(only_b, ",") + ";";
    msg.pop_back();
    throw ValidationError(msg);
  }
  if (a.dim() != b.dim())
    throw FormatError("neutralize: dim " + std::to_string(a.dim()) + " != " + std::to_string(b.dim()));

  const auto& order = a.manifest().sentences;
  std::vector<NeutralizedSentence> results(order.size());
  std::vector<std::string> failures(order.size());
  const int nt = kernels::resolve_threads(threads);
#pragma omp parallel for num_threads(nt) schedule(dynamic, 8)
  for (std::ptrdiff_t i = 0; i < static_cast<std::ptrdiff_t>(order.size()); ++i) {
    try {
      results[i] = neutralize_pair(align_pair(a, b, order[i].id));
    } catch (const Error& e) {
      failures[i] = e.kind() + "|" + e.what();
    }
  }
  for (std::size_t i = 0; i < failures.size(); ++i) {
    if (failures[i].empty()) continue;
    const auto bar = failures[i].find('|');
    const std::string kind = failures[i].substr(0, bar);
    const std::string msg = "neutralize: sentence '" + order[i].id + "': " + failures[i].substr(bar + 1);
    if (kind == "alignment_error") throw AlignmentError(msg);
    if (kind == "format_error") throw FormatError(msg);
    throw ValidationError(msg);
  }

  nlohmann::ordered_json extra;
  extra["source_layers"] = {a.layer(), b.layer()};
  extra["averaging"] = "exported-layer averaging";
  StoreWriter writer(out, a.dim(), "mean(" + a.layer() + "," + b.layer() + ")", extra);
  for (const auto& r : results) writer.append(r.sentence_id, r.tokens, r.vectors);
  writer.finish();
  return EmbeddingStore::open(out);
}

}  // namespace biascope
