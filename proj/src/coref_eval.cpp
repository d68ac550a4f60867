#include "biascope/coref_eval.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include <omp.h>

#include "biascope/error.hpp"
#include "biascope/hungarian.hpp"
#include "biascope/kernels.hpp"
#include "biascope/random.hpp"

namespace biascope::coref {

namespace {

std::string mention_str(const Mention& m) {
  return "[" + std::to_string(m.start) + "," + std::to_string(m.end) + "]";
}

// mention -> cluster index
std::map<Mention, std::size_t> index_of(const Clustering& c) {
  std::map<Mention, std::size_t> idx;
  for (std::size_t k = 0; k < c.clusters.size(); ++k)
    for (const auto& m : c.clusters[k]) idx.emplace(m, k);
  return idx;
}

// Sum over key clusters of (|K| - |partition of K by the response|); mentions
// absent from the response form singleton parts.
std::pair<double, double> muc_side(const Clustering& key, const Clustering& response) {
  const auto resp = index_of(response);
  double num = 0.0, den = 0.0;
  for (const auto& k : key.clusters) {
    std::set<std::size_t> parts;
    std::size_t missing = 0;
    for (const auto& m : k) {
      auto it = resp.find(m);
      if (it == resp.end())
        ++missing;
      else
        parts.insert(it->second);
    }
    num += static_cast<double>(k.size()) - static_cast<double>(parts.size() + missing);
    den += static_cast<double>(k.size()) - 1.0;
  }
  return {num, den};
}

std::pair<double, double> b3_side(const Clustering& key, const Clustering& response) {
  const auto resp = index_of(response);
  double num = 0.0, den = 0.0;
  for (const auto& k : key.clusters) {
    std::map<std::size_t, std::size_t> overlap;
    for (const auto& m : k) {
      auto it = resp.find(m);
      if (it != resp.end()) ++overlap[it->second];
    }
    double s = 0.0;
    for (const auto& [_, o] : overlap) s += static_cast<double>(o) * static_cast<double>(o);
    num += s / static_cast<double>(k.size());
    den += static_cast<double>(k.size());
  }
  return {num, den};
}

double ratio(double num, double den) { return den > 0.0 ? num / den : 0.0; }

}  // namespace

void Clustering::validate(std::optional<std::size_t> n_tokens) const {
  std::set<Mention> seen;
  for (std::size_t k = 0; k < clusters.size(); ++k) {
    if (clusters[k].empty()) throw ValidationError("clustering: cluster " + std::to_string(k) + " is empty");
    for (const auto& m : clusters[k]) {
      if (m.start > m.end) throw ValidationError("clustering: mention " + mention_str(m) + " has start > end");
      if (n_tokens && m.end >= *n_tokens)
        throw ValidationError("clustering: mention " + mention_str(m) + " outside document of " +
                              std::to_string(*n_tokens) + " tokens");
      if (!seen.insert(m).second)
        throw ValidationError("clustering: mention " + mention_str(m) + " appears more than once");
    }
  }
}

std::string metric_name(Metric m) {
  switch (m) {
    case Metric::MUC: return "muc";
    case Metric::B3: return "b3";
    case Metric::CEAFe: return "ceafe";
    case Metric::CoNLL: return "conll";
  }
  return "conll";
}

Metric parse_metric(const std::string& name) {
  const auto n = text::lowercase(name);
  if (n == "muc") return Metric::MUC;
  if (n == "b3" || n == "bcub" || n == "bcubed") return Metric::B3;
  if (n == "ceafe" || n == "ceaf_e") return Metric::CEAFe;
  if (n == "conll") return Metric::CoNLL;
  throw UsageError("unknown metric '" + name + "' (expected muc, b3, ceafe or conll)");
}

Scores to_scores(const Counts& c) {
  Scores s;
  const double p = ratio(c.p_num, c.p_den), r = ratio(c.r_num, c.r_den);
  s.precision = 100.0 * p;
  s.recall = 100.0 * r;
  s.f1 = (p + r) > 0.0 ? 100.0 * 2.0 * p * r / (p + r) : 0.0;
  return s;
}

Counts muc_counts(const Clustering& gold, const Clustering& system) {
  gold.validate();
  system.validate();
  const auto [rn, rd] = muc_side(gold, system);
  const auto [pn, pd] = muc_side(system, gold);
  return {pn, pd, rn, rd};
}

Counts b3_counts(const Clustering& gold, const Clustering& system) {
  gold.validate();
  system.validate();
  const auto [rn, rd] = b3_side(gold, system);
  const auto [pn, pd] = b3_side(system, gold);
  return {pn, pd, rn, rd};
}

Counts ceafe_counts(const Clustering& gold, const Clustering& system) {
  gold.validate();
  system.validate();
  const auto& g = gold.clusters;
  const auto& s = system.clusters;
  Matrix phi(g.size(), s.size());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const std::set<Mention> gi(g[i].begin(), g[i].end());
    for (std::size_t j = 0; j < s.size(); ++j) {
      std::size_t common = 0;
      for (const auto& m : s[j]) common += gi.count(m);
      phi(i, j) = 2.0 * static_cast<double>(common) / static_cast<double>(g[i].size() + s[j].size());
    }
  }
  const double best = max_weight_assignment(phi).total;
  return {best, static_cast<double>(s.size()), best, static_cast<double>(g.size())};
}

CountSet count_all(const Clustering& gold, const Clustering& system) {
  return {muc_counts(gold, system), b3_counts(gold, system), ceafe_counts(gold, system)};
}

Scores scores_for(const CountSet& c, Metric metric) {
  switch (metric) {
    case Metric::MUC: return to_scores(c.muc);
    case Metric::B3: return to_scores(c.b3);
    case Metric::CEAFe: return to_scores(c.ceafe);
    case Metric::CoNLL: {
      const Scores a = to_scores(c.muc), b = to_scores(c.b3), e = to_scores(c.ceafe);
      return {(a.precision + b.precision + e.precision) / 3.0, (a.recall + b.recall + e.recall) / 3.0,
              (a.f1 + b.f1 + e.f1) / 3.0};
    }
  }
  return {};
}

Scores score(const Clustering& gold, const Clustering& system, Metric metric) {
  return scores_for(count_all(gold, system), metric);
}

// ---- significance ----

namespace {

double observed_statistic(std::span<const double> diff) {
  double s = 0.0;
  for (double d : diff) s += d;
  return std::abs(s / static_cast<double>(diff.size()));
}

std::uint64_t run_block(std::span<const double> diff, std::uint64_t seed, std::uint64_t block, std::uint64_t rounds,
                        double threshold) {
  rng::Engine eng(rng::derive_seed(seed, block));
  std::uint64_t hits = 0;
  const double n = static_cast<double>(diff.size());
  for (std::uint64_t r = 0; r < rounds; ++r) {
    double s = 0.0;
    std::uint64_t bits = 0;
    int left = 0;
    for (double d : diff) {
      if (left == 0) {
        bits = eng();
        left = 64;
      }
      s += (bits & 1u) ? -d : d;
      bits >>= 1;
      --left;
    }
    if (std::abs(s / n) >= threshold) ++hits;
  }
  return hits;
}

ArResult ar_impl(std::span<const std::pair<double, double>> pairs, std::uint64_t rounds, std::uint64_t seed,
                 int threads) {
  if (pairs.empty()) throw ValidationError("ar_test: no paired scores");
  if (rounds == 0) throw ValidationError("ar_test: rounds must be >= 1");
  std::vector<double> diff;
  diff.reserve(pairs.size());
  for (const auto& [p, a] : pairs) {
    if (!(p >= 0.0 && p <= 1.0 && a >= 0.0 && a <= 1.0))
      throw ValidationError("ar_test: scores must lie in [0, 1]");
    diff.push_back(p - a);
  }
  ArResult res;
  res.statistic = observed_statistic(diff);
  res.rounds = rounds;
  const double threshold = res.statistic - 1e-12;
  const std::uint64_t blocks = (rounds + kArBlockRounds - 1) / kArBlockRounds;
  auto block_rounds = [&](std::uint64_t b) { return std::min<std::uint64_t>(kArBlockRounds, rounds - b * kArBlockRounds); };
  std::uint64_t hits = 0;
  if (threads <= 1) {
    for (std::uint64_t b = 0; b < blocks; ++b) hits += run_block(diff, seed, b, block_rounds(b), threshold);
  } else {
#pragma omp parallel for num_threads(threads) reduction(+ : hits) schedule(static)
    for (std::int64_t b = 0; b < static_cast<std::int64_t>(blocks); ++b)
      hits += run_block(diff, seed, static_cast<std::uint64_t>(b), block_rounds(static_cast<std::uint64_t>(b)),
                        threshold);
  }
  res.at_least = hits;
  res.p_value = static_cast<double>(hits + 1) / static_cast<double>(rounds + 1);
  return res;
}

}  // namespace

ArResult ar_test(std::span<const std::pair<double, double>> pairs, std::uint64_t rounds, std::uint64_t seed) {
  return ar_impl(pairs, rounds, seed, 1);
}

ArResult ar_test_parallel(std::span<const std::pair<double, double>> pairs, std::uint64_t rounds,
                          std::uint64_t seed, int threads) {
  return ar_impl(pairs, rounds, seed, kernels::resolve_threads(threads));
}

// ---- report ----

const Scores& ConditionResult::get(Metric m) const {
  switch (m) {
    case Metric::MUC: return muc;
    case Metric::B3: return b3;
    case Metric::CEAFe: return ceafe;
    case Metric::CoNLL: return conll;
  }
  return conll;
}

namespace {

struct ScoredCondition {
  ConditionResult result;
  std::map<std::string, double> instance_score;  // in [0, 1]
};

ScoredCondition score_condition(std::span<const WinoBiasInstance> instances,
                                const std::map<std::string, Clustering>& predictions, Metric metric,
                                const std::string& name) {
  std::vector<std::string> missing;
  for (const auto& inst : instances)
    if (!predictions.count(inst.instance_id)) missing.push_back(inst.instance_id);
  if (!missing.empty())
    throw ValidationError("eval: " + name + " instances without a prediction: " + text::join(missing, ","));
  ScoredCondition out;
  CountSet total;
  for (const auto& inst : instances) {
    const Clustering& sys = predictions.at(inst.instance_id);
    try {
      sys.validate(inst.tokens.size());
    } catch (const ValidationError& e) {
      throw ValidationError("eval: " + name + " instance " + inst.instance_id + ": " + e.what());
    }
    const CountSet c = count_all(inst.gold(), sys);
    total += c;
    out.instance_score[inst.instance_id] = scores_for(c, metric).f1 / 100.0;
  }
  out.result.muc = scores_for(total, Metric::MUC);
  out.result.b3 = scores_for(total, Metric::B3);
  out.result.ceafe = scores_for(total, Metric::CEAFe);
  out.result.conll = scores_for(total, Metric::CoNLL);
  out.result.instances = instances.size();
  return out;
}

}  // namespace

EvalReport bias_report(std::span<const WinoBiasInstance> pro, const std::map<std::string, Clustering>& pro_pred,
                       std::span<const WinoBiasInstance> anti, const std::map<std::string, Clustering>& anti_pred,
                       const ReportOptions& options) {
  std::set<std::string> pro_ids, anti_ids;
  for (const auto& i : pro)
    if (!pro_ids.insert(i.instance_id).second) throw ValidationError("eval: duplicate pro id " + i.instance_id);
  for (const auto& i : anti)
    if (!anti_ids.insert(i.instance_id).second) throw ValidationError("eval: duplicate anti id " + i.instance_id);
  std::vector<std::string> unpaired;
  for (const auto& id : pro_ids)
    if (!anti_ids.count(id)) unpaired.push_back("pro:" + id);
  for (const auto& id : anti_ids)
    if (!pro_ids.count(id)) unpaired.push_back("anti:" + id);
  if (!unpaired.empty()) throw ValidationError("eval: unpaired instance ids: " + text::join(unpaired, ","));

  const auto p = score_condition(pro, pro_pred, options.metric, "pro");
  const auto a = score_condition(anti, anti_pred, options.metric, "anti");

  EvalReport r;
  r.metric = options.metric;
  r.label = options.label;
  r.subset = pro.empty() ? std::string("unknown") : task_type_name(pro.front().task_type);
  r.pro = p.result;
  r.anti = a.result;
  const double fp = r.pro.get(options.metric).f1, fa = r.anti.get(options.metric).f1;
  r.avg_f1 = (fp + fa) / 2.0;
  r.abs_diff = std::abs(fp - fa);
  r.seed = options.seed;
  std::vector<std::pair<double, double>> pairs;
  for (const auto& inst : pro) pairs.emplace_back(p.instance_score.at(inst.instance_id), a.instance_score.at(inst.instance_id));
  if (!pairs.empty())
    r.significance = options.threads == 1 ? ar_test(pairs, options.ar_rounds, options.seed)
                                          : ar_test_parallel(pairs, options.ar_rounds, options.seed, options.threads);
  return r;
}

double round1(double x) { return std::round(x * 10.0) / 10.0; }

namespace {

nlohmann::ordered_json scores_json(const Scores& s) {
  return {{"precision", round1(s.precision)}, {"recall", round1(s.recall)}, {"f1", round1(s.f1)}};
}

nlohmann::ordered_json condition_json(const ConditionResult& c) {
  return {{"instances", c.instances},
          {"muc", scores_json(c.muc)},
          {"b3", scores_json(c.b3)},
          {"ceafe", scores_json(c.ceafe)},
          {"conll", scores_json(c.conll)}};
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

}  // namespace

nlohmann::ordered_json to_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["metric"] = metric_name(r.metric);
  j["condition"] = r.label;
  j["subset"] = r.subset;
  j["pro"] = condition_json(r.pro);
  j["anti"] = condition_json(r.anti);
  j["pro_f1"] = round1(r.pro.get(r.metric).f1);
  j["anti_f1"] = round1(r.anti.get(r.metric).f1);
  j["avg_f1"] = round1(r.avg_f1);
  j["abs_diff"] = round1(r.abs_diff);
  j["significance"] = {{"test", "approximate_randomization"},
                       {"statistic", r.significance.statistic},
                       {"rounds", r.significance.rounds},
                       {"at_least_as_extreme", r.significance.at_least},
                       {"p_value", r.significance.p_value},
                       {"seed", r.seed},
                       {"instance_score", "instance-level " + metric_name(r.metric) + " F1"}};
  return j;
}

std::string csv_header() { return "condition,subset,pro,anti,avg,abs_diff,p_value"; }

std::string csv_row(const EvalReport& r) {
  return r.label + "," + r.subset + "," + fixed(r.pro.get(r.metric).f1, 1) + "," + fixed(r.anti.get(r.metric).f1, 1) +
         "," + fixed(r.avg_f1, 1) + "," + fixed(r.abs_diff, 1) + "," + fixed(r.significance.p_value, 6);
}

}  // namespace biascope::coref
