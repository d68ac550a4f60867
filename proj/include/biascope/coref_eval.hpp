#pragma once

#include <cstdint>
#include <filesystem>
#include <istream>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "biascope/text.hpp"

namespace biascope::coref {

struct Mention {
  std::size_t start;
  std::size_t end;  // inclusive
  friend bool operator==(const Mention&, const Mention&) = default;
  friend auto operator<=>(const Mention&, const Mention&) = default;
};

struct Clustering {
  std::vector<std::vector<Mention>> clusters;

  // Throws ValidationError unless the clusters are non-empty, disjoint, have
  // start <= end and (when n_tokens is given) lie inside the document.
  void validate(std::optional<std::size_t> n_tokens = std::nullopt) const;
};

enum class Metric { MUC, B3, CEAFe, CoNLL };
std::string metric_name(Metric m);
Metric parse_metric(const std::string& name);  // "muc", "b3", "ceafe", "conll"

// Numerators/denominators of one base metric; micro aggregation sums them.
struct Counts {
  double p_num = 0.0, p_den = 0.0, r_num = 0.0, r_den = 0.0;
  Counts& operator+=(const Counts& o) {
    p_num += o.p_num;
    p_den += o.p_den;
    r_num += o.r_num;
    r_den += o.r_den;
    return *this;
  }
};

struct Scores {
  double precision = 0.0;  // percentages
  double recall = 0.0;
  double f1 = 0.0;
};

Scores to_scores(const Counts& c);  // 0/0 -> 0

Counts muc_counts(const Clustering& gold, const Clustering& system);
Counts b3_counts(const Clustering& gold, const Clustering& system);
Counts ceafe_counts(const Clustering& gold, const Clustering& system);

struct CountSet {
  Counts muc, b3, ceafe;
  CountSet& operator+=(const CountSet& o) {
    muc += o.muc;
    b3 += o.b3;
    ceafe += o.ceafe;
    return *this;
  }
};

CountSet count_all(const Clustering& gold, const Clustering& system);
// CoNLL precision/recall are the means of the three base metrics, F1 likewise.
Scores scores_for(const CountSet& counts, Metric metric);
Scores score(const Clustering& gold, const Clustering& system, Metric metric);

// ---- WinoBias ----

enum class Condition { Pro, Anti };
enum class TaskType { SemanticsOnly, SyntacticCues };
std::string condition_name(Condition c);
std::string task_type_name(TaskType t);
TaskType parse_task_type(const std::string& name);  // "semantics_only"/"type1", "syntactic_cues"/"type2"

struct WinoBiasInstance {
  std::string instance_id;  // 1-based ordinal of the instance line in its file
  text::Tokens tokens;
  Mention pronoun;
  Mention occupation;
  Condition condition;
  TaskType task_type;

  Clustering gold() const;
};

// One instance per non-blank line: optional leading integer, then tokens with
// exactly two bracketed spans, one of which is a single pronoun token.
std::vector<WinoBiasInstance> parse_winobias(std::istream& in, Condition condition, TaskType task_type);
std::vector<WinoBiasInstance> parse_winobias_file(const std::filesystem::path& path, Condition condition,
                                                  TaskType task_type);

// JSONL {"instance_id": str, "clusters": [[[start,end],...],...]}.
std::map<std::string, Clustering> read_predictions(std::istream& in);
std::map<std::string, Clustering> read_predictions_file(const std::filesystem::path& path);
void write_predictions(std::ostream& out, const std::map<std::string, Clustering>& predictions);

// ---- significance ----

inline constexpr std::size_t kArBlockRounds = 1024;

struct ArResult {
  double statistic = 0.0;
  std::uint64_t at_least = 0;  // rounds with statistic >= observed
  std::uint64_t rounds = 0;
  double p_value = 1.0;
};

// Paired approximate randomization over (pro, anti) scores. Rounds are drawn
// in fixed blocks of kArBlockRounds, each from its own derived seed, so the
// serial and parallel versions agree exactly for any thread count.
ArResult ar_test(std::span<const std::pair<double, double>> pairs, std::uint64_t rounds, std::uint64_t seed);
ArResult ar_test_parallel(std::span<const std::pair<double, double>> pairs, std::uint64_t rounds,
                          std::uint64_t seed, int threads = 0);

// ---- report ----

struct ConditionResult {
  Scores muc, b3, ceafe, conll;
  std::size_t instances = 0;
  const Scores& get(Metric m) const;
};

struct EvalReport {
  Metric metric = Metric::CoNLL;
  std::string label;     // embedding condition, free text
  std::string subset;    // task type name
  ConditionResult pro, anti;
  double avg_f1 = 0.0;
  double abs_diff = 0.0;
  ArResult significance;
  std::uint64_t seed = 0;
};

struct ReportOptions {
  Metric metric = Metric::CoNLL;
  std::uint64_t ar_rounds = 10000;
  std::uint64_t seed = 0;
  int threads = 1;
  std::string label = "system";
};

// Scores both conditions (micro-aggregated over instances) and tests the
// pro/anti difference with instance-level scores of the report metric.
// Pro and anti instances are paired by instance_id.
// Throws ValidationError for unpaired ids or instances without a prediction.
EvalReport bias_report(std::span<const WinoBiasInstance> pro, const std::map<std::string, Clustering>& pro_pred,
                       std::span<const WinoBiasInstance> anti, const std::map<std::string, Clustering>& anti_pred,
                       const ReportOptions& options = {});

double round1(double x);  // one decimal, as printed in reports
nlohmann::ordered_json to_json(const EvalReport& report);
std::string csv_header();
std::string csv_row(const EvalReport& report);

}  // namespace biascope::coref
