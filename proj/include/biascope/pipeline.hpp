#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "biascope/embedding_store.hpp"
#include "biascope/lexicon.hpp"
#include "biascope/matrix.hpp"
#include "biascope/probe.hpp"
#include "biascope/subspace.hpp"

namespace biascope::pipeline {

// Targets JSONL: {"sentence_id": str, "token_index": int} per line.
std::map<std::string, std::size_t> load_targets(const std::filesystem::path& path);

// Probe dataset JSONL: {"store", "sentence_id", "token_index", "gender": "M"|"F"}.
// Store paths are resolved relative to the dataset file.
struct ProbeDataset {
  Matrix features;
  std::vector<int> labels;
  std::vector<Gender> groups;
  std::vector<std::string> row_ids;  // "<sentence_id>:<token_index>"
};
ProbeDataset load_probe_dataset(const std::filesystem::path& path);

struct ScatterPoint {
  std::string sentence_id;
  std::string surface;
  char context_gender;  // 'M' or 'F'
  double pc1;
  double pc2;
};

struct SubspaceAnalysis {
  DifferenceMatrix differences;
  PcaResult fit;
  std::vector<ScatterPoint> scatter;
};

struct SubspaceOptions {
  std::optional<std::size_t> k;  // default min(d, 10)
  bool center = true;
  int threads = 1;
};

// Differences of the target token between the paired stores, their PCA, and
// both variants of every target projected on the first two components.
SubspaceAnalysis analyze_subspace(const EmbeddingStore& a, const EmbeddingStore& b,
                                  const std::map<std::string, std::size_t>& targets, const GenderLexicon& lexicon,
                                  const SubspaceOptions& options);

std::string scree_csv(const PcaResult& fit);
std::string scatter_csv(const std::vector<ScatterPoint>& points);
nlohmann::ordered_json scatter_summary(const std::vector<ScatterPoint>& points);
nlohmann::ordered_json pca_json(const PcaResult& fit);

nlohmann::ordered_json group_accuracy_json(const probe::GroupAccuracy& acc);

struct ProbeRun {
  probe::ProbeModel model;
  std::optional<probe::TuneResult> tuning;
  probe::GroupAccuracy train_accuracy;
  std::optional<probe::GroupAccuracy> test_accuracy;
  std::size_t n_train = 0;
  std::size_t n_test = 0;
};

struct ProbeRunOptions {
  std::optional<double> nu;           // fixed nu; unset -> tune over nu_grid
  std::vector<double> nu_grid = probe::default_nu_grid();
  double heldout_fraction = 0.2;      // used for tuning
  double test_fraction = 0.0;         // 0 -> no test split
  std::uint64_t seed = 0;
  probe::ProbeConfig base;
};

ProbeRun run_probe(const ProbeDataset& data, const ProbeRunOptions& options);
nlohmann::ordered_json probe_run_json(const ProbeRun& run);

struct AuditInputs {
  std::optional<std::filesystem::path> corpus;
  bool pretokenized = false;
  std::optional<std::filesystem::path> store_a, store_b, targets;
  std::optional<std::filesystem::path> probe_dataset;
  SubspaceOptions subspace;
  ProbeRunOptions probe;
  int threads = 1;
};

struct AuditOutcome {
  nlohmann::ordered_json report;
  bool any_failed = false;
};

// Runs corpus_stats, subspace and probe sections. A section without inputs is
// "skipped"; a failing section is "failed" and, when `strict`, ends the audit.
AuditOutcome run_audit(const AuditInputs& inputs, const GenderLexicon& lexicon, bool strict);

}  // namespace biascope::pipeline
