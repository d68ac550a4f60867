#include "biascope/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>

#include "biascope/corpus_stats.hpp"
#include "biascope/error.hpp"
#include "biascope/io.hpp"
#include "biascope/random.hpp"

namespace biascope::pipeline {

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

double pct1(double fraction) { return std::round(fraction * 1000.0) / 10.0; }

std::string where(const std::filesystem::path& p, std::size_t line) {
  return p.string() + " record " + std::to_string(line) + ": ";
}

}  // namespace

std::map<std::string, std::size_t> load_targets(const std::filesystem::path& path) {
  std::map<std::string, std::size_t> out;
  std::size_t n = 0;
  for (const auto& j : io::read_jsonl(path)) {
    ++n;
    try {
      const auto id = j.at("sentence_id").get<std::string>();
      const auto t = j.at("token_index").get<long long>();
      if (t < 0) throw ValidationError(where(path, n) + "negative token_index");
      if (!out.emplace(id, static_cast<std::size_t>(t)).second)
        throw ValidationError(where(path, n) + "duplicate sentence_id " + id);
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where(path, n) + e.what());
    }
  }
  return out;
}

ProbeDataset load_probe_dataset(const std::filesystem::path& path) {
  ProbeDataset ds;
  std::map<std::filesystem::path, EmbeddingStore> stores;
  std::size_t n = 0;
  for (const auto& j : io::read_jsonl(path)) {
    ++n;
    std::string store_name, id, gender;
    long long t = 0;
    try {
      store_name = j.at("store").get<std::string>();
      id = j.at("sentence_id").get<std::string>();
      t = j.at("token_index").get<long long>();
      gender = j.at("gender").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      throw ParseError(where(path, n) + e.what());
    }
    if (gender != "M" && gender != "F") throw ValidationError(where(path, n) + "gender must be \"M\" or \"F\"");
    if (t < 0) throw ValidationError(where(path, n) + "negative token_index");
    std::filesystem::path sp(store_name);
    if (sp.is_relative()) sp = path.parent_path() / sp;
    auto it = stores.find(sp);
    if (it == stores.end()) it = stores.emplace(sp, EmbeddingStore::open(sp)).first;
    const auto ti = static_cast<std::size_t>(t);
    const FloatMatrix v = it->second.read_vectors(id, TokenRange{ti, ti});
    std::vector<double> row(v.data().begin(), v.data().end());
    if (!ds.row_ids.empty() && row.size() != ds.features.cols())
      throw DimensionError(where(path, n) + "store dim differs from earlier records");
    ds.features.append_row(row);
    const bool male = gender == "M";
    ds.labels.push_back(male ? probe::kMale : probe::kFemale);
    ds.groups.push_back(male ? Gender::Male : Gender::Female);
    ds.row_ids.push_back(id + ":" + std::to_string(t));
  }
  if (ds.row_ids.empty()) throw ValidationError(path.string() + ": probe dataset is empty");
  return ds;
}

SubspaceAnalysis analyze_subspace(const EmbeddingStore& a, const EmbeddingStore& b,
                                  const std::map<std::string, std::size_t>& targets, const GenderLexicon& lexicon,
                                  const SubspaceOptions& options) {
  std::vector<AlignedPair> pairs;
  for (const auto& rec : a.manifest().sentences) {
    if (!targets.count(rec.id)) continue;
    pairs.push_back(align_pair(a, b, rec.id));
  }
  std::vector<std::string> unknown;
  for (const auto& [id, _] : targets)
    if (!a.contains(id)) unknown.push_back(id);
  if (!unknown.empty()) throw LookupError("targets reference unknown sentences: " + text::join(unknown, ","));

  SubspaceAnalysis out;
  out.differences = difference_matrix(pairs, targets);
  const std::size_t d = out.differences.rows.cols();
  const std::size_t k = options.k.value_or(std::min<std::size_t>(d, 10));
  PcaOptions po;
  po.center = options.center;
  po.threads = options.threads;
  out.fit = pca(out.differences, k, po);

  auto male_context = [&](const text::Tokens& toks) {
    for (const auto& t : toks) {
      const auto g = lexicon.pronoun_gender(text::lowercase(text::split_affixes(t).core));
      if (g && *g == Gender::Male) return true;
    }
    return false;
  };
  // Raw target embeddings on the leading components (no centering: the fit's
  // mean belongs to the difference vectors, not to the embeddings).
  const std::size_t j = std::min<std::size_t>(2, out.fit.components.rows());
  for (const auto& p : pairs) {
    const std::size_t t = targets.at(p.sentence_id);
    const char ga = male_context(p.tokens_a) ? 'M' : 'F';
    const char gb = ga == 'M' ? 'F' : 'M';
    for (int variant = 0; variant < 2; ++variant) {
      const auto& vec = variant == 0 ? p.vectors_a : p.vectors_b;
      std::vector<double> x(vec.row(t).begin(), vec.row(t).end());
      ScatterPoint sp{p.sentence_id, (variant == 0 ? p.tokens_a : p.tokens_b)[t], variant == 0 ? ga : gb, 0.0, 0.0};
      if (j > 0) sp.pc1 = dot(out.fit.components.row(0), x);
      if (j > 1) sp.pc2 = dot(out.fit.components.row(1), x);
      out.scatter.push_back(sp);
    }
  }
  return out;
}

std::string scree_csv(const PcaResult& fit) {
  std::string s = "component_index,explained_ratio\n";
  for (std::size_t i = 0; i < fit.explained_ratio.size(); ++i)
    s += std::to_string(i + 1) + "," + fmt(fit.explained_ratio[i]) + "\n";
  return s;
}

std::string scatter_csv(const std::vector<ScatterPoint>& points) {
  auto quote = [](const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string q = "\"";
    for (char c : v) {
      if (c == '"') q += '"';
      q += c;
    }
    return q + "\"";
  };
  std::string s = "sentence_id,surface,context_gender,pc1,pc2\n";
  for (const auto& p : points)
    s += quote(p.sentence_id) + "," + quote(p.surface) + "," + p.context_gender + "," + fmt(p.pc1) + "," +
         fmt(p.pc2) + "\n";
  return s;
}

nlohmann::ordered_json scatter_summary(const std::vector<ScatterPoint>& points) {
  nlohmann::ordered_json j;
  for (char g : {'M', 'F'}) {
    double s1 = 0.0, s2 = 0.0;
    std::size_t n = 0;
    for (const auto& p : points)
      if (p.context_gender == g) {
        s1 += p.pc1;
        s2 += p.pc2;
        ++n;
      }
    nlohmann::ordered_json e;
    e["count"] = n;
    e["mean_pc1"] = n ? s1 / static_cast<double>(n) : 0.0;
    e["mean_pc2"] = n ? s2 / static_cast<double>(n) : 0.0;
    j[std::string(1, g)] = e;
  }
  return j;
}

nlohmann::ordered_json pca_json(const PcaResult& fit) {
  nlohmann::ordered_json j;
  j["k"] = fit.components.rows();
  j["dim"] = fit.mean.size();
  j["centered"] = fit.centered;
  j["method"] = fit.method;
  j["total_variance"] = fit.total_variance;
  j["eigenvalues"] = fit.eigenvalues;
  j["explained_ratio"] = fit.explained_ratio;
  return j;
}

nlohmann::ordered_json group_accuracy_json(const probe::GroupAccuracy& acc) {
  nlohmann::ordered_json j;
  auto put = [&](const char* key, const std::optional<double>& v) {
    if (v)
      j[key] = pct1(*v);
    else
      j[key] = nullptr;
  };
  put("male_accuracy_pct", acc.male);
  put("female_accuracy_pct", acc.female);
  put("overall_accuracy_pct", acc.overall);
  j["n_male"] = acc.n_male;
  j["n_female"] = acc.n_female;
  return j;
}

ProbeRun run_probe(const ProbeDataset& data, const ProbeRunOptions& options) {
  std::vector<std::size_t> train_idx, test_idx;
  if (options.test_fraction > 0.0) {
    const auto split = probe::split_indices(data.labels.size(), options.test_fraction, options.seed);
    train_idx = split.train;
    test_idx = split.heldout;
  } else {
    train_idx.resize(data.labels.size());
    for (std::size_t i = 0; i < train_idx.size(); ++i) train_idx[i] = i;
  }
  auto pick = [&](const std::vector<std::size_t>& idx, Matrix& x, std::vector<int>& y, std::vector<Gender>& g) {
    x = probe::select_rows(data.features, idx);
    for (auto i : idx) {
      y.push_back(data.labels[i]);
      g.push_back(data.groups[i]);
    }
  };
  Matrix xtr, xte;
  std::vector<int> ytr, yte;
  std::vector<Gender> gtr, gte;
  pick(train_idx, xtr, ytr, gtr);
  pick(test_idx, xte, yte, gte);

  ProbeRun run;
  probe::ProbeConfig cfg = options.base;
  cfg.seed = options.seed;
  if (options.nu) {
    cfg.nu = *options.nu;
  } else {
    run.tuning = probe::tune_nu(xtr, ytr, options.nu_grid, options.heldout_fraction,
                                rng::derive_seed(options.seed, 1), cfg);
    cfg.nu = run.tuning->best.nu;
  }
  run.model = probe::train(xtr, ytr, cfg);
  run.train_accuracy = probe::evaluate_by_group(run.model, xtr, ytr, gtr);
  if (!test_idx.empty()) run.test_accuracy = probe::evaluate_by_group(run.model, xte, yte, gte);
  run.n_train = train_idx.size();
  run.n_test = test_idx.size();
  return run;
}

nlohmann::ordered_json probe_run_json(const ProbeRun& run) {
  nlohmann::ordered_json j;
  j["nu"] = run.model.nu;
  j["gamma"] = run.model.gamma;
  j["gamma_source"] = run.model.gamma_source;
  j["standardize"] = run.model.standardize;
  j["n_train"] = run.n_train;
  j["n_test"] = run.n_test;
  j["support_vectors"] = run.model.alpha.size();
  j["kkt_residual"] = run.model.kkt_residual;
  if (run.tuning) {
    auto trials = nlohmann::ordered_json::array();
    for (const auto& t : run.tuning->trials) {
      nlohmann::ordered_json e;
      e["nu"] = t.nu;
      if (t.heldout_accuracy)
        e["heldout_accuracy_pct"] = pct1(*t.heldout_accuracy);
      else
        e["error"] = t.error;
      trials.push_back(e);
    }
    j["nu_tuning"] = trials;
  }
  j["train"] = group_accuracy_json(run.train_accuracy);
  if (run.test_accuracy) j["test"] = group_accuracy_json(*run.test_accuracy);
  return j;
}

AuditOutcome run_audit(const AuditInputs& in, const GenderLexicon& lexicon, bool strict) {
  AuditOutcome out;
  auto& report = out.report;
  report["lexicon_hash"] = lexicon.hash_hex();
  auto sections = nlohmann::ordered_json::object();
  bool stop = false;

  auto run_section = [&](const std::string& name, bool available, const std::string& why_skipped, auto&& body) {
    nlohmann::ordered_json s;
    if (stop) {
      s["status"] = "not_run";
    } else if (!available) {
      s["status"] = "skipped";
      s["reason"] = why_skipped;
    } else {
      try {
        nlohmann::ordered_json result = body();
        s["status"] = "ok";
        for (auto& [k, v] : result.items()) s[k] = v;
      } catch (const Error& e) {
        s["status"] = "failed";
        s["error"] = {{"kind", e.kind()}, {"message", e.what()}};
        out.any_failed = true;
        if (strict) stop = true;
      }
    }
    sections[name] = s;
  };

  run_section("corpus_stats", in.corpus.has_value(), "no corpus given", [&] {
    std::ifstream f(*in.corpus);
    if (!f) throw IoError("cannot open " + in.corpus->string());
    ScanOptions so;
    so.pretokenized = in.pretokenized;
    so.threads = in.threads;
    const auto stats = scan_stream(f, lexicon, so);
    nlohmann::ordered_json j;
    j["stats"] = to_json(stats);
    return j;
  });

  run_section("subspace", in.store_a && in.store_b && in.targets, "paired stores or targets not given", [&] {
    const auto a = EmbeddingStore::open(*in.store_a);
    const auto b = EmbeddingStore::open(*in.store_b);
    const auto targets = load_targets(*in.targets);
    SubspaceOptions so = in.subspace;
    so.threads = in.threads;
    const auto analysis = analyze_subspace(a, b, targets, lexicon, so);
    nlohmann::ordered_json j;
    j["pairs"] = analysis.differences.rows.rows();
    j["pca"] = pca_json(analysis.fit);
    j["scatter_summary"] = scatter_summary(analysis.scatter);
    return j;
  });

  run_section("probe", in.probe_dataset.has_value(), "no probe dataset given", [&] {
    const auto data = load_probe_dataset(*in.probe_dataset);
    auto po = in.probe;
    po.base.threads = in.threads;
    return probe_run_json(run_probe(data, po));
  });

  report["sections"] = sections;
  return out;
}

}  // namespace biascope::pipeline
