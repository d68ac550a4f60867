#include "biascope/cli.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <fstream>
#include <optional>
#include <sstream>

#include "biascope/conll.hpp"
#include "biascope/coref_eval.hpp"
#include "biascope/corpus_stats.hpp"
#include "biascope/error.hpp"
#include "biascope/genderswap.hpp"
#include "biascope/io.hpp"
#include "biascope/lexicon.hpp"
#include "biascope/neutralize.hpp"
#include "biascope/pipeline.hpp"

namespace biascope::cli {

namespace fs = std::filesystem;

namespace {

struct Globals {
  std::uint64_t seed = 0;
  int threads = 1;
  fs::path out_dir = ".";
  bool strict = false;
};

std::string one_line(std::string s) {
  for (char& c : s)
    if (c == '\n' || c == '\r') c = ' ';
  return s;
}

void require_inputs(std::initializer_list<const std::optional<fs::path>*> paths) {
  for (const auto* p : paths)
    if (p->has_value() && !fs::exists(**p)) throw IoError("input not found: " + (*p)->string());
}

void require_input(const fs::path& p) {
  if (!fs::exists(p)) throw IoError("input not found: " + p.string());
}

fs::path output_path(const Globals& g, const std::optional<fs::path>& explicit_path, const char* default_name) {
  fs::path p = explicit_path ? *explicit_path : g.out_dir / default_name;
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  return p;
}

void write_json(const fs::path& p, const nlohmann::ordered_json& j, std::ostream& out) {
  io::write_text_atomic(p, j.dump(2) + "\n");
  out << "wrote " << p.string() << '\n';
}

void write_text(const fs::path& p, const std::string& s, std::ostream& out) {
  io::write_text_atomic(p, s);
  out << "wrote " << p.string() << '\n';
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> grid;
  for (const auto& part : text::split(s, ',')) {
    if (part.empty()) continue;
    try {
      std::size_t used = 0;
      grid.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      throw UsageError("bad nu grid value '" + part + "'");
    }
  }
  if (grid.empty()) throw UsageError("empty nu grid");
  return grid;
}

GenderLexicon lexicon_from(const std::optional<fs::path>& p) {
  const fs::path path = p ? *p : default_lexicon_path();
  require_input(path);
  return load_lexicon(path);
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"biascope: gender bias analysis for contextual embeddings"};
  app.require_subcommand(1);
  app.fallthrough();
  Globals g;
  app.add_option("--seed", g.seed, "Seed for every random choice")->capture_default_str();
  app.add_option("--threads", g.threads, "Worker threads (0 = OpenMP default)")->capture_default_str();
  app.add_option("--out-dir", g.out_dir, "Directory for default output names")->capture_default_str();
  app.add_flag("--strict", g.strict, "Turn any audit section failure into exit 1");

  std::optional<fs::path> lexicon, corpus, out_path, input, pos, map_path, store_a, store_b, targets, dataset,
      model_path, gold_pro, gold_anti, pred_pro, pred_anti, probe_dataset;
  bool pretokenized = false, anonymize = false, conll_input = false, no_center = false, standardize = false;
  std::optional<std::size_t> k;
  std::optional<double> nu, gamma;
  std::string nu_grid, metric = "conll", subset = "semantics_only", label = "system";
  double heldout_fraction = 0.2, test_fraction = 0.0, audit_test_fraction = 0.25, kkt_tol = 1e-3;
  int max_passes = 10000;
  std::uint64_t rounds = 10000;

  auto* stats = app.add_subcommand("stats", "Pronoun totals and pronoun x occupation co-occurrence");
  stats->add_option("--corpus", corpus, "One sentence per line")->required();
  stats->add_option("--lexicon", lexicon, "Lexicon TSV (default: shipped lexicon)");
  stats->add_flag("--pretokenized", pretokenized, "Take whitespace tokens verbatim");
  stats->add_option("--out", out_path, "Output JSON (default <out-dir>/stats.json)");

  auto* swap = app.add_subcommand("swap", "Gender-swap sentences or a CoNLL file");
  swap->add_option("--input", input, "Text (one sentence per line) or CoNLL with --conll")->required();
  swap->add_option("--lexicon", lexicon, "Lexicon TSV");
  swap->add_option("--pos", pos, "POS tags, one line per sentence (text mode)");
  swap->add_flag("--conll", conll_input, "Input is a CoNLL coreference file");
  swap->add_flag("--anonymize", anonymize, "Replace PERSON spans with E1, E2, ... (CoNLL mode)");
  swap->add_option("--map", map_path, "Also write per-line swap records as JSONL (text mode)");
  swap->add_option("--out", out_path, "Output (default <out-dir>/swapped.txt or swapped.conll)");

  auto* augment = app.add_subcommand("augment", "Original CoNLL documents followed by swapped copies");
  augment->add_option("--input", input, "CoNLL file")->required();
  augment->add_option("--lexicon", lexicon, "Lexicon TSV");
  augment->add_flag("--anonymize", anonymize, "Anonymize PERSON spans in the swapped copies");
  augment->add_option("--out", out_path, "Output (default <out-dir>/augmented.conll)");

  auto* pca_cmd = app.add_subcommand("pca", "Gender subspace of paired embedding stores");
  pca_cmd->add_option("--pairs-a", store_a, "Store of original sentences")->required();
  pca_cmd->add_option("--pairs-b", store_b, "Store of swapped sentences")->required();
  pca_cmd->add_option("--targets", targets, "JSONL {sentence_id, token_index}")->required();
  pca_cmd->add_option("--lexicon", lexicon, "Lexicon TSV (pronouns decide the context gender)");
  pca_cmd->add_option("-k,--components", k, "Components to keep (default min(d,10))");
  pca_cmd->add_flag("--no-center", no_center, "Uncentered PCA");

  auto* ptrain = app.add_subcommand("probe-train", "Train the RBF nu-SVC gender probe");
  ptrain->add_option("--dataset", dataset, "Probe dataset JSONL")->required();
  ptrain->add_option("--nu", nu, "Fixed nu (default: tune over --nu-grid)");
  ptrain->add_option("--nu-grid", nu_grid, "Comma separated nu values (default 0.1..1.0)");
  ptrain->add_option("--heldout-fraction", heldout_fraction, "Held-out share used for tuning")->capture_default_str();
  ptrain->add_option("--test-fraction", test_fraction, "Test share reported per gender (0 = none)")->capture_default_str();
  ptrain->add_option("--gamma", gamma, "RBF gamma (default 1/(d*mean variance))");
  ptrain->add_flag("--standardize", standardize, "Standardize features per coordinate");
  ptrain->add_option("--kkt-tol", kkt_tol, "KKT tolerance")->capture_default_str();
  ptrain->add_option("--max-passes", max_passes, "Iteration budget in passes over the data")->capture_default_str();
  ptrain->add_option("--model", model_path, "Model output (default <out-dir>/probe_model.json)");
  ptrain->add_option("--out", out_path, "Summary output (default <out-dir>/probe_train.json)");

  auto* peval = app.add_subcommand("probe-eval", "Per-gender accuracy of a trained probe");
  peval->add_option("--model", model_path, "Model JSON")->required();
  peval->add_option("--dataset", dataset, "Probe dataset JSONL")->required();
  peval->add_option("--out", out_path, "Output (default <out-dir>/probe_eval.json)");

  auto* neut = app.add_subcommand("neutralize", "Average each sentence with its swapped variant");
  neut->add_option("--store", store_a, "Store of original sentences")->required();
  neut->add_option("--swapped-store", store_b, "Store of swapped sentences")->required();
  neut->add_option("--out", out_path, "Output store (default <out-dir>/neutralized.cemb)");

  auto* eval = app.add_subcommand("eval", "WinoBias pro/anti scoring with significance test");
  eval->add_option("--gold-pro", gold_pro, "Pro-stereotype WinoBias file")->required();
  eval->add_option("--gold-anti", gold_anti, "Anti-stereotype WinoBias file")->required();
  eval->add_option("--pred-pro", pred_pro, "Predictions JSONL for pro")->required();
  eval->add_option("--pred-anti", pred_anti, "Predictions JSONL for anti")->required();
  eval->add_option("--metric", metric, "muc, b3, ceafe or conll")->capture_default_str();
  eval->add_option("--rounds", rounds, "Randomization rounds")->capture_default_str();
  eval->add_option("--subset", subset, "semantics_only or syntactic_cues")->capture_default_str();
  eval->add_option("--label", label, "Condition label for the CSV row")->capture_default_str();
  eval->add_option("--out", out_path, "Report JSON (default <out-dir>/report.json); CSV goes next to it");

  auto* audit = app.add_subcommand("audit", "Corpus stats, subspace and probe in one report");
  audit->add_option("--corpus", corpus, "Corpus, one sentence per line");
  audit->add_flag("--pretokenized", pretokenized, "Take whitespace tokens verbatim");
  audit->add_option("--lexicon", lexicon, "Lexicon TSV");
  audit->add_option("--pairs-a", store_a, "Store of original sentences");
  audit->add_option("--pairs-b", store_b, "Store of swapped sentences");
  audit->add_option("--targets", targets, "JSONL {sentence_id, token_index}");
  audit->add_option("--probe-dataset", probe_dataset, "Probe dataset JSONL");
  audit->add_option("-k,--components", k, "PCA components (default min(d,10))");
  audit->add_flag("--no-center", no_center, "Uncentered PCA");
  audit->add_option("--nu", nu, "Fixed probe nu (default: tuned)");
  audit->add_option("--test-fraction", audit_test_fraction, "Probe test share")->capture_default_str();
  audit->add_option("--out", out_path, "Output (default <out-dir>/audit.json)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    err << "error: usage_error: " << one_line(e.what()) << '\n';
    return 2;
  }

  try {
    if (g.threads < 0) throw UsageError("--threads must be >= 0");
    require_inputs({&lexicon, &corpus, &input, &pos, &store_a, &store_b, &targets, &dataset, &gold_pro, &gold_anti,
                    &pred_pro, &pred_anti, &probe_dataset});
    if (peval->parsed()) require_inputs({&model_path});

    if (stats->parsed()) {
      const auto lex = lexicon_from(lexicon);
      std::ifstream f(*corpus);
      ScanOptions so;
      so.pretokenized = pretokenized;
      so.threads = g.threads;
      write_json(output_path(g, out_path, "stats.json"), to_json(scan_stream(f, lex, so)), out);
    } else if (swap->parsed()) {
      const auto lex = lexicon_from(lexicon);
      if (conll_input) {
        if (pos || map_path) throw UsageError("--pos and --map apply to text input only");
        std::vector<CorefDocument> docs;
        for (const auto& d : conll::read_file(*input)) docs.push_back(swap_coref_document(d, lex, {anonymize}));
        std::ostringstream s;
        conll::write(s, docs);
        write_text(output_path(g, out_path, "swapped.conll"), s.str(), out);
      } else {
        if (anonymize) throw UsageError("--anonymize needs --conll input");
        std::ifstream f(*input);
        std::optional<std::ifstream> pf;
        if (pos) pf.emplace(*pos);
        std::string line, tags, result;
        std::string records;
        std::size_t n = 0;
        while (std::getline(f, line)) {
          ++n;
          const auto toks = text::split_whitespace(line);
          std::optional<std::vector<std::string>> tagv;
          if (pf) {
            if (!std::getline(*pf, tags)) throw ValidationError("POS file ends before line " + std::to_string(n));
            tagv = text::split_whitespace(tags);
          }
          if (toks.empty()) {
            result += "\n";
            continue;
          }
          SwapResult r;
          try {
            r = swap_sentence(toks, lex, tagv ? &*tagv : nullptr);
          } catch (const ValidationError& e) {
            throw ValidationError("line " + std::to_string(n) + ": " + e.what());
          }
          result += text::join(r.tokens) + "\n";
          if (map_path) {
            nlohmann::ordered_json j;
            j["line"] = n;
            auto arr = nlohmann::ordered_json::array();
            for (const auto& rec : r.direction_map)
              arr.push_back({{"position", rec.position},
                             {"original", rec.original},
                             {"replacement", rec.replacement},
                             {"rule", rec.rule}});
            j["swaps"] = arr;
            records += j.dump() + "\n";
          }
        }
        write_text(output_path(g, out_path, "swapped.txt"), result, out);
        if (map_path) write_text(output_path(g, map_path, "swaps.jsonl"), records, out);
      }
    } else if (augment->parsed()) {
      const auto lex = lexicon_from(lexicon);
      const auto docs = augment_corpus(conll::read_file(*input), lex, {anonymize}, g.threads);
      std::ostringstream s;
      conll::write(s, docs);
      write_text(output_path(g, out_path, "augmented.conll"), s.str(), out);
    } else if (pca_cmd->parsed()) {
      const auto lex = lexicon_from(lexicon);
      const auto a = EmbeddingStore::open(*store_a);
      const auto b = EmbeddingStore::open(*store_b);
      pipeline::SubspaceOptions so;
      so.k = k;
      so.center = !no_center;
      so.threads = g.threads;
      const auto res = pipeline::analyze_subspace(a, b, pipeline::load_targets(*targets), lex, so);
      fs::create_directories(g.out_dir);
      write_text(g.out_dir / "scree.csv", pipeline::scree_csv(res.fit), out);
      write_text(g.out_dir / "scatter.csv", pipeline::scatter_csv(res.scatter), out);
      nlohmann::ordered_json j;
      j["pairs"] = res.differences.rows.rows();
      j["pca"] = pipeline::pca_json(res.fit);
      j["scatter_summary"] = pipeline::scatter_summary(res.scatter);
      write_json(g.out_dir / "pca.json", j, out);
    } else if (ptrain->parsed()) {
      const auto data = pipeline::load_probe_dataset(*dataset);
      pipeline::ProbeRunOptions po;
      po.nu = nu;
      if (!nu_grid.empty()) po.nu_grid = parse_grid(nu_grid);
      po.heldout_fraction = heldout_fraction;
      po.test_fraction = test_fraction;
      po.seed = g.seed;
      po.base.gamma = gamma;
      po.base.standardize = standardize;
      po.base.kkt_tolerance = kkt_tol;
      po.base.max_passes = max_passes;
      po.base.threads = g.threads;
      const auto run = pipeline::run_probe(data, po);
      write_json(output_path(g, model_path, "probe_model.json"), probe::to_json(run.model), out);
      write_json(output_path(g, out_path, "probe_train.json"), pipeline::probe_run_json(run), out);
    } else if (peval->parsed()) {
      const auto model = probe::model_from_json(nlohmann::json::parse(io::read_text(*model_path), nullptr, false));
      const auto data = pipeline::load_probe_dataset(*dataset);
      if (data.features.cols() != model.dim())
        throw DimensionError("dataset dim " + std::to_string(data.features.cols()) + " != model dim " +
                             std::to_string(model.dim()));
      const auto acc = probe::evaluate_by_group(model, data.features, data.labels, data.groups);
      nlohmann::ordered_json j;
      j["rows"] = data.labels.size();
      j["accuracy"] = pipeline::group_accuracy_json(acc);
      write_json(output_path(g, out_path, "probe_eval.json"), j, out);
    } else if (neut->parsed()) {
      const auto a = EmbeddingStore::open(*store_a);
      const auto b = EmbeddingStore::open(*store_b);
      const auto p = output_path(g, out_path, "neutralized.cemb");
      neutralize_store(a, b, p, g.threads);
      out << "wrote " << p.string() << '\n';
    } else if (eval->parsed()) {
      const auto task = coref::parse_task_type(subset);
      coref::ReportOptions ro;
      ro.metric = coref::parse_metric(metric);
      ro.ar_rounds = rounds;
      ro.seed = g.seed;
      ro.threads = g.threads;
      ro.label = label;
      const auto pro = coref::parse_winobias_file(*gold_pro, coref::Condition::Pro, task);
      const auto anti = coref::parse_winobias_file(*gold_anti, coref::Condition::Anti, task);
      const auto report = coref::bias_report(pro, coref::read_predictions_file(*pred_pro), anti,
                                             coref::read_predictions_file(*pred_anti), ro);
      const auto jp = output_path(g, out_path, "report.json");
      write_json(jp, coref::to_json(report), out);
      fs::path cp = jp;
      cp.replace_extension(".csv");
      write_text(cp, coref::csv_header() + "\n" + coref::csv_row(report) + "\n", out);
    } else if (audit->parsed()) {
      const auto lex = lexicon_from(lexicon);
      pipeline::AuditInputs in;
      in.corpus = corpus;
      in.pretokenized = pretokenized;
      in.store_a = store_a;
      in.store_b = store_b;
      in.targets = targets;
      in.probe_dataset = probe_dataset;
      in.subspace.k = k;
      in.subspace.center = !no_center;
      in.probe.nu = nu;
      in.probe.test_fraction = audit_test_fraction;
      in.probe.seed = g.seed;
      in.threads = g.threads;
      auto outcome = pipeline::run_audit(in, lex, g.strict);
      outcome.report["seed"] = g.seed;
      write_json(output_path(g, out_path, "audit.json"), outcome.report, out);
      if (g.strict && outcome.any_failed) {
        err << "error: validation_error: audit section failed under --strict\n";
        return 1;
      }
    }
  } catch (const UsageError& e) {
    err << "error: " << e.kind() << ": " << one_line(e.what()) << '\n';
    return 2;
  } catch (const Error& e) {
    err << "error: " << e.kind() << ": " << one_line(e.what()) << '\n';
    return 1;
  } catch (const fs::filesystem_error& e) {
    err << "error: io_error: " << one_line(e.what()) << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: internal_error: " << one_line(e.what()) << '\n';
    return 1;
  }
  return 0;
}

}  // namespace biascope::cli
