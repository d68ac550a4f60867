// One PASS/FAIL/SKIP line per acceptance criterion. Exit status 1 on any FAIL.

#include <bit>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

#include "biascope/cli.hpp"
#include "biascope/conll.hpp"
#include "biascope/coref_eval.hpp"
#include "biascope/corpus_stats.hpp"
#include "biascope/embedding_store.hpp"
#include "biascope/error.hpp"
#include "biascope/genderswap.hpp"
#include "biascope/neutralize.hpp"
#include "biascope/probe.hpp"
#include "biascope/subspace.hpp"
#include "oracles/ar_oracle.hpp"
#include "oracles/ceaf_oracle.hpp"
#include "oracles/eigen_oracle.hpp"
#include "oracles/qp_oracle.hpp"
#include "support/support.hpp"

using namespace biascope;
namespace fs = std::filesystem;

namespace {

enum class Verdict { Pass, Fail, Skip };

struct Outcome {
  Verdict verdict;
  std::string detail;
};

Outcome pass(std::string d) { return {Verdict::Pass, std::move(d)}; }
Outcome fail(std::string d) { return {Verdict::Fail, std::move(d)}; }

std::string fmt(const char* f, double a, double b = 0, double c = 0, double d = 0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, f, a, b, c, d);
  return buf;
}

const GenderLexicon& lex() {
  static const GenderLexicon l = load_lexicon(default_lexicon_path());
  return l;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- corpus

Outcome corpus_stats_check() {
  const auto t0 = std::chrono::steady_clock::now();
  std::ifstream in(testing::fixture("corpus_200.txt"));
  const auto s = scan_stream(in, lex(), {});
  const auto exp = nlohmann::json::parse(testing::slurp(testing::fixture("corpus_200.expected.json")));
  const bool counts = s.male_total == exp["male_total"].get<std::uint64_t>() &&
                      s.female_total == exp["female_total"].get<std::uint64_t>() &&
                      s.at(Gender::Male, Stereotype::MaleBiased) == exp["cooc"]["M_MaleBiased"].get<std::uint64_t>() &&
                      s.at(Gender::Male, Stereotype::FemaleBiased) == exp["cooc"]["M_FemaleBiased"].get<std::uint64_t>() &&
                      s.at(Gender::Female, Stereotype::MaleBiased) == exp["cooc"]["F_MaleBiased"].get<std::uint64_t>() &&
                      s.at(Gender::Female, Stereotype::FemaleBiased) == exp["cooc"]["F_FemaleBiased"].get<std::uint64_t>();
  std::vector<text::Tokens> sents;
  {
    std::ifstream again(testing::fixture("corpus_200.txt"));
    std::string line;
    while (std::getline(again, line))
      if (!text::split_whitespace(line).empty()) sents.push_back(text::tokenize(line));
  }
  const std::string ref = to_json(s).dump();
  bool sharded = true;
  for (int workers : {1, 2, 8}) sharded &= to_json(scan_sharded(sents, lex(), workers, workers)).dump() == ref;
  const double secs = seconds_since(t0);
  std::string detail = std::string("counts ") + (counts ? "exact" : "MISMATCH") + ", sharded 1/2/8 " +
                       (sharded ? "identical" : "DIFFER") + fmt(", %.3f s", secs);
  return counts && sharded && secs < 1.0 ? pass(detail) : fail(detail);
}

Outcome billion_word_ratio() {
  const char* env = std::getenv("BIASCOPE_BILLION_WORD");
  if (!env || !*env) return {Verdict::Skip, "set BIASCOPE_BILLION_WORD to a corpus file or directory"};
  std::vector<fs::path> files;
  if (fs::is_directory(env)) {
    for (const auto& e : fs::recursive_directory_iterator(env))
      if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
  } else {
    files.push_back(env);
  }
  CorpusStats total;
  bool first = true;
  for (const auto& f : files) {
    std::ifstream in(f);
    if (!in) return fail("cannot open " + f.string());
    ScanOptions o;
    o.threads = 0;
    auto s = scan_stream(in, lex(), o);
    total = first ? s : merge(total, s);
    first = false;
  }
  if (total.female_total == 0) return fail("no female pronouns found");
  const double ratio = static_cast<double>(total.male_total) / static_cast<double>(total.female_total);
  const double target = 5.3 / 1.6;
  const std::string d = fmt("male %.0f, female %.0f, ratio %.3f vs %.3f", static_cast<double>(total.male_total),
                            static_cast<double>(total.female_total), ratio, target);
  return std::abs(ratio / target - 1.0) <= 0.10 ? pass(d) : fail(d);
}

// ---------------------------------------------------------------- swap

Outcome swap_check() {
  std::vector<std::string> words;
  for (const auto& p : lex().swap_pairs) {
    if (lex().ambiguous(p.male) || lex().ambiguous(p.female)) continue;
    words.push_back(p.male);
    words.push_back(p.female);
  }
  const std::vector<std::string> filler = {"the", "went", "to", "store", "quickly", "and", "a", "blue"};
  rng::Engine eng(2024);
  int involution = 0, length = 0;
  for (int t = 0; t < 1000; ++t) {
    text::Tokens s;
    const auto len = 1 + rng::uniform_index(eng, 12);
    for (std::size_t i = 0; i < len; ++i) {
      std::string w = rng::uniform01(eng) < 0.5 ? words[rng::uniform_index(eng, words.size())]
                                                : filler[rng::uniform_index(eng, filler.size())];
      if (rng::uniform01(eng) < 0.3) w = text::apply_case(w, text::CasePattern::Initial);
      s.push_back(w);
    }
    const auto once = swap_sentence(s, lex());
    involution += swap_sentence(once.tokens, lex()).tokens == s;
    length += once.tokens.size() == s.size();
  }
  const auto docs = conll::read_file(testing::fixture("docs20.conll"));
  const auto aug = augment_corpus(docs, lex(), {}, 0);
  bool annotations = aug.size() == 2 * docs.size();
  for (std::size_t i = 0; annotations && i < docs.size(); ++i) {
    const auto& a = aug[docs.size() + i];
    annotations = a.coref_spans == docs[i].coref_spans && a.pos == docs[i].pos && a.ner == docs[i].ner &&
                  a.sentences.size() == docs[i].sentences.size();
    for (std::size_t s = 0; annotations && s < a.sentences.size(); ++s)
      annotations = a.sentences[s].size() == docs[i].sentences[s].size();
  }
  auto count = [](const std::vector<CorefDocument>& ds) {
    std::vector<text::Tokens> sents;
    for (const auto& d : ds) sents.insert(sents.end(), d.sentences.begin(), d.sentences.end());
    return scan(sents, lex());
  };
  const auto after = count(aug);
  const bool equal = after.male_total == after.female_total;
  const std::string d = fmt("involution %.0f/1000, length %.0f/1000, ", involution, length) +
                        fmt("docs %.0f -> %.0f, pronouns M %.0f F %.0f", static_cast<double>(docs.size()),
                            static_cast<double>(aug.size()), static_cast<double>(after.male_total),
                            static_cast<double>(after.female_total)) +
                        (annotations ? "" : ", annotations changed");
  return involution == 1000 && length == 1000 && annotations && equal ? pass(d) : fail(d);
}

// ---------------------------------------------------------------- store

Outcome store_check() {
  testing::TempDir dir;
  rng::Engine eng(77);
  auto random_float = [&]() -> float {
    switch (rng::uniform_index(eng, 6)) {
      case 0: return 0.0f;
      case 1: return -0.0f;
      case 2: return std::bit_cast<float>(static_cast<std::uint32_t>(1 + rng::uniform_index(eng, 0x7fffff)));
      case 3: return -std::bit_cast<float>(static_cast<std::uint32_t>(1 + rng::uniform_index(eng, 0x7fffff)));
      default: {
        std::uint32_t bits;
        do bits = static_cast<std::uint32_t>(eng());
        while (((bits >> 23) & 0xff) == 0xff);
        return std::bit_cast<float>(bits);
      }
    }
  };
  std::vector<StoreEntry> entries;
  std::size_t vectors = 0;
  for (int i = 0; vectors < 10000; ++i) {
    const std::size_t n = std::min<std::size_t>(1 + rng::uniform_index(eng, 30), 10000 - vectors);
    StoreEntry e{"s" + std::to_string(i), text::Tokens(n, "w"), FloatMatrix(n, 7)};
    for (auto& v : e.vectors.data()) v = random_float();
    vectors += n;
    entries.push_back(std::move(e));
  }
  write_store(entries, 7, dir / "r.cemb");
  const auto s = EmbeddingStore::open(dir / "r.cemb");
  std::size_t exact = 0;
  for (const auto& e : entries) {
    const auto v = s.read_vectors(e.id);
    if (std::memcmp(v.data().data(), e.vectors.data().data(), v.data().size() * sizeof(float)) == 0)
      exact += e.vectors.rows();
  }
  const auto cases = nlohmann::json::parse(testing::slurp(testing::fixture("stores/corrupt_cases.json")));
  std::size_t rejected = 0;
  for (const auto& [name, kind] : cases.items()) {
    try {
      EmbeddingStore::open(testing::fixture("stores/" + name + ".cemb"));
    } catch (const Error& e) {
      rejected += e.kind() == kind.get<std::string>();
    }
  }
  const std::string d = fmt("%.0f/10000 vectors bit-exact, %.0f/%.0f corrupt fixtures rejected as documented",
                            static_cast<double>(exact), static_cast<double>(rejected),
                            static_cast<double>(cases.size()));
  return exact == 10000 && rejected == cases.size() ? pass(d) : fail(d);
}

// ---------------------------------------------------------------- pca

std::vector<std::vector<double>> sample_cov(const Matrix& x) {
  const std::size_t n = x.rows(), d = x.cols();
  std::vector<double> mean(d, 0.0);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) mean[j] += x(r, j) / static_cast<double>(n);
  std::vector<std::vector<double>> c(d, std::vector<double>(d, 0.0));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j) c[i][j] += (x(r, i) - mean[i]) * (x(r, j) - mean[j]) / static_cast<double>(n - 1);
  return c;
}

Matrix spread(rng::Engine& eng, std::size_t n, std::size_t d) {
  Matrix x = testing::random_matrix(eng, n, d);
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t j = 0; j < d; ++j) x(r, j) *= 1.0 + 1.5 * static_cast<double>(d - j);
  return x;
}

Outcome pca_check() {
  rng::Engine eng(123);
  double ortho = 0.0, ratio_sum = 0.0;
  for (auto [n, d] : {std::pair<std::size_t, std::size_t>{50, 12}, {200, 70}}) {
    const auto fit = pca(spread(eng, n, d), d);
    for (std::size_t i = 0; i < d; ++i)
      for (std::size_t j = 0; j < d; ++j)
        ortho = std::max(ortho, std::abs(dot(fit.components.row(i), fit.components.row(j)) - (i == j)));
    double s = 0.0;
    for (double r : fit.explained_ratio) s += r;
    ratio_sum = std::max(ratio_sum, std::abs(s - 1.0));
  }
  double closed = 0.0;
  for (int t = 0; t < 100; ++t) {
    const Matrix x = testing::random_matrix(eng, 3 + rng::uniform_index(eng, 20), 2, 1.0 + 3 * rng::uniform01(eng));
    const auto c = sample_cov(x);
    const auto ev = oracle::eig2(c[0][0], c[0][1], c[1][1]);
    const auto fit = pca(x, 2);
    closed = std::max({closed, std::abs(fit.eigenvalues[0] - ev[0]), std::abs(fit.eigenvalues[1] - ev[1])});
  }
  double equi = 0.0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t d = 2 + rng::uniform_index(eng, 5), n = d + 5 + rng::uniform_index(eng, 20);
    const Matrix x = spread(eng, n, d), r = testing::random_rotation(eng, d);
    const double s = 0.01 + 10.0 * rng::uniform01(eng);
    Matrix xr(n, d), xs(n, d);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < d; ++j) {
        xr(i, j) = dot(r.row(j), x.row(i));
        xs(i, j) = s * x(i, j);
      }
    const auto f = pca(x, d), fr = pca(xr, d), fs = pca(xs, d);
    for (std::size_t i = 0; i < d; ++i) {
      double plus = 0.0, minus = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        const double rc = dot(r.row(j), f.components.row(i));
        plus = std::max(plus, std::abs(fr.components(i, j) - rc));
        minus = std::max(minus, std::abs(fr.components(i, j) + rc));
        equi = std::max(equi, std::abs(fs.components(i, j) - f.components(i, j)));
      }
      equi = std::max({equi, std::min(plus, minus), std::abs(f.explained_ratio[i] - fr.explained_ratio[i]),
                       std::abs(f.explained_ratio[i] - fs.explained_ratio[i])});
    }
  }
  // contextual direction + occupational direction + noise 0.01
  Matrix g(400, 32);
  for (std::size_t i = 0; i < 400; ++i) {
    const double c = rng::uniform01(eng) < 0.5 ? 1.0 : -1.0, o = 0.5 * rng::normal(eng);
    for (std::size_t j = 0; j < 32; ++j) g(i, j) = 0.01 * rng::normal(eng);
    g(i, 0) += c;
    g(i, 1) += 0.6 * o;
    g(i, 2) += 0.8 * o;
  }
  const auto gf = pca(g, 2);
  const double top2 = gf.explained_ratio[0] + gf.explained_ratio[1];
  const std::string d = fmt("orthonormality %.1e, ratio sum err %.1e, closed form %.1e, equivariance %.1e", ortho,
                            ratio_sum, closed, equi) +
                        fmt(", rank-2 top-2 ratio %.4f", top2);
  return ortho <= 1e-6 && ratio_sum <= 1e-9 && closed <= 1e-9 && equi <= 1e-8 && top2 >= 0.95 ? pass(d) : fail(d);
}

// ---------------------------------------------------------------- probe

Outcome probe_check() {
  rng::Engine eng(31);
  double qp = 0.0;
  for (int done = 0; done < 50;) {
    const std::size_t n = 2 + rng::uniform_index(eng, 5);
    const Matrix x = testing::random_matrix(eng, n, 2);
    std::vector<int> y(n);
    std::size_t pos = 0;
    for (auto& v : y) pos += (v = rng::uniform01(eng) < 0.5 ? 1 : -1) > 0;
    if (pos == 0 || pos == n) continue;
    const double nu = std::max(0.05, 2.0 * static_cast<double>(std::min(pos, n - pos)) / static_cast<double>(n) *
                                         (0.1 + 0.9 * rng::uniform01(eng)));
    const double gamma = 0.1 + 2.0 * rng::uniform01(eng);
    std::vector<std::vector<double>> k(n, std::vector<double>(n));
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        k[i][j] = std::exp(-gamma * ((x(i, 0) - x(j, 0)) * (x(i, 0) - x(j, 0)) + (x(i, 1) - x(j, 1)) * (x(i, 1) - x(j, 1))));
    probe::ProbeConfig cfg;
    cfg.nu = nu;
    cfg.gamma = gamma;
    qp = std::max(qp, std::abs(probe::dual_objective(probe::train(x, y, cfg)) -
                               oracle::nu_svc_dual_bruteforce(k, y, nu).objective));
    ++done;
  }
  int nu_ok = 0;
  for (std::uint64_t s = 0; s < 50; ++s) {
    rng::Engine e(1000 + s);
    Matrix x = testing::random_matrix(e, 40, 3);
    std::vector<int> y(40);
    for (std::size_t i = 0; i < 40; ++i) {
      y[i] = i < 20 ? 1 : -1;
      x(i, 0) += y[i] * 0.8;
    }
    probe::ProbeConfig cfg;
    cfg.nu = 0.1 + 0.8 * rng::uniform01(e);
    const auto m = probe::train(x, y, cfg);
    std::size_t errors = 0;
    for (std::size_t i = 0; i < 40; ++i)
      errors += y[i] * m.decision(x.row(i)) < m.rho - (cfg.kkt_tolerance / 40.0 + 1e-12);
    nu_ok += errors / 40.0 <= cfg.nu && cfg.nu <= m.support_vectors.rows() / 40.0 + 1.0 / 40.0;
  }
  const auto sep = testing::separable_data(41, 1400);
  Matrix trx, tex;
  std::vector<int> try_, tey;
  for (std::size_t r = 0; r < 1400; ++r) {
    (r < 400 ? trx : tex).append_row(sep.x.row(r));
    (r < 400 ? try_ : tey).push_back(sep.y[r]);
  }
  probe::ProbeConfig sc;
  sc.nu = 0.1;
  const auto sm = probe::train(trx, try_, sc);
  std::size_t correct = 0;
  for (std::size_t r = 0; r < tex.rows(); ++r) correct += probe::predict(sm, tex.row(r)).label == tey[r];
  const double sep_acc = static_cast<double>(correct) / static_cast<double>(tex.rows());

  int gap_ok = 0;
  double gap_sum = 0.0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto all = testing::probe_gap_data(seed, 1000);
    Matrix a, b;
    std::vector<int> ya, yb;
    std::vector<Gender> gb;
    for (std::size_t r = 0; r < 1000; ++r) {
      (r < 500 ? a : b).append_row(all.x.row(r));
      (r < 500 ? ya : yb).push_back(all.y[r]);
      if (r >= 500) gb.push_back(all.y[r] > 0 ? Gender::Male : Gender::Female);
    }
    probe::ProbeConfig cfg;
    const auto acc = probe::evaluate_by_group(probe::train(a, ya, cfg), b, yb, gb);
    const auto again = probe::evaluate_by_group(probe::train(a, ya, cfg), b, yb, gb);
    const double gap = *acc.male - *acc.female;
    gap_sum += gap;
    gap_ok += gap > 0.0 && *again.male == *acc.male && *again.female == *acc.female;
  }
  const std::string d = fmt("QP oracle max diff %.1e, nu-property %.0f/50, separable acc %.2f%%", qp, nu_ok,
                            100.0 * sep_acc) +
                        fmt(", synthetic M-F gap positive %.0f/5 (mean %.1f pts)", gap_ok, 20.0 * gap_sum);
  return qp <= 1e-3 && nu_ok == 50 && sep_acc >= 0.99 && gap_ok == 5 ? pass(d) : fail(d);
}

// ---------------------------------------------------------------- neutralize

Outcome neutralize_check() {
  rng::Engine eng(81);
  int identities = 0;
  for (int t = 0; t < 100; ++t) {
    const std::size_t len = 1 + rng::uniform_index(eng, 8), dim = 1 + rng::uniform_index(eng, 16);
    FloatMatrix a(len, dim), b(len, dim);
    for (auto& v : a.data()) v = static_cast<float>(200.0 * rng::uniform01(eng) - 100.0);
    for (auto& v : b.data()) v = static_cast<float>(200.0 * rng::uniform01(eng) - 100.0);
    text::Tokens tok(len, "x");
    identities += neutralize_pair({"s", tok, tok, a, a}).vectors == a &&
                  neutralize_pair({"s", tok, tok, a, b}).vectors == neutralize_pair({"s", tok, tok, b, a}).vectors;
  }
  testing::TempDir dir;
  std::vector<StoreEntry> plus, minus, base;
  for (int i = 0; i < 20; ++i) {
    FloatMatrix v(4, 6);
    for (auto& x : v.data()) x = static_cast<float>(static_cast<int>(rng::uniform_index(eng, 2001)) - 1000) / 64.0f;
    FloatMatrix p = v, m = v;
    const std::size_t at = rng::uniform_index(eng, 4);
    for (std::size_t j = 0; j < 6; ++j) {
      p(at, j) += 0.5f + static_cast<float>(j);
      m(at, j) -= 0.5f + static_cast<float>(j);
    }
    const std::string id = "s" + std::to_string(i);
    base.push_back({id, text::Tokens(4, "t"), v});
    plus.push_back({id, text::Tokens(4, "t"), p});
    minus.push_back({id, text::Tokens(4, "t"), m});
  }
  write_store(plus, 6, dir / "p.cemb");
  write_store(minus, 6, dir / "m.cemb");
  const auto out = neutralize_store(EmbeddingStore::open(dir / "p.cemb"), EmbeddingStore::open(dir / "m.cemb"),
                                    dir / "n.cemb");
  int cancelled = 0;
  for (const auto& e : base) cancelled += out.read_vectors(e.id) == e.vectors;

  const auto hand = neutralize_store(EmbeddingStore::open(testing::fixture("stores/hand_a.cemb")),
                                     EmbeddingStore::open(testing::fixture("stores/hand_b.cemb")), dir / "h.cemb");
  const auto expected = nlohmann::json::parse(testing::slurp(testing::fixture("stores/hand_expected.json")));
  bool hand_ok = hand.size() == expected.size();
  for (const auto& [id, e] : expected.items()) {
    const auto v = hand.read_vectors(id);
    for (std::size_t r = 0; r < v.rows(); ++r)
      for (std::size_t c = 0; c < v.cols(); ++c) hand_ok &= v(r, c) == e["vectors"][r][c].get<float>();
  }
  const std::string d = fmt("identities %.0f/100, v+-g cancelled %.0f/20, hand fixture ", identities, cancelled) +
                        (hand_ok ? "exact" : "MISMATCH");
  return identities == 100 && cancelled == 20 && hand_ok ? pass(d) : fail(d);
}

// ---------------------------------------------------------------- coref

coref::Clustering cl(std::initializer_list<std::initializer_list<std::size_t>> groups) {
  coref::Clustering c;
  for (const auto& g : groups) {
    c.clusters.emplace_back();
    for (auto i : g) c.clusters.back().push_back({i, i});
  }
  return c;
}

Outcome coref_check() {
  using coref::Metric;
  using coref::round1;
  struct Hand {
    coref::Clustering g, s;
    Metric m;
    double p, r, f;
  };
  const auto g1 = cl({{0, 1}, {2}});
  const std::vector<Hand> hand = {
      {g1, g1, Metric::MUC, 100, 100, 100},
      {g1, g1, Metric::B3, 100, 100, 100},
      {g1, g1, Metric::CEAFe, 100, 100, 100},
      {g1, cl({{0}, {1}, {2}}), Metric::MUC, 0, 0, 0},
      {g1, cl({{0}, {1}, {2}}), Metric::B3, 100, 66.7, 80.0},
      {g1, cl({{0}, {1}, {2}}), Metric::CEAFe, 55.6, 83.3, 66.7},
      {cl({{0, 1, 2}}), cl({{0, 1}, {2}}), Metric::MUC, 100, 50, 66.7},
      {cl({{0, 1, 2}}), cl({{0, 1}, {2}}), Metric::B3, 100, 55.6, 71.4},
      {cl({{0, 1, 2}}), cl({{0, 1}, {2}}), Metric::CEAFe, 40, 80, 53.3},
  };
  int hand_ok = 0;
  for (const auto& h : hand) {
    const auto s = coref::score(h.g, h.s, h.m);
    hand_ok += round1(s.precision) == h.p && round1(s.recall) == h.r && round1(s.f1) == h.f;
  }

  rng::Engine eng(91);
  int ceaf_ok = 0, ceaf_total = 0;
  while (ceaf_total < 200) {
    const std::size_t n = 2 + rng::uniform_index(eng, 10);
    auto part = [&](std::size_t first, std::size_t count) {
      const std::size_t k = 1 + rng::uniform_index(eng, 6);
      std::vector<std::vector<coref::Mention>> groups(k);
      for (std::size_t i = 0; i < count; ++i) groups[rng::uniform_index(eng, k)].push_back({first + i, first + i});
      coref::Clustering c;
      for (auto& g : groups)
        if (!g.empty()) c.clusters.push_back(std::move(g));
      return c;
    };
    const auto g = part(0, n), s = part(rng::uniform_index(eng, 3), n);
    std::vector<std::vector<double>> w(g.clusters.size(), std::vector<double>(s.clusters.size()));
    for (std::size_t i = 0; i < g.clusters.size(); ++i)
      for (std::size_t j = 0; j < s.clusters.size(); ++j) {
        std::size_t common = 0;
        for (const auto& a : g.clusters[i])
          for (const auto& b : s.clusters[j]) common += a == b;
        w[i][j] = 2.0 * static_cast<double>(common) / static_cast<double>(g.clusters[i].size() + s.clusters[j].size());
      }
    ceaf_ok += std::abs(coref::ceafe_counts(g, s).p_num - oracle::best_alignment_bruteforce(w)) <= 1e-12;
    ++ceaf_total;
  }

  double ar_err = 0.0;
  for (int t = 0; t < 40; ++t) {
    const std::size_t n = 1 + rng::uniform_index(eng, 10);
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(rng::uniform01(eng), rng::uniform01(eng));
    ar_err = std::max(ar_err, std::abs(coref::ar_test(pairs, 10000, 500 + static_cast<std::uint64_t>(t)).p_value -
                                       oracle::exact_randomization_p(pairs)));
  }
  const std::string d = fmt("hand cases %.0f/9, CEAFe vs brute force %.0f/200, ar_test max |p - exact| %.4f",
                            hand_ok, ceaf_ok, ar_err);
  return hand_ok == 9 && ceaf_ok == 200 && ar_err <= 0.02 ? pass(d) : fail(d);
}

Outcome eval_harness_check() {
  std::vector<coref::WinoBiasInstance> pro, anti;
  std::map<std::string, coref::Clustering> pp, ap;
  for (std::size_t i = 1; i <= 1000; ++i) {
    coref::WinoBiasInstance w;
    w.instance_id = std::to_string(i);
    w.tokens = {"The", "developer", "corrected", "the", "secretary", "because", "he", "made", "a", "mistake", "."};
    w.occupation = {0, 1};
    w.pronoun = {6, 6};
    w.task_type = coref::TaskType::SemanticsOnly;
    coref::Clustering wrong;
    wrong.clusters.push_back({{3, 4}, {8, 9}});
    w.condition = coref::Condition::Pro;
    pro.push_back(w);
    pp[w.instance_id] = i <= 791 ? w.gold() : wrong;
    w.condition = coref::Condition::Anti;
    anti.push_back(w);
    ap[w.instance_id] = i <= 495 ? w.gold() : wrong;
  }
  coref::ReportOptions opt;
  opt.seed = 2018;
  const auto r = coref::bias_report(pro, pp, anti, ap, opt);
  const double avg = coref::round1(r.avg_f1), diff = coref::round1(r.abs_diff);
  const std::string d = fmt("pro %.1f anti %.1f avg %.1f |diff| %.1f", coref::round1(r.pro.conll.f1),
                            coref::round1(r.anti.conll.f1), avg, diff) +
                        fmt(", p = %.6f", r.significance.p_value);
  return std::abs(avg - 64.3) <= 0.1 + 1e-9 && std::abs(diff - 29.6) <= 0.1 + 1e-9 && r.significance.p_value < 0.05
             ? pass(d)
             : fail(d);
}

// ---------------------------------------------------------------- audit

int run_cli(std::vector<std::string> args) {
  args.insert(args.begin(), "biascope");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  return cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
}

Outcome audit_check() {
  testing::TempDir dir;
  auto args = [&](const std::string& name) {
    auto f = [](const char* rel) { return testing::fixture(rel).string(); };
    return std::vector<std::string>{"--seed", "7", "audit", "--corpus", f("corpus_200.txt"), "--pairs-a",
                                    f("audit/a.cemb"), "--pairs-b", f("audit/b.cemb"), "--targets",
                                    f("audit/targets.jsonl"), "--probe-dataset", f("audit/probe.jsonl"), "--out",
                                    (dir / name).string()};
  };
  const auto t0 = std::chrono::steady_clock::now();
  const int c1 = run_cli(args("a1.json"));
  const double secs = seconds_since(t0);
  const int c2 = run_cli(args("a2.json"));
  const bool same = c1 == 0 && c2 == 0 && testing::slurp(dir / "a1.json") == testing::slurp(dir / "a2.json");
  std::string statuses;
  if (c1 == 0) {
    const auto j = nlohmann::json::parse(testing::slurp(dir / "a1.json"));
    for (const char* s : {"corpus_stats", "subspace", "probe"})
      statuses += std::string(statuses.empty() ? "" : "/") + j["sections"][s]["status"].get<std::string>();
  }
  const std::string d = fmt("exit %.0f, %.3f s, ", c1, secs) + (same ? "byte-identical rerun" : "rerun DIFFERS") +
                        ", sections " + statuses;
  return same && secs < 10.0 && statuses == "ok/ok/ok" ? pass(d) : fail(d);
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria = {
      {"corpus stats: fixture counts exact, sharded scans identical, < 1 s", corpus_stats_check},
      {"corpus stats: billion-word male/female ratio within 10% of 3.31 (optional)", billion_word_ratio},
      {"swap: involution, length/annotation preservation, augmentation equalizes pronouns", swap_check},
      {"embedding store: 10,000-vector bit-exact round trip, corrupt headers rejected", store_check},
      {"pca: orthonormality, ratio sum, 2-D closed form, equivariance, rank-2 construction", pca_check},
      {"probe: QP oracle, nu-property, separable accuracy, synthetic per-gender gap", probe_check},
      {"neutralize: identities, v+-g cancellation, hand fixture", neutralize_check},
      {"coref metrics: hand cases, CEAFe alignment, randomization test accuracy", coref_check},
      {"eval harness: injected 79.1/49.5 gives avg 64.3, |diff| 29.6, p < .05", eval_harness_check},
      {"audit: fixture bundle < 10 s and byte-deterministic", audit_check},
  };
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome o;
    try {
      o = check();
    } catch (const std::exception& e) {
      o = fail(std::string("exception: ") + e.what());
    }
    const char* tag = o.verdict == Verdict::Pass ? "PASS" : o.verdict == Verdict::Fail ? "FAIL" : "SKIP";
    failures += o.verdict == Verdict::Fail;
    std::printf("%s  %s  [%s]\n", tag, name, o.detail.c_str());
  }
  std::fflush(stdout);
  return failures ? 1 : 0;
}
