#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "biascope/error.hpp"
#include "biascope/coref_eval.hpp"
#include "biascope/hungarian.hpp"
#include "biascope/random.hpp"
#include "oracles/ar_oracle.hpp"
#include "oracles/ceaf_oracle.hpp"
#include "support/support.hpp"

using namespace biascope;
using namespace biascope::coref;

namespace {

Mention m(std::size_t i) { return {i, i}; }

Clustering cl(std::initializer_list<std::initializer_list<std::size_t>> groups) {
  Clustering c;
  for (const auto& g : groups) {
    c.clusters.emplace_back();
    for (auto i : g) c.clusters.back().push_back(m(i));
  }
  return c;
}

// Canonical form: clusters as sorted mention sets, sorted.
std::set<std::set<Mention>> canon(const Clustering& c) {
  std::set<std::set<Mention>> out;
  for (const auto& k : c.clusters) out.insert(std::set<Mention>(k.begin(), k.end()));
  return out;
}

Clustering random_partition(rng::Engine& eng, const std::vector<Mention>& mentions, std::size_t max_clusters) {
  const std::size_t k = 1 + rng::uniform_index(eng, max_clusters);
  std::vector<std::vector<Mention>> groups(k);
  for (const auto& x : mentions) groups[rng::uniform_index(eng, k)].push_back(x);
  Clustering c;
  for (auto& g : groups)
    if (!g.empty()) c.clusters.push_back(std::move(g));
  return c;
}

std::vector<Mention> random_mentions(rng::Engine& eng, std::size_t n) {
  std::vector<Mention> out;
  std::size_t pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    pos += rng::uniform_index(eng, 3);
    const std::size_t len = rng::uniform_index(eng, 3);
    out.push_back({pos, pos + len});
    pos += len + 1;
  }
  return out;
}

Clustering relabel(rng::Engine& eng, const Clustering& c) {
  Clustering out = c;
  for (auto& k : out.clusters) rng::shuffle(std::span<Mention>(k), eng);
  rng::shuffle(std::span<std::vector<Mention>>(out.clusters), eng);
  return out;
}

double phi4(const std::vector<Mention>& k, const std::vector<Mention>& r) {
  std::size_t common = 0;
  for (const auto& a : k)
    for (const auto& b : r) common += a == b;
  return 2.0 * static_cast<double>(common) / static_cast<double>(k.size() + r.size());
}

WinoBiasInstance instance(std::size_t ordinal, Condition c) {
  WinoBiasInstance w;
  w.instance_id = std::to_string(ordinal);
  w.tokens = {"The", "developer", "corrected", "the", "secretary", "because", "he", "made", "a", "mistake", "."};
  w.occupation = {0, 1};
  w.pronoun = {6, 6};
  w.condition = c;
  w.task_type = TaskType::SemanticsOnly;
  return w;
}

// Correct: the gold cluster. Incorrect: a cluster sharing no mention with
// gold, which scores 0 on every metric, so micro F1 equals accuracy.
Clustering prediction(const WinoBiasInstance& w, bool correct) {
  if (correct) return w.gold();
  Clustering c;
  c.clusters.push_back({Mention{3, 4}, Mention{8, 9}});
  return c;
}

struct Harness {
  std::vector<WinoBiasInstance> pro, anti;
  std::map<std::string, Clustering> pro_pred, anti_pred;
};

Harness harness(std::size_t n, std::size_t pro_correct, std::size_t anti_correct) {
  Harness h;
  for (std::size_t i = 1; i <= n; ++i) {
    h.pro.push_back(instance(i, Condition::Pro));
    h.anti.push_back(instance(i, Condition::Anti));
    h.pro_pred[h.pro.back().instance_id] = prediction(h.pro.back(), i <= pro_correct);
    h.anti_pred[h.anti.back().instance_id] = prediction(h.anti.back(), i <= anti_correct);
  }
  return h;
}

}  // namespace

TEST_CASE("hand case: system equals gold") {
  const auto g = cl({{0, 1}, {2}});
  for (auto metric : {Metric::MUC, Metric::B3, Metric::CEAFe, Metric::CoNLL}) {
    const auto s = score(g, g, metric);
    CHECK(s.precision == 100.0);
    CHECK(s.recall == 100.0);
    CHECK(s.f1 == 100.0);
  }
}

TEST_CASE("hand case: gold {a,b},{c} against all singletons") {
  const auto g = cl({{0, 1}, {2}}), s = cl({{0}, {1}, {2}});
  const auto muc = score(g, s, Metric::MUC);
  CHECK(muc.recall == 0.0);
  CHECK(muc.precision == 0.0);
  CHECK(muc.f1 == 0.0);
  const auto b3 = score(g, s, Metric::B3);
  CHECK(round1(b3.precision) == 100.0);
  CHECK(round1(b3.recall) == 66.7);
  CHECK(round1(b3.f1) == 80.0);
  const auto ce = score(g, s, Metric::CEAFe);
  CHECK(round1(ce.precision) == 55.6);
  CHECK(round1(ce.recall) == 83.3);
  CHECK(round1(ce.f1) == 66.7);
  CHECK(round1(score(g, s, Metric::CoNLL).f1) == round1((0.0 + 80.0 + 200.0 / 3.0) / 3.0));
}

TEST_CASE("hand case: gold {a,b,c} against {a,b},{c}") {
  const auto g = cl({{0, 1, 2}}), s = cl({{0, 1}, {2}});
  const auto muc = score(g, s, Metric::MUC);
  CHECK(round1(muc.precision) == 100.0);
  CHECK(round1(muc.recall) == 50.0);
  CHECK(round1(muc.f1) == 66.7);
  const auto b3 = score(g, s, Metric::B3);
  CHECK(round1(b3.precision) == 100.0);
  CHECK(round1(b3.recall) == 55.6);
  CHECK(round1(b3.f1) == 71.4);
  const auto ce = score(g, s, Metric::CEAFe);
  CHECK(round1(ce.precision) == 40.0);
  CHECK(round1(ce.recall) == 80.0);
  CHECK(round1(ce.f1) == 53.3);
}

TEST_CASE("malformed clusterings are rejected") {
  CHECK_THROWS_AS(score(cl({{0, 1}}), cl({{0}, {0}}), Metric::MUC), ValidationError);
  Clustering empty;
  empty.clusters.emplace_back();
  CHECK_THROWS_AS(score(cl({{0}}), empty, Metric::B3), ValidationError);
  Clustering back;
  back.clusters.push_back({Mention{3, 1}});
  CHECK_THROWS_AS(back.validate(), ValidationError);
  CHECK_THROWS_AS(cl({{0, 9}}).validate(5), ValidationError);
  CHECK_NOTHROW(cl({{0, 4}}).validate(5));
}

TEST_CASE("CEAFe alignment equals the brute-force maximum") {
  rng::Engine eng(91);
  for (int t = 0; t < 200; ++t) {
    const auto mentions = random_mentions(eng, 2 + rng::uniform_index(eng, 10));
    const auto g = random_partition(eng, mentions, 6);
    // system mentions: a random subset plus some new ones
    std::vector<Mention> sm;
    for (const auto& x : mentions)
      if (rng::uniform01(eng) < 0.8) sm.push_back(x);
    for (std::size_t e = 0; e < 2; ++e) sm.push_back({1000 + e, 1000 + e});
    const auto s = random_partition(eng, sm, 6);
    if (g.clusters.size() > 6 || s.clusters.size() > 6) continue;
    std::vector<std::vector<double>> w(g.clusters.size(), std::vector<double>(s.clusters.size()));
    Matrix wm(g.clusters.size(), s.clusters.size());
    for (std::size_t i = 0; i < g.clusters.size(); ++i)
      for (std::size_t j = 0; j < s.clusters.size(); ++j) wm(i, j) = w[i][j] = phi4(g.clusters[i], s.clusters[j]);
    const double best = oracle::best_alignment_bruteforce(w);
    const auto c = ceafe_counts(g, s);
    CHECK(std::abs(c.p_num - best) <= 1e-12);
    CHECK(std::abs(c.r_num - best) <= 1e-12);
    CHECK(c.p_den == static_cast<double>(s.clusters.size()));
    CHECK(c.r_den == static_cast<double>(g.clusters.size()));
    CHECK(std::abs(max_weight_assignment(wm).total - best) <= 1e-12);
  }
}

TEST_CASE("assignment on random rectangular matrices") {
  rng::Engine eng(92);
  for (int t = 0; t < 200; ++t) {
    const std::size_t r = 1 + rng::uniform_index(eng, 6), c = 1 + rng::uniform_index(eng, 6);
    std::vector<std::vector<double>> w(r, std::vector<double>(c));
    Matrix wm(r, c);
    for (std::size_t i = 0; i < r; ++i)
      for (std::size_t j = 0; j < c; ++j) wm(i, j) = w[i][j] = rng::uniform01(eng) * 10.0;
    const auto a = max_weight_assignment(wm);
    CHECK(std::abs(a.total - oracle::best_alignment_bruteforce(w)) <= 1e-9);
    std::set<std::size_t> used;
    double sum = 0.0;
    for (std::size_t i = 0; i < r; ++i) {
      if (a.row_to_col[i] < 0) continue;
      const auto j = static_cast<std::size_t>(a.row_to_col[i]);
      CHECK(used.insert(j).second);
      sum += wm(i, j);
    }
    CHECK(std::abs(sum - a.total) <= 1e-9);
  }
}

TEST_CASE("metrics ignore relabeling and listing order") {
  rng::Engine eng(93);
  for (int t = 0; t < 200; ++t) {
    const auto mentions = random_mentions(eng, 1 + rng::uniform_index(eng, 12));
    const auto g = random_partition(eng, mentions, 5), s = random_partition(eng, mentions, 5);
    const auto g2 = relabel(eng, g), s2 = relabel(eng, s);
    for (auto metric : {Metric::MUC, Metric::B3, Metric::CEAFe, Metric::CoNLL}) {
      const auto a = score(g, s, metric), b = score(g2, s2, metric);
      CHECK(std::abs(a.f1 - b.f1) <= 1e-9);
      CHECK(std::abs(a.precision - b.precision) <= 1e-9);
      CHECK(std::abs(a.recall - b.recall) <= 1e-9);
      CHECK(a.f1 >= 0.0);
      CHECK(a.f1 <= 100.0);
    }
  }
}

TEST_CASE("F1 is 100 exactly when the clusterings agree") {
  rng::Engine eng(94);
  int agree = 0, differ = 0;
  for (int t = 0; t < 500; ++t) {
    const auto mentions = random_mentions(eng, 1 + rng::uniform_index(eng, 6));
    const auto g = random_partition(eng, mentions, 3);
    Clustering s = rng::uniform01(eng) < 0.3 ? relabel(eng, g) : random_partition(eng, mentions, 3);
    if (rng::uniform01(eng) < 0.2) s.clusters.push_back({Mention{500, 500}});
    const bool same = canon(g) == canon(s);
    (same ? agree : differ)++;
    for (auto metric : {Metric::B3, Metric::CEAFe})
      CHECK((std::abs(score(g, s, metric).f1 - 100.0) <= 1e-9) == same);
    // MUC only sees links, so an all-singleton gold scores 0/0 = 0 and drags
    // CoNLL down with it. With a link in gold the equivalence holds for both;
    // 100 still implies equality for CoNLL in every case.
    bool has_link = false;
    for (const auto& k : g.clusters) has_link |= k.size() > 1;
    const bool conll100 = std::abs(score(g, s, Metric::CoNLL).f1 - 100.0) <= 1e-9;
    if (conll100) CHECK(same);
    if (has_link) {
      CHECK(conll100 == same);
      if (same) CHECK(std::abs(score(g, s, Metric::MUC).f1 - 100.0) <= 1e-9);
    }
  }
  CHECK(agree > 50);
  CHECK(differ > 50);
}

TEST_CASE("micro aggregation over random splits") {
  rng::Engine eng(95);
  std::vector<std::pair<Clustering, Clustering>> docs;
  for (int i = 0; i < 40; ++i) {
    const auto mentions = random_mentions(eng, 2 + rng::uniform_index(eng, 6));
    docs.emplace_back(random_partition(eng, mentions, 3), random_partition(eng, mentions, 3));
  }
  CountSet total;
  double muc_pn = 0, muc_pd = 0, muc_rn = 0, muc_rd = 0;
  for (const auto& [g, s] : docs) {
    total += count_all(g, s);
    const auto c = muc_counts(g, s);
    muc_pn += c.p_num;
    muc_pd += c.p_den;
    muc_rn += c.r_num;
    muc_rd += c.r_den;
  }
  for (int t = 0; t < 20; ++t) {
    CountSet left, right;
    for (const auto& [g, s] : docs) (rng::uniform01(eng) < 0.5 ? left : right) += count_all(g, s);
    CountSet both = left;
    both += right;
    for (auto metric : {Metric::MUC, Metric::B3, Metric::CEAFe, Metric::CoNLL})
      CHECK(std::abs(scores_for(both, metric).f1 - scores_for(total, metric).f1) <= 1e-9);
  }
  const double p = muc_pn / muc_pd, r = muc_rn / muc_rd;
  CHECK(std::abs(scores_for(total, Metric::MUC).f1 - 100.0 * 2 * p * r / (p + r)) <= 1e-9);
  const auto conll = scores_for(total, Metric::CoNLL);
  const double mean = (scores_for(total, Metric::MUC).f1 + scores_for(total, Metric::B3).f1 +
                       scores_for(total, Metric::CEAFe).f1) /
                      3.0;
  CHECK(std::abs(conll.f1 - mean) <= 1e-9);
}

TEST_CASE("metric and task names") {
  CHECK(parse_metric("conll") == Metric::CoNLL);
  CHECK(parse_metric("muc") == Metric::MUC);
  CHECK(metric_name(Metric::CEAFe) == "ceafe");
  CHECK_THROWS_AS(parse_metric("blanc"), UsageError);
  CHECK(parse_task_type("type1") == TaskType::SemanticsOnly);
  CHECK(parse_task_type("syntactic_cues") == TaskType::SyntacticCues);
}

TEST_CASE("approximate randomization") {
  std::vector<std::pair<double, double>> same(15, {1.0, 1.0});
  const auto r = ar_test(same, 1000, 1);
  CHECK(r.statistic == 0.0);
  CHECK(r.p_value == 1.0);

  rng::Engine eng(96);
  for (int t = 0; t < 60; ++t) {
    const std::size_t n = t < 20 ? 3 : 1 + rng::uniform_index(eng, 10);
    std::vector<std::pair<double, double>> pairs;
    for (std::size_t i = 0; i < n; ++i) {
      if (t % 2)
        pairs.emplace_back(rng::uniform01(eng) < 0.7, rng::uniform01(eng) < 0.4);
      else
        pairs.emplace_back(rng::uniform01(eng), rng::uniform01(eng));
    }
    const auto est = ar_test(pairs, 10000, 1000 + static_cast<std::uint64_t>(t));
    CHECK(std::abs(est.p_value - oracle::exact_randomization_p(pairs)) <= 0.02);
    CHECK(est.p_value == ar_test(pairs, 10000, 1000 + static_cast<std::uint64_t>(t)).p_value);
  }

  std::vector<std::pair<double, double>> ones(20, {1.0, 0.0});
  const auto strong = ar_test(ones, 10000, 7);
  CHECK(strong.statistic == 1.0);
  CHECK(strong.p_value <= 0.001);
  std::vector<std::pair<double, double>> ten(10, {1.0, 0.0});
  CHECK(std::abs(ar_test(ten, 10000, 7).p_value - oracle::exact_randomization_p(ten)) <= 0.02);

  CHECK_THROWS_AS(ar_test({}, 100, 1), ValidationError);
  CHECK_THROWS_AS(ar_test(ones, 0, 1), ValidationError);
  std::vector<std::pair<double, double>> bad = {{1.5, 0.0}};
  CHECK_THROWS_AS(ar_test(bad, 10, 1), ValidationError);
}

TEST_CASE("p-values do not increase with the observed difference") {
  for (std::size_t n : {6u, 10u, 16u}) {
    double prev = 2.0, prev_t = -1.0;
    for (std::size_t k = 0; k <= n; ++k) {
      std::vector<std::pair<double, double>> pairs;
      for (std::size_t i = 0; i < n; ++i) pairs.emplace_back(i < k ? 1.0 : 0.5, 0.5);
      const auto r = ar_test(pairs, 10000, 3);
      CHECK(r.statistic > prev_t);
      CHECK(r.p_value <= prev);
      prev = r.p_value;
      prev_t = r.statistic;
    }
  }
}

TEST_CASE("WinoBias parsing") {
  std::istringstream in("1 [The developer] corrected the secretary because [he] made a mistake .\n");
  const auto v = parse_winobias(in, Condition::Pro, TaskType::SemanticsOnly);
  REQUIRE(v.size() == 1);
  CHECK(v[0].tokens.size() == 11);
  CHECK(v[0].tokens[0] == "The");
  CHECK(v[0].tokens[6] == "he");
  CHECK(v[0].occupation == Mention{0, 1});
  CHECK(v[0].pronoun == Mention{6, 6});
  CHECK(v[0].instance_id == "1");
  CHECK(v[0].gold().clusters.size() == 1);
  CHECK(v[0].gold().clusters[0] == std::vector<Mention>{{0, 1}, {6, 6}});

  std::istringstream punct("The nurse notified [the patient] that [his] shift would be ending in an hour.\n"
                           "\n"
                           "[The mechanic] gave the clerk a present because [she] won the lottery .\n");
  const auto w = parse_winobias(punct, Condition::Anti, TaskType::SyntacticCues);
  REQUIRE(w.size() == 2);
  CHECK(w[0].occupation == Mention{3, 4});
  CHECK(w[0].pronoun == Mention{6, 6});
  CHECK(w[0].tokens.back() == "hour.");
  CHECK(w[1].instance_id == "2");
  CHECK(w[1].condition == Condition::Anti);

  std::istringstream three("[The developer] told [the secretary] that [he] was late .\n");
  try {
    parse_winobias(three, Condition::Pro, TaskType::SemanticsOnly);
    FAIL("expected a parse error");
  } catch (const ParseError& e) {
    CHECK(std::string(e.what()).find("line 1") != std::string::npos);
  }
  for (const char* bad : {"[The developer] corrected the secretary .", "[The developer] met [the secretary] .",
                          "[The [developer]] met [he] .", "[The developer met [he] .", "[] met [he] ."}) {
    std::istringstream b(std::string("[The cook] thanked [she] .\n") + bad + "\n");
    try {
      parse_winobias(b, Condition::Pro, TaskType::SemanticsOnly);
      FAIL("expected a parse error");
    } catch (const ParseError& e) {
      CHECK(std::string(e.what()).find("line 2") != std::string::npos);
    }
  }
  std::istringstream empty("");
  CHECK(parse_winobias(empty, Condition::Pro, TaskType::SemanticsOnly).empty());
}

TEST_CASE("prediction files") {
  std::map<std::string, Clustering> preds = {{"1", cl({{0, 6}})}, {"2", cl({{3}, {6}})}};
  std::ostringstream out;
  write_predictions(out, preds);
  std::istringstream in(out.str());
  const auto back = read_predictions(in);
  REQUIRE(back.size() == 2);
  CHECK(canon(back.at("1")) == canon(preds.at("1")));
  CHECK(canon(back.at("2")) == canon(preds.at("2")));
  std::istringstream junk("{\"instance_id\": \"1\", \"clusters\": [[[0]]]}\n");
  CHECK_THROWS_AS(read_predictions(junk), ParseError);
  std::istringstream dup("{\"instance_id\": \"1\", \"clusters\": []}\n{\"instance_id\": \"1\", \"clusters\": []}\n");
  CHECK_THROWS_AS(read_predictions(dup), ValidationError);
}

TEST_CASE("bias_report examples") {
  ReportOptions opt;
  opt.ar_rounds = 2000;
  {
    const auto h = harness(50, 50, 50);
    const auto r = bias_report(h.pro, h.pro_pred, h.anti, h.anti_pred, opt);
    CHECK(round1(r.avg_f1) == 100.0);
    CHECK(round1(r.abs_diff) == 0.0);
    CHECK(r.significance.p_value == 1.0);
  }
  {
    const auto h = harness(50, 50, 0);
    const auto r = bias_report(h.pro, h.pro_pred, h.anti, h.anti_pred, opt);
    CHECK(round1(r.pro.conll.f1) == 100.0);
    CHECK(round1(r.anti.conll.f1) == 0.0);
    CHECK(round1(r.abs_diff) == 100.0);
    CHECK(r.significance.p_value < 0.05);
    const auto j = to_json(r);
    CHECK(j.at("metric") == "conll");
    CHECK(csv_header() == "condition,subset,pro,anti,avg,abs_diff,p_value");
    CHECK(csv_row(r).rfind("system,semantics_only,100.0,0.0,50.0,100.0,", 0) == 0);
  }
}

TEST_CASE("bias_report pairing errors") {
  auto h = harness(5, 5, 5);
  h.anti.pop_back();
  h.anti.push_back(instance(9, Condition::Anti));
  h.anti_pred["9"] = h.anti.back().gold();
  try {
    bias_report(h.pro, h.pro_pred, h.anti, h.anti_pred);
    FAIL("expected an error");
  } catch (const ValidationError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("pro:5") != std::string::npos);
    CHECK(msg.find("anti:9") != std::string::npos);
  }
  auto g = harness(5, 5, 5);
  g.pro_pred.erase("3");
  CHECK_THROWS_AS(bias_report(g.pro, g.pro_pred, g.anti, g.anti_pred), ValidationError);
}

TEST_CASE("reference pro/anti rows regenerated from injected predictions") {
  ReportOptions opt;
  opt.seed = 2018;
  {
    const auto h = harness(1000, 791, 495);
    const auto r = bias_report(h.pro, h.pro_pred, h.anti, h.anti_pred, opt);
    CHECK(round1(r.pro.conll.f1) == 79.1);
    CHECK(round1(r.anti.conll.f1) == 49.5);
    CHECK(round1(r.avg_f1) == 64.3);
    CHECK(round1(r.abs_diff) == 29.6);
    for (auto metric : {Metric::MUC, Metric::B3, Metric::CEAFe}) CHECK(round1(r.pro.get(metric).f1) == 79.1);
    CHECK(r.significance.p_value < 0.05);
  }
  {
    const auto h = harness(1000, 930, 859);
    const auto r = bias_report(h.pro, h.pro_pred, h.anti, h.anti_pred, opt);
    CHECK(round1(r.pro.conll.f1) == 93.0);
    CHECK(round1(r.anti.conll.f1) == 85.9);
    CHECK(round1(r.abs_diff) == 7.1);
    CHECK(r.significance.p_value < 0.05);
  }
}
