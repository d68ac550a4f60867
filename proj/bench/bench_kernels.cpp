// Serial reference vs OpenMP for the data-parallel kernels.
// The Threads argument is the OpenMP team size; 0 rows use the serial path.

#include <benchmark/benchmark.h>

#include <sstream>

#include "biascope/coref_eval.hpp"
#include "biascope/corpus_stats.hpp"
#include "biascope/kernels.hpp"
#include "biascope/random.hpp"

using namespace biascope;

namespace {

Matrix random_matrix(std::size_t r, std::size_t c, std::uint64_t seed) {
  rng::Engine eng(seed);
  Matrix m(r, c);
  for (auto& v : m.data()) v = rng::normal(eng);
  return m;
}

std::vector<double> column_mean(const Matrix& x) {
  std::vector<double> mean(x.cols(), 0.0);
  for (std::size_t r = 0; r < x.rows(); ++r)
    for (std::size_t j = 0; j < x.cols(); ++j) mean[j] += x(r, j);
  for (auto& v : mean) v /= static_cast<double>(x.rows());
  return mean;
}

const GenderLexicon& lexicon() {
  static const GenderLexicon l = load_lexicon(default_lexicon_path());
  return l;
}

std::vector<text::Tokens> synthetic_corpus(std::size_t n) {
  static const std::vector<std::string> words = {"he",     "she",   "the",  "nurse", "developer", "told",
                                                 "her",    "him",   "and",  "a",     "doctor",    "secretary",
                                                 "walked", "home",  "with", "his",   "clerk",     "."};
  rng::Engine eng(5);
  std::vector<text::Tokens> out(n);
  for (auto& s : out) {
    const std::size_t len = 5 + rng::uniform_index(eng, 20);
    for (std::size_t i = 0; i < len; ++i) s.push_back(words[rng::uniform_index(eng, words.size())]);
  }
  return out;
}

void BM_Covariance(benchmark::State& st) {
  const auto x = random_matrix(2000, static_cast<std::size_t>(st.range(0)), 1);
  const auto mean = column_mean(x);
  const int threads = static_cast<int>(st.range(1));
  for (auto _ : st) {
    Matrix c = threads == 0 ? kernels::serial::covariance(x, mean, 1999.0)
                            : kernels::omp::covariance(x, mean, 1999.0, threads);
    benchmark::DoNotOptimize(c.data().data());
  }
}
BENCHMARK(BM_Covariance)->ArgsProduct({{64, 256}, {0, 1, 2, 4}})->Unit(benchmark::kMillisecond);

void BM_RbfGram(benchmark::State& st) {
  const auto x = random_matrix(static_cast<std::size_t>(st.range(0)), 64, 2);
  const int threads = static_cast<int>(st.range(1));
  for (auto _ : st) {
    Matrix k = threads == 0 ? kernels::serial::rbf_gram(x, 0.01) : kernels::omp::rbf_gram(x, 0.01, threads);
    benchmark::DoNotOptimize(k.data().data());
  }
}
BENCHMARK(BM_RbfGram)->ArgsProduct({{500, 1500}, {0, 1, 2, 4}})->Unit(benchmark::kMillisecond);

void BM_Scan(benchmark::State& st) {
  const auto corpus = synthetic_corpus(50000);
  const int threads = static_cast<int>(st.range(0));
  for (auto _ : st) {
    auto s = threads == 0 ? scan(corpus, lexicon()) : scan_sharded(corpus, lexicon(), 64, threads);
    benchmark::DoNotOptimize(s.male_total);
  }
  st.SetItemsProcessed(static_cast<std::int64_t>(st.iterations()) * 50000);
}
BENCHMARK(BM_Scan)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

void BM_ArTest(benchmark::State& st) {
  rng::Engine eng(9);
  std::vector<std::pair<double, double>> pairs(1000);
  for (auto& p : pairs) p = {rng::uniform01(eng) < 0.8 ? 1.0 : 0.0, rng::uniform01(eng) < 0.5 ? 1.0 : 0.0};
  const int threads = static_cast<int>(st.range(0));
  for (auto _ : st) {
    auto r = threads == 0 ? coref::ar_test(pairs, 10000, 1) : coref::ar_test_parallel(pairs, 10000, 1, threads);
    benchmark::DoNotOptimize(r.p_value);
  }
}
BENCHMARK(BM_ArTest)->Arg(0)->Arg(1)->Arg(2)->Arg(4)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
