#include <benchmark/benchmark.h>

#include "sparse_bandit/features.hpp"
#include "sparse_bandit/fgts.hpp"
#include "sparse_bandit/harness.hpp"
#include "sparse_bandit/random.hpp"
#include "sparse_bandit/sparse_models.hpp"

using namespace sparse_bandit;

namespace {

History cosine_history(std::size_t records, std::size_t k, std::uint64_t seed) {
  const FeatureModel f = cosine_family({DecayKind::kPolynomial, 2.0});
  const SparseParam truth = CountableParam{{1, 3}, {0.5, -0.5}};
  Rng rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, 0.5);
  History h;
  for (std::size_t l = 0; l < records; ++l) {
    std::vector<double> v(k);
    for (auto& z : v) z = uniform01(rng);
    ContextSlice x(l, k, 1, std::move(v));
    const Action a = l % k;
    const double y = eval_reward(truth, f, x, a) + noise(rng);
    h.push_back({std::move(x), a, y});
  }
  return h;
}

void BM_McmcStep(benchmark::State& state) {
  const auto records = static_cast<std::size_t>(state.range(0));
  FeelGoodTarget target(cosine_family({DecayKind::kPolynomial, 2.0}), CountablePrior{64}, 0.25, 0.05);
  target.sync(cosine_history(records, 4, 1));
  Rng rng = make_rng(2);
  auto s = target.initial_state(rng);
  const FgtsConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(target.step(s, config, rng));
  state.SetComplexityN(state.range(0));
}
BENCHMARK(BM_McmcStep)->RangeMultiplier(4)->Range(64, 16384)->Complexity();

void BM_McmcStepAtomic(benchmark::State& state) {
  const auto records = static_cast<std::size_t>(state.range(0));
  const auto map = gaussian_bump_map(2, 1.0);
  Rng rng = make_rng(3);
  History h;
  for (std::size_t l = 0; l < records; ++l) {
    std::vector<double> v;
    for (int a = 0; a < 4; ++a) {
      const auto z = sample_uniform_l2_ball(2, rng);
      v.insert(v.end(), z.begin(), z.end());
    }
    h.push_back({ContextSlice(l, 4, 2, std::move(v)), l % 4, uniform01(rng)});
  }
  FeelGoodTarget target(map, AtomicPrior{2}, 0.25, 0.05);
  target.sync(h);
  auto s = target.initial_state(rng);
  const FgtsConfig config;
  for (auto _ : state) benchmark::DoNotOptimize(target.step(s, config, rng));
}
BENCHMARK(BM_McmcStepAtomic)->RangeMultiplier(4)->Range(64, 4096);

void BM_EffectiveDimension(benchmark::State& state) {
  const DecayProfile p{DecayKind::kPolynomial, 1.5};
  const auto n = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(effective_dimension(p, n));
}
BENCHMARK(BM_EffectiveDimension)->RangeMultiplier(10)->Range(100, 10'000'000);

void BM_SampleL1Ball(benchmark::State& state) {
  Rng rng = make_rng(4);
  const auto m = static_cast<std::size_t>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(sample_uniform_l1_ball(m, rng));
}
BENCHMARK(BM_SampleL1Ball)->RangeMultiplier(4)->Range(1, 256);

void BM_EvalReward(benchmark::State& state) {
  const FeatureModel f = cosine_family({DecayKind::kPolynomial, 2.0});
  Rng rng = make_rng(5);
  const SparseParam nu = sample_prior(CountablePrior{static_cast<std::size_t>(state.range(0))}, rng);
  const ContextSlice x(0, 4, 1, {0.1, 0.4, 0.6, 0.9});
  for (auto _ : state) benchmark::DoNotOptimize(eval_best(nu, f, x));
}
BENCHMARK(BM_EvalReward)->RangeMultiplier(8)->Range(8, 4096);

}  // namespace
BENCHMARK_MAIN();
