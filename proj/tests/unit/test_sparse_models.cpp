#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "sparse_bandit/error.hpp"
#include "sparse_bandit/sparse_models.hpp"

using namespace sparse_bandit;

namespace {

CountableFeatureFamily zero_family() {
  auto f = cosine_family({DecayKind::kPolynomial, 2.0});
  f.evaluator = [](std::size_t, std::span<const double>) { return 0.0; };
  return f;
}

ContextSlice slice(std::vector<double> items) {
  const std::size_t k = items.size();
  return ContextSlice(0, k, 1, std::move(items));
}

}  // namespace

TEST(EvalReward, ZeroFamilyGivesZero) {
  const SparseParam nu = CountableParam{{1}, {1.0}};
  EXPECT_EQ(eval_reward(nu, zero_family(), slice({0.2, 0.4}), 0), 0.0);
}

TEST(EvalReward, CosineHandEvaluation) {
  const SparseParam nu = CountableParam{{1, 3}, {0.5, -0.5}};
  const FeatureModel f = cosine_family({DecayKind::kPolynomial, 2.0});
  EXPECT_NEAR(eval_reward(nu, f, slice({0.0, 0.5}), 0), 0.5 - 0.5 / 3.0, 1e-15);
}

TEST(EvalReward, Errors) {
  auto family = cosine_family({DecayKind::kPolynomial, 2.0});
  family.max_index = 2;
  const SparseParam nu = CountableParam{{1, 3}, {0.5, -0.5}};
  try {
    eval_reward(nu, family, slice({0.0, 0.5}), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidFeatureIndex);
  }
  try {
    eval_reward(nu, family, slice({0.0, 0.5}), 2);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kInvalidAction);
  }
  const SparseParam atomic = AtomicParam{{0.5}, {{0.1}}};
  try {
    eval_reward(atomic, family, slice({0.0, 0.5}), 0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUnsupportedModel);
  }
}

TEST(EvalReward, AtomicSum) {
  const auto map = relu_map(2);
  const SparseParam nu = AtomicParam{{0.5, -0.25}, {{1.0, 0.0}, {0.0, 1.0}}};
  const ContextSlice x(0, 2, 2, {0.6, 0.8, -0.6, 0.8});
  EXPECT_DOUBLE_EQ(eval_reward(nu, map, x, 0), 0.5 * 0.6 - 0.25 * 0.8);
  EXPECT_DOUBLE_EQ(eval_reward(nu, map, x, 1), -0.25 * 0.8);
}

TEST(EvalBest, TiesGoToLowestAction) {
  const SparseParam nu = CountableParam{{1}, {1.0}};
  const auto b = eval_best(nu, zero_family(), slice({0.1, 0.2, 0.3}));
  EXPECT_EQ(b.action, 0u);
  EXPECT_EQ(b.value, 0.0);
}

TEST(EvalBest, TwoActions) {
  auto family = cosine_family({DecayKind::kPolynomial, 2.0});
  family.evaluator = [](std::size_t, std::span<const double> z) { return z[0]; };
  const SparseParam nu = CountableParam{{1}, {1.0}};
  const auto b = eval_best(nu, family, slice({0.1, 0.3}));
  EXPECT_EQ(b.action, 1u);
  EXPECT_DOUBLE_EQ(b.value, 0.3);
}

TEST(EvalBest, ArgmaxInvariantUnderPositiveRescaling) {
  const FeatureModel f = cosine_family({DecayKind::kPolynomial, 2.0});
  Rng rng = make_rng(3);
  for (int k = 0; k < 200; ++k) {
    auto nu = sample_prior_countable(6, rng);
    const auto x = slice({uniform01(rng), uniform01(rng), uniform01(rng), uniform01(rng)});
    const auto base = eval_best(nu, f, x);
    auto scaled = nu;
    for (auto& w : scaled.weights) w *= 0.37;
    const auto b = eval_best(scaled, f, x);
    EXPECT_EQ(b.action, base.action);
  }
}

TEST(CountablePrior, SingleIndex) {
  Rng rng = make_rng(4);
  double sum = 0.0, sq = 0.0;
  const int n = 200000;
  for (int k = 0; k < n; ++k) {
    const auto nu = sample_prior_countable(1, rng);
    ASSERT_EQ(nu.support, std::vector<std::size_t>{1});
    ASSERT_LE(std::abs(nu.weights[0]), 1.0);
    sum += nu.weights[0];
    sq += nu.weights[0] * nu.weights[0];
  }
  EXPECT_NEAR(sum / n, 0.0, 0.01);
  EXPECT_NEAR(sq / n, 1.0 / 3.0, 0.01);
}

TEST(CountablePrior, SizeFrequencies) {
  Rng rng = make_rng(5);
  const int n = 1000000;
  int singles = 0;
  double l1_given_two = 0.0;
  int twos = 0;
  for (int k = 0; k < n; ++k) {
    const auto nu = sample_prior_countable(2, rng);
    if (nu.size() == 1) {
      ++singles;
    } else {
      ++twos;
      l1_given_two += l1_norm(nu.weights);
    }
  }
  // Standard error of the frequency is about 4.7e-4.
  EXPECT_NEAR(static_cast<double>(singles) / n, 2.0 / 3.0, 0.002);
  EXPECT_NEAR(l1_given_two / twos, 2.0 / 3.0, 0.002);
}

TEST(AtomicPrior, SingleAtomCap) {
  Rng rng = make_rng(6);
  for (int k = 0; k < 1000; ++k) EXPECT_EQ(sample_prior_atomic(3, 1, rng).size(), 1u);
}

TEST(AtomicPrior, RadiusAndCountLaw) {
  Rng rng = make_rng(7);
  const int n = 400000;
  double radius = 0.0;
  std::size_t atoms = 0;
  int twos = 0;
  for (int k = 0; k < n; ++k) {
    const auto nu = sample_prior_atomic(2, 3, rng);
    if (nu.size() == 2) ++twos;
    for (const auto& theta : nu.atoms) {
      radius += l2_norm(theta);
      ++atoms;
    }
  }
  EXPECT_NEAR(radius / static_cast<double>(atoms), 2.0 / 3.0, 0.002);
  EXPECT_NEAR(static_cast<double>(twos) / n, 2.0 / 7.0, 0.003);
}

TEST(LogPrior, CountableSingleIndex) {
  EXPECT_NEAR(log_prior(CountableParam{{1}, {0.3}}, 1), std::log(0.5), 1e-14);
}

TEST(LogPrior, CountableFullSupport) {
  EXPECT_NEAR(log_prior(CountableParam{{1, 2}, {0.3, -0.2}}, 2), std::log(1.0 / 3.0) + std::log(0.5),
              1e-14);
}

TEST(LogPrior, OutOfSupportIsNegativeInfinity) {
  const double ninf = -std::numeric_limits<double>::infinity();
  EXPECT_EQ(log_prior(AtomicParam{{0.7, 0.5}, {{0.0}, {0.1}}}, 1, 4), ninf);
  EXPECT_EQ(log_prior(AtomicParam{{0.5}, {{0.9, 0.9}}}, 2, 4), ninf);
  EXPECT_EQ(log_prior(CountableParam{{3}, {0.5}}, 2), ninf);
  EXPECT_EQ(log_prior(CountableParam{{2, 1}, {0.1, 0.1}}, 2), ninf);
  EXPECT_EQ(log_prior(CountableParam{{1}, {1.5}}, 2), ninf);
}

TEST(LogPrior, AtomicConstant) {
  // m = 1 of cap 1, d = 2: 1 * (1/2) * (1/pi).
  EXPECT_NEAR(log_prior(AtomicParam{{0.2}, {{0.1, 0.1}}}, 2, 1),
              std::log(0.5) - std::log(std::numbers::pi), 1e-14);
}

TEST(LogPrior, IntegratesToOneOnGrid) {
  // Midpoint quadrature over each subset's weight cube [-1,1]^m.
  for (std::size_t d_eff : {1u, 2u}) {
    const int g = 400;
    const double h = 2.0 / g;
    double total = 0.0;
    for (std::uint32_t mask = 1; mask < (1u << d_eff); ++mask) {
      std::vector<std::size_t> support;
      for (std::size_t j = 1; j <= d_eff; ++j) {
        if (mask & (1u << (j - 1))) support.push_back(j);
      }
      if (support.size() == 1) {
        for (int i = 0; i < g; ++i) {
          const double w = -1.0 + (i + 0.5) * h;
          const double lp = log_prior(CountableParam{support, {w}}, d_eff);
          if (std::isfinite(lp)) total += std::exp(lp) * h;
        }
      } else {
        for (int i = 0; i < g; ++i) {
          for (int j = 0; j < g; ++j) {
            const double a = -1.0 + (i + 0.5) * h, b = -1.0 + (j + 0.5) * h;
            const double lp = log_prior(CountableParam{support, {a, b}}, d_eff);
            if (std::isfinite(lp)) total += std::exp(lp) * h * h;
          }
        }
      }
    }
    EXPECT_NEAR(total, 1.0, 0.01) << "d_eff " << d_eff;
  }
}

TEST(PriorDraws, SatisfyInvariantsAndBoundRewards) {
  Rng rng = make_rng(8);
  const FeatureModel cosine = cosine_family({DecayKind::kPolynomial, 2.0});
  const FeatureModel relu = relu_map(3);
  for (int k = 0; k < 20000; ++k) {
    const SparseParam c = sample_prior_countable(10, rng);
    const SparseParam a = sample_prior_atomic(3, 32, rng);
    ASSERT_TRUE(std::isfinite(log_prior(std::get<CountableParam>(c), 10)));
    ASSERT_TRUE(std::isfinite(log_prior(std::get<AtomicParam>(a), 3, 32)));
    const ContextSlice xc(0, 2, 1, {uniform01(rng), uniform01(rng)});
    auto z1 = sample_uniform_l2_ball(3, rng), z2 = sample_uniform_l2_ball(3, rng);
    z1.insert(z1.end(), z2.begin(), z2.end());
    const ContextSlice xa(0, 2, 3, z1);
    for (Action act = 0; act < 2; ++act) {
      ASSERT_LE(std::abs(eval_reward(c, cosine, xc, act)), 1.0);
      ASSERT_LE(std::abs(eval_reward(a, relu, xa, act)), 1.0);
    }
  }
}

TEST(LogHelpers, SizeMassAndBinomial) {
  EXPECT_NEAR(std::exp(log_size_mass(2, 3)), 2.0 / 7.0, 1e-15);
  EXPECT_EQ(log_size_mass(4, 3), -std::numeric_limits<double>::infinity());
  EXPECT_NEAR(std::exp(log_binomial(5, 2)), 10.0, 1e-12);
}

TEST(Record, RoundTrip) {
  const SparseParam c = CountableParam{{1, 3, 7}, {0.1, -0.25, 1.0 / 3.0}};
  EXPECT_EQ(parse_record(to_record(c)), c);
  EXPECT_EQ(to_record(CountableParam{{1, 3}, {0.5, -0.5}}), "countable support=1,3 weights=0.5,-0.5");
  const SparseParam a = AtomicParam{{0.5, 0.25}, {{0.1, 0.2}, {-0.3, 0.4}}};
  EXPECT_EQ(parse_record(to_record(a)), a);
  EXPECT_THROW(parse_record("dense w=1"), Error);
  EXPECT_THROW(parse_record("countable weights=1"), Error);
}

TEST(SparseInstance, TabulatesTruth) {
  const FeatureModel f = cosine_family({DecayKind::kPolynomial, 2.0});
  const SparseParam truth = CountableParam{{1}, {0.5}};
  std::vector<ContextSlice> schedule{slice({0.0, 1.0}), slice({0.5, 0.0})};
  const auto env = make_sparse_instance(schedule, truth, f, NoiseSpec{0.5}, "toy");
  EXPECT_DOUBLE_EQ(env.mean_reward(0, 0), 0.5);
  EXPECT_DOUBLE_EQ(env.mean_reward(0, 1), -0.5);
  EXPECT_NEAR(env.mean_reward(1, 0), 0.0, 1e-16);
}
