#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "sparse_bandit/baselines.hpp"
#include "sparse_bandit/error.hpp"
#include "sparse_bandit/fgts.hpp"
#include "sparse_bandit/hard_instances.hpp"
#include "sparse_bandit/harness.hpp"
#include "sparse_bandit/oracles.hpp"

using namespace sparse_bandit;

namespace {

CountableFeatureFamily cosine2() { return cosine_family({DecayKind::kPolynomial, 2.0}); }

History random_history(const FeatureModel& features, const SparseParam& truth, std::size_t records,
                       std::size_t k, std::size_t dim, double sd, std::uint64_t seed) {
  Rng rng = make_rng(seed);
  std::normal_distribution<double> noise(0.0, sd);
  History h;
  for (std::size_t l = 0; l < records; ++l) {
    std::vector<double> values;
    for (std::size_t a = 0; a < k; ++a) {
      if (dim == 1) {
        values.push_back(uniform01(rng));
      } else {
        const auto z = sample_uniform_l2_ball(dim, rng);
        values.insert(values.end(), z.begin(), z.end());
      }
    }
    ContextSlice x(l, k, dim, values);
    const Action a = std::uniform_int_distribution<Action>(0, k - 1)(rng);
    const double y = eval_reward(truth, features, x, a) + (sd > 0 ? noise(rng) : 0.0);
    h.push_back({std::move(x), a, y});
  }
  return h;
}

void expect_caches_fresh(const FeelGoodTarget& target, const PosteriorState& state) {
  const auto fresh = target.make_state(state.param);
  ASSERT_EQ(fresh.chosen_values.size(), state.chosen_values.size());
  for (std::size_t l = 0; l < fresh.chosen_values.size(); ++l) {
    EXPECT_NEAR(fresh.chosen_values[l], state.chosen_values[l], 1e-9);
    EXPECT_NEAR(fresh.best_values[l], state.best_values[l], 1e-9);
  }
  EXPECT_NEAR(fresh.loss_sum, state.loss_sum, 1e-9);
  EXPECT_NEAR(fresh.log_prior, state.log_prior, 1e-9);
}

double spearman(const std::vector<double>& x, const std::vector<double>& y) {
  auto ranks = [](const std::vector<double>& v) {
    std::vector<std::size_t> idx(v.size());
    std::iota(idx.begin(), idx.end(), 0);
    std::sort(idx.begin(), idx.end(), [&](auto a, auto b) { return v[a] < v[b]; });
    std::vector<double> r(v.size());
    for (std::size_t i = 0; i < idx.size();) {
      std::size_t j = i;
      while (j + 1 < idx.size() && v[idx[j + 1]] == v[idx[i]]) ++j;
      for (std::size_t k = i; k <= j; ++k) r[idx[k]] = 0.5 * static_cast<double>(i + j);
      i = j + 1;
    }
    return r;
  };
  const auto rx = ranks(x), ry = ranks(y);
  const double mx = std::accumulate(rx.begin(), rx.end(), 0.0) / rx.size();
  const double my = std::accumulate(ry.begin(), ry.end(), 0.0) / ry.size();
  double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < rx.size(); ++i) {
    sxy += (rx[i] - mx) * (ry[i] - my);
    sxx += (rx[i] - mx) * (rx[i] - mx);
    syy += (ry[i] - my) * (ry[i] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace

TEST(Loss, WorkedExample) {
  EXPECT_NEAR(loss_from_values(0.5, 0.8, 0.0, 0.25, 0.1), -0.0175, 1e-15);
}

TEST(Loss, ExactFitWithoutFeelGood) {
  EXPECT_EQ(loss_from_values(0.3, 0.9, 0.3, 0.25, 0.0), 0.0);
  EXPECT_DOUBLE_EQ(loss_from_values(0.3, 0.9, 0.1, 0.25, 0.0), 0.25 * 0.04);
}

TEST(Loss, ThroughModel) {
  const FeatureModel f = cosine2();
  const SparseParam nu = CountableParam{{1}, {0.5}};
  const ContextSlice x(0, 2, 1, {0.0, 1.0});
  EXPECT_DOUBLE_EQ(loss(nu, x, 1, 0.0, 0.25, 0.1, f), 0.25 * 0.25 - 0.1 * 0.5);
}

TEST(LogPosterior, EmptyHistoryIsPrior) {
  const FeatureModel f = cosine2();
  const SparseParam nu = CountableParam{{2}, {0.4}};
  EXPECT_DOUBLE_EQ(log_posterior_unnorm(nu, {}, 0.25, 0.3, f, CountablePrior{3}),
                   log_prior(nu, CountablePrior{3}));
}

TEST(LogPosterior, OneRecord) {
  const FeatureModel f = cosine2();
  const SparseParam nu = CountableParam{{1}, {0.4}};
  const History h{{ContextSlice(0, 2, 1, {0.0, 0.5}), 0, 0.1}};
  EXPECT_NEAR(log_posterior_unnorm(nu, h, 0.25, 0.0, f, CountablePrior{3}),
              log_prior(nu, CountablePrior{3}) - 0.25 * 0.09, 1e-15);
  const SparseParam out = CountableParam{{4}, {0.4}};
  EXPECT_EQ(log_posterior_unnorm(out, h, 0.25, 0.0, f, CountablePrior{3}),
            -std::numeric_limits<double>::infinity());
}

TEST(LogPosterior, MatchesEnumerationRatios) {
  const auto family = toy_family();
  const auto history = toy_history(5, 3);
  const auto grid = GridSpec::uniform(2, 21);
  const auto dist = enumerate_posterior(grid, history, 0.25, 0.2, family);
  // Interior cells of equal support size carry prior mass proportional to the density.
  std::vector<std::size_t> interior;
  for (std::size_t i = 0; i < dist.atoms.size(); ++i) {
    const auto& p = dist.atoms[i].param;
    if (p.size() == 2 && l1_norm(p.weights) <= 0.85 &&
        std::none_of(p.weights.begin(), p.weights.end(), [](double w) { return w == 0.0; })) {
      interior.push_back(i);
    }
  }
  ASSERT_GT(interior.size(), 10u);
  const auto ref = interior.front();
  const double lp_ref = log_posterior_unnorm(dist.atoms[ref].param, history, 0.25, 0.2, family,
                                             CountablePrior{2});
  for (auto i : interior) {
    const double lp = log_posterior_unnorm(dist.atoms[i].param, history, 0.25, 0.2, family,
                                           CountablePrior{2});
    EXPECT_NEAR(std::log(dist.mass[i] / dist.mass[ref]), lp - lp_ref, 1e-12);
  }
}

TEST(FgtsConfig, Validation) {
  FgtsConfig c;
  EXPECT_NO_THROW(c.validate());
  c.eta = 0.3;
  EXPECT_THROW(c.validate(), Error);
  c.eta = 0.25;
  c.lambda = -0.1;
  EXPECT_THROW(c.validate(), Error);
  c.lambda = 0.1;
  c.mix = {0, 0, 0, 0, 1, 1, 1, 1};
  EXPECT_THROW(c.validate(), Error);
}

TEST(LambdaDefaults, Formulas) {
  EXPECT_DOUBLE_EQ(lambda_countable(2, 64, 4, 4096), std::sqrt(2.0 * std::log(64.0 * 4096) / (4.0 * 4096)));
  EXPECT_DOUBLE_EQ(lambda_atomic(2, 3, 4, 1000), std::sqrt(6.0 * std::log(1000.0) / 4000.0));
}

TEST(Target, RejectsMismatchedPrior) {
  EXPECT_THROW(FeelGoodTarget(cosine2(), AtomicPrior{2}, 0.25, 0.1), Error);
  auto family = cosine2();
  family.max_index = 3;
  EXPECT_THROW(FeelGoodTarget(family, CountablePrior{4}, 0.25, 0.1), Error);
}

TEST(Mcmc, FlatPosteriorVisitsSubsetsAtPriorRates) {
  FeelGoodTarget target(cosine2(), CountablePrior{2}, 0.25, 0.0);
  Rng rng = make_rng(1);
  auto state = target.initial_state(rng);
  FgtsConfig config;
  std::map<std::vector<std::size_t>, double> visits;
  const int steps = 1000000;
  for (int k = 0; k < steps; ++k) {
    target.step(state, config, rng);
    visits[std::get<CountableParam>(state.param).support] += 1.0;
  }
  // Subset prior on [2]: 2^{-m} / (binom(2,m) * 3/4) is 1/3 for each of the three subsets.
  for (const auto& [support, count] : visits) {
    EXPECT_NEAR(count / steps, 1.0 / 3.0, 0.01);
  }
  EXPECT_EQ(visits.size(), 3u);
}

TEST(Mcmc, FlatPosteriorAtomCounts) {
  FeelGoodTarget target(relu_map(2), AtomicPrior{2, 3}, 0.25, 0.0);
  Rng rng = make_rng(2);
  auto state = target.initial_state(rng);
  FgtsConfig config;
  std::vector<double> visits(4, 0.0);
  const int steps = 1000000;
  for (int k = 0; k < steps; ++k) {
    target.step(state, config, rng);
    visits[param_size(state.param)] += 1.0;
  }
  EXPECT_NEAR(visits[1] / steps, 4.0 / 7.0, 0.01);
  EXPECT_NEAR(visits[2] / steps, 2.0 / 7.0, 0.01);
  EXPECT_NEAR(visits[3] / steps, 1.0 / 7.0, 0.01);
}

TEST(Mcmc, ZeroStepPerturbLeavesStateUnchanged) {
  const auto history = toy_history(5, 4);
  FeelGoodTarget target(toy_family(), CountablePrior{3}, 0.25, 0.2);
  target.sync(history);
  Rng rng = make_rng(3);
  auto state = target.initial_state(rng);
  const auto before = state.param;
  FgtsConfig config;
  config.mix = {0, 0, 0, 1, 0, 0, 0, 1};
  config.weight_step = 0.0;
  for (int k = 0; k < 1000; ++k) target.step(state, config, rng);
  EXPECT_EQ(state.param, before);
}

TEST(Mcmc, MatchesEnumeratedPosterior) {
  const auto r = posterior_check({});
  EXPECT_LE(r.tv, 0.05);
  EXPECT_EQ(r.overflow, 0.0);
}

TEST(Mcmc, DetailedBalanceAcrossSubsets) {
  const auto history = toy_history(8, 5);
  FeelGoodTarget target(toy_family(), CountablePrior{3}, 0.25, 0.2);
  target.sync(history);
  Rng rng = make_rng(6);
  auto state = target.initial_state(rng);
  FgtsConfig config;
  for (int k = 0; k < 10000; ++k) target.step(state, config, rng);
  auto mask = [](const PosteriorState& s) {
    int m = 0;
    for (auto j : std::get<CountableParam>(s.param).support) m |= 1 << (j - 1);
    return m;
  };
  std::map<std::pair<int, int>, double> flux;
  int prev = mask(state);
  for (int k = 0; k < 600000; ++k) {
    target.step(state, config, rng);
    const int cur = mask(state);
    if (cur != prev) flux[{prev, cur}] += 1.0;
    prev = cur;
  }
  double chi2 = 0.0;
  int pairs = 0;
  for (int a = 1; a < 8; ++a) {
    for (int b = a + 1; b < 8; ++b) {
      const double ab = flux[{a, b}], ba = flux[{b, a}];
      if (ab + ba == 0.0) continue;
      chi2 += (ab - ba) * (ab - ba) / (ab + ba);
      ++pairs;
    }
  }
  ASSERT_GT(pairs, 5);
  // 0.99 quantile of chi-square with 21 degrees of freedom.
  EXPECT_LT(chi2, 38.93) << "pairs " << pairs;
}

TEST(Mcmc, CachesMatchRecomputationCountable) {
  const FeatureModel f = cosine2();
  const SparseParam truth = CountableParam{{1, 3}, {0.5, -0.4}};
  const auto history = random_history(f, truth, 60, 3, 1, 0.5, 9);
  FeelGoodTarget target(f, CountablePrior{8}, 0.25, 0.15);
  History partial(history.begin(), history.begin() + 20);
  target.sync(partial);
  Rng rng = make_rng(10);
  auto state = target.initial_state(rng);
  FgtsConfig config;
  int checked = 0;
  for (int k = 0; k < 3000; ++k) {
    if (k == 1000) target.sync(history);
    const auto out = target.step(state, config, rng);
    if (out.accepted && k % 7 == 0) {
      expect_caches_fresh(target, state);
      ++checked;
    }
  }
  EXPECT_GT(checked, 20);
}

TEST(Mcmc, CachesMatchRecomputationAtomic) {
  const FeatureModel f = gaussian_bump_map(2, 1.0);
  const SparseParam truth = AtomicParam{{0.6, -0.3}, {{0.5, 0.0}, {-0.4, 0.2}}};
  const auto history = random_history(f, truth, 40, 3, 2, 0.5, 11);
  FeelGoodTarget target(f, AtomicPrior{2, 8}, 0.25, 0.1);
  History partial(history.begin(), history.begin() + 10);
  target.sync(partial);
  Rng rng = make_rng(12);
  auto state = target.initial_state(rng);
  FgtsConfig config;
  std::map<MoveKind, int> accepted;
  for (int k = 0; k < 3000; ++k) {
    if (k == 1500) target.sync(history);
    const auto out = target.step(state, config, rng);
    if (out.accepted) {
      ++accepted[out.kind];
      if (k % 5 == 0) expect_caches_fresh(target, state);
    }
  }
  EXPECT_GT(accepted[MoveKind::kBirth], 0);
  EXPECT_GT(accepted[MoveKind::kDeath], 0);
  EXPECT_GT(accepted[MoveKind::kWalk], 0);
  EXPECT_GT(accepted[MoveKind::kPerturb], 0);
}

TEST(Mcmc, StatesStayInPriorSupport) {
  const FeatureModel f = cosine2();
  const auto history = random_history(f, CountableParam{{2}, {0.9}}, 30, 2, 1, 0.5, 13);
  FeelGoodTarget target(f, CountablePrior{5}, 0.25, 0.2);
  target.sync(history);
  Rng rng = make_rng(14);
  auto state = target.initial_state(rng);
  for (int k = 0; k < 20000; ++k) {
    target.step(state, {}, rng);
    ASSERT_TRUE(std::isfinite(state.log_prior));
  }
}

TEST(PolicyStep, ZeroSweepsUsesFreshPriorDraw) {
  const FeatureModel f = cosine2();
  FeelGoodTarget target(f, CountablePrior{4}, 0.25, 0.1);
  std::optional<PosteriorState> state;
  FgtsConfig config;
  config.sweeps = 0;
  const ContextSlice x(0, 3, 1, {0.1, 0.5, 0.9});
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng a = make_rng(seed), b = make_rng(seed);
    state.reset();
    const Action act = fgts_policy_step(target, state, x, config, {}, a);
    const auto nu = sample_prior(CountablePrior{4}, b);
    EXPECT_EQ(act, eval_best(nu, f, x).action);
  }
}

TEST(PolicyStep, LearnsSeparatingFeature) {
  // phi_1(z) = cos(pi z) with z uniform on [0,1]; the truth uses phi_1 alone.
  const auto family = cosine2();
  const SparseParam truth = CountableParam{{1}, {0.8}};
  int correct = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    Rng rng = make_rng(seed, 50);
    std::vector<ContextSlice> schedule;
    for (std::size_t t = 0; t <= 200; ++t) schedule.emplace_back(t, 2, 1, std::vector<double>{uniform01(rng), uniform01(rng)});
    const auto env = make_sparse_instance(schedule, truth, family, NoiseSpec{0.0}, "separating");
    FgtsConfig config;
    config.lambda = lambda_countable(1, 4, 2, 200);
    FgtsPolicy policy(family, CountablePrior{4}, config);
    const auto trace = run_episode(env, policy, 201, seed);
    if (env.mean_reward(200, trace.actions[200]) == std::max(env.mean_reward(200, 0), env.mean_reward(200, 1))) {
      ++correct;
    }
  }
  EXPECT_GE(correct, 95);
}

TEST(PolicyStep, UninformativeBlockGivesSymmetricActions) {
  // History covers block 1 only; the posterior is exchangeable over the K
  // features of block 2. Ties (no block-2 feature drawn) resolve to action 0,
  // so the symmetry check conditions on a unique maximiser.
  const std::size_t k = 4;
  const auto h = build_countable_poly(2, k, 2.0, 1024, {2, 3});
  History history;
  for (std::size_t t = 0; t < 30; ++t) history.push_back({h.env.context(t), t % k, t % k == 1 ? h.delta / 2 : 0.0});
  const auto z2 = h.context_of(2);
  std::vector<double> counts(k, 0.0);
  for (std::uint64_t seed = 0; seed < 3000; ++seed) {
    FeelGoodTarget target(h.features, CountablePrior{8}, 0.25, 0.05);
    target.sync(history);
    Rng rng = make_rng(seed, 60);
    auto state = target.initial_state(rng);
    for (int s = 0; s < 30; ++s) target.step(state, {}, rng);
    std::vector<double> v(k);
    for (Action a = 0; a < k; ++a) v[a] = eval_reward(state.param, h.features, z2, a);
    const double top = *std::max_element(v.begin(), v.end());
    if (std::count(v.begin(), v.end(), top) == 1) counts[argmax_lowest(v)] += 1.0;
  }
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  ASSERT_GT(total, 300.0);
  double chi2 = 0.0;
  for (double c : counts) chi2 += (c - total / k) * (c - total / k) / (total / k);
  EXPECT_LT(chi2, 11.34);  // chi-square(3) at 0.01
}

TEST(PolicyStep, PosteriorConcentratesOnTrueSupport) {
  const auto family = cosine2();
  const SparseParam truth = CountableParam{{1, 3}, {0.5, -0.5}};
  const std::vector<std::size_t> checkpoints{10, 40, 100, 200, 400};
  std::vector<double> mean_prob(checkpoints.size(), 0.0);
  const int seeds = 20;
  for (int seed = 0; seed < seeds; ++seed) {
    const FeatureModel f = family;
    const auto history = random_history(f, truth, checkpoints.back(), 4, 1, 0.0, 100 + seed);
    FeelGoodTarget target(family, CountablePrior{6}, 0.25, 0.05);
    Rng rng = make_rng(seed, 70);
    std::optional<PosteriorState> state;
    for (std::size_t c = 0; c < checkpoints.size(); ++c) {
      target.sync(History(history.begin(), history.begin() + static_cast<long>(checkpoints[c])));
      if (!state) {
        state = target.initial_state(rng);
      } else {
        target.extend(*state);
      }
      for (int s = 0; s < 3000; ++s) target.step(*state, {}, rng);
      int hits = 0;
      for (int s = 0; s < 2000; ++s) {
        target.step(*state, {}, rng);
        if (std::get<CountableParam>(state->param).support == std::vector<std::size_t>{1, 3}) ++hits;
      }
      mean_prob[c] += hits / 2000.0 / seeds;
    }
  }
  std::vector<double> ts(checkpoints.begin(), checkpoints.end());
  EXPECT_GT(spearman(ts, mean_prob), 0.0);
  EXPECT_GT(mean_prob.back(), mean_prob.front());
}

TEST(Policy, LambdaZeroIsVanillaThompsonSampling) {
  ExperimentConfig config;
  config.n = 60;
  config.environment.type = "cosine";
  const auto env = make_environment(config.environment, config.n, 3);
  const auto prior = default_prior(config.policy, env, config.n);
  FgtsConfig fc;
  fc.sweeps = 10;
  fc.lambda = 0.0;
  FgtsPolicy fg(env.features, prior, fc);
  BaselineConfig bc;
  bc.kind = BaselineKind::kVanillaTs;
  auto vt = make_baseline(bc, env.features, prior, fc);
  EXPECT_EQ(vt->name(), "vanilla_ts");
  EXPECT_EQ(run_episode(env.env, fg, 60, 4).actions, run_episode(env.env, *vt, 60, 4).actions);
}

TEST(Policy, DiagnosticsReported) {
  const FeatureModel f = cosine2();
  const SparseParam truth = CountableParam{{2}, {0.7}};
  Rng rng = make_rng(5);
  std::vector<ContextSlice> schedule;
  for (std::size_t t = 0; t < 30; ++t) schedule.emplace_back(t, 2, 1, std::vector<double>{uniform01(rng), uniform01(rng)});
  const auto env = make_sparse_instance(schedule, truth, f, NoiseSpec{0.5}, "d");
  FgtsConfig config;
  config.sweeps = 20;
  FgtsPolicy policy(f, CountablePrior{4}, config);
  const auto trace = run_episode(env, policy, 30, 1, true);
  ASSERT_EQ(trace.diagnostics.size(), 30u);
  for (const auto& d : trace.diagnostics) {
    EXPECT_GE(d.accept_rate, 0.0);
    EXPECT_LE(d.accept_rate, 1.0);
    EXPECT_GE(d.support_size, 1u);
    EXPECT_LE(d.support_size, 4u);
    EXPECT_TRUE(std::isfinite(d.log_posterior));
  }
  EXPECT_EQ(policy.state()->proposals, 600u);
}

TEST(DeltaL, ZeroAtTruth) {
  const FeatureModel f = cosine2();
  const SparseParam truth = CountableParam{{1, 2}, {0.3, 0.4}};
  const RewardFunction fstar = [&](const ContextSlice& x, Action a) { return eval_reward(truth, f, x, a); };
  const ContextSlice x(0, 3, 1, {0.1, 0.6, 0.8});
  EXPECT_EQ(delta_L(truth, fstar, x, 1, 0.37, 0.25, 0.2, f), 0.0);
}

TEST(DeltaL, ExpandedIdentity) {
  Rng rng = make_rng(9);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const double fa = u(rng), fb = std::max(fa, u(rng)), sa = u(rng), sb = std::max(sa, u(rng));
    const double y = sa + 0.5 * u(rng), eta = 0.25 * uniform01(rng), lambda = uniform01(rng);
    worst = std::max(worst, std::abs(delta_L_values(fa, fb, sa, sb, y, eta, lambda) -
                                     delta_L_expanded(fa, fb, sa, sb, y, eta, lambda)));
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(DeltaL, NoFeelGoodAtMean) {
  EXPECT_NEAR(delta_L_values(0.7, 0.9, 0.2, 0.5, 0.2, 0.25, 0.0), 0.25 * 0.25, 1e-15);
}

TEST(DeltaL, ModelMatchesValues) {
  const FeatureModel f = cosine2();
  const SparseParam nu = CountableParam{{1}, {0.6}};
  const SparseParam truth = CountableParam{{2}, {0.5}};
  const RewardFunction fstar = [&](const ContextSlice& x, Action a) { return eval_reward(truth, f, x, a); };
  const ContextSlice x(0, 2, 1, {0.2, 0.7});
  const double fa = eval_reward(nu, f, x, 1), fb = eval_best(nu, f, x).value;
  const double sa = fstar(x, 1), sb = std::max(fstar(x, 0), fstar(x, 1));
  EXPECT_DOUBLE_EQ(delta_L(nu, fstar, x, 1, 0.1, 0.25, 0.3, f),
                   delta_L_values(fa, fb, sa, sb, 0.1, 0.25, 0.3));
}
