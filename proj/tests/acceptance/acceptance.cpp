// Acceptance gate: one PASS/FAIL line per criterion; exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "sparse_bandit/baselines.hpp"
#include "sparse_bandit/error.hpp"
#include "sparse_bandit/fgts.hpp"
#include "sparse_bandit/hard_instances.hpp"
#include "sparse_bandit/harness.hpp"
#include "sparse_bandit/oracles.hpp"

using namespace sparse_bandit;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* pattern, double a, double b = 0.0, double c = 0.0, double d = 0.0) {
  char buf[256];
  std::snprintf(buf, sizeof buf, pattern, a, b, c, d);
  return buf;
}

bool exact_hard_instance(const HardInstance& h, std::string& note) {
  const auto& spec = h.spec;
  const std::size_t ell = spec.kind == HardKind::kUncountable ? spec.dim : spec.block_len();
  for (std::size_t i = 1; i <= spec.num_contexts(); ++i) {
    const auto [r, q] = rho(i, ell);
    const std::size_t good = spec.good_actions[(r - 1) * ell + (q - 1)];
    const auto z = h.context_of(i);
    for (Action a = 0; a < spec.num_actions; ++a) {
      const double expect = a + 1 == good ? h.delta / static_cast<double>(spec.s) : 0.0;
      if (std::abs(eval_reward(h.truth, h.features, z, a) - expect) > 1e-15) {
        note = to_string(spec.kind) + " mismatch at context " + std::to_string(i);
        return false;
      }
    }
  }
  return true;
}

constexpr std::size_t kMaxHorizon = 2'000'000;

Outcome a1() {
  std::string note;
  Rng rng = make_rng(1);
  std::size_t instances = 0;
  // Every good-action sequence on the smallest sizes, then random ones on the larger ones.
  for (std::size_t b1 = 1; b1 <= 4; ++b1) {
    for (std::size_t b2 = 1; b2 <= 4; ++b2) {
      const auto h = build_countable_poly(2, 4, 2.0, minimal_admissible_m(HardKind::kCountablePoly, 2, 4, 2.0, 1), {b1, b2});
      if (!exact_hard_instance(h, note)) return {false, note};
      if (audit_decay(std::get<CountableFeatureFamily>(h.features), 16, 64, rng) > 0.0) return {false, "poly decay audit"};
      ++instances;
    }
  }
  std::size_t skipped = 0;
  for (double beta : {0.5, 1.0, 2.0}) {
    for (std::size_t s = 1; s <= 2; ++s) {
      for (std::size_t k = 2; k <= 4; ++k) {
        HardInstanceSpec spec{HardKind::kCountableExp, s, k, beta, 1, 1, {}};
        try {
          spec.m = minimal_admissible_m(spec.kind, s, k, beta, 1);
        } catch (const Error&) {
          ++skipped;
          continue;
        }
        if (spec.horizon() > kMaxHorizon) {
          ++skipped;
          continue;
        }
        spec.good_actions = random_good_actions(spec, rng);
        const auto h = build_hard_instance(spec, 1);
        if (!exact_hard_instance(h, note)) return {false, note};
        if (audit_decay(std::get<CountableFeatureFamily>(h.features), h.num_features() + 4, 64, rng) > 0.0) {
          return {false, "exp decay audit"};
        }
        ++instances;
      }
    }
  }
  for (std::size_t d = 1; d <= 2; ++d) {
    for (std::size_t s = 1; s <= 2; ++s) {
      for (std::size_t k = 2; k <= 4; ++k) {
        HardInstanceSpec spec{HardKind::kUncountable, s, k, 0.0, d, 1, {}};
        spec.m = minimal_admissible_m(spec.kind, s, k, 0.0, d);
        spec.good_actions = random_good_actions(spec, rng);
        const auto h = build_hard_instance(spec, 2);
        if (!exact_hard_instance(h, note)) return {false, note};
        if (h.packing->min_distance < h.delta) return {false, "packing separation"};
        if (audit_lipschitz(std::get<ParametricFeatureMap>(h.features), 5000, rng) > 1.0 + 1e-12) {
          return {false, "Lipschitz audit"};
        }
        ++instances;
      }
    }
  }
  for (std::size_t k = 2; k <= 3; ++k) {
    for (std::size_t len = 1; len <= 2; ++len) {
      for (std::size_t w = 1; w <= checked_power(k, len); ++w) {
        if (zeta_inverse(zeta(w, k, len), k) != w) return {false, "zeta round trip"};
      }
    }
  }
  for (std::size_t l = 1; l <= 2; ++l) {
    for (std::size_t i = 1; i <= 2 * l; ++i) {
      const auto [r, q] = rho(i, l);
      if ((r - 1) * l + q != i) return {false, "rho round trip"};
    }
  }
  return {true, std::to_string(instances) + " instances exact, audits and round trips pass (" +
                    std::to_string(skipped) + " exponential sizes skipped: horizon above " +
                    std::to_string(kMaxHorizon) + ")"};
}

Outcome a2() {
  const auto h = build_countable_poly(2, 4, 2.0, 1024, {1, 3}, NoiseSpec{1.0});
  const double closed = h.uniform_regret();
  const auto est = mc_regret([] { return std::make_unique<UniformPolicy>(); }, h.env, 2048, 1000, 2);
  const double bound = lower_bound_value(HardKind::kCountablePoly, 2, 4, 1, 2.0, 2048);
  const bool pass = std::abs(est.mean - closed) <= 3.0 * est.std_error && bound == 16.0 && est.mean > bound;
  return {pass, fmt("uniform %.3f +- %.3f vs closed form %.1f; reference %.1f", est.mean, est.std_error, closed, bound)};
}

Outcome a3() {
  const auto r = posterior_check({});
  return {r.tv <= 0.05, fmt("TV %.4f (overflow %.4f, accept %.3f)", r.tv, r.overflow, r.accept_rate)};
}

ExperimentConfig a4_config(const std::string& policy, std::size_t n) {
  ExperimentConfig c;
  c.environment.type = "cosine";
  c.environment.num_actions = 4;
  c.environment.noise_sd = 0.5;
  c.environment.decay = {DecayKind::kPolynomial, 2.0};
  c.policy.name = policy;
  c.policy.fgts.eta = 0.25;
  c.policy.fgts.sweeps = 100;
  c.policy.lambda_mode = LambdaMode::kKnownS;
  c.n = n;
  c.seeds.clear();
  for (std::uint64_t s = 1; s <= 20; ++s) c.seeds.push_back(s);
  c.threads = 0;
  return c;
}

RunSummary summarize(const std::string& policy, std::size_t n) {
  RunSummary s;
  run_traces(a4_config(policy, n), n, &s);
  return s;
}

RunSummary fgts_2048;

Outcome a4() {
  std::vector<double> ns, means;
  for (std::size_t n : {512, 1024, 2048, 4096}) {
    const auto s = summarize("fgts", n);
    if (n == 2048) fgts_2048 = s;
    ns.push_back(static_cast<double>(n));
    means.push_back(s.mean);
  }
  const auto fit = fit_scaling(ns, means);
  const auto uniform = summarize("uniform", 4096);
  const double ratio = means.back() / uniform.mean;
  const bool pass = fit.slope >= 0.4 && fit.slope <= 0.7 && ratio <= 0.8;
  return {pass, fmt("slope %.3f (R^2 %.3f); regret at 4096 is %.3f of uniform (%.1f)", fit.slope, fit.r_squared,
                    ratio, uniform.mean)};
}

Outcome a5() {
  if (fgts_2048.seeds.empty()) fgts_2048 = summarize("fgts", 2048);
  const auto vanilla = summarize("vanilla_ts", 2048);
  const double se = std::hypot(fgts_2048.std_error, vanilla.std_error);
  const bool pass = fgts_2048.mean <= vanilla.mean + 2.0 * se;
  return {pass, fmt("fgts %.2f vs vanilla TS %.2f (stderr of difference %.2f)", fgts_2048.mean, vanilla.mean, se)};
}

Outcome a6() {
  Rng rng = make_rng(6);
  const FeatureModel f = cosine_family({DecayKind::kPolynomial, 2.0});
  const SparseParam truth = CountableParam{{1, 3}, {0.5, -0.5}};
  const RewardFunction fstar = [&](const ContextSlice& x, Action a) { return eval_reward(truth, f, x, a); };
  std::normal_distribution<double> noise(0.0, 0.5);
  double worst = 0.0;
  for (int k = 0; k < 10000; ++k) {
    const auto nu = sample_prior(CountablePrior{20}, rng);
    const ContextSlice x(0, 4, 1, {uniform01(rng), uniform01(rng), uniform01(rng), uniform01(rng)});
    const Action a = std::uniform_int_distribution<Action>(0, 3)(rng);
    const double y = fstar(x, a) + noise(rng);
    const double eta = 0.25 * uniform01(rng), lambda = uniform01(rng);
    const double direct = delta_L(nu, fstar, x, a, y, eta, lambda, f);
    std::vector<double> sv(4);
    for (Action b = 0; b < 4; ++b) sv[b] = fstar(x, b);
    const double expanded = delta_L_expanded(eval_reward(nu, f, x, a), eval_best(nu, f, x).value, sv[a],
                                             sv[argmax_lowest(sv)], y, eta, lambda);
    worst = std::max(worst, std::abs(direct - expanded));
  }
  return {worst <= 1e-12, fmt("max discrepancy %.3e", worst)};
}

Outcome a7() {
  std::vector<std::size_t> ns;
  for (double n = 10.0; n <= 1e5 * (1 + 1e-9); n *= 1.05) ns.push_back(static_cast<std::size_t>(std::llround(n)));
  ns.push_back(100000);
  std::size_t checked = 0;
  for (double beta : {1.0, 1.5, 2.0, 3.0}) {
    for (auto n : ns) {
      const double nd = static_cast<double>(n);
      if (beta > 1.0) {
        const auto d = effective_dimension({DecayKind::kPolynomial, beta}, n);
        if (static_cast<double>(d) > std::ceil(std::pow(nd, 1.0 / beta))) {
          return {false, fmt("polynomial beta %.1f n %.0f: %.0f", beta, nd, static_cast<double>(d))};
        }
        ++checked;
      }
      const auto d = effective_dimension({DecayKind::kExponential, beta}, n);
      if (static_cast<double>(d) > std::ceil(std::pow(std::log(nd), 1.0 / beta))) {
        return {false, fmt("exponential beta %.1f n %.0f: %.0f", beta, nd, static_cast<double>(d))};
      }
      ++checked;
    }
  }
  return {true, std::to_string(checked) + " (profile, n) pairs within the bounds"};
}

Outcome a8() {
  Rng rng = make_rng(8);
  const FeatureModel cosine = cosine_family({DecayKind::kPolynomial, 2.0});
  const FeatureModel bump = gaussian_bump_map(3, 1.0);
  std::size_t violations = 0;
  double max_f = 0.0;
  std::vector<ContextSlice> cosine_ctx, bump_ctx;
  for (std::size_t t = 0; t < 8; ++t) {
    cosine_ctx.emplace_back(t, 4, 1, std::vector<double>{uniform01(rng), uniform01(rng), uniform01(rng), uniform01(rng)});
    std::vector<double> v;
    for (int a = 0; a < 4; ++a) {
      const auto z = sample_uniform_l2_ball(3, rng);
      v.insert(v.end(), z.begin(), z.end());
    }
    bump_ctx.emplace_back(t, 4, 3, std::move(v));
  }
  for (int k = 0; k < 100000; ++k) {
    const SparseParam c = sample_prior(CountablePrior{64}, rng);
    const auto& cp = std::get<CountableParam>(c);
    if (l1_norm(cp.weights) > 1.0 + 1e-12) ++violations;
    const SparseParam a = sample_prior(AtomicPrior{3, 32}, rng);
    const auto& ap = std::get<AtomicParam>(a);
    if (l1_norm(ap.weights) > 1.0 + 1e-12) ++violations;
    for (const auto& th : ap.atoms) violations += l2_norm(th) > 1.0 + 1e-12;
    const auto& xc = cosine_ctx[k % 8];
    const auto& xb = bump_ctx[k % 8];
    for (Action act = 0; act < 4; ++act) {
      max_f = std::max({max_f, std::abs(eval_reward(c, cosine, xc, act)), std::abs(eval_reward(a, bump, xb, act))});
    }
  }
  return {violations == 0 && max_f <= 1.0,
          fmt("%.0f violations over 2e5 draws; max |f| %.4f", static_cast<double>(violations), max_f)};
}

}  // namespace

// Optional arguments restrict the run to the named criteria, e.g. `acceptance A1 A6`.
int main(int argc, char** argv) {
  const std::vector<std::string> only(argv + 1, argv + argc);
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"A1", a1}, {"A2", a2}, {"A3", a3}, {"A4", a4}, {"A5", a5}, {"A6", a6}, {"A7", a7}, {"A8", a8}};
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), name) == only.end()) continue;
    const auto start = std::chrono::steady_clock::now();
    Outcome out;
    try {
      out = check();
    } catch (const std::exception& e) {
      out = {false, std::string("error: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    std::printf("%s %s  %s  [%.1f s]\n", name, out.pass ? "PASS" : "FAIL", out.detail.c_str(), secs);
    std::fflush(stdout);
    failures += !out.pass;
  }
  return failures == 0 ? 0 : 1;
}
