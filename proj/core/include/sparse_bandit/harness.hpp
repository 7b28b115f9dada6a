#pragma once

// Experiment configuration, seeded runs and sweeps, scaling-exponent fits and
// artifact emission (trace CSVs, JSON summaries, SVG plots).

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "sparse_bandit/baselines.hpp"
#include "sparse_bandit/core.hpp"
#include "sparse_bandit/features.hpp"
#include "sparse_bandit/fgts.hpp"
#include "sparse_bandit/hard_instances.hpp"

namespace sparse_bandit {

struct EnvironmentSpec {
  // "cosine": countable cosine family on [0,1]^p with i.i.d. uniform items.
  // "bump": Gaussian-bump features on the unit ball (atomic sparsity).
  // "hard": one of the lower-bound constructions.
  std::string type = "cosine";
  std::size_t num_actions = 4;
  double noise_sd = 0.5;
  std::string truth;  // parameter record; empty picks the type's default

  DecayProfile decay;           // cosine
  std::size_t context_dim = 1;  // cosine: p, bump: d
  double length_scale = 1.0;    // bump

  HardKind hard_kind = HardKind::kCountablePoly;  // hard
  std::size_t s = 2;
  double beta = 2.0;
  std::size_t dim = 1;
  std::size_t m = 0;  // 0: minimal admissible
  std::vector<std::size_t> good_actions;  // empty: uniform-random per seed
};

enum class LambdaMode { kKnownS, kUnknownS, kManual };

struct PolicySpec {
  std::string name = "fgts";  // fgts, uniform, epsilon_greedy, vanilla_ts, ridge_ucb
  FgtsConfig fgts;
  LambdaMode lambda_mode = LambdaMode::kKnownS;
  BaselineConfig baseline;
  std::size_t d_eff = 0;  // 0: effective dimension at n (hard: the feature count)
  std::size_t m_cap = 32;
};

struct ExperimentConfig {
  EnvironmentSpec environment;
  PolicySpec policy;
  std::size_t n = 1000;
  std::vector<std::uint64_t> seeds{1};
  std::vector<std::size_t> n_grid;  // sweep only
  std::string output_dir = "out";
  bool diagnostics = false;
  std::size_t threads = 0;  // 0: hardware concurrency

  void validate() const;
};

// JSON text <-> config. Unknown keys and bad values throw ConfigError.
ExperimentConfig parse_config(const std::string& json_text);
ExperimentConfig load_config(const std::filesystem::path& path);
std::string to_json(const ExperimentConfig& config);

// Fills type-dependent defaults (truth record, hard-instance m) for `n`.
ExperimentConfig resolve_defaults(ExperimentConfig config, std::size_t n);

// SBANDIT_OUTPUT_DIR when set, otherwise config.output_dir.
std::filesystem::path resolve_output_dir(const ExperimentConfig& config);

// A seeded environment together with the model a policy should assume.
struct Environment {
  BanditInstance env;
  FeatureModel features;
  std::size_t sparsity = 1;  // s of the truth
  std::size_t num_features = 0;  // hard instances: finite feature count
  std::optional<double> lower_bound;
  std::optional<double> uniform_regret;
  std::string description;
};

Environment make_environment(const EnvironmentSpec& spec, std::size_t n, std::uint64_t seed);

PriorSpec default_prior(const PolicySpec& policy, const Environment& env, std::size_t n);
double resolve_lambda(const PolicySpec& policy, const Environment& env, const PriorSpec& prior,
                      std::size_t n);
std::unique_ptr<Policy> make_policy(const PolicySpec& policy, const Environment& env,
                                    std::size_t n);

struct RunSummary {
  std::string environment;
  std::string policy;
  std::size_t n = 0;
  std::vector<std::uint64_t> seeds;
  std::vector<double> final_regret;  // per seed
  double mean = 0.0;
  double std_error = 0.0;
  std::optional<double> lower_bound;
  std::optional<double> uniform_regret;
  std::vector<double> mean_cumulative;  // across seeds, per round
};

// Runs every seed (in parallel when threads > 1); traces come back in seed order.
std::vector<RegretTrace> run_traces(const ExperimentConfig& config, std::size_t n,
                                    RunSummary* summary = nullptr);

// Writes trace_seed<k>.csv per seed, summary.json and regret.svg under `dir`.
RunSummary run(const ExperimentConfig& config, const std::filesystem::path& dir);

struct ScalingFit {
  std::vector<double> n;
  std::vector<double> mean_regret;
  double slope = 0.0;
  double intercept = 0.0;
  double r_squared = 0.0;
};

// Least squares of log(mean) on log(n). Needs >= 3 points and positive means
// (FitUndefined otherwise).
ScalingFit fit_scaling(std::vector<double> n, std::vector<double> mean_regret);

struct SweepResult {
  std::vector<RunSummary> runs;
  ScalingFit fit;
};

// One run per n in config.n_grid; writes sweep.csv, fit.json and sweep.svg.
SweepResult sweep(const ExperimentConfig& config, const std::filesystem::path& dir);

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

// Log-log SVG plot, one polyline per series; non-positive points are dropped.
// Throws EmptyData when nothing remains to draw.
void emit_plot(std::ostream& out, const std::vector<PlotSeries>& series,
               const std::optional<ScalingFit>& fit, const std::string& title);

// MCMC histogram against the enumerated posterior on the toy grid.
struct PosteriorCheckConfig {
  std::size_t d_eff = 2;
  std::size_t grid_points = 21;
  std::size_t records = 5;
  double eta = 0.25;
  double lambda = 0.2;
  std::size_t samples = 100'000;
  std::size_t thin = 20;
  std::size_t burn_in = 20'000;
  std::uint64_t seed = 7;
};

struct PosteriorCheckResult {
  double tv = 0.0;
  double overflow = 0.0;  // chain mass outside every cell
  double accept_rate = 0.0;
  std::size_t atoms = 0;
};

PosteriorCheckResult posterior_check(const PosteriorCheckConfig& config);

// The toy history used by posterior_check: K = 2 uniform items on [0,1],
// cosine features (beta = 2), truth support {1,2}, noise sd 1/2.
History toy_history(std::size_t records, std::uint64_t seed);
CountableFeatureFamily toy_family();

}  // namespace sparse_bandit
