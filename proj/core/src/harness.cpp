#include "sparse_bandit/harness.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <fstream>
#include <mutex>
#include <numeric>
#include <sstream>
#include <thread>

#include <json.hpp>

#include "sparse_bandit/error.hpp"
#include "sparse_bandit/oracles.hpp"

namespace sparse_bandit {

namespace {

using json = nlohmann::json;

const char* kDefaultCosineTruth = "countable support=1,3 weights=0.5,-0.5";

void check_keys(const json& j, std::initializer_list<const char*> allowed,
                const std::string& where) {
  if (!j.is_object()) throw Error(ErrorCode::kConfigError, where + " must be an object");
  for (const auto& item : j.items()) {
    const bool known = std::any_of(allowed.begin(), allowed.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw Error(ErrorCode::kConfigError, "unknown key '" + item.key() + "' in " + where);
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("bad value for '") + key + "': " + e.what());
  }
}

std::string lambda_mode_name(LambdaMode mode) {
  switch (mode) {
    case LambdaMode::kKnownS: return "known_s";
    case LambdaMode::kUnknownS: return "unknown_s";
    case LambdaMode::kManual: return "manual";
  }
  return "manual";
}

EnvironmentSpec parse_environment(const json& j) {
  check_keys(j,
             {"type", "num_actions", "noise_sd", "truth", "decay", "context_dim", "length_scale",
              "kind", "s", "beta", "dim", "m", "good_actions"},
             "environment");
  EnvironmentSpec spec;
  read(j, "type", spec.type);
  read(j, "num_actions", spec.num_actions);
  read(j, "noise_sd", spec.noise_sd);
  read(j, "truth", spec.truth);
  read(j, "context_dim", spec.context_dim);
  read(j, "length_scale", spec.length_scale);
  if (j.contains("decay")) {
    const auto& d = j.at("decay");
    check_keys(d, {"kind", "beta"}, "environment.decay");
    std::string kind = to_string(spec.decay.kind);
    read(d, "kind", kind);
    spec.decay.kind = parse_decay_kind(kind);
    read(d, "beta", spec.decay.beta);
  }
  if (j.contains("kind")) spec.hard_kind = parse_hard_kind(j.at("kind").get<std::string>());
  read(j, "s", spec.s);
  read(j, "beta", spec.beta);
  read(j, "dim", spec.dim);
  read(j, "m", spec.m);
  read(j, "good_actions", spec.good_actions);
  return spec;
}

PolicySpec parse_policy(const json& j) {
  check_keys(j,
             {"name", "eta", "lambda", "sweeps", "weight_step", "atom_step", "mix", "epsilon",
              "alpha", "c", "d_eff", "m_cap"},
             "policy");
  PolicySpec spec;
  read(j, "name", spec.name);
  read(j, "eta", spec.fgts.eta);
  if (j.contains("lambda")) {
    const auto& l = j.at("lambda");
    if (l.is_number()) {
      spec.lambda_mode = LambdaMode::kManual;
      spec.fgts.lambda = l.get<double>();
    } else if (l == "known_s") {
      spec.lambda_mode = LambdaMode::kKnownS;
    } else if (l == "unknown_s") {
      spec.lambda_mode = LambdaMode::kUnknownS;
    } else {
      throw Error(ErrorCode::kConfigError, "lambda must be a number, \"known_s\" or \"unknown_s\"");
    }
  }
  read(j, "sweeps", spec.fgts.sweeps);
  read(j, "weight_step", spec.fgts.weight_step);
  read(j, "atom_step", spec.fgts.atom_step);
  if (j.contains("mix")) {
    const auto& m = j.at("mix");
    check_keys(m, {"add", "drop", "swap", "perturb", "birth", "death", "walk", "perturb_atomic"},
               "policy.mix");
    read(m, "add", spec.fgts.mix.add);
    read(m, "drop", spec.fgts.mix.drop);
    read(m, "swap", spec.fgts.mix.swap);
    read(m, "perturb", spec.fgts.mix.perturb);
    read(m, "birth", spec.fgts.mix.birth);
    read(m, "death", spec.fgts.mix.death);
    read(m, "walk", spec.fgts.mix.walk);
    read(m, "perturb_atomic", spec.fgts.mix.perturb_atomic);
  }
  read(j, "epsilon", spec.baseline.epsilon);
  read(j, "alpha", spec.baseline.alpha);
  read(j, "c", spec.baseline.c);
  read(j, "d_eff", spec.d_eff);
  read(j, "m_cap", spec.m_cap);
  return spec;
}

json environment_json(const EnvironmentSpec& e) {
  json j{{"type", e.type}, {"num_actions", e.num_actions}, {"noise_sd", e.noise_sd},
         {"truth", e.truth}};
  if (e.type == "cosine") {
    j["decay"] = {{"kind", to_string(e.decay.kind)}, {"beta", e.decay.beta}};
    j["context_dim"] = e.context_dim;
  } else if (e.type == "bump") {
    j["context_dim"] = e.context_dim;
    j["length_scale"] = e.length_scale;
  } else {
    j["kind"] = to_string(e.hard_kind);
    j["s"] = e.s;
    j["beta"] = e.beta;
    j["dim"] = e.dim;
    j["m"] = e.m;
    j["good_actions"] = e.good_actions;
  }
  return j;
}

json policy_json(const PolicySpec& p) {
  const auto& f = p.fgts;
  json j{{"name", p.name},
         {"eta", f.eta},
         {"sweeps", f.sweeps},
         {"weight_step", f.weight_step},
         {"atom_step", f.atom_step},
         {"mix",
          {{"add", f.mix.add},
           {"drop", f.mix.drop},
           {"swap", f.mix.swap},
           {"perturb", f.mix.perturb},
           {"birth", f.mix.birth},
           {"death", f.mix.death},
           {"walk", f.mix.walk},
           {"perturb_atomic", f.mix.perturb_atomic}}},
         {"epsilon", p.baseline.epsilon},
         {"alpha", p.baseline.alpha},
         {"c", p.baseline.c},
         {"d_eff", p.d_eff},
         {"m_cap", p.m_cap}};
  if (p.lambda_mode == LambdaMode::kManual) {
    j["lambda"] = f.lambda;
  } else {
    j["lambda"] = lambda_mode_name(p.lambda_mode);
  }
  return j;
}

std::vector<ContextSlice> iid_schedule(const ContextSpace& space, std::size_t num_actions,
                                       std::size_t n, Rng& rng) {
  std::vector<ContextSlice> schedule;
  schedule.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    std::vector<double> values;
    values.reserve(num_actions * space.dim);
    for (std::size_t a = 0; a < num_actions; ++a) {
      const auto z = space.sample(rng);
      values.insert(values.end(), z.begin(), z.end());
    }
    schedule.emplace_back(t, num_actions, space.dim, std::move(values));
  }
  return schedule;
}

AtomicParam default_bump_truth(std::size_t dim) {
  AtomicParam nu;
  nu.weights = {0.6, -0.4};
  nu.atoms = {std::vector<double>(dim, 0.0), std::vector<double>(dim, 0.0)};
  nu.atoms[0][0] = 0.5;
  nu.atoms[1][0] = -0.5;
  return nu;
}

double mean_of(const std::vector<double>& v) {
  return v.empty() ? 0.0 : std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double std_error_of(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean_of(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1) / static_cast<double>(v.size()));
}

void write_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorCode::kConfigError, "cannot write " + path.string());
  out << text;
}

std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string fixed(double v, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

json summary_json(const RunSummary& s, const ExperimentConfig& config) {
  json j{{"environment", s.environment},
         {"policy", s.policy},
         {"n", s.n},
         {"seeds", s.seeds},
         {"final_regret", s.final_regret},
         {"mean_regret", s.mean},
         {"stderr_regret", s.std_error},
         {"config", json::parse(to_json(resolve_defaults(config, s.n)))}};
  if (s.lower_bound) j["lower_bound"] = *s.lower_bound;
  if (s.uniform_regret) j["uniform_regret_closed_form"] = *s.uniform_regret;
  return j;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (n < 1) throw Error(ErrorCode::kConfigError, "n must be >= 1");
  if (seeds.empty()) throw Error(ErrorCode::kConfigError, "at least one seed is required");
  const auto& t = environment.type;
  if (t != "cosine" && t != "bump" && t != "hard") {
    throw Error(ErrorCode::kConfigError, "unknown environment type '" + t + "'");
  }
  if (policy.name != "fgts") parse_baseline_kind(policy.name);
  policy.fgts.validate();
  policy.baseline.validate();
}

ExperimentConfig parse_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::kConfigError, std::string("malformed config: ") + e.what());
  }
  check_keys(j, {"environment", "policy", "n", "seeds", "n_grid", "output_dir", "diagnostics", "threads"},
             "config");
  ExperimentConfig config;
  if (j.contains("environment")) config.environment = parse_environment(j.at("environment"));
  if (j.contains("policy")) config.policy = parse_policy(j.at("policy"));
  read(j, "n", config.n);
  read(j, "seeds", config.seeds);
  read(j, "n_grid", config.n_grid);
  read(j, "output_dir", config.output_dir);
  read(j, "diagnostics", config.diagnostics);
  read(j, "threads", config.threads);
  config.validate();
  return config;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kConfigError, "cannot read config " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return parse_config(buffer.str());
}

std::string to_json(const ExperimentConfig& config) {
  json j{{"environment", environment_json(config.environment)},
         {"policy", policy_json(config.policy)},
         {"n", config.n},
         {"seeds", config.seeds},
         {"n_grid", config.n_grid},
         {"output_dir", config.output_dir},
         {"diagnostics", config.diagnostics},
         {"threads", config.threads}};
  return j.dump(2);
}

ExperimentConfig resolve_defaults(ExperimentConfig config, std::size_t n) {
  auto& e = config.environment;
  config.n = n;
  if (e.truth.empty() && e.type == "cosine") e.truth = kDefaultCosineTruth;
  if (e.truth.empty() && e.type == "bump") e.truth = to_record(default_bump_truth(e.context_dim));
  if (e.type == "hard" && e.m == 0) {
    HardInstanceSpec hs{e.hard_kind, e.s, e.num_actions, e.beta, e.dim, 0, {}};
    e.m = n / hs.num_contexts();
  }
  return config;
}

std::filesystem::path resolve_output_dir(const ExperimentConfig& config) {
  if (const char* env = std::getenv("SBANDIT_OUTPUT_DIR"); env && *env) return env;
  return config.output_dir;
}

Environment make_environment(const EnvironmentSpec& spec, std::size_t n, std::uint64_t seed) {
  const NoiseSpec noise{spec.noise_sd};
  if (spec.type == "cosine") {
    auto family = cosine_family(spec.decay, spec.context_dim);
    const auto truth = parse_record(spec.truth.empty() ? kDefaultCosineTruth : spec.truth);
    if (!std::holds_alternative<CountableParam>(truth)) {
      throw Error(ErrorCode::kConfigError, "cosine environment needs a countable truth");
    }
    Rng rng = make_rng(seed, 3);
    auto schedule = iid_schedule(family.space, spec.num_actions, n, rng);
    FeatureModel features = family;
    auto env = make_sparse_instance(std::move(schedule), truth, features, noise, "cosine");
    return Environment{std::move(env), std::move(features), param_size(truth), 0,
                       std::nullopt, std::nullopt, "cosine " + to_record(truth)};
  }
  if (spec.type == "bump") {
    auto map = gaussian_bump_map(spec.context_dim, spec.length_scale);
    const SparseParam truth =
        spec.truth.empty() ? SparseParam{default_bump_truth(spec.context_dim)} : parse_record(spec.truth);
    if (!std::holds_alternative<AtomicParam>(truth)) {
      throw Error(ErrorCode::kConfigError, "bump environment needs an atomic truth");
    }
    Rng rng = make_rng(seed, 3);
    auto schedule = iid_schedule(map.space, spec.num_actions, n, rng);
    FeatureModel features = map;
    auto env = make_sparse_instance(std::move(schedule), truth, features, noise, "bump");
    return Environment{std::move(env), std::move(features), param_size(truth), 0,
                       std::nullopt, std::nullopt, "bump " + to_record(truth)};
  }
  if (spec.type != "hard") {
    throw Error(ErrorCode::kConfigError, "unknown environment type '" + spec.type + "'");
  }
  HardInstanceSpec hs{spec.hard_kind, spec.s, spec.num_actions, spec.beta, spec.dim, spec.m,
                      spec.good_actions};
  const std::size_t contexts = hs.num_contexts();
  if (hs.m == 0) hs.m = n / contexts;
  if (contexts * hs.m != n) {
    throw Error(ErrorCode::kConfigError, "hard instance horizon " + std::to_string(contexts * hs.m) +
                                             " differs from n = " + std::to_string(n));
  }
  if (hs.good_actions.empty()) {
    Rng rng = make_rng(seed, 4);
    hs.good_actions = random_good_actions(hs, rng);
  }
  auto hard = build_hard_instance(hs, seed, noise);
  const double bound = lower_bound_value(hs.kind, hs.s, hs.num_actions, hs.dim, hs.beta, n);
  std::string description = to_string(hs.kind) + " (" + hard.path + ") s=" + std::to_string(hs.s) +
                            " K=" + std::to_string(hs.num_actions) + " m=" + std::to_string(hs.m);
  return Environment{hard.env, hard.features, hs.s, hard.num_features(), bound,
                     hard.uniform_regret(), std::move(description)};
}

PriorSpec default_prior(const PolicySpec& policy, const Environment& env, std::size_t n) {
  if (const auto* family = std::get_if<CountableFeatureFamily>(&env.features)) {
    std::size_t d_eff = policy.d_eff;
    if (d_eff == 0) d_eff = env.num_features ? env.num_features : effective_dimension(family->decay, n);
    return CountablePrior{d_eff};
  }
  return AtomicPrior{std::get<ParametricFeatureMap>(env.features).param_dim, policy.m_cap};
}

double resolve_lambda(const PolicySpec& policy, const Environment& env, const PriorSpec& prior,
                      std::size_t n) {
  if (policy.lambda_mode == LambdaMode::kManual) return policy.fgts.lambda;
  const std::size_t s = policy.lambda_mode == LambdaMode::kKnownS ? env.sparsity : 1;
  const std::size_t k = env.env.num_actions();
  if (const auto* c = std::get_if<CountablePrior>(&prior)) return lambda_countable(s, c->d_eff, k, n);
  return lambda_atomic(s, std::get<AtomicPrior>(prior).dim, k, n);
}

std::unique_ptr<Policy> make_policy(const PolicySpec& policy, const Environment& env,
                                    std::size_t n) {
  const PriorSpec prior = default_prior(policy, env, n);
  FgtsConfig fgts = policy.fgts;
  fgts.lambda = resolve_lambda(policy, env, prior, n);
  if (policy.name == "fgts") return std::make_unique<FgtsPolicy>(env.features, prior, fgts);
  BaselineConfig baseline = policy.baseline;
  baseline.kind = parse_baseline_kind(policy.name);
  return make_baseline(baseline, env.features, prior, fgts);
}

std::vector<RegretTrace> run_traces(const ExperimentConfig& config, std::size_t n,
                                    RunSummary* summary) {
  config.validate();
  const std::size_t count = config.seeds.size();
  std::vector<RegretTrace> traces(count);
  std::vector<std::exception_ptr> errors(count);
  std::optional<Environment> first;
  std::mutex first_mutex;

  auto work = [&](std::size_t i) {
    try {
      Environment env = make_environment(config.environment, n, config.seeds[i]);
      auto policy = make_policy(config.policy, env, n);
      traces[i] = run_episode(env.env, *policy, n, config.seeds[i], config.diagnostics);
      if (i == 0) {
        std::lock_guard lock(first_mutex);
        first.emplace(std::move(env));
      }
    } catch (...) {
      errors[i] = std::current_exception();
    }
  };

  std::size_t threads = config.threads ? config.threads : std::thread::hardware_concurrency();
  threads = std::clamp<std::size_t>(threads, 1, count);
  if (threads == 1) {
    for (std::size_t i = 0; i < count; ++i) work(i);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < threads; ++w) {
      pool.emplace_back([&] {
        for (std::size_t i = next++; i < count; i = next++) work(i);
      });
    }
    for (auto& th : pool) th.join();
  }
  for (const auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }

  if (summary) {
    summary->environment = first->description;
    summary->policy = config.policy.name;
    summary->n = n;
    summary->seeds = config.seeds;
    summary->final_regret.clear();
    for (const auto& t : traces) summary->final_regret.push_back(t.total());
    summary->mean = mean_of(summary->final_regret);
    summary->std_error = std_error_of(summary->final_regret);
    summary->lower_bound = first->lower_bound;
    summary->uniform_regret = first->uniform_regret;
    summary->mean_cumulative.assign(n, 0.0);
    for (const auto& t : traces) {
      for (std::size_t r = 0; r < n; ++r) summary->mean_cumulative[r] += t.cumulative[r];
    }
    for (double& v : summary->mean_cumulative) v /= static_cast<double>(count);
  }
  return traces;
}

RunSummary run(const ExperimentConfig& config, const std::filesystem::path& dir) {
  RunSummary summary;
  const auto traces = run_traces(config, config.n, &summary);
  std::filesystem::create_directories(dir);
  for (const auto& trace : traces) {
    std::ostringstream csv;
    write_trace_csv(csv, trace);
    write_file(dir / ("trace_seed" + std::to_string(trace.seed) + ".csv"), csv.str());
  }
  write_file(dir / "summary.json", summary_json(summary, config).dump(2) + "\n");

  PlotSeries series{config.policy.name, {}, summary.mean_cumulative};
  for (std::size_t t = 1; t <= summary.n; ++t) series.x.push_back(static_cast<double>(t));
  std::ostringstream svg;
  try {
    emit_plot(svg, {series}, std::nullopt, "mean cumulative regret, " + summary.environment);
    write_file(dir / "regret.svg", svg.str());
  } catch (const Error& e) {
    if (e.code() != ErrorCode::kEmptyData) throw;
  }
  return summary;
}

ScalingFit fit_scaling(std::vector<double> n, std::vector<double> mean_regret) {
  if (n.size() != mean_regret.size() || n.size() < 3) {
    throw Error(ErrorCode::kFitUndefined, "a scaling fit needs at least 3 (n, regret) pairs");
  }
  const std::size_t k = n.size();
  std::vector<double> lx(k), ly(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!(n[i] > 0.0) || !(mean_regret[i] > 0.0)) {
      throw Error(ErrorCode::kFitUndefined, "scaling fit needs positive n and mean regret");
    }
    lx[i] = std::log(n[i]);
    ly[i] = std::log(mean_regret[i]);
  }
  const double mx = mean_of(lx);
  const double my = mean_of(ly);
  double sxx = 0.0, sxy = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
    syy += (ly[i] - my) * (ly[i] - my);
  }
  if (sxx == 0.0) throw Error(ErrorCode::kFitUndefined, "scaling fit needs distinct n");
  ScalingFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double ss_res = 0.0;
  for (std::size_t i = 0; i < k; ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    ss_res += r * r;
  }
  fit.r_squared = syy == 0.0 ? 1.0 : 1.0 - ss_res / syy;
  fit.n = std::move(n);
  fit.mean_regret = std::move(mean_regret);
  return fit;
}

SweepResult sweep(const ExperimentConfig& config, const std::filesystem::path& dir) {
  const auto& grid = config.n_grid;
  if (grid.size() < 3) throw Error(ErrorCode::kConfigError, "sweep needs an n_grid of >= 3 points");
  for (std::size_t i = 1; i < grid.size(); ++i) {
    const double ratio = static_cast<double>(grid[i]) / static_cast<double>(grid[i - 1]);
    const double first = static_cast<double>(grid[1]) / static_cast<double>(grid[0]);
    if (!(ratio > 1.0) || std::abs(ratio - first) > 1e-9 * first) {
      throw Error(ErrorCode::kConfigError, "n_grid must be increasing and geometric");
    }
  }
  SweepResult result;
  std::vector<double> ns, means;
  std::ostringstream csv;
  csv << "n,mean_regret,stderr_regret,seeds\n";
  for (std::size_t n : grid) {
    ExperimentConfig at = config;
    at.n = n;
    auto summary = run(at, dir / ("n_" + std::to_string(n)));
    csv << n << ',' << format_double(summary.mean) << ',' << format_double(summary.std_error) << ','
        << summary.seeds.size() << '\n';
    ns.push_back(static_cast<double>(n));
    means.push_back(summary.mean);
    result.runs.push_back(std::move(summary));
  }
  write_file(dir / "sweep.csv", csv.str());
  result.fit = fit_scaling(ns, means);
  const json fit{{"n", result.fit.n},
                 {"mean_regret", result.fit.mean_regret},
                 {"slope", result.fit.slope},
                 {"intercept", result.fit.intercept},
                 {"r_squared", result.fit.r_squared},
                 {"config", json::parse(to_json(resolve_defaults(config, config.n)))}};
  write_file(dir / "fit.json", fit.dump(2) + "\n");
  std::ostringstream svg;
  emit_plot(svg, {{config.policy.name, ns, means}}, result.fit, "regret scaling");
  write_file(dir / "sweep.svg", svg.str());
  return result;
}

void emit_plot(std::ostream& out, const std::vector<PlotSeries>& series,
               const std::optional<ScalingFit>& fit, const std::string& title) {
  struct Pts {
    std::string label;
    std::vector<std::pair<double, double>> xy;
  };
  std::vector<Pts> kept;
  double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
  for (const auto& s : series) {
    Pts p{s.label, {}};
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!(s.x[i] > 0.0) || !(s.y[i] > 0.0)) continue;
      const double lx = std::log10(s.x[i]);
      const double ly = std::log10(s.y[i]);
      p.xy.emplace_back(lx, ly);
      x0 = std::min(x0, lx);
      x1 = std::max(x1, lx);
      y0 = std::min(y0, ly);
      y1 = std::max(y1, ly);
    }
    if (!p.xy.empty()) kept.push_back(std::move(p));
  }
  if (kept.empty()) throw Error(ErrorCode::kEmptyData, "nothing to plot");
  if (x1 - x0 < 1e-9) { x0 -= 0.5; x1 += 0.5; }
  if (y1 - y0 < 1e-9) { y0 -= 0.5; y1 += 0.5; }

  constexpr double W = 640, H = 420, L = 70, R = 20, T = 40, B = 50;
  auto px = [&](double lx) { return L + (lx - x0) / (x1 - x0) * (W - L - R); };
  auto py = [&](double ly) { return H - B - (ly - y0) / (y1 - y0) * (H - T - B); };
  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e"};

  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << W / 2 << "\" y=\"22\" text-anchor=\"middle\">" << xml_escape(title) << "</text>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << H - B << "\" x2=\"" << W - R << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << L << "\" y1=\"" << T << "\" x2=\"" << L << "\" y2=\"" << H - B
      << "\" stroke=\"black\"/>\n";
  for (double d = std::ceil(x0); d <= x1 + 1e-12; d += 1.0) {
    out << "<text x=\"" << fixed(px(d), 1) << "\" y=\"" << H - B + 18
        << "\" text-anchor=\"middle\">1e" << static_cast<int>(d) << "</text>\n";
  }
  for (double d = std::ceil(y0); d <= y1 + 1e-12; d += 1.0) {
    out << "<text x=\"" << L - 6 << "\" y=\"" << fixed(py(d) + 4, 1)
        << "\" text-anchor=\"end\">1e" << static_cast<int>(d) << "</text>\n";
  }
  out << "<text x=\"" << W / 2 << "\" y=\"" << H - 12 << "\" text-anchor=\"middle\">n (log scale)</text>\n";
  out << "<text x=\"16\" y=\"" << H / 2 << "\" transform=\"rotate(-90 16 " << H / 2
      << ")\" text-anchor=\"middle\">regret (log scale)</text>\n";

  for (std::size_t s = 0; s < kept.size(); ++s) {
    const char* color = colors[s % 5];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < kept[s].xy.size(); ++i) {
      if (i) out << ' ';
      out << fixed(px(kept[s].xy[i].first), 2) << ',' << fixed(py(kept[s].xy[i].second), 2);
    }
    out << "\"/>\n";
    out << "<text x=\"" << L + 10 << "\" y=\"" << T + 14 * (s + 1) << "\" fill=\"" << color << "\">"
        << xml_escape(kept[s].label) << "</text>\n";
  }
  if (fit) {
    auto at = [&](double lx) { return (fit->intercept + fit->slope * lx * std::log(10.0)) / std::log(10.0); };
    out << "<line class=\"fit\" x1=\"" << fixed(px(x0), 2) << "\" y1=\"" << fixed(py(at(x0)), 2)
        << "\" x2=\"" << fixed(px(x1), 2) << "\" y2=\"" << fixed(py(at(x1)), 2)
        << "\" stroke=\"gray\" stroke-dasharray=\"5,4\"/>\n";
    out << "<text class=\"slope\" x=\"" << W - R - 4 << "\" y=\"" << T + 14
        << "\" text-anchor=\"end\">slope = " << fixed(fit->slope, 3) << ", R^2 = "
        << fixed(fit->r_squared, 3) << "</text>\n";
  }
  out << "</svg>\n";
}

CountableFeatureFamily toy_family() { return cosine_family({DecayKind::kPolynomial, 2.0}, 1); }

History toy_history(std::size_t records, std::uint64_t seed) {
  const auto family = toy_family();
  const CountableParam truth{{1, 2}, {0.4, -0.3}};
  Rng rng = make_rng(seed, 21);
  std::normal_distribution<double> noise(0.0, 0.5);
  History history;
  for (std::size_t l = 0; l < records; ++l) {
    ContextSlice x(l, 2, 1, {uniform01(rng), uniform01(rng)});
    const Action a = std::uniform_int_distribution<Action>(0, 1)(rng);
    const double y = eval_reward(truth, family, x.item(a)) + noise(rng);
    history.push_back({std::move(x), a, y});
  }
  return history;
}

PosteriorCheckResult posterior_check(const PosteriorCheckConfig& config) {
  const auto family = toy_family();
  const auto grid = GridSpec::uniform(config.d_eff, config.grid_points);
  const auto history = toy_history(config.records, config.seed);
  const auto exact = enumerate_posterior(grid, history, config.eta, config.lambda, family);

  FeelGoodTarget target(family, CountablePrior{config.d_eff}, config.eta, config.lambda);
  target.sync(history);
  Rng rng = make_rng(config.seed, 11);
  FgtsConfig mcmc;
  mcmc.eta = config.eta;
  mcmc.lambda = config.lambda;
  auto state = target.initial_state(rng);
  for (std::size_t i = 0; i < config.burn_in; ++i) target.step(state, mcmc, rng);
  const std::size_t p0 = state.proposals, a0 = state.accepted;
  std::vector<CountableParam> samples;
  samples.reserve(config.samples);
  for (std::size_t k = 0; k < config.samples; ++k) {
    for (std::size_t i = 0; i < config.thin; ++i) target.step(state, mcmc, rng);
    samples.push_back(std::get<CountableParam>(state.param));
  }
  auto hist = bin_samples(exact, grid, samples);
  std::vector<double> reference = exact.mass;
  reference.push_back(0.0);

  PosteriorCheckResult result;
  result.tv = tv_distance(hist, reference);
  result.overflow = hist.back();
  result.accept_rate = static_cast<double>(state.accepted - a0) /
                       static_cast<double>(std::max<std::size_t>(1, state.proposals - p0));
  result.atoms = exact.atoms.size();
  return result;
}

}  // namespace sparse_bandit
