// sbandit: command-line front end for the simulation lab.

#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sparse_bandit/error.hpp"
#include "sparse_bandit/features.hpp"
#include "sparse_bandit/hard_instances.hpp"
#include "sparse_bandit/harness.hpp"

namespace sb = sparse_bandit;
using json = nlohmann::json;

namespace {

int fail(const std::string& code, const std::string& message) {
  std::cerr << json{{"error", code}, {"message", message}}.dump() << '\n';
  return 1;
}

std::filesystem::path output_dir(const sb::ExperimentConfig& config, const std::string& flag) {
  return flag.empty() ? sb::resolve_output_dir(config) : std::filesystem::path(flag);
}

json hard_instance_record(const sb::HardInstance& h, bool tables) {
  const auto& spec = h.spec;
  json j{{"kind", sb::to_string(spec.kind)},
         {"path", h.path},
         {"s", spec.s},
         {"num_actions", spec.num_actions},
         {"m", spec.m},
         {"n", spec.horizon()},
         {"delta", h.delta},
         {"good_actions", spec.good_actions},
         {"num_features", h.num_features()},
         {"uniform_regret", h.uniform_regret()},
         {"truth", sb::to_record(h.truth)},
         {"lower_bound",
          sb::lower_bound_value(spec.kind, spec.s, spec.num_actions, spec.dim, spec.beta,
                                spec.horizon())}};
  if (spec.kind == sb::HardKind::kUncountable) {
    j["dim"] = spec.dim;
    j["packing_min_distance"] = h.packing->min_distance;
  } else {
    j["beta"] = spec.beta;
  }
  if (tables) {
    json rows = json::array();
    for (std::size_t i = 1; i <= spec.num_contexts(); ++i) {
      const auto x = h.context_of(i);
      json row = json::array();
      for (sb::Action a = 0; a < x.num_actions(); ++a) {
        row.push_back(h.env.mean_reward((i - 1) * spec.m, a));
      }
      rows.push_back(row);
    }
    j["mean_rewards"] = rows;
    if (h.packing) j["packing"] = h.packing->points;
  }
  return j;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Simulation lab for sparse nonparametric contextual bandits"};
  app.require_subcommand(1);

  std::string config_path, out_flag;
  bool diagnostics = false;
  auto* run_cmd = app.add_subcommand("run", "Run one experiment config over its seeds");
  run_cmd->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("-o,--output", out_flag, "Output directory (overrides config and SBANDIT_OUTPUT_DIR)");
  run_cmd->add_flag("--diagnostics", diagnostics, "Append sampler diagnostics to trace CSVs");

  auto* sweep_cmd = app.add_subcommand("sweep", "Run a config over its n_grid and fit the scaling exponent");
  sweep_cmd->add_option("config", config_path, "JSON config file")->required()->check(CLI::ExistingFile);
  sweep_cmd->add_option("-o,--output", out_flag, "Output directory");

  std::string kind = "countable_poly";
  std::size_t s = 2, k = 4, d = 2, m = 0;
  double beta = 2.0;
  std::uint64_t seed = 1;
  bool tables = false;
  std::vector<std::size_t> good;
  auto* hard_cmd = app.add_subcommand("hard-instance", "Build a lower-bound instance and print its summary");
  hard_cmd->add_option("--kind", kind, "countable_poly, countable_exp or uncountable");
  hard_cmd->add_option("-s", s, "Sparsity");
  hard_cmd->add_option("-K,--actions", k, "Number of actions");
  hard_cmd->add_option("--beta", beta, "Decay exponent");
  hard_cmd->add_option("-d,--dim", d, "Parameter dimension (uncountable)");
  hard_cmd->add_option("-m", m, "Rounds per context (default: minimal admissible)");
  hard_cmd->add_option("--good-actions", good, "1-based good actions (default: random)");
  hard_cmd->add_option("--seed", seed, "Seed for good actions and packing");
  hard_cmd->add_flag("--tables", tables, "Include mean-reward tables and packing points");

  sb::PosteriorCheckConfig pc;
  auto* post_cmd = app.add_subcommand("posterior-check", "Compare the MCMC sampler with the enumerated toy posterior");
  post_cmd->add_option("--samples", pc.samples, "Retained samples");
  post_cmd->add_option("--thin", pc.thin, "Steps between retained samples");
  post_cmd->add_option("--burn-in", pc.burn_in, "Discarded initial steps");
  post_cmd->add_option("--lambda", pc.lambda, "Feel-good weight");
  post_cmd->add_option("--seed", pc.seed, "Seed");

  std::string family = "cosine", decay_kind = "polynomial";
  std::size_t max_index = 64, points = 1000, p = 1;
  double length_scale = 1.0;
  auto* audit_cmd = app.add_subcommand("audit", "Run decay or Lipschitz audits on a feature family");
  audit_cmd->add_option("--family", family, "cosine, bump or relu");
  audit_cmd->add_option("--decay", decay_kind, "polynomial or exponential (cosine)");
  audit_cmd->add_option("--beta", beta, "Decay exponent (cosine)");
  audit_cmd->add_option("--max-index", max_index, "Largest audited feature index (cosine)");
  audit_cmd->add_option("--points", points, "Sampled contexts or triples");
  audit_cmd->add_option("--dim", p, "Context / parameter dimension");
  audit_cmd->add_option("--length-scale", length_scale, "Bump length scale");
  audit_cmd->add_option("--seed", seed, "Seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) {
      auto config = sb::load_config(config_path);
      config.diagnostics = config.diagnostics || diagnostics;
      const auto dir = output_dir(config, out_flag);
      const auto summary = sb::run(config, dir);
      json j{{"output_dir", dir.string()}, {"mean_regret", summary.mean}, {"stderr_regret", summary.std_error}};
      if (summary.lower_bound) j["lower_bound"] = *summary.lower_bound;
      std::cout << j.dump() << '\n';
    } else if (*sweep_cmd) {
      const auto config = sb::load_config(config_path);
      const auto dir = output_dir(config, out_flag);
      const auto result = sb::sweep(config, dir);
      std::cout << json{{"output_dir", dir.string()}, {"slope", result.fit.slope},
                        {"r_squared", result.fit.r_squared}, {"mean_regret", result.fit.mean_regret}}
                       .dump()
                << '\n';
    } else if (*hard_cmd) {
      sb::HardInstanceSpec spec{sb::parse_hard_kind(kind), s, k, beta, d, m, good};
      if (spec.m == 0) spec.m = sb::minimal_admissible_m(spec.kind, s, k, beta, d);
      if (spec.good_actions.empty()) {
        sb::Rng rng = sb::make_rng(seed, 4);
        spec.good_actions = sb::random_good_actions(spec, rng);
      }
      const auto h = sb::build_hard_instance(spec, seed);
      std::cout << hard_instance_record(h, tables).dump(2) << '\n';
    } else if (*post_cmd) {
      const auto r = sb::posterior_check(pc);
      std::cout << json{{"tv", r.tv}, {"overflow", r.overflow}, {"accept_rate", r.accept_rate},
                        {"atoms", r.atoms}}
                       .dump()
                << '\n';
    } else if (*audit_cmd) {
      sb::Rng rng = sb::make_rng(seed, 0);
      json j{{"family", family}};
      if (family == "cosine") {
        sb::DecayProfile decay{sb::parse_decay_kind(decay_kind), beta};
        decay.validate();
        const auto fam = sb::cosine_family(decay, p);
        const double excess = sb::audit_decay(fam, max_index, points, rng);
        j["max_excess_over_envelope"] = excess;
        j["pass"] = excess <= 1e-12;
      } else {
        const auto map = family == "bump" ? sb::gaussian_bump_map(p, length_scale)
                         : family == "relu" ? sb::relu_map(p)
                                            : throw sb::Error(sb::ErrorCode::kConfigError,
                                                              "unknown family '" + family + "'");
        const double ratio = sb::audit_lipschitz(map, points, rng);
        j["max_lipschitz_ratio"] = ratio;
        j["pass"] = ratio <= 1.0 + 1e-12;
      }
      std::cout << j.dump() << '\n';
      if (!j["pass"].get<bool>()) return 3;
    }
  } catch (const sb::Error& e) {
    return fail(std::string(sb::to_string(e.code())), e.what());
  } catch (const std::exception& e) {
    return fail("InternalError", e.what());
  }
  return 0;
}
