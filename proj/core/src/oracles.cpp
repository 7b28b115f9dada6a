#include "sparse_bandit/oracles.hpp"

#include <algorithm>
#include <cmath>
#include <bit>
#include <limits>
#include <map>

#include "sparse_bandit/error.hpp"
#include "sparse_bandit/fgts.hpp"

namespace sparse_bandit {

namespace {

using CellKey = std::pair<std::uint32_t, std::vector<long>>;

long grid_position(double w, double spacing) { return std::lround((w + 1.0) / spacing); }

std::map<CellKey, std::size_t> index_cells(const DiscreteDistribution& dist,
                                           const GridSpec& grid) {
  std::map<CellKey, std::size_t> index;
  const double h = grid.spacing();
  for (std::size_t i = 0; i < dist.atoms.size(); ++i) {
    std::vector<long> pos;
    for (double w : dist.atoms[i].param.weights) pos.push_back(grid_position(w, h));
    index.emplace(CellKey{dist.atoms[i].subset, std::move(pos)}, i);
  }
  return index;
}

}  // namespace

GridSpec GridSpec::uniform(std::size_t d_eff, std::size_t points) {
  if (points < 3 || points % 2 == 0) {
    throw Error(ErrorCode::kInvalidParameter, "grid needs an odd number (>= 3) of points");
  }
  GridSpec grid;
  grid.d_eff = d_eff;
  const double h = 2.0 / static_cast<double>(points - 1);
  const long half = static_cast<long>(points / 2);
  for (long k = -half; k <= half; ++k) grid.weight_grid.push_back(static_cast<double>(k) * h);
  return grid;
}

double GridSpec::spacing() const {
  if (weight_grid.size() < 2) throw Error(ErrorCode::kInvalidParameter, "grid too coarse");
  return weight_grid[1] - weight_grid[0];
}

double box_l1_ball_volume(std::span<const double> lo, std::span<const double> hi) {
  const std::size_t m = lo.size();
  // Split every coordinate at 0 and reflect into the positive orthant, where
  // inclusion-exclusion over the box corners gives the simplex-slice volume.
  std::vector<std::vector<std::pair<double, double>>> pieces(m);
  for (std::size_t i = 0; i < m; ++i) {
    if (lo[i] < 0.0 && hi[i] > 0.0) {
      pieces[i] = {{0.0, -lo[i]}, {0.0, hi[i]}};
    } else if (hi[i] <= 0.0) {
      pieces[i] = {{-hi[i], -lo[i]}};
    } else {
      pieces[i] = {{lo[i], hi[i]}};
    }
  }
  double factorial = 1.0;
  for (std::size_t i = 2; i <= m; ++i) factorial *= static_cast<double>(i);

  double total = 0.0;
  std::vector<std::size_t> choice(m, 0);
  while (true) {
    for (std::uint32_t corner = 0; corner < (1u << m); ++corner) {
      double sum = 0.0;
      int sign = 1;
      for (std::size_t i = 0; i < m; ++i) {
        const auto& [a, b] = pieces[i][choice[i]];
        if (corner & (1u << i)) {
          sum += b;
          sign = -sign;
        } else {
          sum += a;
        }
      }
      const double slack = 1.0 - sum;
      if (slack > 0.0) total += sign * std::pow(slack, static_cast<double>(m)) / factorial;
    }
    std::size_t i = 0;
    while (i < m && ++choice[i] == pieces[i].size()) choice[i++] = 0;
    if (i == m) break;
  }
  return std::max(0.0, total);
}

DiscreteDistribution discretized_prior(const GridSpec& grid) {
  if (grid.d_eff < 1 || grid.d_eff > 3) {
    throw Error(ErrorCode::kInvalidParameter, "grid oracle supports d_eff in [1, 3]");
  }
  const double h = grid.spacing();
  const std::size_t g = grid.weight_grid.size();

  std::size_t estimate = 0;
  for (std::uint32_t mask = 1; mask < (1u << grid.d_eff); ++mask) {
    estimate += static_cast<std::size_t>(std::pow(static_cast<double>(g), std::popcount(mask)));
  }
  if (estimate > grid.max_atoms * 8) {
    throw Error(ErrorCode::kGridTooLarge, "grid has more than " + std::to_string(grid.max_atoms) + " cells");
  }

  DiscreteDistribution dist;
  for (std::uint32_t mask = 1; mask < (1u << grid.d_eff); ++mask) {
    CountableParam base;
    for (std::size_t j = 1; j <= grid.d_eff; ++j) {
      if (mask & (1u << (j - 1))) base.support.push_back(j);
    }
    const std::size_t m = base.support.size();
    const double log_subset = log_size_mass(m, grid.d_eff) - log_binomial(grid.d_eff, m);
    const double density = std::exp(log_subset + log_uniform_l1_density(m));

    std::vector<std::size_t> idx(m, 0);
    while (true) {
      CountableParam p = base;
      std::vector<double> lo(m), hi(m);
      for (std::size_t k = 0; k < m; ++k) {
        const double w = grid.weight_grid[idx[k]];
        p.weights.push_back(w);
        lo[k] = w - h / 2.0;
        hi[k] = w + h / 2.0;
      }
      if (l1_norm(p.weights) <= 1.0 + 1e-12) {
        const double mass = density * box_l1_ball_volume(lo, hi);
        dist.atoms.push_back({std::move(p), mask, mass});
        if (dist.atoms.size() > grid.max_atoms) {
          throw Error(ErrorCode::kGridTooLarge,
                      "grid has more than " + std::to_string(grid.max_atoms) + " cells");
        }
      }
      std::size_t k = 0;
      while (k < m && ++idx[k] == g) idx[k++] = 0;
      if (k == m) break;
    }
  }
  dist.mass.reserve(dist.atoms.size());
  for (const auto& atom : dist.atoms) dist.mass.push_back(atom.prior_mass);
  return dist;
}

DiscreteDistribution enumerate_posterior(const GridSpec& grid, const History& history,
                                         double eta, double lambda,
                                         const CountableFeatureFamily& features) {
  DiscreteDistribution dist = discretized_prior(grid);
  std::vector<double> log_mass(dist.atoms.size());
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < dist.atoms.size(); ++i) {
    const auto& nu = dist.atoms[i].param;
    double total = 0.0;
    for (const auto& rec : history) {
      double best = -std::numeric_limits<double>::infinity();
      double chosen = 0.0;
      for (Action a = 0; a < rec.context.num_actions(); ++a) {
        const double v = eval_reward(nu, features, rec.context.item(a));
        best = std::max(best, v);
        if (a == rec.action) chosen = v;
      }
      total += loss_from_values(chosen, best, rec.reward, eta, lambda);
    }
    log_mass[i] = std::log(dist.atoms[i].prior_mass) - total;
    top = std::max(top, log_mass[i]);
  }
  double z = 0.0;
  for (double lm : log_mass) z += std::exp(lm - top);
  for (std::size_t i = 0; i < dist.atoms.size(); ++i) {
    dist.mass[i] = std::exp(log_mass[i] - top) / z;
  }
  return dist;
}

std::vector<double> bin_samples(const DiscreteDistribution& dist, const GridSpec& grid,
                                std::span<const CountableParam> samples) {
  const auto index = index_cells(dist, grid);
  const double h = grid.spacing();
  std::vector<double> hist(dist.atoms.size() + 1, 0.0);
  for (const auto& nu : samples) {
    std::uint32_t mask = 0;
    std::vector<long> pos;
    bool in_range = true;
    for (std::size_t k = 0; k < nu.support.size(); ++k) {
      if (nu.support[k] < 1 || nu.support[k] > grid.d_eff) {
        in_range = false;
        break;
      }
      mask |= 1u << (nu.support[k] - 1);
      pos.push_back(grid_position(nu.weights[k], h));
    }
    const auto it = in_range ? index.find({mask, pos}) : index.end();
    hist[it == index.end() ? dist.atoms.size() : it->second] += 1.0;
  }
  if (!samples.empty()) {
    for (double& v : hist) v /= static_cast<double>(samples.size());
  }
  return hist;
}

double tv_distance(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) {
    throw Error(ErrorCode::kSupportMismatch, "distributions have " + std::to_string(p.size()) +
                                                 " and " + std::to_string(q.size()) + " atoms");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) total += std::abs(p[i] - q[i]);
  return 0.5 * total;
}

McRegret mc_regret(const PolicyFactory& factory, const BanditInstance& env, std::size_t n,
                   std::size_t reps, std::uint64_t seed) {
  if (reps < 2) throw Error(ErrorCode::kInvalidParameter, "mc_regret needs reps >= 2");
  std::vector<double> totals;
  totals.reserve(reps);
  for (std::size_t r = 0; r < reps; ++r) {
    auto policy = factory();
    totals.push_back(run_episode(env, *policy, n, mix_seed(seed, r)).total());
  }
  double mean = 0.0;
  for (double t : totals) mean += t;
  mean /= static_cast<double>(reps);
  double ss = 0.0;
  for (double t : totals) ss += (t - mean) * (t - mean);
  const double var = ss / static_cast<double>(reps - 1);
  return {mean, std::sqrt(var / static_cast<double>(reps))};
}

Action OptimalPolicy::select(const History& history, const ContextSlice&, Rng&) {
  return argmax_lowest(env_->mean_rewards(history.size()));
}

}  // namespace sparse_bandit
