#pragma once

// Brute-force references: the feel-good posterior enumerated on a weight grid,
// total-variation distance, Monte-Carlo regret and an always-optimal policy.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "sparse_bandit/core.hpp"
#include "sparse_bandit/features.hpp"
#include "sparse_bandit/sparse_models.hpp"

namespace sparse_bandit {

// Grid cells over every nonempty subset M of [d_eff]: each weight coordinate
// on M ranges over `weight_grid`, and a cell is kept when its centre lies in
// the l1 ball. Cells tile the ball, so zero coordinates are ordinary cells.
struct GridSpec {
  std::size_t d_eff = 2;
  std::vector<double> weight_grid;  // symmetric, evenly spaced, contains 0
  std::size_t max_atoms = 100'000;

  // `points` evenly spaced values on [-1, 1]; points must be odd.
  static GridSpec uniform(std::size_t d_eff, std::size_t points);
  double spacing() const;
};

struct GridAtom {
  CountableParam param;  // cell centre; weights may be exactly 0
  std::uint32_t subset = 0;  // bit j-1 set when j is in the support
  double prior_mass = 0.0;
};

struct DiscreteDistribution {
  std::vector<GridAtom> atoms;
  std::vector<double> mass;
};

// Volume of {x in prod [lo_i, hi_i] : ||x||_1 <= 1}.
double box_l1_ball_volume(std::span<const double> lo, std::span<const double> hi);

// Subset mass is exact; a cell carries the prior probability of its
// intersection with the ball. Throws GridTooLarge past max_atoms.
DiscreteDistribution discretized_prior(const GridSpec& grid);

// Masses proportional to exp(-sum loss(cell centre)) times the cell's prior mass.
DiscreteDistribution enumerate_posterior(const GridSpec& grid, const History& history,
                                         double eta, double lambda,
                                         const CountableFeatureFamily& features);

// Histogram of chain samples over the atoms of `dist` (each sample goes to
// the cell containing it). Entry atoms.size() counts samples in no cell.
std::vector<double> bin_samples(const DiscreteDistribution& dist, const GridSpec& grid,
                                std::span<const CountableParam> samples);

// (1/2) sum |p - q|. Throws SupportMismatch when sizes differ.
double tv_distance(std::span<const double> p, std::span<const double> q);

struct McRegret {
  double mean = 0.0;
  double std_error = 0.0;
};

// Cumulative regret over `reps` episodes with seeds mix_seed(seed, rep).
McRegret mc_regret(const PolicyFactory& factory, const BanditInstance& env, std::size_t n,
                   std::size_t reps, std::uint64_t seed);

// Picks argmax of the true mean rewards; round index = history length.
class OptimalPolicy : public Policy {
 public:
  explicit OptimalPolicy(const BanditInstance& env) : env_(&env) {}
  Action select(const History& history, const ContextSlice& context, Rng& rng) override;
  std::string name() const override { return "optimal"; }

 private:
  const BanditInstance* env_;
};

}  // namespace sparse_bandit
