#pragma once

// Lower-bound constructions: sequences of s repeated contexts, each with a
// single good action, realized inside the countable (polynomial or exponential
// decay) and uncountable sparse models.
//
// Context tokens z_{i,a} are items {i, a} with 1-based i and a. Good actions
// b_i are 1-based as well.

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "sparse_bandit/core.hpp"
#include "sparse_bandit/features.hpp"
#include "sparse_bandit/random.hpp"
#include "sparse_bandit/sparse_models.hpp"

namespace sparse_bandit {

enum class HardKind { kCountablePoly, kCountableExp, kUncountable };

HardKind parse_hard_kind(const std::string& name);
std::string to_string(HardKind kind);

// (ceil(i / l), (i - 1) mod l + 1).
std::pair<std::size_t, std::size_t> rho(std::size_t i, std::size_t block_len);

// Base-K digits of i - 1, most significant first, each shifted to [1, K].
std::vector<std::size_t> zeta(std::size_t i, std::size_t num_actions, std::size_t len);
std::size_t zeta_inverse(const std::vector<std::size_t>& digits, std::size_t num_actions);

// K^e, throwing InvalidParameter past `limit`.
std::size_t checked_power(std::size_t base, std::size_t exponent,
                          std::size_t limit = 100'000'000);

struct HardInstanceSpec {
  HardKind kind = HardKind::kCountablePoly;
  std::size_t s = 1;
  std::size_t num_actions = 2;
  double beta = 2.0;     // decay exponent; unused for uncountable
  std::size_t dim = 1;   // uncountable only
  std::size_t m = 1;     // rounds per context
  std::vector<std::size_t> good_actions;

  // ceil(1/beta) for exponential decay with beta < 1, else 1.
  std::size_t block_len() const;
  // Number of distinct contexts: s, s * ceil(1/beta) or s * d.
  std::size_t num_contexts() const;
  std::size_t horizon() const { return num_contexts() * m; }
  // s * sqrt(K / (4m)).
  double delta() const;
};

// Smallest m meeting the kind's admissibility inequality.
std::size_t minimal_admissible_m(HardKind kind, std::size_t s, std::size_t num_actions,
                                 double beta, std::size_t dim);

// Throws InstanceTooSmall or BetaOutOfRange when the inequality fails.
void check_admissible(const HardInstanceSpec& spec);

std::vector<std::size_t> random_good_actions(const HardInstanceSpec& spec, Rng& rng);

struct PackedAtomSet {
  std::size_t num_blocks = 0;
  std::size_t block_size = 0;  // K^d
  std::vector<std::vector<double>> points;  // block r occupies [r * block_size, (r+1) * block_size)
  double min_distance = 0.0;

  const std::vector<double>& point(std::size_t block, std::size_t index) const {
    return points[(block - 1) * block_size + (index - 1)];
  }
};

// Greedy packing: uniform candidates in B_2^d(1) accepted when farther than
// `separation` from every accepted point. Gives up after `budget` candidates.
std::optional<PackedAtomSet> greedy_packing(std::size_t num_blocks, std::size_t block_size,
                                            std::size_t dim, double separation,
                                            std::size_t budget, Rng& rng);

struct HardInstance {
  HardInstanceSpec spec;
  std::string path;  // which construction built it
  double delta = 0.0;
  FeatureModel features;
  SparseParam truth;
  std::optional<PackedAtomSet> packing;
  BanditInstance env;

  std::size_t num_features() const;
  // Closed-form expected regret of the uniform policy: n (Delta/s) (K-1)/K.
  double uniform_regret() const;
  // Token z_i as a context slice.
  ContextSlice context_of(std::size_t i) const;
};

HardInstance build_countable_poly(std::size_t s, std::size_t num_actions, double beta,
                                  std::size_t m, std::vector<std::size_t> good_actions,
                                  NoiseSpec noise = {1.0});
HardInstance build_countable_exp(std::size_t s, std::size_t num_actions, double beta,
                                 std::size_t m, std::vector<std::size_t> good_actions,
                                 NoiseSpec noise = {1.0});
HardInstance build_uncountable(std::size_t s, std::size_t num_actions, std::size_t dim,
                               std::size_t m, std::vector<std::size_t> good_actions,
                               std::uint64_t seed, NoiseSpec noise = {1.0});
HardInstance build_hard_instance(const HardInstanceSpec& spec, std::uint64_t seed,
                                 NoiseSpec noise = {1.0});

// (1/8) sqrt(K s n), (1/8) sqrt(max(1, 1/beta) K s n) or (1/8) sqrt(K s d n).
// n must factor as num_contexts * m with admissible m.
double lower_bound_value(HardKind kind, std::size_t s, std::size_t num_actions,
                         std::size_t dim, double beta, std::size_t n);

}  // namespace sparse_bandit
