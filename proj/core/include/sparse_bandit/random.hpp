#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <vector>

namespace sparse_bandit {

using Rng = std::mt19937_64;

// SplitMix64 finalizer; used to derive independent child seeds so that e.g.
// the noise stream of an episode does not depend on how many draws the policy
// consumed.
std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream);

inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
  return Rng(mix_seed(seed, stream));
}

double uniform01(Rng& rng);

// Uniform on the m-dimensional l1 unit ball: a point on the (m+1)-simplex
// from normalized standard exponentials, slack coordinate dropped, random signs.
std::vector<double> sample_uniform_l1_ball(std::size_t m, Rng& rng);

// Uniform on the d-dimensional l2 unit ball: isotropic direction times U^{1/d}.
std::vector<double> sample_uniform_l2_ball(std::size_t d, Rng& rng);

// log(m! / 2^m): log-density of the uniform law on the m-dimensional l1 ball.
double log_uniform_l1_density(std::size_t m);

// log(Gamma(d/2 + 1) / pi^{d/2}): log-density of the uniform law on B_2^d(1).
double log_uniform_l2_density(std::size_t d);

double l1_norm(std::span<const double> v);
double l2_norm(std::span<const double> v);

}  // namespace sparse_bandit
