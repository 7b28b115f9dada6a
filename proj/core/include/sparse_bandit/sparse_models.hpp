#pragma once

// Sparse parameters, reward evaluation f_nu and the two sparsity priors.

#include <cstddef>
#include <string>
#include <variant>
#include <vector>

#include "sparse_bandit/core.hpp"
#include "sparse_bandit/features.hpp"
#include "sparse_bandit/random.hpp"

namespace sparse_bandit {

// Countable sparsity: f(z) = sum_k weights[k] * phi_{support[k]}(z). The
// support is strictly increasing and 1-based; weights are dense over it.
struct CountableParam {
  std::vector<std::size_t> support;
  std::vector<double> weights;

  std::size_t size() const { return support.size(); }
  friend bool operator==(const CountableParam&, const CountableParam&) = default;
};

// Uncountable sparsity: f(z) = sum_i weights[i] * phi(z, atoms[i]).
struct AtomicParam {
  std::vector<double> weights;
  std::vector<std::vector<double>> atoms;

  std::size_t size() const { return weights.size(); }
  friend bool operator==(const AtomicParam&, const AtomicParam&) = default;
};

using SparseParam = std::variant<CountableParam, AtomicParam>;

std::size_t param_size(const SparseParam& nu);

double eval_reward(const CountableParam& nu, const CountableFeatureFamily& family,
                   std::span<const double> item);
double eval_reward(const AtomicParam& nu, const ParametricFeatureMap& map,
                   std::span<const double> item);
double eval_reward(const SparseParam& nu, const FeatureModel& features,
                   const ContextSlice& x, Action a);

struct BestAction {
  Action action = 0;
  double value = 0.0;
};

// argmax_a f_nu(x, a) with ties to the lowest index, and the max value.
BestAction eval_best(const SparseParam& nu, const FeatureModel& features,
                     const ContextSlice& x);

CountableParam sample_prior_countable(std::size_t d_eff, Rng& rng);
AtomicParam sample_prior_atomic(std::size_t dim, std::size_t m_cap, Rng& rng);

// Exact log-densities including every normalizing constant (dimension-changing
// Metropolis-Hastings ratios depend on them). Out-of-support parameters give
// -infinity.
double log_prior(const CountableParam& nu, std::size_t d_eff);
double log_prior(const AtomicParam& nu, std::size_t dim, std::size_t m_cap);

// log of 2^{-m} / sum_{j <= cap} 2^{-j}.
double log_size_mass(std::size_t m, std::size_t cap);
double log_binomial(std::size_t n, std::size_t k);

BanditInstance make_sparse_instance(std::vector<ContextSlice> schedule,
                                    const SparseParam& truth,
                                    const FeatureModel& features, NoiseSpec noise,
                                    std::string name);

// Self-describing one-line text record, e.g.
//   countable support=1,3 weights=0.5,-0.5
//   atomic dim=2 weights=0.5,0.25 atoms=0.1:0.2;-0.3:0.4
std::string to_record(const SparseParam& nu);
SparseParam parse_record(const std::string& record);

}  // namespace sparse_bandit
