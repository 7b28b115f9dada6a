#pragma once

// Feature families for both sparsity models, envelope/Lipschitz audits and the
// effective dimension of a decay profile.

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sparse_bandit/random.hpp"

namespace sparse_bandit {

enum class DecayKind { kPolynomial, kExponential };

// Envelope of a countable family: i^{-beta/2} (polynomial, beta > 1) or
// exp(-i^beta / 2) (exponential, beta > 0). Feature indices are 1-based.
struct DecayProfile {
  DecayKind kind = DecayKind::kPolynomial;
  double beta = 2.0;

  void validate() const;
  double envelope(std::size_t index) const;
  // envelope(index)^2 <= 1/n, evaluated without forming the square.
  bool squared_envelope_at_most(std::size_t index, std::size_t n) const;
};

DecayKind parse_decay_kind(const std::string& name);
std::string to_string(DecayKind kind);

// min{i >= 1 : envelope(j)^2 <= 1/n for all j > i}, by upward scan.
std::size_t effective_dimension(const DecayProfile& profile, std::size_t n);

struct ContextSpace {
  std::size_t dim = 1;
  std::function<std::vector<double>(Rng&)> sample;
  std::string description;
};

ContextSpace unit_cube_space(std::size_t dim);
ContextSpace unit_ball_space(std::size_t dim);
ContextSpace finite_space(std::vector<std::vector<double>> points,
                          std::string description);

struct CountableFeatureFamily {
  std::string name;
  DecayProfile decay;
  ContextSpace space;
  std::function<double(std::size_t index, std::span<const double> z)> evaluator;
  std::optional<std::size_t> max_index;  // unset: every index >= 1 is valid

  double operator()(std::size_t index, std::span<const double> z) const;
  bool valid_index(std::size_t index) const {
    return index >= 1 && (!max_index || index <= *max_index);
  }
};

struct ParametricFeatureMap {
  std::string name;
  std::size_t param_dim = 1;
  ContextSpace space;
  std::function<double(std::span<const double> z, std::span<const double> theta)>
      evaluator;
  // Parameter domain used by the Lipschitz audit; defaults to U(B_2^d(1)).
  std::function<std::vector<double>(Rng&)> sample_param;

  double operator()(std::span<const double> z, std::span<const double> theta) const {
    return evaluator(z, theta);
  }
};

using FeatureModel = std::variant<CountableFeatureFamily, ParametricFeatureMap>;

// max over sampled z and i <= max_index of |phi_i(z)| - envelope(i).
double audit_decay(const CountableFeatureFamily& family, std::size_t max_index,
                   std::size_t sample_points, Rng& rng);

// max over sampled (z, theta, theta') of |phi(z,theta) - phi(z,theta')| /
// ||theta - theta'||_2. Parameters outside the unit ball are rejected.
double audit_lipschitz(const ParametricFeatureMap& map, std::size_t sample_triples,
                       Rng& rng);

// phi_i(z) = envelope(i) * cos(pi * i * z_1) on [0,1]^p.
CountableFeatureFamily cosine_family(const DecayProfile& decay, std::size_t p = 1);

// phi(z, theta) = exp(-||z - theta||^2 / (2 l^2)) with l >= 1, z in B_2^d(1).
ParametricFeatureMap gaussian_bump_map(std::size_t dim, double length_scale);

// phi(z, theta) = max(0, <theta, z>) with z in B_2^d(1).
ParametricFeatureMap relu_map(std::size_t dim);

}  // namespace sparse_bandit
