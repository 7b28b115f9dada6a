#include "sparse_bandit/features.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <utility>

#include "sparse_bandit/error.hpp"

namespace sparse_bandit {

namespace {

constexpr std::size_t kMaxEffectiveDimension = 10'000'000;

}  // namespace

void DecayProfile::validate() const {
  if (!std::isfinite(beta)) throw Error(ErrorCode::kInvalidDecay, "beta must be finite");
  if (kind == DecayKind::kPolynomial && !(beta > 1.0)) {
    throw Error(ErrorCode::kInvalidDecay, "polynomial decay requires beta > 1");
  }
  if (kind == DecayKind::kExponential && !(beta > 0.0)) {
    throw Error(ErrorCode::kInvalidDecay, "exponential decay requires beta > 0");
  }
}

double DecayProfile::envelope(std::size_t index) const {
  const double i = static_cast<double>(index);
  if (kind == DecayKind::kPolynomial) return std::pow(i, -beta / 2.0);
  return std::exp(-std::pow(i, beta) / 2.0);
}

bool DecayProfile::squared_envelope_at_most(std::size_t index, std::size_t n) const {
  const double i = static_cast<double>(index);
  const double nd = static_cast<double>(n);
  if (kind == DecayKind::kPolynomial) return std::pow(i, beta) >= nd;
  return std::pow(i, beta) >= std::log(nd);
}

DecayKind parse_decay_kind(const std::string& name) {
  if (name == "polynomial") return DecayKind::kPolynomial;
  if (name == "exponential") return DecayKind::kExponential;
  throw Error(ErrorCode::kInvalidDecay, "unknown decay kind '" + name + "'");
}

std::string to_string(DecayKind kind) {
  return kind == DecayKind::kPolynomial ? "polynomial" : "exponential";
}

std::size_t effective_dimension(const DecayProfile& profile, std::size_t n) {
  profile.validate();
  if (n == 0) throw Error(ErrorCode::kInvalidParameter, "n must be >= 1");
  // The envelope is decreasing, so the first index below the threshold bounds
  // every later one.
  for (std::size_t j = 1; j <= kMaxEffectiveDimension; ++j) {
    if (profile.squared_envelope_at_most(j, n)) return std::max<std::size_t>(1, j - 1);
  }
  throw Error(ErrorCode::kEffDimOverflow,
              "effective dimension exceeds " + std::to_string(kMaxEffectiveDimension));
}

ContextSpace unit_cube_space(std::size_t dim) {
  ContextSpace space;
  space.dim = dim;
  space.description = "[0,1]^" + std::to_string(dim);
  space.sample = [dim](Rng& rng) {
    std::vector<double> z(dim);
    for (auto& x : z) x = uniform01(rng);
    return z;
  };
  return space;
}

ContextSpace unit_ball_space(std::size_t dim) {
  ContextSpace space;
  space.dim = dim;
  space.description = "B_2^" + std::to_string(dim) + "(1)";
  space.sample = [dim](Rng& rng) { return sample_uniform_l2_ball(dim, rng); };
  return space;
}

ContextSpace finite_space(std::vector<std::vector<double>> points,
                          std::string description) {
  if (points.empty()) throw Error(ErrorCode::kInvalidParameter, "empty context set");
  ContextSpace space;
  space.dim = points.front().size();
  space.description = std::move(description);
  space.sample = [pts = std::move(points)](Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, pts.size() - 1);
    return pts[pick(rng)];
  };
  return space;
}

double CountableFeatureFamily::operator()(std::size_t index,
                                          std::span<const double> z) const {
  if (!valid_index(index)) {
    throw Error(ErrorCode::kInvalidFeatureIndex,
                name + ": feature index " + std::to_string(index) + " is not defined");
  }
  return evaluator(index, z);
}

double audit_decay(const CountableFeatureFamily& family, std::size_t max_index,
                   std::size_t sample_points, Rng& rng) {
  if (max_index < 1) throw Error(ErrorCode::kInvalidParameter, "max_index must be >= 1");
  if (family.max_index) max_index = std::min(max_index, *family.max_index);
  std::vector<double> envelope(max_index + 1);
  for (std::size_t i = 1; i <= max_index; ++i) envelope[i] = family.decay.envelope(i);

  double worst = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < sample_points; ++k) {
    const auto z = family.space.sample(rng);
    for (std::size_t i = 1; i <= max_index; ++i) {
      worst = std::max(worst, std::abs(family.evaluator(i, z)) - envelope[i]);
    }
  }
  return worst;
}

double audit_lipschitz(const ParametricFeatureMap& map, std::size_t sample_triples,
                       Rng& rng) {
  constexpr double kBallSlack = 1e-12;
  auto draw = [&](Rng& g) {
    auto theta = map.sample_param ? map.sample_param(g)
                                  : sample_uniform_l2_ball(map.param_dim, g);
    if (l2_norm(theta) > 1.0 + kBallSlack) {
      throw Error(ErrorCode::kInvalidParameter, map.name + ": audit parameter outside B_2^d(1)");
    }
    return theta;
  };

  double worst = 0.0;
  for (std::size_t k = 0; k < sample_triples; ++k) {
    const auto z = map.space.sample(rng);
    const auto theta = draw(rng);
    const auto other = draw(rng);
    double dist = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) {
      dist += (theta[j] - other[j]) * (theta[j] - other[j]);
    }
    dist = std::sqrt(dist);
    if (dist == 0.0) continue;
    worst = std::max(worst, std::abs(map(z, theta) - map(z, other)) / dist);
  }
  return worst;
}

CountableFeatureFamily cosine_family(const DecayProfile& decay, std::size_t p) {
  decay.validate();
  CountableFeatureFamily family;
  family.name = "cosine";
  family.decay = decay;
  family.space = unit_cube_space(p);
  family.evaluator = [decay](std::size_t i, std::span<const double> z) {
    return decay.envelope(i) * std::cos(std::numbers::pi * static_cast<double>(i) * z[0]);
  };
  return family;
}

ParametricFeatureMap gaussian_bump_map(std::size_t dim, double length_scale) {
  if (!(length_scale >= 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "gaussian bump needs length scale >= 1");
  }
  ParametricFeatureMap map;
  map.name = "gaussian_bump";
  map.param_dim = dim;
  map.space = unit_ball_space(dim);
  const double inv = 1.0 / (2.0 * length_scale * length_scale);
  map.evaluator = [inv](std::span<const double> z, std::span<const double> theta) {
    double sq = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) sq += (z[j] - theta[j]) * (z[j] - theta[j]);
    return std::exp(-sq * inv);
  };
  return map;
}

ParametricFeatureMap relu_map(std::size_t dim) {
  ParametricFeatureMap map;
  map.name = "relu";
  map.param_dim = dim;
  map.space = unit_ball_space(dim);
  map.evaluator = [](std::span<const double> z, std::span<const double> theta) {
    double dot = 0.0;
    for (std::size_t j = 0; j < theta.size(); ++j) dot += z[j] * theta[j];
    return std::max(0.0, dot);
  };
  return map;
}

}  // namespace sparse_bandit
