#include "sparse_bandit/random.hpp"

#include <cmath>
#include <numbers>

namespace sparse_bandit {

std::uint64_t mix_seed(std::uint64_t seed, std::uint64_t stream) {
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * (stream + 1);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

double uniform01(Rng& rng) {
  return std::uniform_real_distribution<double>(0.0, 1.0)(rng);
}

std::vector<double> sample_uniform_l1_ball(std::size_t m, Rng& rng) {
  std::exponential_distribution<double> expo(1.0);
  std::vector<double> w(m);
  double total = 0.0;
  for (auto& x : w) {
    x = expo(rng);
    total += x;
  }
  total += expo(rng);  // slack coordinate
  for (auto& x : w) {
    x /= total;
    if (rng() & 1ULL) x = -x;
  }
  return w;
}

std::vector<double> sample_uniform_l2_ball(std::size_t d, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  std::vector<double> theta(d);
  double norm = 0.0;
  do {
    norm = 0.0;
    for (auto& x : theta) {
      x = normal(rng);
      norm += x * x;
    }
  } while (norm == 0.0);
  norm = std::sqrt(norm);
  const double radius = std::pow(uniform01(rng), 1.0 / static_cast<double>(d));
  for (auto& x : theta) x *= radius / norm;
  return theta;
}

double log_uniform_l1_density(std::size_t m) {
  const double md = static_cast<double>(m);
  return std::lgamma(md + 1.0) - md * std::numbers::ln2;
}

double log_uniform_l2_density(std::size_t d) {
  const double half = 0.5 * static_cast<double>(d);
  return std::lgamma(half + 1.0) - half * std::log(std::numbers::pi);
}

double l1_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += std::abs(x);
  return s;
}

double l2_norm(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return std::sqrt(s);
}

}  // namespace sparse_bandit
