#include "sparse_bandit/hard_instances.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>

#include "sparse_bandit/error.hpp"

namespace sparse_bandit {

namespace {

constexpr std::size_t kPackingBudget = 1'000'000;

double threshold(HardKind kind, std::size_t s, std::size_t num_actions, double beta,
                 std::size_t dim) {
  const double sd = static_cast<double>(s);
  const double k = static_cast<double>(num_actions);
  switch (kind) {
    case HardKind::kCountablePoly:
      return std::pow(sd, beta + 2.0) * std::pow(k, beta + 1.0);
    case HardKind::kCountableExp: {
      const double ell = beta >= 1.0 ? 1.0 : std::ceil(1.0 / beta);
      return sd * sd * k * std::exp(std::pow(sd, beta) * std::pow(k, beta * ell));
    }
    case HardKind::kUncountable:
      return std::pow(sd, 2.0 + 2.0 / static_cast<double>(dim)) * k * k * k;
  }
  return 0.0;
}

void check_shape(HardKind kind, std::size_t s, std::size_t num_actions, double beta,
                 std::size_t dim) {
  if (num_actions < 2) throw Error(ErrorCode::kInvalidParameter, "K must be >= 2");
  if (s < 1) throw Error(ErrorCode::kInvalidParameter, "s must be >= 1");
  if (kind == HardKind::kCountablePoly && !(beta > 1.0)) {
    throw Error(ErrorCode::kBetaOutOfRange, "polynomial decay needs beta > 1");
  }
  if (kind == HardKind::kCountableExp && !(beta > 0.0 && std::isfinite(beta))) {
    throw Error(ErrorCode::kBetaOutOfRange, "exponential decay needs beta > 0");
  }
  if (kind == HardKind::kUncountable && dim < 1) {
    throw Error(ErrorCode::kInvalidParameter, "d must be >= 1");
  }
}

std::vector<std::vector<double>> tokens(std::size_t num_contexts, std::size_t num_actions) {
  std::vector<std::vector<double>> out;
  for (std::size_t i = 1; i <= num_contexts; ++i) {
    for (std::size_t a = 1; a <= num_actions; ++a) {
      out.push_back({static_cast<double>(i), static_cast<double>(a)});
    }
  }
  return out;
}

std::vector<ContextSlice> repeated_schedule(std::size_t num_contexts, std::size_t num_actions,
                                            std::size_t m) {
  std::vector<ContextSlice> schedule;
  schedule.reserve(num_contexts * m);
  for (std::size_t i = 1; i <= num_contexts; ++i) {
    std::vector<double> values;
    for (std::size_t a = 1; a <= num_actions; ++a) {
      values.push_back(static_cast<double>(i));
      values.push_back(static_cast<double>(a));
    }
    for (std::size_t r = 0; r < m; ++r) {
      schedule.emplace_back(schedule.size(), num_actions, 2, values);
    }
  }
  return schedule;
}

std::size_t token_index(double v) { return static_cast<std::size_t>(std::llround(v)); }

// Digit table: digits[(w - 1) * len + q] = zeta(w)_{q+1}.
std::vector<std::size_t> digit_table(std::size_t num_actions, std::size_t len) {
  const std::size_t count = checked_power(num_actions, len);
  std::vector<std::size_t> table;
  table.reserve(count * len);
  for (std::size_t w = 1; w <= count; ++w) {
    const auto digits = zeta(w, num_actions, len);
    table.insert(table.end(), digits.begin(), digits.end());
  }
  return table;
}

// Block layout shared by both countable constructions: s blocks of K^l
// features, phi_j(z_{i,a}) = Delta 1{block(j) = rho_1(i)} 1{a = zeta_{rho_2(i)}(offset(j))}.
HardInstance build_countable(HardInstanceSpec spec, DecayProfile decay, std::string path,
                             NoiseSpec noise) {
  check_admissible(spec);
  const std::size_t s = spec.s;
  const std::size_t k = spec.num_actions;
  const std::size_t ell = spec.block_len();
  const std::size_t block = checked_power(k, ell);
  const std::size_t total = s * block;
  const double delta = spec.delta();
  auto digits = std::make_shared<const std::vector<std::size_t>>(digit_table(k, ell));

  CountableFeatureFamily family;
  family.name = "hard_" + to_string(spec.kind);
  family.decay = decay;
  family.space = finite_space(tokens(spec.num_contexts(), k), "hard-instance tokens");
  family.evaluator = [=](std::size_t j, std::span<const double> z) {
    if (j > total) return 0.0;
    const auto [r, q] = rho(token_index(z[0]), ell);
    const std::size_t jb = (j - 1) / block + 1;
    const std::size_t w = (j - 1) % block + 1;
    const bool hit = jb == r && token_index(z[1]) == (*digits)[(w - 1) * ell + (q - 1)];
    return hit ? delta : 0.0;
  };

  CountableParam truth;
  for (std::size_t r = 1; r <= s; ++r) {
    const std::vector<std::size_t> part(spec.good_actions.begin() + static_cast<std::ptrdiff_t>((r - 1) * ell),
                                        spec.good_actions.begin() + static_cast<std::ptrdiff_t>(r * ell));
    truth.support.push_back((r - 1) * block + zeta_inverse(part, k));
    truth.weights.push_back(1.0 / static_cast<double>(s));
  }

  FeatureModel features = family;
  SparseParam nu = truth;
  auto env = make_sparse_instance(repeated_schedule(spec.num_contexts(), k, spec.m), nu,
                                  features, noise, family.name);
  return HardInstance{std::move(spec), std::move(path), delta, std::move(features),
                      std::move(nu), std::nullopt, std::move(env)};
}

}  // namespace

HardKind parse_hard_kind(const std::string& name) {
  if (name == "countable_poly") return HardKind::kCountablePoly;
  if (name == "countable_exp") return HardKind::kCountableExp;
  if (name == "uncountable") return HardKind::kUncountable;
  throw Error(ErrorCode::kConfigError, "unknown hard-instance kind '" + name + "'");
}

std::string to_string(HardKind kind) {
  switch (kind) {
    case HardKind::kCountablePoly: return "countable_poly";
    case HardKind::kCountableExp: return "countable_exp";
    case HardKind::kUncountable: return "uncountable";
  }
  return "unknown";
}

std::pair<std::size_t, std::size_t> rho(std::size_t i, std::size_t block_len) {
  if (i < 1 || block_len < 1) {
    throw Error(ErrorCode::kIndexOutOfRange, "rho needs i >= 1 and block length >= 1");
  }
  return {(i - 1) / block_len + 1, (i - 1) % block_len + 1};
}

std::size_t checked_power(std::size_t base, std::size_t exponent, std::size_t limit) {
  std::size_t out = 1;
  for (std::size_t e = 0; e < exponent; ++e) {
    if (out > limit / base) {
      throw Error(ErrorCode::kInvalidParameter,
                  std::to_string(base) + "^" + std::to_string(exponent) + " is too large");
    }
    out *= base;
  }
  return out;
}

std::vector<std::size_t> zeta(std::size_t i, std::size_t num_actions, std::size_t len) {
  const std::size_t count = checked_power(num_actions, len);
  if (i < 1 || i > count) {
    throw Error(ErrorCode::kIndexOutOfRange,
                "zeta index " + std::to_string(i) + " outside [1, " + std::to_string(count) + "]");
  }
  std::vector<std::size_t> digits(len);
  std::size_t rest = i - 1;
  for (std::size_t q = len; q-- > 0;) {
    digits[q] = rest % num_actions + 1;
    rest /= num_actions;
  }
  return digits;
}

std::size_t zeta_inverse(const std::vector<std::size_t>& digits, std::size_t num_actions) {
  std::size_t i = 0;
  for (std::size_t d : digits) {
    if (d < 1 || d > num_actions) {
      throw Error(ErrorCode::kIndexOutOfRange, "digit " + std::to_string(d) + " outside [1, K]");
    }
    i = i * num_actions + (d - 1);
  }
  return i + 1;
}

std::size_t HardInstanceSpec::block_len() const {
  if (kind == HardKind::kCountableExp && beta > 0.0 && beta < 1.0) {
    return static_cast<std::size_t>(std::ceil(1.0 / beta));
  }
  return 1;
}

std::size_t HardInstanceSpec::num_contexts() const {
  if (kind == HardKind::kUncountable) return s * dim;
  return s * block_len();
}

double HardInstanceSpec::delta() const {
  return static_cast<double>(s) *
         std::sqrt(static_cast<double>(num_actions) / (4.0 * static_cast<double>(m)));
}

std::size_t minimal_admissible_m(HardKind kind, std::size_t s, std::size_t num_actions,
                                 double beta, std::size_t dim) {
  check_shape(kind, s, num_actions, beta, dim);
  const double t = threshold(kind, s, num_actions, beta, dim);
  if (!(t < 1e15)) {
    throw Error(ErrorCode::kInstanceTooSmall, "admissible horizon exceeds 1e15 rounds");
  }
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t * (1.0 - 1e-12))));
}

void check_admissible(const HardInstanceSpec& spec) {
  const std::size_t need =
      minimal_admissible_m(spec.kind, spec.s, spec.num_actions, spec.beta, spec.dim);
  if (spec.m < need) {
    throw Error(ErrorCode::kInstanceTooSmall,
                "m = " + std::to_string(spec.m) + " below the admissible " + std::to_string(need));
  }
  if (spec.good_actions.size() != spec.num_contexts()) {
    throw Error(ErrorCode::kBadActionSequence,
                "expected " + std::to_string(spec.num_contexts()) + " good actions, got " +
                    std::to_string(spec.good_actions.size()));
  }
  for (std::size_t b : spec.good_actions) {
    if (b < 1 || b > spec.num_actions) {
      throw Error(ErrorCode::kBadActionSequence, "good action " + std::to_string(b) + " outside [1, K]");
    }
  }
}

std::vector<std::size_t> random_good_actions(const HardInstanceSpec& spec, Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(1, spec.num_actions);
  std::vector<std::size_t> b(spec.num_contexts());
  for (auto& x : b) x = pick(rng);
  return b;
}

std::optional<PackedAtomSet> greedy_packing(std::size_t num_blocks, std::size_t block_size,
                                            std::size_t dim, double separation,
                                            std::size_t budget, Rng& rng) {
  const std::size_t want = num_blocks * block_size;
  std::vector<std::vector<double>> points;
  points.reserve(want);
  auto distance = [](const std::vector<double>& x, const std::vector<double>& y) {
    double acc = 0.0;
    for (std::size_t c = 0; c < x.size(); ++c) acc += (x[c] - y[c]) * (x[c] - y[c]);
    return std::sqrt(acc);
  };
  for (std::size_t tries = 0; tries < budget && points.size() < want; ++tries) {
    auto candidate = sample_uniform_l2_ball(dim, rng);
    const bool ok = std::all_of(points.begin(), points.end(), [&](const auto& p) {
      return distance(p, candidate) > separation;
    });
    if (ok) points.push_back(std::move(candidate));
  }
  if (points.size() < want) return std::nullopt;

  PackedAtomSet set;
  set.num_blocks = num_blocks;
  set.block_size = block_size;
  set.min_distance = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < points.size(); ++i) {
    for (std::size_t j = i + 1; j < points.size(); ++j) {
      set.min_distance = std::min(set.min_distance, distance(points[i], points[j]));
    }
  }
  set.points = std::move(points);
  return set;
}

std::size_t HardInstance::num_features() const {
  if (packing) return packing->points.size();
  return spec.s * checked_power(spec.num_actions, spec.block_len());
}

double HardInstance::uniform_regret() const {
  const double k = static_cast<double>(spec.num_actions);
  return static_cast<double>(spec.horizon()) * (delta / static_cast<double>(spec.s)) *
         (k - 1.0) / k;
}

ContextSlice HardInstance::context_of(std::size_t i) const {
  if (i < 1 || i > spec.num_contexts()) {
    throw Error(ErrorCode::kIndexOutOfRange, "context index " + std::to_string(i));
  }
  return env.context((i - 1) * spec.m);
}

HardInstance build_countable_poly(std::size_t s, std::size_t num_actions, double beta,
                                  std::size_t m, std::vector<std::size_t> good_actions,
                                  NoiseSpec noise) {
  HardInstanceSpec spec{HardKind::kCountablePoly, s, num_actions, beta, 1, m,
                        std::move(good_actions)};
  return build_countable(std::move(spec), {DecayKind::kPolynomial, beta}, "polynomial", noise);
}

HardInstance build_countable_exp(std::size_t s, std::size_t num_actions, double beta,
                                 std::size_t m, std::vector<std::size_t> good_actions,
                                 NoiseSpec noise) {
  HardInstanceSpec spec{HardKind::kCountableExp, s, num_actions, beta, 1, m,
                        std::move(good_actions)};
  const std::string path = beta >= 1.0 ? "exponential_beta_ge_1" : "exponential_beta_lt_1";
  return build_countable(std::move(spec), {DecayKind::kExponential, beta}, path, noise);
}

HardInstance build_uncountable(std::size_t s, std::size_t num_actions, std::size_t dim,
                               std::size_t m, std::vector<std::size_t> good_actions,
                               std::uint64_t seed, NoiseSpec noise) {
  HardInstanceSpec spec{HardKind::kUncountable, s, num_actions, 0.0, dim, m,
                        std::move(good_actions)};
  check_admissible(spec);
  const std::size_t k = num_actions;
  const std::size_t block = checked_power(k, dim);
  const double delta = spec.delta();

  std::optional<PackedAtomSet> packing;
  for (std::uint64_t attempt = 0; attempt < 2 && !packing; ++attempt) {
    Rng rng = make_rng(seed, 100 + attempt);
    packing = greedy_packing(s, block, dim, delta, kPackingBudget, rng);
  }
  if (!packing) {
    throw Error(ErrorCode::kPackingFailed,
                "could not place " + std::to_string(s * block) + " points at separation " +
                    format_double(delta));
  }
  auto theta_set = std::make_shared<const PackedAtomSet>(*packing);
  auto digits = std::make_shared<const std::vector<std::size_t>>(digit_table(k, dim));

  ParametricFeatureMap map;
  map.name = "hard_uncountable";
  map.param_dim = dim;
  map.space = finite_space(tokens(spec.num_contexts(), k), "hard-instance tokens");
  // Exact on the packing; elsewhere the max of 1-Lipschitz hats of height Delta
  // centred on the matching packing points.
  map.evaluator = [=](std::span<const double> z, std::span<const double> theta) {
    const auto [r, q] = rho(token_index(z[0]), dim);
    const std::size_t a = token_index(z[1]);
    double value = 0.0;
    for (std::size_t w = 1; w <= block; ++w) {
      if ((*digits)[(w - 1) * dim + (q - 1)] != a) continue;
      const auto& p = theta_set->point(r, w);
      double acc = 0.0;
      for (std::size_t c = 0; c < dim; ++c) acc += (theta[c] - p[c]) * (theta[c] - p[c]);
      value = std::max(value, delta - std::sqrt(acc));
    }
    return value;
  };
  map.sample_param = [theta_set](Rng& rng) {
    std::uniform_int_distribution<std::size_t> pick(0, theta_set->points.size() - 1);
    return theta_set->points[pick(rng)];
  };

  AtomicParam truth;
  for (std::size_t r = 1; r <= s; ++r) {
    const std::vector<std::size_t> part(spec.good_actions.begin() + static_cast<std::ptrdiff_t>((r - 1) * dim),
                                        spec.good_actions.begin() + static_cast<std::ptrdiff_t>(r * dim));
    truth.atoms.push_back(theta_set->point(r, zeta_inverse(part, k)));
    truth.weights.push_back(1.0 / static_cast<double>(s));
  }

  FeatureModel features = map;
  SparseParam nu = truth;
  auto env = make_sparse_instance(repeated_schedule(spec.num_contexts(), k, m), nu, features,
                                  noise, map.name);
  return HardInstance{std::move(spec), "uncountable", delta, std::move(features), std::move(nu),
                      std::move(packing), std::move(env)};
}

HardInstance build_hard_instance(const HardInstanceSpec& spec, std::uint64_t seed,
                                 NoiseSpec noise) {
  switch (spec.kind) {
    case HardKind::kCountablePoly:
      return build_countable_poly(spec.s, spec.num_actions, spec.beta, spec.m,
                                  spec.good_actions, noise);
    case HardKind::kCountableExp:
      return build_countable_exp(spec.s, spec.num_actions, spec.beta, spec.m,
                                 spec.good_actions, noise);
    case HardKind::kUncountable:
      return build_uncountable(spec.s, spec.num_actions, spec.dim, spec.m, spec.good_actions,
                               seed, noise);
  }
  throw Error(ErrorCode::kConfigError, "unknown hard-instance kind");
}

double lower_bound_value(HardKind kind, std::size_t s, std::size_t num_actions,
                         std::size_t dim, double beta, std::size_t n) {
  HardInstanceSpec spec{kind, s, num_actions, beta, dim, 1, {}};
  const std::size_t contexts = spec.num_contexts();
  const std::size_t need = minimal_admissible_m(kind, s, num_actions, beta, dim);
  if (n % contexts != 0 || n / contexts < need) {
    throw Error(ErrorCode::kInstanceTooSmall,
                "n = " + std::to_string(n) + " is not " + std::to_string(contexts) +
                    " * m with m >= " + std::to_string(need));
  }
  double factor = static_cast<double>(num_actions * s) * static_cast<double>(n);
  if (kind == HardKind::kCountableExp) factor *= std::max(1.0, 1.0 / beta);
  if (kind == HardKind::kUncountable) factor *= static_cast<double>(dim);
  return std::sqrt(factor) / 8.0;
}

}  // namespace sparse_bandit
