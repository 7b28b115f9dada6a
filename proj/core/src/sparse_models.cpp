#include "sparse_bandit/sparse_models.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_set>

#include "sparse_bandit/error.hpp"

namespace sparse_bandit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Draws m in {1..cap} with probability proportional to 2^{-m}.
std::size_t sample_geometric_size(std::size_t cap, Rng& rng) {
  const double total = 1.0 - std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(cap, 1000)));
  const double u = uniform01(rng) * total;
  double acc = 0.0;
  for (std::size_t m = 1; m <= cap; ++m) {
    acc += std::ldexp(1.0, -static_cast<int>(std::min<std::size_t>(m, 1000)));
    if (u < acc) return m;
  }
  return cap;
}

template <class Visitor>
decltype(auto) visit_model(const SparseParam& nu, const FeatureModel& features,
                           Visitor&& visitor) {
  if (const auto* c = std::get_if<CountableParam>(&nu)) {
    const auto* family = std::get_if<CountableFeatureFamily>(&features);
    if (!family) {
      throw Error(ErrorCode::kUnsupportedModel, "countable parameter needs a countable family");
    }
    return visitor(*c, *family);
  }
  const auto& atomic = std::get<AtomicParam>(nu);
  const auto* map = std::get_if<ParametricFeatureMap>(&features);
  if (!map) {
    throw Error(ErrorCode::kUnsupportedModel, "atomic parameter needs a parametric feature map");
  }
  return visitor(atomic, *map);
}

std::vector<double> parse_doubles(const std::string& text, char sep) {
  std::vector<double> out;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    const std::size_t next = std::min(text.find(sep, pos), text.size());
    const std::string token = text.substr(pos, next - pos);
    if (!token.empty()) out.push_back(std::stod(token));
    pos = next + 1;
  }
  return out;
}

std::string join_doubles(const std::vector<double>& values, char sep) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += format_double(values[i]);
  }
  return out;
}

}  // namespace

std::size_t param_size(const SparseParam& nu) {
  return std::visit([](const auto& p) { return p.size(); }, nu);
}

double eval_reward(const CountableParam& nu, const CountableFeatureFamily& family,
                   std::span<const double> item) {
  double value = 0.0;
  for (std::size_t k = 0; k < nu.support.size(); ++k) {
    value += nu.weights[k] * family(nu.support[k], item);
  }
  return value;
}

double eval_reward(const AtomicParam& nu, const ParametricFeatureMap& map,
                   std::span<const double> item) {
  double value = 0.0;
  for (std::size_t k = 0; k < nu.weights.size(); ++k) {
    value += nu.weights[k] * map(item, nu.atoms[k]);
  }
  return value;
}

double eval_reward(const SparseParam& nu, const FeatureModel& features,
                   const ContextSlice& x, Action a) {
  if (a >= x.num_actions()) {
    throw Error(ErrorCode::kInvalidAction, "action " + std::to_string(a) + " outside context");
  }
  return visit_model(nu, features, [&](const auto& param, const auto& feats) {
    return eval_reward(param, feats, x.item(a));
  });
}

BestAction eval_best(const SparseParam& nu, const FeatureModel& features,
                     const ContextSlice& x) {
  return visit_model(nu, features, [&](const auto& param, const auto& feats) {
    BestAction best{0, eval_reward(param, feats, x.item(0))};
    for (Action a = 1; a < x.num_actions(); ++a) {
      const double v = eval_reward(param, feats, x.item(a));
      if (v > best.value) best = {a, v};
    }
    return best;
  });
}

CountableParam sample_prior_countable(std::size_t d_eff, Rng& rng) {
  if (d_eff < 1) throw Error(ErrorCode::kInvalidParameter, "d_eff must be >= 1");
  const std::size_t m = sample_geometric_size(d_eff, rng);
  // Floyd's algorithm: uniform m-subset of {1..d_eff}.
  std::unordered_set<std::size_t> chosen;
  for (std::size_t j = d_eff - m + 1; j <= d_eff; ++j) {
    std::uniform_int_distribution<std::size_t> pick(1, j);
    const std::size_t t = pick(rng);
    chosen.insert(chosen.count(t) ? j : t);
  }
  CountableParam nu;
  nu.support.assign(chosen.begin(), chosen.end());
  std::sort(nu.support.begin(), nu.support.end());
  nu.weights = sample_uniform_l1_ball(m, rng);
  return nu;
}

AtomicParam sample_prior_atomic(std::size_t dim, std::size_t m_cap, Rng& rng) {
  if (dim < 1 || m_cap < 1) {
    throw Error(ErrorCode::kInvalidParameter, "atomic prior needs dim >= 1 and m_cap >= 1");
  }
  const std::size_t m = sample_geometric_size(m_cap, rng);
  AtomicParam nu;
  nu.weights = sample_uniform_l1_ball(m, rng);
  nu.atoms.reserve(m);
  for (std::size_t i = 0; i < m; ++i) nu.atoms.push_back(sample_uniform_l2_ball(dim, rng));
  return nu;
}

double log_size_mass(std::size_t m, std::size_t cap) {
  if (m < 1 || m > cap) return kNegInf;
  // sum_{j<=cap} 2^{-j} = 1 - 2^{-cap}
  const double normalizer = -std::expm1(-static_cast<double>(cap) * std::log(2.0));
  return -static_cast<double>(m) * std::log(2.0) - std::log(normalizer);
}

double log_binomial(std::size_t n, std::size_t k) {
  if (k > n) return kNegInf;
  return std::lgamma(static_cast<double>(n) + 1.0) - std::lgamma(static_cast<double>(k) + 1.0) -
         std::lgamma(static_cast<double>(n - k) + 1.0);
}

double log_prior(const CountableParam& nu, std::size_t d_eff) {
  const std::size_t m = nu.support.size();
  if (m == 0 || m > d_eff || nu.weights.size() != m) return kNegInf;
  for (std::size_t k = 0; k < m; ++k) {
    if (nu.support[k] < 1 || nu.support[k] > d_eff) return kNegInf;
    if (k > 0 && nu.support[k] <= nu.support[k - 1]) return kNegInf;
  }
  if (l1_norm(nu.weights) > 1.0) return kNegInf;
  return log_size_mass(m, d_eff) - log_binomial(d_eff, m) + log_uniform_l1_density(m);
}

double log_prior(const AtomicParam& nu, std::size_t dim, std::size_t m_cap) {
  const std::size_t m = nu.weights.size();
  if (m == 0 || m > m_cap || nu.atoms.size() != m) return kNegInf;
  if (l1_norm(nu.weights) > 1.0) return kNegInf;
  for (const auto& theta : nu.atoms) {
    if (theta.size() != dim || l2_norm(theta) > 1.0) return kNegInf;
  }
  return log_size_mass(m, m_cap) + log_uniform_l1_density(m) +
         static_cast<double>(m) * log_uniform_l2_density(dim);
}

BanditInstance make_sparse_instance(std::vector<ContextSlice> schedule,
                                    const SparseParam& truth,
                                    const FeatureModel& features, NoiseSpec noise,
                                    std::string name) {
  auto fstar = [&truth, &features](const ContextSlice& x, Action a) {
    return eval_reward(truth, features, x, a);
  };
  return BanditInstance(std::move(schedule), fstar, noise, std::move(name));
}

std::string to_record(const SparseParam& nu) {
  if (const auto* c = std::get_if<CountableParam>(&nu)) {
    std::string out = "countable support=";
    for (std::size_t k = 0; k < c->support.size(); ++k) {
      if (k) out += ',';
      out += std::to_string(c->support[k]);
    }
    return out + " weights=" + join_doubles(c->weights, ',');
  }
  const auto& a = std::get<AtomicParam>(nu);
  const std::size_t dim = a.atoms.empty() ? 0 : a.atoms.front().size();
  std::string out = "atomic dim=" + std::to_string(dim) +
                    " weights=" + join_doubles(a.weights, ',') + " atoms=";
  for (std::size_t i = 0; i < a.atoms.size(); ++i) {
    if (i) out += ';';
    out += join_doubles(a.atoms[i], ':');
  }
  return out;
}

SparseParam parse_record(const std::string& record) {
  std::istringstream in(record);
  std::string kind;
  in >> kind;
  std::string field;
  auto value_of = [&](const std::string& key) {
    if (!(in >> field) || field.rfind(key + "=", 0) != 0) {
      throw Error(ErrorCode::kConfigError, "parameter record missing '" + key + "'");
    }
    return field.substr(key.size() + 1);
  };
  if (kind == "countable") {
    CountableParam nu;
    for (double idx : parse_doubles(value_of("support"), ',')) {
      nu.support.push_back(static_cast<std::size_t>(idx));
    }
    nu.weights = parse_doubles(value_of("weights"), ',');
    return nu;
  }
  if (kind == "atomic") {
    AtomicParam nu;
    value_of("dim");
    nu.weights = parse_doubles(value_of("weights"), ',');
    const std::string atoms = value_of("atoms");
    std::size_t pos = 0;
    while (pos < atoms.size()) {
      const std::size_t next = std::min(atoms.find(';', pos), atoms.size());
      nu.atoms.push_back(parse_doubles(atoms.substr(pos, next - pos), ':'));
      pos = next + 1;
    }
    return nu;
  }
  throw Error(ErrorCode::kConfigError, "unknown parameter record kind '" + kind + "'");
}

}  // namespace sparse_bandit
