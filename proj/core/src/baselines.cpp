#include "sparse_bandit/baselines.hpp"

#include <cmath>
#include <utility>

#include "sparse_bandit/error.hpp"

namespace sparse_bandit {

BaselineKind parse_baseline_kind(const std::string& name) {
  if (name == "uniform") return BaselineKind::kUniform;
  if (name == "epsilon_greedy") return BaselineKind::kEpsilonGreedy;
  if (name == "vanilla_ts") return BaselineKind::kVanillaTs;
  if (name == "ridge_ucb") return BaselineKind::kRidgeUcb;
  throw Error(ErrorCode::kConfigError, "unknown baseline '" + name + "'");
}

std::string to_string(BaselineKind kind) {
  switch (kind) {
    case BaselineKind::kUniform: return "uniform";
    case BaselineKind::kEpsilonGreedy: return "epsilon_greedy";
    case BaselineKind::kVanillaTs: return "vanilla_ts";
    case BaselineKind::kRidgeUcb: return "ridge_ucb";
  }
  return "unknown";
}

void BaselineConfig::validate() const {
  if (!(epsilon >= 0.0 && epsilon <= 1.0)) {
    throw Error(ErrorCode::kInvalidParameter, "epsilon must lie in [0, 1]");
  }
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidParameter, "alpha must be > 0");
  if (!(c >= 0.0)) throw Error(ErrorCode::kInvalidParameter, "c must be >= 0");
}

Action UniformPolicy::select(const History&, const ContextSlice& context, Rng& rng) {
  return std::uniform_int_distribution<Action>(0, context.num_actions() - 1)(rng);
}

RidgeModel::RidgeModel(CountableFeatureFamily family, std::size_t d_eff, double alpha)
    : family_(std::move(family)), d_eff_(d_eff) {
  if (d_eff_ < 1) throw Error(ErrorCode::kInvalidParameter, "d_eff must be >= 1");
  if (!(alpha > 0.0)) throw Error(ErrorCode::kInvalidParameter, "alpha must be > 0");
  if (!family_.valid_index(d_eff_)) {
    throw Error(ErrorCode::kInvalidFeatureIndex,
                family_.name + " does not define feature " + std::to_string(d_eff_));
  }
  const auto d = static_cast<Eigen::Index>(d_eff_);
  inverse_ = Eigen::MatrixXd::Identity(d, d) / alpha;
  target_ = Eigen::VectorXd::Zero(d);
  theta_ = Eigen::VectorXd::Zero(d);
}

Eigen::VectorXd RidgeModel::features(std::span<const double> item) const {
  Eigen::VectorXd phi(static_cast<Eigen::Index>(d_eff_));
  for (std::size_t j = 0; j < d_eff_; ++j) {
    phi[static_cast<Eigen::Index>(j)] = family_.evaluator(j + 1, item);
  }
  return phi;
}

double RidgeModel::width(const Eigen::VectorXd& phi) const {
  return std::sqrt(std::max(0.0, phi.dot(inverse_ * phi)));
}

void RidgeModel::sync(const History& history) {
  if (history.size() < seen_) {
    throw Error(ErrorCode::kInvalidParameter, "history shrank between rounds");
  }
  if (history.size() == seen_) return;
  for (; seen_ < history.size(); ++seen_) {
    const auto& rec = history[seen_];
    const Eigen::VectorXd phi = features(rec.context.item(rec.action));
    const Eigen::VectorXd u = inverse_ * phi;
    inverse_ -= (u * u.transpose()) / (1.0 + phi.dot(u));
    target_ += rec.reward * phi;
  }
  theta_ = inverse_ * target_;
}

RidgeUcbPolicy::RidgeUcbPolicy(CountableFeatureFamily family, std::size_t d_eff,
                               double alpha, double c)
    : model_(std::move(family), d_eff, alpha), c_(c) {}

Action RidgeUcbPolicy::select(const History& history, const ContextSlice& context, Rng&) {
  model_.sync(history);
  std::vector<double> scores(context.num_actions());
  for (Action a = 0; a < context.num_actions(); ++a) {
    const Eigen::VectorXd phi = model_.features(context.item(a));
    scores[a] = model_.mean(phi) + c_ * model_.width(phi);
  }
  return argmax_lowest(scores);
}

EpsilonGreedyPolicy::EpsilonGreedyPolicy(CountableFeatureFamily family, std::size_t d_eff,
                                         double alpha, double epsilon)
    : model_(std::move(family), d_eff, alpha), epsilon_(epsilon) {}

Action EpsilonGreedyPolicy::select(const History& history, const ContextSlice& context,
                                   Rng& rng) {
  model_.sync(history);
  const double u = uniform01(rng);
  const Action random_action =
      std::uniform_int_distribution<Action>(0, context.num_actions() - 1)(rng);
  if (u < epsilon_) return random_action;
  std::vector<double> scores(context.num_actions());
  for (Action a = 0; a < context.num_actions(); ++a) {
    scores[a] = model_.mean(model_.features(context.item(a)));
  }
  return argmax_lowest(scores);
}

std::unique_ptr<Policy> make_baseline(const BaselineConfig& config,
                                      const FeatureModel& features,
                                      const PriorSpec& prior, const FgtsConfig& fgts) {
  config.validate();
  switch (config.kind) {
    case BaselineKind::kUniform:
      return std::make_unique<UniformPolicy>();
    case BaselineKind::kVanillaTs: {
      FgtsConfig vanilla = fgts;
      vanilla.lambda = 0.0;
      return std::make_unique<FgtsPolicy>(features, prior, vanilla, "vanilla_ts");
    }
    case BaselineKind::kRidgeUcb:
    case BaselineKind::kEpsilonGreedy:
      break;
  }
  const auto* family = std::get_if<CountableFeatureFamily>(&features);
  const auto* countable = std::get_if<CountablePrior>(&prior);
  if (!family || !countable) {
    throw Error(ErrorCode::kUnsupportedModel,
                to_string(config.kind) + " needs a countable feature family");
  }
  if (config.kind == BaselineKind::kRidgeUcb) {
    return std::make_unique<RidgeUcbPolicy>(*family, countable->d_eff, config.alpha, config.c);
  }
  return std::make_unique<EpsilonGreedyPolicy>(*family, countable->d_eff, config.alpha,
                                               config.epsilon);
}

}  // namespace sparse_bandit
