#pragma once

// Reference policies: uniform, ridge UCB and epsilon-greedy over the first
// d_eff countable features, and vanilla Thompson sampling (FGTS with lambda 0).

#include <cstddef>
#include <memory>
#include <string>

#include <Eigen/Dense>

#include "sparse_bandit/core.hpp"
#include "sparse_bandit/features.hpp"
#include "sparse_bandit/fgts.hpp"

namespace sparse_bandit {

enum class BaselineKind { kUniform, kEpsilonGreedy, kVanillaTs, kRidgeUcb };

BaselineKind parse_baseline_kind(const std::string& name);
std::string to_string(BaselineKind kind);

struct BaselineConfig {
  BaselineKind kind = BaselineKind::kUniform;
  double epsilon = 0.1;
  double alpha = 1.0;  // ridge regularizer
  double c = 1.0;      // confidence width

  void validate() const;
};

class UniformPolicy : public Policy {
 public:
  Action select(const History& history, const ContextSlice& context, Rng& rng) override;
  std::string name() const override { return "uniform"; }
};

// Online ridge regression on phi_1..phi_d of the chosen items, with the
// inverse Gram matrix kept by Sherman-Morrison updates.
class RidgeModel {
 public:
  RidgeModel(CountableFeatureFamily family, std::size_t d_eff, double alpha);

  void sync(const History& history);
  Eigen::VectorXd features(std::span<const double> item) const;
  double mean(const Eigen::VectorXd& phi) const { return theta_.dot(phi); }
  double width(const Eigen::VectorXd& phi) const;
  std::size_t dim() const { return d_eff_; }
  std::size_t num_records() const { return seen_; }

 private:
  CountableFeatureFamily family_;
  std::size_t d_eff_;
  Eigen::MatrixXd inverse_;
  Eigen::VectorXd target_;
  Eigen::VectorXd theta_;
  std::size_t seen_ = 0;
};

class RidgeUcbPolicy : public Policy {
 public:
  RidgeUcbPolicy(CountableFeatureFamily family, std::size_t d_eff, double alpha, double c);

  Action select(const History& history, const ContextSlice& context, Rng& rng) override;
  std::string name() const override { return "ridge_ucb"; }

 private:
  RidgeModel model_;
  double c_;
};

class EpsilonGreedyPolicy : public Policy {
 public:
  EpsilonGreedyPolicy(CountableFeatureFamily family, std::size_t d_eff, double alpha,
                      double epsilon);

  Action select(const History& history, const ContextSlice& context, Rng& rng) override;
  std::string name() const override { return "epsilon_greedy"; }

 private:
  RidgeModel model_;
  double epsilon_;
};

// Builds any baseline. Ridge-based kinds need a countable feature family and
// take d_eff from the countable prior; vanilla_ts reuses `fgts` with lambda 0.
std::unique_ptr<Policy> make_baseline(const BaselineConfig& config,
                                      const FeatureModel& features,
                                      const PriorSpec& prior,
                                      const FgtsConfig& fgts = {});

}  // namespace sparse_bandit
