#pragma once

// Feel-Good Thompson Sampling: the feel-good likelihood, a trans-dimensional
// Metropolis-Hastings sampler for its posterior under the sparsity priors, and
// the resulting policy.

#include <array>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "sparse_bandit/core.hpp"
#include "sparse_bandit/features.hpp"
#include "sparse_bandit/random.hpp"
#include "sparse_bandit/sparse_models.hpp"

namespace sparse_bandit {

struct CountablePrior {
  std::size_t d_eff = 1;
};

struct AtomicPrior {
  std::size_t dim = 1;
  std::size_t m_cap = 32;  // truncation of the geometric law on the atom count
};

using PriorSpec = std::variant<CountablePrior, AtomicPrior>;

double log_prior(const SparseParam& nu, const PriorSpec& prior);
SparseParam sample_prior(const PriorSpec& prior, Rng& rng);

// Move probabilities. Countable chains use add/drop/swap/perturb, atomic
// chains birth/death/walk/perturb_atomic; each group is normalized separately.
struct MoveMix {
  double add = 0.2;
  double drop = 0.2;
  double swap = 0.2;
  double perturb = 0.4;

  double birth = 0.2;
  double death = 0.2;
  double walk = 0.3;
  double perturb_atomic = 0.3;
};

struct FgtsConfig {
  double eta = 0.25;     // likelihood temperature, 0 < eta <= 1/4
  double lambda = 0.0;   // feel-good weight; 0 gives vanilla Thompson sampling
  std::size_t sweeps = 100;  // Metropolis-Hastings steps per round
  MoveMix mix;
  double weight_step = 0.1;
  double atom_step = 0.1;

  void validate() const;
};

// Feel-good weights that tune the regret bounds: sqrt(s log(d_eff n) / (K n))
// for countable priors, sqrt(s d log(n) / (K n)) for atomic priors. Passing
// s = 1 gives the unknown-sparsity setting.
double lambda_countable(std::size_t s, std::size_t d_eff, std::size_t num_actions,
                        std::size_t n);
double lambda_atomic(std::size_t s, std::size_t dim, std::size_t num_actions,
                     std::size_t n);

// eta (chosen - y)^2 - lambda * best.
inline double loss_from_values(double chosen, double best, double y, double eta,
                               double lambda) {
  const double r = chosen - y;
  return eta * r * r - lambda * best;
}

double loss(const SparseParam& nu, const ContextSlice& x, Action a, double y,
            double eta, double lambda, const FeatureModel& features);

// eta[(f_nu(x,a) - y)^2 - (f*(x,a) - y)^2] - lambda[f_nu(x) - f*(x)].
double delta_L(const SparseParam& nu, const RewardFunction& fstar,
               const ContextSlice& x, Action a, double y, double eta, double lambda,
               const FeatureModel& features);
double delta_L_values(double fnu_a, double fnu_best, double fstar_a,
                      double fstar_best, double y, double eta, double lambda);
// The same quantity written as eta g^2 - 2 eta eps g - lambda (f_nu(x) - f*(x))
// with g = f_nu(x,a) - f*(x,a) and eps = y - f*(x,a).
double delta_L_expanded(double fnu_a, double fnu_best, double fstar_a,
                        double fstar_best, double y, double eta, double lambda);

// -sum_l L(nu, X_l, A_l, Y_l) + log_prior(nu), evaluated from scratch.
double log_posterior_unnorm(const SparseParam& nu, const History& history,
                            double eta, double lambda, const FeatureModel& features,
                            const PriorSpec& prior);

// Current chain sample plus per-record caches of the likelihood.
struct PosteriorState {
  SparseParam param;
  std::vector<double> chosen_values;  // f_nu(X_l, A_l)
  std::vector<double> best_values;    // f_nu(X_l)
  double loss_sum = 0.0;
  double log_prior = 0.0;
  // Atomic chains only: phi(X_{l,a}, theta_i) for each atom, row l*K + a.
  std::vector<std::vector<double>> atom_columns;

  std::size_t proposals = 0;
  std::size_t accepted = 0;

  double log_posterior() const { return log_prior - loss_sum; }
};

enum class MoveKind { kAdd, kDrop, kSwap, kPerturb, kBirth, kDeath, kWalk };

struct MoveOutcome {
  MoveKind kind = MoveKind::kPerturb;
  bool accepted = false;
};

// The unnormalized posterior exp(-sum L) p_1 over a growing history, with
// feature evaluations of past records cached so a proposal costs
// O(records * K * |support|).
class FeelGoodTarget {
 public:
  FeelGoodTarget(FeatureModel features, PriorSpec prior, double eta, double lambda);

  // Appends caches for records of `history` not seen yet. History is append-only.
  void sync(const History& history);

  std::size_t num_records() const { return actions_.size(); }
  const FeatureModel& features() const { return features_; }
  const PriorSpec& prior() const { return prior_; }
  double eta() const { return eta_; }
  double lambda() const { return lambda_; }

  PosteriorState make_state(SparseParam nu) const;
  PosteriorState initial_state(Rng& rng) const;
  // Brings the state's caches up to num_records().
  void extend(PosteriorState& state) const;

  MoveOutcome step(PosteriorState& state, const FgtsConfig& config, Rng& rng);

 private:
  struct Candidate {
    std::vector<double> chosen;
    std::vector<double> best;
    double loss_sum = 0.0;
  };

  std::vector<double> feature_column(std::size_t index, std::size_t from_row) const;
  std::vector<double> atom_column(std::span<const double> theta,
                                  std::size_t from_row) const;
  void score(std::span<const double* const> columns, std::span<const double> weights,
             std::size_t from_record, Candidate& out) const;
  void score_state(const PosteriorState& state, std::size_t from_record,
                   Candidate& out) const;

  MoveOutcome step_countable(PosteriorState& state, const FgtsConfig& config, Rng& rng);
  MoveOutcome step_atomic(PosteriorState& state, const FgtsConfig& config, Rng& rng);
  bool accept(PosteriorState& state, SparseParam proposal, double log_q_forward,
              double log_q_reverse, std::vector<std::vector<double>>* new_atom_columns,
              Rng& rng);

  FeatureModel features_;
  PriorSpec prior_;
  double eta_;
  double lambda_;

  std::size_t num_actions_ = 0;
  std::size_t item_dim_ = 0;
  std::vector<Action> actions_;
  std::vector<double> rewards_;
  std::vector<double> items_;  // row l*K + a holds X_{l,a}
  // Countable chains: cached phi_j over every row, j = 1..d_eff.
  std::vector<std::vector<double>> feature_columns_;

  Candidate scratch_;
  mutable std::vector<double> row_scratch_;
};

// One round of the policy: warm-started chain advanced `config.sweeps` steps,
// then the greedy action of the final sample.
Action fgts_policy_step(FeelGoodTarget& target, std::optional<PosteriorState>& state,
                        const ContextSlice& x, const FgtsConfig& config,
                        const History& history, Rng& rng);

class FgtsPolicy : public Policy {
 public:
  FgtsPolicy(FeatureModel features, PriorSpec prior, FgtsConfig config,
             std::string name = "fgts");

  Action select(const History& history, const ContextSlice& context,
                Rng& rng) override;
  std::optional<RoundDiagnostics> diagnostics() const override { return last_; }
  std::string name() const override { return name_; }

  const FeelGoodTarget& target() const { return target_; }
  const std::optional<PosteriorState>& state() const { return state_; }
  const FgtsConfig& config() const { return config_; }

 private:
  FeelGoodTarget target_;
  FgtsConfig config_;
  std::string name_;
  std::optional<PosteriorState> state_;
  RoundDiagnostics last_;
};

}  // namespace sparse_bandit
