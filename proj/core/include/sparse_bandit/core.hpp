#pragma once

// Contextual bandit protocol: contexts, history, environments, policies, the
// round loop and regret accounting.
//
// Actions are 0-based throughout the library (action a here is action a+1 in
// the usual [K] notation). Ties in any argmax go to the lowest index.

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sparse_bandit/random.hpp"

namespace sparse_bandit {

using Action = std::size_t;

// One round's context: K items of a common dimension, stored row-major.
class ContextSlice {
 public:
  ContextSlice() = default;
  ContextSlice(std::size_t round, std::size_t num_actions, std::size_t dim,
               std::vector<double> values);

  static ContextSlice from_items(std::size_t round,
                                 const std::vector<std::vector<double>>& items);

  std::size_t round() const { return round_; }
  std::size_t num_actions() const { return num_actions_; }
  std::size_t dim() const { return dim_; }
  std::span<const double> item(Action a) const {
    return {values_.data() + a * dim_, dim_};
  }
  const std::vector<double>& values() const { return values_; }

 private:
  std::size_t round_ = 0;
  std::size_t num_actions_ = 0;
  std::size_t dim_ = 0;
  std::vector<double> values_;
};

struct HistoryRecord {
  ContextSlice context;
  Action action = 0;
  double reward = 0.0;
};

using History = std::vector<HistoryRecord>;

struct NoiseSpec {
  double sd = 0.5;

  // Gaussian with sd <= 1/2 is conditionally 1/2-sub-Gaussian.
  bool fgts_compatible() const { return sd <= 0.5; }
  bool lower_bound_regime() const { return sd == 1.0; }
};

struct RoundDiagnostics {
  double accept_rate = 0.0;
  std::size_t support_size = 0;
  double log_posterior = 0.0;
};

struct RegretTrace {
  std::uint64_t seed = 0;
  std::vector<double> instant;
  std::vector<double> cumulative;
  std::vector<Action> actions;
  std::vector<RoundDiagnostics> diagnostics;  // empty unless requested

  std::size_t size() const { return instant.size(); }
  double total() const { return cumulative.empty() ? 0.0 : cumulative.back(); }
};

using RewardFunction = std::function<double(const ContextSlice&, Action)>;

// Environment with an oblivious, pre-generated context schedule. Mean rewards
// are tabulated once at construction.
class BanditInstance {
 public:
  BanditInstance(std::vector<ContextSlice> schedule, const RewardFunction& fstar,
                 NoiseSpec noise, std::string name = "instance");

  std::size_t horizon() const { return schedule_.size(); }
  std::size_t num_actions() const { return num_actions_; }
  const ContextSlice& context(std::size_t t) const { return schedule_[t]; }
  const std::vector<ContextSlice>& schedule() const { return schedule_; }
  std::span<const double> mean_rewards(std::size_t t) const {
    return {means_.data() + t * num_actions_, num_actions_};
  }
  double mean_reward(std::size_t t, Action a) const {
    return means_[t * num_actions_ + a];
  }
  const NoiseSpec& noise() const { return noise_; }
  const std::string& name() const { return name_; }

 private:
  std::vector<ContextSlice> schedule_;
  std::size_t num_actions_ = 0;
  std::vector<double> means_;
  NoiseSpec noise_;
  std::string name_;
};

class Policy {
 public:
  virtual ~Policy() = default;

  // `history` holds every completed round in order; `rng` is the policy's own
  // stream for the episode.
  virtual Action select(const History& history, const ContextSlice& context,
                        Rng& rng) = 0;

  virtual std::optional<RoundDiagnostics> diagnostics() const {
    return std::nullopt;
  }

  virtual std::string name() const = 0;
};

using PolicyFactory = std::function<std::unique_ptr<Policy>()>;

// Max of `values` minus `values[a]`.
double pseudo_regret_step(std::span<const double> values, Action a);

Action argmax_lowest(std::span<const double> values);

// Runs n rounds of the protocol. Noise and policy randomness come from
// independent streams derived from `seed`.
RegretTrace run_episode(const BanditInstance& env, Policy& policy, std::size_t n,
                        std::uint64_t seed, bool record_diagnostics = false);

// Sum of instantaneous regret over consecutive segments of `segment_len`
// rounds (the last segment may be shorter).
std::vector<double> segment_regrets(const RegretTrace& trace,
                                    std::size_t segment_len);

// CSV rows `seed,t,instant_regret,cum_regret` (t is 1-based), plus
// `accept_rate,support_size,log_posterior` when diagnostics were recorded.
void write_trace_csv(std::ostream& out, const RegretTrace& trace,
                     bool header = true);

std::string format_double(double value);

}  // namespace sparse_bandit
