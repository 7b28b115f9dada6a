#include "sparse_bandit/core.hpp"

#include <charconv>
#include <cmath>
#include <ostream>
#include <utility>

#include "sparse_bandit/error.hpp"

namespace sparse_bandit {

ContextSlice::ContextSlice(std::size_t round, std::size_t num_actions,
                           std::size_t dim, std::vector<double> values)
    : round_(round), num_actions_(num_actions), dim_(dim), values_(std::move(values)) {
  if (num_actions_ < 2) {
    throw Error(ErrorCode::kInvalidParameter, "a context needs K >= 2 actions");
  }
  if (values_.size() != num_actions_ * dim_) {
    throw Error(ErrorCode::kInvalidParameter, "context values do not match K * dim");
  }
}

ContextSlice ContextSlice::from_items(std::size_t round,
                                      const std::vector<std::vector<double>>& items) {
  const std::size_t dim = items.empty() ? 0 : items.front().size();
  std::vector<double> values;
  values.reserve(items.size() * dim);
  for (const auto& item : items) {
    if (item.size() != dim) {
      throw Error(ErrorCode::kInvalidParameter, "context items differ in dimension");
    }
    values.insert(values.end(), item.begin(), item.end());
  }
  return ContextSlice(round, items.size(), dim, std::move(values));
}

BanditInstance::BanditInstance(std::vector<ContextSlice> schedule,
                               const RewardFunction& fstar, NoiseSpec noise,
                               std::string name)
    : schedule_(std::move(schedule)), noise_(noise), name_(std::move(name)) {
  if (noise_.sd < 0.0 || !std::isfinite(noise_.sd)) {
    throw Error(ErrorCode::kInvalidParameter, "noise sd must be finite and >= 0");
  }
  num_actions_ = schedule_.empty() ? 0 : schedule_.front().num_actions();
  means_.reserve(schedule_.size() * num_actions_);
  for (const auto& ctx : schedule_) {
    if (ctx.num_actions() != num_actions_) {
      throw Error(ErrorCode::kInvalidParameter, "schedule mixes action counts");
    }
    for (Action a = 0; a < num_actions_; ++a) means_.push_back(fstar(ctx, a));
  }
}

Action argmax_lowest(std::span<const double> values) {
  Action best = 0;
  for (Action a = 1; a < values.size(); ++a) {
    if (values[a] > values[best]) best = a;
  }
  return best;
}

double pseudo_regret_step(std::span<const double> values, Action a) {
  if (a >= values.size()) {
    throw Error(ErrorCode::kInvalidAction, "action " + std::to_string(a) +
                                               " outside [0, " +
                                               std::to_string(values.size()) + ")");
  }
  return values[argmax_lowest(values)] - values[a];
}

RegretTrace run_episode(const BanditInstance& env, Policy& policy, std::size_t n,
                        std::uint64_t seed, bool record_diagnostics) {
  if (env.horizon() < n) {
    throw Error(ErrorCode::kScheduleTooShort,
                "environment provides " + std::to_string(env.horizon()) +
                    " contexts, episode needs " + std::to_string(n));
  }
  Rng policy_rng = make_rng(seed, 1);
  Rng noise_rng = make_rng(seed, 2);
  std::normal_distribution<double> noise(0.0, 1.0);

  RegretTrace trace;
  trace.seed = seed;
  trace.instant.reserve(n);
  trace.cumulative.reserve(n);
  trace.actions.reserve(n);

  History history;
  history.reserve(n);
  double cumulative = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    const ContextSlice& ctx = env.context(t);
    const Action a = policy.select(history, ctx, policy_rng);
    if (a >= env.num_actions()) {
      throw Error(ErrorCode::kInvalidAction,
                  policy.name() + " returned action " + std::to_string(a));
    }
    const auto means = env.mean_rewards(t);
    const double r = pseudo_regret_step(means, a);
    // One draw per round, whatever the policy did; sd == 0 yields the mean exactly.
    const double eps = noise(noise_rng);
    const double y = env.noise().sd == 0.0 ? means[a] : means[a] + env.noise().sd * eps;

    cumulative += r;
    trace.instant.push_back(r);
    trace.cumulative.push_back(cumulative);
    trace.actions.push_back(a);
    if (record_diagnostics) {
      trace.diagnostics.push_back(policy.diagnostics().value_or(RoundDiagnostics{}));
    }
    history.push_back(HistoryRecord{ctx, a, y});
  }
  return trace;
}

std::vector<double> segment_regrets(const RegretTrace& trace,
                                    std::size_t segment_len) {
  if (segment_len == 0) {
    throw Error(ErrorCode::kInvalidParameter, "segment length must be positive");
  }
  std::vector<double> out((trace.size() + segment_len - 1) / segment_len, 0.0);
  for (std::size_t t = 0; t < trace.size(); ++t) {
    out[t / segment_len] += trace.instant[t];
  }
  return out;
}

std::string format_double(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

void write_trace_csv(std::ostream& out, const RegretTrace& trace, bool header) {
  const bool diag = !trace.diagnostics.empty();
  if (header) {
    out << "seed,t,instant_regret,cum_regret";
    if (diag) out << ",accept_rate,support_size,log_posterior";
    out << '\n';
  }
  for (std::size_t t = 0; t < trace.size(); ++t) {
    out << trace.seed << ',' << (t + 1) << ',' << format_double(trace.instant[t])
        << ',' << format_double(trace.cumulative[t]);
    if (diag) {
      const auto& d = trace.diagnostics[t];
      out << ',' << format_double(d.accept_rate) << ',' << d.support_size << ','
          << format_double(d.log_posterior);
    }
    out << '\n';
  }
}

}  // namespace sparse_bandit
