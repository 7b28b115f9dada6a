#include "sparse_bandit/fgts.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "sparse_bandit/error.hpp"

namespace sparse_bandit {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

double safe_log(double p) { return p > 0.0 ? std::log(p) : kNegInf; }

// Uniform draw from {1..d} minus a sorted support of size m < d.
std::size_t sample_outside(const std::vector<std::size_t>& support, std::size_t d,
                           Rng& rng) {
  std::uniform_int_distribution<std::size_t> pick(0, d - support.size() - 1);
  std::size_t j = pick(rng) + 1;
  for (std::size_t s : support) {
    if (s <= j) {
      ++j;
    } else {
      break;
    }
  }
  return j;
}

std::size_t uniform_index(std::size_t n, Rng& rng) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(rng);
}

}  // namespace

double log_prior(const SparseParam& nu, const PriorSpec& prior) {
  if (const auto* c = std::get_if<CountableParam>(&nu)) {
    const auto* p = std::get_if<CountablePrior>(&prior);
    if (!p) throw Error(ErrorCode::kUnsupportedModel, "countable parameter under an atomic prior");
    return log_prior(*c, p->d_eff);
  }
  const auto* p = std::get_if<AtomicPrior>(&prior);
  if (!p) throw Error(ErrorCode::kUnsupportedModel, "atomic parameter under a countable prior");
  return log_prior(std::get<AtomicParam>(nu), p->dim, p->m_cap);
}

SparseParam sample_prior(const PriorSpec& prior, Rng& rng) {
  if (const auto* c = std::get_if<CountablePrior>(&prior)) {
    return sample_prior_countable(c->d_eff, rng);
  }
  const auto& a = std::get<AtomicPrior>(prior);
  return sample_prior_atomic(a.dim, a.m_cap, rng);
}

void FgtsConfig::validate() const {
  if (!(eta > 0.0 && eta <= 0.25)) {
    throw Error(ErrorCode::kInvalidParameter, "eta must lie in (0, 1/4]");
  }
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) {
    throw Error(ErrorCode::kInvalidParameter, "lambda must be finite and >= 0");
  }
  const std::array<double, 8> probs{mix.add,   mix.drop,  mix.swap, mix.perturb,
                                    mix.birth, mix.death, mix.walk, mix.perturb_atomic};
  for (double p : probs) {
    if (!(p >= 0.0)) throw Error(ErrorCode::kInvalidParameter, "move probabilities must be >= 0");
  }
  if (mix.add + mix.drop + mix.swap + mix.perturb <= 0.0 ||
      mix.birth + mix.death + mix.walk + mix.perturb_atomic <= 0.0) {
    throw Error(ErrorCode::kInvalidParameter, "move mix has no mass");
  }
  if (!(weight_step >= 0.0) || !(atom_step >= 0.0)) {
    throw Error(ErrorCode::kInvalidParameter, "step sizes must be >= 0");
  }
}

double lambda_countable(std::size_t s, std::size_t d_eff, std::size_t num_actions,
                        std::size_t n) {
  const double nd = static_cast<double>(n);
  return std::sqrt(static_cast<double>(s) * std::log(static_cast<double>(d_eff) * nd) /
                   (static_cast<double>(num_actions) * nd));
}

double lambda_atomic(std::size_t s, std::size_t dim, std::size_t num_actions,
                     std::size_t n) {
  const double nd = static_cast<double>(n);
  return std::sqrt(static_cast<double>(s * dim) * std::log(nd) /
                   (static_cast<double>(num_actions) * nd));
}

double loss(const SparseParam& nu, const ContextSlice& x, Action a, double y,
            double eta, double lambda, const FeatureModel& features) {
  const double chosen = eval_reward(nu, features, x, a);
  const double best = eval_best(nu, features, x).value;
  return loss_from_values(chosen, best, y, eta, lambda);
}

double delta_L_values(double fnu_a, double fnu_best, double fstar_a,
                      double fstar_best, double y, double eta, double lambda) {
  const double rn = fnu_a - y;
  const double rs = fstar_a - y;
  return eta * (rn * rn - rs * rs) - lambda * (fnu_best - fstar_best);
}

double delta_L_expanded(double fnu_a, double fnu_best, double fstar_a,
                        double fstar_best, double y, double eta, double lambda) {
  const double g = fnu_a - fstar_a;
  const double eps = y - fstar_a;
  return eta * g * g - 2.0 * eta * eps * g - lambda * (fnu_best - fstar_best);
}

double delta_L(const SparseParam& nu, const RewardFunction& fstar,
               const ContextSlice& x, Action a, double y, double eta, double lambda,
               const FeatureModel& features) {
  double fstar_best = fstar(x, 0);
  for (Action b = 1; b < x.num_actions(); ++b) fstar_best = std::max(fstar_best, fstar(x, b));
  return delta_L_values(eval_reward(nu, features, x, a), eval_best(nu, features, x).value,
                        fstar(x, a), fstar_best, y, eta, lambda);
}

double log_posterior_unnorm(const SparseParam& nu, const History& history,
                            double eta, double lambda, const FeatureModel& features,
                            const PriorSpec& prior) {
  const double lp = log_prior(nu, prior);
  if (!std::isfinite(lp)) return kNegInf;
  double total = 0.0;
  for (const auto& rec : history) {
    total += loss(nu, rec.context, rec.action, rec.reward, eta, lambda, features);
  }
  return lp - total;
}

// ---------------------------------------------------------------------------

FeelGoodTarget::FeelGoodTarget(FeatureModel features, PriorSpec prior, double eta,
                               double lambda)
    : features_(std::move(features)), prior_(std::move(prior)), eta_(eta), lambda_(lambda) {
  const bool countable_features = std::holds_alternative<CountableFeatureFamily>(features_);
  const bool countable_prior = std::holds_alternative<CountablePrior>(prior_);
  if (countable_features != countable_prior) {
    throw Error(ErrorCode::kUnsupportedModel, "prior and feature model disagree on sparsity kind");
  }
  if (countable_prior) {
    const auto& family = std::get<CountableFeatureFamily>(features_);
    const std::size_t d_eff = std::get<CountablePrior>(prior_).d_eff;
    if (d_eff < 1) throw Error(ErrorCode::kInvalidParameter, "d_eff must be >= 1");
    if (!family.valid_index(d_eff)) {
      throw Error(ErrorCode::kInvalidFeatureIndex,
                  family.name + " does not define feature " + std::to_string(d_eff));
    }
    feature_columns_.resize(d_eff);
  }
}

void FeelGoodTarget::sync(const History& history) {
  const std::size_t old_records = num_records();
  if (history.size() < old_records) {
    throw Error(ErrorCode::kInvalidParameter, "history shrank between rounds");
  }
  for (std::size_t l = old_records; l < history.size(); ++l) {
    const auto& rec = history[l];
    if (num_actions_ == 0) {
      num_actions_ = rec.context.num_actions();
      item_dim_ = rec.context.dim();
    }
    if (rec.context.num_actions() != num_actions_ || rec.context.dim() != item_dim_) {
      throw Error(ErrorCode::kInvalidParameter, "history records disagree on K or dim");
    }
    actions_.push_back(rec.action);
    rewards_.push_back(rec.reward);
    const auto& values = rec.context.values();
    items_.insert(items_.end(), values.begin(), values.end());
  }
  if (!feature_columns_.empty() && num_records() > old_records) {
    for (std::size_t j = 1; j <= feature_columns_.size(); ++j) {
      auto extra = feature_column(j, old_records * num_actions_);
      auto& col = feature_columns_[j - 1];
      col.insert(col.end(), extra.begin(), extra.end());
    }
  }
}

std::vector<double> FeelGoodTarget::feature_column(std::size_t index,
                                                   std::size_t from_row) const {
  const auto& family = std::get<CountableFeatureFamily>(features_);
  const std::size_t rows = num_records() * num_actions_;
  std::vector<double> col;
  col.reserve(rows - from_row);
  for (std::size_t r = from_row; r < rows; ++r) {
    col.push_back(family.evaluator(index, {items_.data() + r * item_dim_, item_dim_}));
  }
  return col;
}

std::vector<double> FeelGoodTarget::atom_column(std::span<const double> theta,
                                                std::size_t from_row) const {
  const auto& map = std::get<ParametricFeatureMap>(features_);
  const std::size_t rows = num_records() * num_actions_;
  std::vector<double> col;
  col.reserve(rows - from_row);
  for (std::size_t r = from_row; r < rows; ++r) {
    col.push_back(map.evaluator({items_.data() + r * item_dim_, item_dim_}, theta));
  }
  return col;
}

// Evaluates records [from_record, N) for f = sum_k weights[k] * columns[k];
// the column pointers address row 0.
void FeelGoodTarget::score(std::span<const double* const> columns,
                           std::span<const double> weights, std::size_t from_record,
                           Candidate& out) const {
  const std::size_t n = num_records();
  const std::size_t k = num_actions_;
  const std::size_t count = n - from_record;
  const std::size_t rows = count * k;
  auto& values = row_scratch_;
  values.assign(rows, 0.0);
  for (std::size_t c = 0; c < columns.size(); ++c) {
    const double w = weights[c];
    const double* col = columns[c] + from_record * k;
    for (std::size_t r = 0; r < rows; ++r) values[r] += w * col[r];
  }
  out.chosen.resize(count);
  out.best.resize(count);
  double total = 0.0;
  for (std::size_t i = 0; i < count; ++i) {
    const double* v = values.data() + i * k;
    double best = v[0];
    for (std::size_t a = 1; a < k; ++a) best = std::max(best, v[a]);
    const std::size_t l = from_record + i;
    const double chosen = v[actions_[l]];
    out.chosen[i] = chosen;
    out.best[i] = best;
    total += loss_from_values(chosen, best, rewards_[l], eta_, lambda_);
  }
  out.loss_sum = total;
}

void FeelGoodTarget::score_state(const PosteriorState& state, std::size_t from_record,
                                 Candidate& out) const {
  std::vector<const double*> cols;
  if (const auto* c = std::get_if<CountableParam>(&state.param)) {
    for (std::size_t j : c->support) cols.push_back(feature_columns_[j - 1].data());
    score(cols, c->weights, from_record, out);
  } else {
    for (const auto& col : state.atom_columns) cols.push_back(col.data());
    score(cols, std::get<AtomicParam>(state.param).weights, from_record, out);
  }
}

PosteriorState FeelGoodTarget::make_state(SparseParam nu) const {
  PosteriorState state;
  state.param = std::move(nu);
  state.log_prior = log_prior(state.param, prior_);
  if (!std::isfinite(state.log_prior)) {
    throw Error(ErrorCode::kInvalidParameter, "chain state outside the prior support");
  }
  if (const auto* a = std::get_if<AtomicParam>(&state.param)) {
    for (const auto& theta : a->atoms) state.atom_columns.push_back(atom_column(theta, 0));
  }
  if (num_records() > 0) {
    Candidate full;
    score_state(state, 0, full);
    state.chosen_values = std::move(full.chosen);
    state.best_values = std::move(full.best);
    state.loss_sum = full.loss_sum;
  }
  return state;
}

PosteriorState FeelGoodTarget::initial_state(Rng& rng) const {
  return make_state(sample_prior(prior_, rng));
}

void FeelGoodTarget::extend(PosteriorState& state) const {
  const std::size_t from = state.chosen_values.size();
  if (from == num_records()) return;
  for (std::size_t i = 0; i < state.atom_columns.size(); ++i) {
    const auto& theta = std::get<AtomicParam>(state.param).atoms[i];
    auto extra = atom_column(theta, from * num_actions_);
    state.atom_columns[i].insert(state.atom_columns[i].end(), extra.begin(), extra.end());
  }
  Candidate part;
  score_state(state, from, part);
  state.chosen_values.insert(state.chosen_values.end(), part.chosen.begin(), part.chosen.end());
  state.best_values.insert(state.best_values.end(), part.best.begin(), part.best.end());
  state.loss_sum += part.loss_sum;
}

MoveOutcome FeelGoodTarget::step(PosteriorState& state, const FgtsConfig& config,
                                 Rng& rng) {
  if (state.chosen_values.size() != num_records()) extend(state);
  ++state.proposals;
  if (std::holds_alternative<CountableParam>(state.param)) {
    return step_countable(state, config, rng);
  }
  return step_atomic(state, config, rng);
}

bool FeelGoodTarget::accept(PosteriorState& state, SparseParam proposal,
                            double log_q_forward, double log_q_reverse,
                            std::vector<std::vector<double>>* new_atom_columns,
                            Rng& rng) {
  const double lp = log_prior(proposal, prior_);
  if (!std::isfinite(lp) || !std::isfinite(log_q_reverse)) return false;
  const double log_alpha = (lp - scratch_.loss_sum) - state.log_posterior() +
                           log_q_reverse - log_q_forward;
  if (!(std::log(uniform01(rng)) < log_alpha)) return false;

  state.param = std::move(proposal);
  state.log_prior = lp;
  state.loss_sum = scratch_.loss_sum;
  state.chosen_values.swap(scratch_.chosen);
  state.best_values.swap(scratch_.best);
  if (new_atom_columns) state.atom_columns = std::move(*new_atom_columns);
  ++state.accepted;
  return true;
}

MoveOutcome FeelGoodTarget::step_countable(PosteriorState& state,
                                           const FgtsConfig& config, Rng& rng) {
  const auto& cur = std::get<CountableParam>(state.param);
  const std::size_t d = std::get<CountablePrior>(prior_).d_eff;
  const std::size_t m = cur.size();
  const auto& mix = config.mix;
  const double total = mix.add + mix.drop + mix.swap + mix.perturb;
  const double p_add = mix.add / total;
  const double p_drop = mix.drop / total;

  const double u = uniform01(rng) * total;
  MoveKind kind = MoveKind::kPerturb;
  if (u < mix.add) {
    kind = MoveKind::kAdd;
  } else if (u < mix.add + mix.drop) {
    kind = MoveKind::kDrop;
  } else if (u < mix.add + mix.drop + mix.swap) {
    kind = MoveKind::kSwap;
  }

  CountableParam prop;
  double log_q_forward = 0.0;
  double log_q_reverse = 0.0;
  switch (kind) {
    case MoveKind::kAdd: {
      if (m >= d) return {kind, false};
      const std::size_t j = sample_outside(cur.support, d, rng);
      prop.support = cur.support;
      prop.support.insert(std::upper_bound(prop.support.begin(), prop.support.end(), j), j);
      prop.weights = sample_uniform_l1_ball(m + 1, rng);
      log_q_forward = safe_log(p_add) - std::log(static_cast<double>(d - m)) +
                      log_uniform_l1_density(m + 1);
      log_q_reverse = safe_log(p_drop) - std::log(static_cast<double>(m + 1)) +
                      log_uniform_l1_density(m);
      break;
    }
    case MoveKind::kDrop: {
      if (m <= 1) return {kind, false};
      const std::size_t k = uniform_index(m, rng);
      prop.support = cur.support;
      prop.support.erase(prop.support.begin() + static_cast<std::ptrdiff_t>(k));
      prop.weights = sample_uniform_l1_ball(m - 1, rng);
      log_q_forward = safe_log(p_drop) - std::log(static_cast<double>(m)) +
                      log_uniform_l1_density(m - 1);
      log_q_reverse = safe_log(p_add) - std::log(static_cast<double>(d - m + 1)) +
                      log_uniform_l1_density(m);
      break;
    }
    case MoveKind::kSwap: {
      if (m >= d) return {kind, false};
      const std::size_t k = uniform_index(m, rng);
      const std::size_t j = sample_outside(cur.support, d, rng);
      std::vector<std::pair<std::size_t, double>> entries;
      for (std::size_t i = 0; i < m; ++i) {
        entries.emplace_back(i == k ? j : cur.support[i], cur.weights[i]);
      }
      std::sort(entries.begin(), entries.end());
      for (const auto& [idx, w] : entries) {
        prop.support.push_back(idx);
        prop.weights.push_back(w);
      }
      break;
    }
    default: {
      std::normal_distribution<double> normal(0.0, config.weight_step);
      prop = cur;
      for (auto& w : prop.weights) w += normal(rng);
      if (l1_norm(prop.weights) > 1.0) return {kind, false};
      break;
    }
  }

  std::vector<const double*> cols;
  cols.reserve(prop.support.size());
  for (std::size_t j : prop.support) cols.push_back(feature_columns_[j - 1].data());
  if (!std::isfinite(log_q_reverse)) return {kind, false};
  score(cols, prop.weights, 0, scratch_);
  const bool ok = accept(state, std::move(prop), log_q_forward, log_q_reverse, nullptr, rng);
  return {kind, ok};
}

MoveOutcome FeelGoodTarget::step_atomic(PosteriorState& state, const FgtsConfig& config,
                                        Rng& rng) {
  const auto& cur = std::get<AtomicParam>(state.param);
  const auto& prior = std::get<AtomicPrior>(prior_);
  const std::size_t m = cur.size();
  const auto& mix = config.mix;
  const double total = mix.birth + mix.death + mix.walk + mix.perturb_atomic;
  const double p_birth = mix.birth / total;
  const double p_death = mix.death / total;

  const double u = uniform01(rng) * total;
  MoveKind kind = MoveKind::kPerturb;
  if (u < mix.birth) {
    kind = MoveKind::kBirth;
  } else if (u < mix.birth + mix.death) {
    kind = MoveKind::kDeath;
  } else if (u < mix.birth + mix.death + mix.walk) {
    kind = MoveKind::kWalk;
  }

  AtomicParam prop;
  double log_q_forward = 0.0;
  double log_q_reverse = 0.0;
  std::vector<std::vector<double>> columns;
  bool columns_changed = false;
  switch (kind) {
    case MoveKind::kBirth: {
      if (m >= prior.m_cap) return {kind, false};
      const std::size_t pos = uniform_index(m + 1, rng);
      auto theta = sample_uniform_l2_ball(prior.dim, rng);
      columns = state.atom_columns;
      columns.insert(columns.begin() + static_cast<std::ptrdiff_t>(pos), atom_column(theta, 0));
      prop.atoms = cur.atoms;
      prop.atoms.insert(prop.atoms.begin() + static_cast<std::ptrdiff_t>(pos), std::move(theta));
      prop.weights = sample_uniform_l1_ball(m + 1, rng);
      log_q_forward = safe_log(p_birth) - std::log(static_cast<double>(m + 1)) +
                      log_uniform_l2_density(prior.dim) + log_uniform_l1_density(m + 1);
      log_q_reverse = safe_log(p_death) - std::log(static_cast<double>(m + 1)) +
                      log_uniform_l1_density(m);
      columns_changed = true;
      break;
    }
    case MoveKind::kDeath: {
      if (m <= 1) return {kind, false};
      const std::size_t pos = uniform_index(m, rng);
      columns = state.atom_columns;
      columns.erase(columns.begin() + static_cast<std::ptrdiff_t>(pos));
      prop.atoms = cur.atoms;
      prop.atoms.erase(prop.atoms.begin() + static_cast<std::ptrdiff_t>(pos));
      prop.weights = sample_uniform_l1_ball(m - 1, rng);
      log_q_forward = safe_log(p_death) - std::log(static_cast<double>(m)) +
                      log_uniform_l1_density(m - 1);
      log_q_reverse = safe_log(p_birth) - std::log(static_cast<double>(m)) +
                      log_uniform_l2_density(prior.dim) + log_uniform_l1_density(m);
      columns_changed = true;
      break;
    }
    case MoveKind::kWalk: {
      const std::size_t i = uniform_index(m, rng);
      std::normal_distribution<double> normal(0.0, config.atom_step);
      prop = cur;
      for (auto& x : prop.atoms[i]) x += normal(rng);
      if (l2_norm(prop.atoms[i]) > 1.0) return {kind, false};
      columns = state.atom_columns;
      columns[i] = atom_column(prop.atoms[i], 0);
      columns_changed = true;
      break;
    }
    default: {
      std::normal_distribution<double> normal(0.0, config.weight_step);
      prop = cur;
      for (auto& w : prop.weights) w += normal(rng);
      if (l1_norm(prop.weights) > 1.0) return {kind, false};
      break;
    }
  }
  if (!std::isfinite(log_q_reverse)) return {kind, false};

  std::vector<const double*> cols;
  const auto& source = columns_changed ? columns : state.atom_columns;
  for (const auto& col : source) cols.push_back(col.data());
  score(cols, prop.weights, 0, scratch_);
  const bool ok = accept(state, std::move(prop), log_q_forward, log_q_reverse,
                         columns_changed ? &columns : nullptr, rng);
  return {kind, ok};
}

// ---------------------------------------------------------------------------

Action fgts_policy_step(FeelGoodTarget& target, std::optional<PosteriorState>& state,
                        const ContextSlice& x, const FgtsConfig& config,
                        const History& history, Rng& rng) {
  target.sync(history);
  if (!state) {
    state = target.initial_state(rng);
  } else {
    target.extend(*state);
  }
  for (std::size_t k = 0; k < config.sweeps; ++k) target.step(*state, config, rng);
  return eval_best(state->param, target.features(), x).action;
}

FgtsPolicy::FgtsPolicy(FeatureModel features, PriorSpec prior, FgtsConfig config,
                       std::string name)
    : target_(std::move(features), std::move(prior), config.eta, config.lambda),
      config_(config),
      name_(std::move(name)) {
  config_.validate();
}

Action FgtsPolicy::select(const History& history, const ContextSlice& context,
                          Rng& rng) {
  const std::size_t proposals = state_ ? state_->proposals : 0;
  const std::size_t accepted = state_ ? state_->accepted : 0;
  const Action a = fgts_policy_step(target_, state_, context, config_, history, rng);
  const std::size_t dp = state_->proposals - proposals;
  last_.accept_rate =
      dp == 0 ? 0.0 : static_cast<double>(state_->accepted - accepted) / static_cast<double>(dp);
  last_.support_size = param_size(state_->param);
  last_.log_posterior = state_->log_posterior();
  return a;
}

}  // namespace sparse_bandit
