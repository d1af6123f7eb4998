#include "env/environment.hpp"

#include <cmath>
#include <limits>

namespace avc::env {

int ActionSpaceSpec::action_dim() const {
  return kind == ActionKind::ltc ? static_cast<int>(controlled_ltcs.size())
                                 : static_cast<int>(controlled_gens.size());
}

long ActionSpaceSpec::cardinality() const {
  if (kind != ActionKind::discrete)
    throw Error(ErrorCode::config, "cardinality is defined for discrete spaces only");
  long card = 1;
  for (std::size_t i = 0; i < controlled_gens.size(); ++i) {
    if (card > std::numeric_limits<long>::max() / levels_per_gen)
      throw Error(ErrorCode::config, "discrete action space too large");
    card *= levels_per_gen;
  }
  return card;
}

ActionSpaceSpec default_space(const grid::GridCase& c, ActionKind kind, int levels_per_gen,
                              double bound_lo, double bound_hi) {
  ActionSpaceSpec s;
  s.kind = kind;
  s.levels_per_gen = levels_per_gen;
  s.bound_lo = bound_lo;
  s.bound_hi = bound_hi;
  if (kind == ActionKind::ltc) {
    for (int i = 0; i < static_cast<int>(c.ltcs.size()); ++i) s.controlled_ltcs.push_back(i);
  } else {
    for (int i = 0; i < static_cast<int>(c.generators.size()); ++i)
      if (c.generators[i].controllable) s.controlled_gens.push_back(i);
  }
  validate_space(s, c);
  return s;
}

void validate_space(const ActionSpaceSpec& space, const grid::GridCase& c) {
  if (space.kind == ActionKind::ltc) {
    if (space.controlled_ltcs.empty())
      throw Error(ErrorCode::config, "ltc action space controls no devices");
    for (int i : space.controlled_ltcs)
      if (i < 0 || i >= static_cast<int>(c.ltcs.size()))
        throw Error(ErrorCode::index, "controlled ltc index out of range");
    return;
  }
  if (space.controlled_gens.empty())
    throw Error(ErrorCode::config, "action space controls no generators");
  for (int i : space.controlled_gens) {
    if (i < 0 || i >= static_cast<int>(c.generators.size()))
      throw Error(ErrorCode::index, "controlled generator index out of range");
    if (!c.generators[i].controllable)
      throw Error(ErrorCode::config,
                  "generator " + std::to_string(i) + " is not flagged controllable");
  }
  if (!(space.bound_lo < space.bound_hi))
    throw Error(ErrorCode::bounds, "action bounds must satisfy lo < hi");
  if (space.bound_lo < 0.8 || space.bound_hi > 1.2)
    throw Error(ErrorCode::bounds, "action bounds must stay inside [0.8,1.2]");
  if (space.kind == ActionKind::discrete && space.levels_per_gen < 2)
    throw Error(ErrorCode::config, "discrete spaces need at least 2 levels");
}

ControlAssignment decode_action(const Action& a, const ActionSpaceSpec& space,
                                const grid::GridCase& c) {
  if (a.kind != space.kind) throw Error(ErrorCode::bounds, "action kind does not match the space");
  ControlAssignment out;
  if (space.kind == ActionKind::discrete) {
    const long card = space.cardinality();
    if (a.index < 0 || a.index >= card)
      throw Error(ErrorCode::bounds, "discrete action index " + std::to_string(a.index) +
                                         " outside [0," + std::to_string(card) + ")");
    long rest = a.index;
    const double step = (space.bound_hi - space.bound_lo) / (space.levels_per_gen - 1);
    for (int g : space.controlled_gens) {
      const int digit = static_cast<int>(rest % space.levels_per_gen);
      rest /= space.levels_per_gen;
      out.gen_vset.emplace_back(g, space.bound_lo + digit * step);
    }
    return out;
  }
  if (static_cast<int>(a.values.size()) != space.action_dim())
    throw Error(ErrorCode::bounds, "action vector length != action dimension");
  if (space.kind == ActionKind::continuous) {
    for (std::size_t k = 0; k < a.values.size(); ++k) {
      const double v = a.values[k];
      if (v < space.bound_lo - 1e-12 || v > space.bound_hi + 1e-12)
        throw Error(ErrorCode::bounds, "set point " + format_double(v) + " outside action bounds");
      out.gen_vset.emplace_back(space.controlled_gens[k],
                                std::clamp(v, space.bound_lo, space.bound_hi));
    }
    return out;
  }
  for (std::size_t k = 0; k < a.values.size(); ++k) {
    const grid::LtcTransformer& t = c.ltcs[space.controlled_ltcs[k]];
    const double half = t.half_span();
    if (a.values[k] < -half - 0.5 || a.values[k] > half + 0.5)
      throw Error(ErrorCode::bounds, "tap value " + format_double(a.values[k]) + " outside range");
    const int pos = std::clamp(static_cast<int>(std::lround(a.values[k])), -t.half_span(),
                               t.half_span());
    out.ltc_positions.emplace_back(space.controlled_ltcs[k], pos);
  }
  return out;
}

void validate_reward_config(const RewardConfig& cfg) {
  if (!(cfg.r_p > 0.0)) throw Error(ErrorCode::config, "R_p must be positive");
  if (!(cfg.r_n > 0.0)) throw Error(ErrorCode::config, "R_n must be positive");
  if (!(cfg.r_penalty < -cfg.r_n))
    throw Error(ErrorCode::config, "R_penalty must be below -R_n");
  if (!(cfg.normal_lo < cfg.normal_hi) || !(cfg.severe_lo < cfg.severe_hi))
    throw Error(ErrorCode::config, "voltage bands must be ordered");
}

double reward(pf::BandClass classification, double total_loss, int unchanged_devices,
              const RewardConfig& cfg) {
  if (classification == pf::BandClass::severe) return cfg.r_penalty;
  double shaping = 0.0;
  switch (cfg.shaping) {
    case Shaping::none: break;
    case Shaping::loss: shaping = -cfg.epsilon * total_loss; break;
    case Shaping::effort: shaping = cfg.epsilon * unchanged_devices; break;
  }
  return (classification == pf::BandClass::all_normal ? cfg.r_p : -cfg.r_n) + shaping;
}

double episode_return(const std::vector<double>& rewards) {
  if (rewards.empty()) throw Error(ErrorCode::bounds, "episode has no rewards");
  double sum = 0.0;
  for (double r : rewards) sum += r;
  return sum / static_cast<double>(rewards.size());
}

Environment::Environment(grid::GridCase initial, ActionSpaceSpec space,
                         RewardConfig reward_config, EpisodeConfig episode_config,
                         pf::SolverSettings solver)
    : case_(std::move(initial)),
      space_(std::move(space)),
      reward_config_(reward_config),
      episode_config_(episode_config),
      solver_(solver) {
  validate_space(space_, case_);
  validate_reward_config(reward_config_);
  if (episode_config_.max_iterations < 1)
    throw Error(ErrorCode::config, "max_iterations must be >= 1");
  if (!(episode_config_.gamma >= 0.0 && episode_config_.gamma <= 1.0))
    throw Error(ErrorCode::config, "gamma must be in [0,1]");
}

int Environment::observation_dim() const {
  return static_cast<int>(case_.buses.size() + space_.controlled_gens.size() +
                          space_.controlled_ltcs.size());
}

std::vector<double> Environment::control_snapshot() const {
  std::vector<double> snap;
  snap.reserve(space_.controlled_gens.size() + space_.controlled_ltcs.size());
  for (int g : space_.controlled_gens) snap.push_back(case_.generators[g].v_set);
  for (int l : space_.controlled_ltcs)
    snap.push_back(static_cast<double>(case_.ltcs[l].position));
  return snap;
}

Observation Environment::make_observation(const pf::PowerFlowSolution& sol) const {
  Observation o;
  o.v_mag = sol.v_mag;
  for (int g : space_.controlled_gens) o.gen_vset.push_back(case_.generators[g].v_set);
  for (int l : space_.controlled_ltcs) o.ltc_pos.push_back(case_.ltcs[l].position);
  o.violation_mask.resize(o.v_mag.size());
  for (std::size_t i = 0; i < o.v_mag.size(); ++i)
    o.violation_mask[i] =
        o.v_mag[i] < reward_config_.normal_lo || o.v_mag[i] > reward_config_.normal_hi;
  o.severe = pf::check_voltage_band(sol, reward_config_.normal_lo, reward_config_.normal_hi,
                                    reward_config_.severe_lo, reward_config_.severe_hi) ==
             pf::BandClass::severe;
  // Scaled features: voltages and set points are spread around 1 pu, taps
  // normalized by their half span.
  o.features.reserve(observation_dim());
  for (double v : o.v_mag) o.features.push_back((v - 1.0) * 10.0);
  for (double v : o.gen_vset) o.features.push_back((v - 1.0) * 10.0);
  for (std::size_t k = 0; k < o.ltc_pos.size(); ++k) {
    const grid::LtcTransformer& t = case_.ltcs[space_.controlled_ltcs[k]];
    o.features.push_back(static_cast<double>(o.ltc_pos[k]) / t.half_span());
  }
  return o;
}

std::optional<Observation> Environment::reset() {
  if (started_) throw Error(ErrorCode::internal, "environment already started");
  started_ = true;
  pf::SolverSettings s = solver_;
  s.flat_start = true;
  last_solution_ = pf::solve(case_, s);
  have_warm_ = last_solution_.converged;
  last_band_ = pf::check_voltage_band(last_solution_, reward_config_.normal_lo,
                                      reward_config_.normal_hi, reward_config_.severe_lo,
                                      reward_config_.severe_hi);
  if (last_solution_.converged) final_loss_ = last_solution_.total_loss;
  prev_controls_ = control_snapshot();
  moved_.assign(prev_controls_.size(), false);
  if (last_band_ == pf::BandClass::all_normal) {
    active_ = false;
    return std::nullopt;  // presolved
  }
  active_ = true;
  last_obs_ = make_observation(last_solution_);
  return last_obs_;
}

StepResult Environment::step(const Action& a) {
  if (!started_) throw Error(ErrorCode::internal, "step before reset");
  if (!active_) throw Error(ErrorCode::internal, "stepping a finished episode");

  const ControlAssignment controls = decode_action(a, space_, case_);
  case_ = grid::set_controls(case_, controls.gen_vset, controls.ltc_positions);

  pf::SolverSettings s = solver_;
  const pf::PowerFlowSolution* warm = have_warm_ ? &last_solution_ : nullptr;
  pf::PowerFlowSolution sol = pf::solve(case_, s, warm);

  const pf::BandClass band =
      pf::check_voltage_band(sol, reward_config_.normal_lo, reward_config_.normal_hi,
                             reward_config_.severe_lo, reward_config_.severe_hi);

  const std::vector<double> now = control_snapshot();
  int changed = 0;
  for (std::size_t i = 0; i < now.size(); ++i) {
    if (now[i] != prev_controls_[i]) {
      ++changed;
      moved_[i] = true;
    }
  }
  const int unchanged = static_cast<int>(now.size()) - changed;

  const double loss = sol.converged ? sol.total_loss : 0.0;
  const double r = reward(band, loss, unchanged, reward_config_);

  ++iterations_;
  const bool done = band == pf::BandClass::all_normal || band == pf::BandClass::severe ||
                    iterations_ >= episode_config_.max_iterations;

  StepResult result;
  result.band = band;
  result.loss = loss;
  result.devices_changed = changed;
  result.transition.s = last_obs_;
  result.transition.a = a;
  result.transition.r = r;
  result.transition.done = done;

  if (sol.converged) {
    last_solution_ = sol;
    have_warm_ = true;
    final_loss_ = sol.total_loss;
    result.transition.s_next = make_observation(sol);
  } else {
    // Diverged: keep the last valid electrical state in the observation but
    // flag it severe.
    result.transition.s_next = last_obs_;
    result.transition.s_next.severe = true;
  }

  last_band_ = band;
  prev_controls_ = now;
  rewards_.push_back(r);
  last_obs_ = result.transition.s_next;
  active_ = !done;
  return result;
}

int Environment::devices_moved() const {
  int n = 0;
  for (bool m : moved_)
    if (m) ++n;
  return n;
}

}  // namespace avc::env
