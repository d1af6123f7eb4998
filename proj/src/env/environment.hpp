#pragma once

#include <optional>
#include <vector>

#include "grid/model.hpp"
#include "pf/solver.hpp"

namespace avc::env {

enum class ActionKind { discrete, continuous, ltc };

struct ActionSpaceSpec {
  ActionKind kind = ActionKind::continuous;
  std::vector<int> controlled_gens;  // generator indices (discrete/continuous)
  int levels_per_gen = 5;            // discrete grid points per generator
  double bound_lo = 0.95;
  double bound_hi = 1.05;
  std::vector<int> controlled_ltcs;  // ltc indices (ltc kind)

  int action_dim() const;   // continuous/ltc vector length
  long cardinality() const; // discrete only: levels^gens
};

/// Default space over every controllable generator (discrete/continuous)
/// or every LTC (ltc kind).
ActionSpaceSpec default_space(const grid::GridCase& c, ActionKind kind, int levels_per_gen = 5,
                              double bound_lo = 0.95, double bound_hi = 1.05);

void validate_space(const ActionSpaceSpec& space, const grid::GridCase& c);

struct Action {
  ActionKind kind = ActionKind::continuous;
  long index = 0;              // discrete
  std::vector<double> values;  // continuous / ltc (raw; ltc entries are rounded)
};

struct ControlAssignment {
  std::vector<std::pair<int, double>> gen_vset;
  std::vector<std::pair<int, int>> ltc_positions;
};

/// Discrete: mixed-radix decode, digit k (least significant first) selects
/// generator k's level on the uniform grid over [bound_lo, bound_hi].
/// Continuous: values map directly to set points. Ltc: values round to the
/// nearest integer tap position.
ControlAssignment decode_action(const Action& a, const ActionSpaceSpec& space,
                                const grid::GridCase& c);

enum class Shaping { none, loss, effort };

struct RewardConfig {
  double r_p = 400.0;
  double r_n = 100.0;
  double r_penalty = -1000.0;
  double normal_lo = 0.95;
  double normal_hi = 1.05;
  double severe_lo = 0.8;
  double severe_hi = 1.2;
  Shaping shaping = Shaping::none;
  double epsilon = 0.0;  // scaling factor of the shaping term
};

void validate_reward_config(const RewardConfig& cfg);

/// Per-step reward: R_p/-R_n/R_penalty by zone, plus the shaping term in the
/// non-severe zones (loss: -eps*L; effort: +eps*N with N the count of
/// controlled devices left unchanged this step).
double reward(pf::BandClass classification, double total_loss, int unchanged_devices,
              const RewardConfig& cfg);

/// Episode return: plain average of the step rewards.
double episode_return(const std::vector<double>& rewards);

struct EpisodeConfig {
  double gamma = 0.99;
  int max_iterations = 10;
  double presolved_reward = 500.0;  // sentinel for episodes with no initial violation
};

struct Observation {
  std::vector<double> v_mag;        // per bus
  std::vector<double> gen_vset;     // controlled generators, case order
  std::vector<int> ltc_pos;         // controlled ltcs
  std::vector<bool> violation_mask; // per bus, outside the normal band
  bool severe = false;              // diverged or outside the severe band
  std::vector<double> features;     // scaled NN input vector
};

struct Transition {
  Observation s;
  Action a;
  double r = 0.0;
  Observation s_next;
  bool done = false;
};

struct StepResult {
  Transition transition;
  pf::BandClass band = pf::BandClass::violation;
  double loss = 0.0;          // of the post-action state when it converged
  int devices_changed = 0;
};

/// Episodic environment over one grid case. Single-threaded and stateful;
/// solving warm-starts from the previous converged state within an episode.
class Environment {
 public:
  Environment(grid::GridCase initial, ActionSpaceSpec space, RewardConfig reward_config,
              EpisodeConfig episode_config, pf::SolverSettings solver = {});

  /// Solves the initial case. nullopt means the episode is presolved (the
  /// initial state is already all_normal) and must not be stepped.
  std::optional<Observation> reset();

  StepResult step(const Action& a);

  bool active() const { return active_; }
  int iterations() const { return iterations_; }
  const std::vector<double>& rewards() const { return rewards_; }
  /// Count of controlled devices whose setting changed at least once.
  int devices_moved() const;
  /// Loss of the last converged state (NaN when none converged).
  double final_loss() const { return final_loss_; }
  pf::BandClass last_band() const { return last_band_; }
  const ActionSpaceSpec& space() const { return space_; }
  int observation_dim() const;

 private:
  Observation make_observation(const pf::PowerFlowSolution& sol) const;
  std::vector<double> control_snapshot() const;

  grid::GridCase case_;
  ActionSpaceSpec space_;
  RewardConfig reward_config_;
  EpisodeConfig episode_config_;
  pf::SolverSettings solver_;

  bool started_ = false;
  bool active_ = false;
  int iterations_ = 0;
  std::vector<double> rewards_;
  pf::PowerFlowSolution last_solution_;
  bool have_warm_ = false;
  Observation last_obs_;
  std::vector<double> prev_controls_;
  std::vector<bool> moved_;
  double final_loss_ = std::numeric_limits<double>::quiet_NaN();
  pf::BandClass last_band_ = pf::BandClass::violation;
};

}  // namespace avc::env
