#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "grid/model.hpp"

namespace avc::scenario {

/// Latin hypercube sample: `samples` rows by `dimensions` columns in [0,1).
/// Each column hits every one of the `samples` equal-width strata exactly
/// once; positions within a stratum are uniform; column permutations are
/// independent.
std::vector<std::vector<double>> lhs_sample(int dimensions, int samples, std::uint64_t seed);

enum class ImpedanceMode { exact, single_line, random_all };

struct ScenarioSpec {
  double load_scale_lo = 0.8;
  double load_scale_hi = 1.2;
  bool gen_follow = true;  // rescale controllable generation with total load
  ImpedanceMode impedance_mode = ImpedanceMode::exact;
  int single_line_index = 0;      // single_line mode
  double single_line_delta = 0.0;
  double random_lo = -0.2;        // random_all mode
  double random_hi = 0.2;
  std::vector<std::vector<int>> contingency_pool;  // branch-index sets, size 1 or 2
  double contingency_probability = 0.0;
  std::uint64_t seed = 0;
};

struct Scenario {
  grid::GridCase training_case;  // model the agent trains against (impedance errors applied)
  grid::GridCase true_case;      // exact-impedance twin used for evaluation
  std::optional<std::vector<int>> applied_contingency;
};

void validate_spec(const ScenarioSpec& spec, const grid::GridCase& base);

/// Deterministic in (base, spec, count): load scales come from one LHS batch
/// over the load dimensions; impedance draws and contingency picks use
/// per-index streams derived from spec.seed.
std::vector<Scenario> make_scenarios(const grid::GridCase& base, const ScenarioSpec& spec,
                                     int count);

/// The ten most heavily loaded Illinois 200-bus lines, by endpoint bus label.
std::vector<std::pair<int, int>> illinois_load_pool_labels();

/// Resolves the label pairs against a loaded case; throws listing any
/// endpoints that do not resolve to a branch.
std::vector<int> illinois_load_pool(const grid::GridCase& c);

struct FoldPlan {
  std::vector<std::uint64_t> fold_seeds;  // 5 training streams
  std::uint64_t shared_test_seed = 0;
  int train_episodes = 0;
  int test_episodes = 0;
};

FoldPlan make_fold_plan(std::uint64_t master_seed, int train_episodes, int test_episodes);

}  // namespace avc::scenario
