#include "scenario/scenario.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

namespace avc::scenario {

namespace {

// Stream tags for deriving independent child seeds from spec.seed.
constexpr std::uint64_t kLhsTag = 0x10000000;
constexpr std::uint64_t kImpedanceTag = 0x20000000;
constexpr std::uint64_t kContingencyTag = 0x30000000;

}  // namespace

std::vector<std::vector<double>> lhs_sample(int dimensions, int samples, std::uint64_t seed) {
  if (dimensions < 1) throw Error(ErrorCode::bounds, "lhs dimensions must be >= 1");
  if (samples < 1) throw Error(ErrorCode::bounds, "lhs samples must be >= 1");
  std::vector<std::vector<double>> out(samples, std::vector<double>(dimensions));
  Rng rng(seed);
  for (int d = 0; d < dimensions; ++d) {
    const std::vector<int> strata = rng.permutation(samples);
    for (int s = 0; s < samples; ++s)
      out[s][d] = (strata[s] + rng.uniform()) / static_cast<double>(samples);
  }
  return out;
}

void validate_spec(const ScenarioSpec& spec, const grid::GridCase& base) {
  if (!(spec.load_scale_lo <= spec.load_scale_hi))
    throw Error(ErrorCode::bounds, "load scale range lo must be <= hi");
  if (!(spec.contingency_probability >= 0.0 && spec.contingency_probability <= 1.0))
    throw Error(ErrorCode::bounds, "contingency probability must be in [0,1]");
  if (spec.impedance_mode == ImpedanceMode::single_line) {
    if (spec.single_line_index < 0 ||
        spec.single_line_index >= static_cast<int>(base.branches.size()))
      throw Error(ErrorCode::index, "single-line impedance index out of range");
    if (!(1.0 + spec.single_line_delta > 0.0))
      throw Error(ErrorCode::bounds, "single-line impedance delta not > -1");
  }
  if (spec.impedance_mode == ImpedanceMode::random_all) {
    if (!(spec.random_lo <= spec.random_hi))
      throw Error(ErrorCode::bounds, "random impedance range lo must be <= hi");
    if (!(1.0 + spec.random_lo > 0.0))
      throw Error(ErrorCode::bounds, "random impedance range reaches -100%");
  }
  for (const auto& set : spec.contingency_pool) {
    if (set.empty() || set.size() > 2)
      throw Error(ErrorCode::bounds, "contingency sets must have 1 or 2 branches");
    grid::apply_branch_outage(base, set);  // throws on bad index / islanding
  }
}

namespace {

grid::GridCase scale_loads(const grid::GridCase& base, const std::vector<double>& scales,
                           bool gen_follow) {
  grid::GridCase out = base;
  double total_before = 0.0, total_after = 0.0;
  for (std::size_t i = 0; i < out.loads.size(); ++i) {
    total_before += out.loads[i].p;
    out.loads[i].p *= scales[i];
    out.loads[i].q *= scales[i];  // constant power factor
    total_after += out.loads[i].p;
  }
  if (gen_follow && total_before != 0.0) {
    const double ratio = total_after / total_before;
    const int slack = out.slack_index();
    for (grid::Generator& g : out.generators) {
      if (!g.controllable) continue;
      if (out.bus_index(g.bus) == slack) continue;  // slack absorbs the residual
      g.p_set *= ratio;
    }
  }
  return out;
}

}  // namespace

std::vector<Scenario> make_scenarios(const grid::GridCase& base, const ScenarioSpec& spec,
                                     int count) {
  if (count < 1) throw Error(ErrorCode::bounds, "scenario count must be >= 1");
  validate_spec(spec, base);

  const int n_loads = static_cast<int>(base.loads.size());
  std::vector<std::vector<double>> draws;
  if (n_loads > 0)
    draws = lhs_sample(n_loads, count, split_seed(spec.seed, kLhsTag));

  std::vector<Scenario> out;
  out.reserve(count);
  for (int idx = 0; idx < count; ++idx) {
    std::vector<double> scales(n_loads, 1.0);
    for (int i = 0; i < n_loads; ++i)
      scales[i] = spec.load_scale_lo + (spec.load_scale_hi - spec.load_scale_lo) * draws[idx][i];

    Scenario sc;
    sc.true_case = scale_loads(base, scales, spec.gen_follow);

    switch (spec.impedance_mode) {
      case ImpedanceMode::exact:
        sc.training_case = sc.true_case;
        break;
      case ImpedanceMode::single_line:
        sc.training_case = grid::apply_impedance_error(
            sc.true_case, {{spec.single_line_index, spec.single_line_delta}});
        break;
      case ImpedanceMode::random_all: {
        Rng rng(split_seed(spec.seed, kImpedanceTag + static_cast<std::uint64_t>(idx)));
        std::vector<std::pair<int, double>> errors;
        errors.reserve(sc.true_case.branches.size());
        for (int k = 0; k < static_cast<int>(sc.true_case.branches.size()); ++k)
          errors.emplace_back(k, rng.uniform(spec.random_lo, spec.random_hi));
        sc.training_case = grid::apply_impedance_error(sc.true_case, errors);
        break;
      }
    }

    if (!spec.contingency_pool.empty() && spec.contingency_probability > 0.0) {
      Rng rng(split_seed(spec.seed, kContingencyTag + static_cast<std::uint64_t>(idx)));
      if (rng.uniform() < spec.contingency_probability) {
        const auto& set =
            spec.contingency_pool[rng.below(spec.contingency_pool.size())];
        // The fidelity error is impedance-only: outages hit both twins.
        sc.training_case = grid::apply_branch_outage(sc.training_case, set);
        sc.true_case = grid::apply_branch_outage(sc.true_case, set);
        sc.applied_contingency = set;
      }
    }
    out.push_back(std::move(sc));
  }
  return out;
}

std::vector<std::pair<int, int>> illinois_load_pool_labels() {
  return {{187, 121}, {14, 121}, {188, 89}, {194, 150}, {83, 146},
          {55, 102},  {102, 128}, {14, 149}, {123, 133}, {81, 55}};
}

std::vector<int> illinois_load_pool(const grid::GridCase& c) {
  std::vector<int> resolved;
  std::vector<std::string> missing;
  for (const auto& [a, b] : illinois_load_pool_labels()) {
    int found = -1;
    for (std::size_t k = 0; k < c.branches.size(); ++k) {
      const grid::Branch& br = c.branches[k];
      if ((br.from_bus == a && br.to_bus == b) || (br.from_bus == b && br.to_bus == a)) {
        found = static_cast<int>(k);
        break;
      }
    }
    if (found < 0) {
      std::ostringstream ss;
      ss << a << "-" << b;
      missing.push_back(ss.str());
    } else {
      resolved.push_back(found);
    }
  }
  if (!missing.empty()) {
    std::string msg = "unresolved line labels:";
    for (const auto& m : missing) msg += " " + m;
    throw Error(ErrorCode::index, msg);
  }
  return resolved;
}

FoldPlan make_fold_plan(std::uint64_t master_seed, int train_episodes, int test_episodes) {
  if (train_episodes < 1 || test_episodes < 1)
    throw Error(ErrorCode::bounds, "episode counts must be >= 1");
  FoldPlan plan;
  plan.train_episodes = train_episodes;
  plan.test_episodes = test_episodes;
  std::uint64_t state = master_seed;
  std::set<std::uint64_t> used;
  for (int k = 0; k < 5; ++k) {
    std::uint64_t s = splitmix64(state);
    while (!used.insert(s).second) s = splitmix64(state);
    plan.fold_seeds.push_back(s);
  }
  std::uint64_t t = splitmix64(state);
  while (used.count(t)) t = splitmix64(state);
  plan.shared_test_seed = t;
  return plan;
}

}  // namespace avc::scenario
