#pragma once

#include <string>
#include <utility>
#include <vector>

#include "common.hpp"

namespace avc::grid {

enum class BusKind { slack, pv, pq };

struct Bus {
  int id = 0;                // external label, >= 1
  BusKind kind = BusKind::pq;
  double v_set = 0.0;        // slack/pv only; 0 means unset
  double v_min = 0.95;       // display limits
  double v_max = 1.05;
};

struct Branch {
  int from_bus = 0;
  int to_bus = 0;
  double r = 0.0;            // series resistance, pu
  double x = 0.0;            // series reactance, pu
  double b = 0.0;            // total shunt susceptance, pu
  double tap = 1.0;          // off-nominal ratio on the from side
  bool in_service = true;
};

struct Generator {
  int bus = 0;
  double p_set = 0.0;        // pu; ignored for the slack machine
  double v_set = 1.0;        // controlled voltage, pu
  bool controllable = true;  // participates in the agent action space
};

struct Load {
  int bus = 0;
  double p = 0.0;
  double q = 0.0;
};

struct LtcTransformer {
  int branch_index = 0;
  int tap_steps = 17;        // odd count of discrete positions
  double step_size = 0.00625;
  int position = 0;          // in [-(tap_steps-1)/2, +(tap_steps-1)/2]

  int half_span() const { return (tap_steps - 1) / 2; }
  /// Multiplier applied on top of the branch's base tap ratio.
  double ratio_multiplier() const { return 1.0 + position * step_size; }
};

struct GridCase {
  double base_mva = 100.0;
  std::vector<Bus> buses;
  std::vector<Branch> branches;
  std::vector<Generator> generators;
  std::vector<Load> loads;
  std::vector<LtcTransformer> ltcs;

  int bus_index(int bus_id) const;  // -1 when absent
  int slack_index() const;
  /// Branch tap including the LTC position, if one drives this branch.
  double effective_tap(int branch_index) const;
  /// Index of the LTC on a branch, or -1.
  int ltc_on_branch(int branch_index) const;
};

/// Checks every structural invariant; throws Error(validation/...) naming
/// the first violated one.
void validate(const GridCase& c);

/// True when all buses are connected through in-service branches.
bool is_connected(const GridCase& c);

/// Returns a copy with the named branches switched out of service.
/// Throws ErrorCode::islanding when the removal disconnects the network.
GridCase apply_branch_outage(const GridCase& c, const std::vector<int>& branch_indices);

/// Multiplies r and x of each named branch by (1 + delta).
GridCase apply_impedance_error(const GridCase& c,
                               const std::vector<std::pair<int, double>>& errors);

/// Returns a copy with updated generator set points and LTC positions.
GridCase set_controls(const GridCase& c,
                      const std::vector<std::pair<int, double>>& gen_vset,
                      const std::vector<std::pair<int, int>>& ltc_positions);

bool structurally_equal(const GridCase& a, const GridCase& b);

}  // namespace avc::grid
