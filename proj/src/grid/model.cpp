#include "grid/model.hpp"

#include <cmath>
#include <set>
#include <sstream>

namespace avc::grid {

namespace {

std::string bus_str(int id) {
  std::ostringstream ss;
  ss << "bus " << id;
  return ss.str();
}

}  // namespace

int GridCase::bus_index(int bus_id) const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].id == bus_id) return static_cast<int>(i);
  return -1;
}

int GridCase::slack_index() const {
  for (std::size_t i = 0; i < buses.size(); ++i)
    if (buses[i].kind == BusKind::slack) return static_cast<int>(i);
  return -1;
}

int GridCase::ltc_on_branch(int branch_index) const {
  for (std::size_t i = 0; i < ltcs.size(); ++i)
    if (ltcs[i].branch_index == branch_index) return static_cast<int>(i);
  return -1;
}

double GridCase::effective_tap(int branch_index) const {
  double tap = branches[branch_index].tap;
  const int l = ltc_on_branch(branch_index);
  if (l >= 0) tap *= ltcs[l].ratio_multiplier();
  return tap;
}

void validate(const GridCase& c) {
  if (c.base_mva <= 0) throw Error(ErrorCode::validation, "base_mva must be positive");
  if (c.buses.empty()) throw Error(ErrorCode::validation, "case has no buses");

  std::set<int> ids;
  int slack_count = 0;
  for (const Bus& b : c.buses) {
    if (b.id < 1) throw Error(ErrorCode::validation, "bus id must be >= 1");
    if (!ids.insert(b.id).second)
      throw Error(ErrorCode::validation, "duplicate bus id " + std::to_string(b.id));
    if (b.kind == BusKind::slack) ++slack_count;
    if (b.kind != BusKind::pq) {
      if (!(b.v_set > 0.0 && b.v_set < 2.0))
        throw Error(ErrorCode::validation, "v_set out of (0,2) at " + bus_str(b.id));
    }
  }
  if (slack_count == 0) throw Error(ErrorCode::validation, "no slack bus");
  if (slack_count > 1) throw Error(ErrorCode::validation, "multiple slack buses");

  for (std::size_t k = 0; k < c.branches.size(); ++k) {
    const Branch& br = c.branches[k];
    if (c.bus_index(br.from_bus) < 0)
      throw Error(ErrorCode::validation, "branch " + std::to_string(k) + " references unknown " + bus_str(br.from_bus));
    if (c.bus_index(br.to_bus) < 0)
      throw Error(ErrorCode::validation, "branch " + std::to_string(k) + " references unknown " + bus_str(br.to_bus));
    if (br.from_bus == br.to_bus)
      throw Error(ErrorCode::validation, "branch " + std::to_string(k) + " connects a bus to itself");
    if (br.x == 0.0 && br.r == 0.0)
      throw Error(ErrorCode::validation, "branch " + std::to_string(k) + " has zero impedance");
    if (!(br.tap > 0.0))
      throw Error(ErrorCode::validation, "branch " + std::to_string(k) + " has non-positive tap");
  }

  std::set<int> gen_buses;
  for (const Generator& g : c.generators) {
    const int bi = c.bus_index(g.bus);
    if (bi < 0) throw Error(ErrorCode::validation, "generator references unknown " + bus_str(g.bus));
    if (c.buses[bi].kind == BusKind::pq)
      throw Error(ErrorCode::validation, "generator attached to pq " + bus_str(g.bus));
    if (!(g.v_set >= 0.8 && g.v_set <= 1.2))
      throw Error(ErrorCode::validation, "generator v_set out of [0.8,1.2] at " + bus_str(g.bus));
    if (!gen_buses.insert(g.bus).second)
      throw Error(ErrorCode::validation, "multiple generators at " + bus_str(g.bus));
  }

  for (const Load& l : c.loads) {
    if (c.bus_index(l.bus) < 0)
      throw Error(ErrorCode::validation, "load references unknown " + bus_str(l.bus));
  }

  std::set<int> ltc_branches;
  for (const LtcTransformer& t : c.ltcs) {
    if (t.branch_index < 0 || t.branch_index >= static_cast<int>(c.branches.size()))
      throw Error(ErrorCode::validation, "ltc references branch " + std::to_string(t.branch_index) + " out of range");
    if (t.tap_steps < 3 || t.tap_steps % 2 == 0)
      throw Error(ErrorCode::validation, "ltc tap_steps must be odd and >= 3");
    if (!(t.step_size > 0.0))
      throw Error(ErrorCode::validation, "ltc step_size must be positive");
    if (std::abs(t.position) > t.half_span())
      throw Error(ErrorCode::validation, "ltc position " + std::to_string(t.position) + " outside tap range");
    if (!(t.ratio_multiplier() > 0.0))
      throw Error(ErrorCode::validation, "ltc effective tap must stay positive");
    if (!ltc_branches.insert(t.branch_index).second)
      throw Error(ErrorCode::validation, "multiple ltcs on branch " + std::to_string(t.branch_index));
  }

  if (!is_connected(c)) throw Error(ErrorCode::validation, "network is disconnected");
}

bool is_connected(const GridCase& c) {
  const int n = static_cast<int>(c.buses.size());
  if (n == 0) return false;
  std::vector<std::vector<int>> adj(n);
  for (const Branch& br : c.branches) {
    if (!br.in_service) continue;
    const int f = c.bus_index(br.from_bus);
    const int t = c.bus_index(br.to_bus);
    adj[f].push_back(t);
    adj[t].push_back(f);
  }
  std::vector<char> seen(n, 0);
  std::vector<int> stack{0};
  seen[0] = 1;
  int reached = 1;
  while (!stack.empty()) {
    const int u = stack.back();
    stack.pop_back();
    for (int v : adj[u]) {
      if (!seen[v]) {
        seen[v] = 1;
        ++reached;
        stack.push_back(v);
      }
    }
  }
  return reached == n;
}

GridCase apply_branch_outage(const GridCase& c, const std::vector<int>& branch_indices) {
  GridCase out = c;
  for (int k : branch_indices) {
    if (k < 0 || k >= static_cast<int>(c.branches.size()))
      throw Error(ErrorCode::index, "branch index " + std::to_string(k) + " out of range");
    out.branches[k].in_service = false;
  }
  if (!is_connected(out))
    throw Error(ErrorCode::islanding, "outage disconnects the network");
  return out;
}

GridCase apply_impedance_error(const GridCase& c,
                               const std::vector<std::pair<int, double>>& errors) {
  GridCase out = c;
  for (const auto& [k, delta] : errors) {
    if (k < 0 || k >= static_cast<int>(c.branches.size()))
      throw Error(ErrorCode::index, "branch index " + std::to_string(k) + " out of range");
    if (!(1.0 + delta > 0.0))
      throw Error(ErrorCode::bounds, "impedance delta " + format_double(delta) + " not > -1");
    Branch& br = out.branches[k];
    br.r *= 1.0 + delta;
    br.x *= 1.0 + delta;
    if (br.r == 0.0 && br.x == 0.0)
      throw Error(ErrorCode::validation, "branch " + std::to_string(k) + " impedance degenerated to zero");
  }
  return out;
}

GridCase set_controls(const GridCase& c,
                      const std::vector<std::pair<int, double>>& gen_vset,
                      const std::vector<std::pair<int, int>>& ltc_positions) {
  GridCase out = c;
  for (const auto& [gi, v] : gen_vset) {
    if (gi < 0 || gi >= static_cast<int>(c.generators.size()))
      throw Error(ErrorCode::index, "generator index " + std::to_string(gi) + " out of range");
    if (!(v >= 0.8 && v <= 1.2))
      throw Error(ErrorCode::bounds,
                  "v_set " + format_double(v) + " out of [0.8,1.2] for generator " + std::to_string(gi));
    out.generators[gi].v_set = v;
    const int bi = out.bus_index(out.generators[gi].bus);
    if (out.buses[bi].kind != BusKind::pq) out.buses[bi].v_set = v;
  }
  for (const auto& [li, pos] : ltc_positions) {
    if (li < 0 || li >= static_cast<int>(c.ltcs.size()))
      throw Error(ErrorCode::index, "ltc index " + std::to_string(li) + " out of range");
    LtcTransformer& t = out.ltcs[li];
    if (std::abs(pos) > t.half_span())
      throw Error(ErrorCode::bounds,
                  "position " + std::to_string(pos) + " outside tap range for ltc " + std::to_string(li));
    t.position = pos;
  }
  return out;
}

bool structurally_equal(const GridCase& a, const GridCase& b) {
  if (a.base_mva != b.base_mva) return false;
  if (a.buses.size() != b.buses.size() || a.branches.size() != b.branches.size() ||
      a.generators.size() != b.generators.size() || a.loads.size() != b.loads.size() ||
      a.ltcs.size() != b.ltcs.size())
    return false;
  for (std::size_t i = 0; i < a.buses.size(); ++i) {
    const Bus &x = a.buses[i], &y = b.buses[i];
    if (x.id != y.id || x.kind != y.kind || x.v_set != y.v_set || x.v_min != y.v_min ||
        x.v_max != y.v_max)
      return false;
  }
  for (std::size_t i = 0; i < a.branches.size(); ++i) {
    const Branch &x = a.branches[i], &y = b.branches[i];
    if (x.from_bus != y.from_bus || x.to_bus != y.to_bus || x.r != y.r || x.x != y.x ||
        x.b != y.b || x.tap != y.tap || x.in_service != y.in_service)
      return false;
  }
  for (std::size_t i = 0; i < a.generators.size(); ++i) {
    const Generator &x = a.generators[i], &y = b.generators[i];
    if (x.bus != y.bus || x.p_set != y.p_set || x.v_set != y.v_set ||
        x.controllable != y.controllable)
      return false;
  }
  for (std::size_t i = 0; i < a.loads.size(); ++i) {
    const Load &x = a.loads[i], &y = b.loads[i];
    if (x.bus != y.bus || x.p != y.p || x.q != y.q) return false;
  }
  for (std::size_t i = 0; i < a.ltcs.size(); ++i) {
    const LtcTransformer &x = a.ltcs[i], &y = b.ltcs[i];
    if (x.branch_index != y.branch_index || x.tap_steps != y.tap_steps ||
        x.step_size != y.step_size || x.position != y.position)
      return false;
  }
  return true;
}

}  // namespace avc::grid
