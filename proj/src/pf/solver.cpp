#include "pf/solver.hpp"

#include <Eigen/Dense>
#include <cmath>

namespace avc::pf {

namespace {

// Divergence guard: any iterate magnitude outside this window aborts early.
constexpr double kVmagFloor = 0.2;
constexpr double kVmagCeil = 5.0;

struct BusModel {
  std::vector<int> kind;      // 0 slack, 1 pv, 2 pq (case bus order)
  std::vector<double> p_spec;
  std::vector<double> q_spec;
  std::vector<double> v_set;  // slack/pv set points
  int slack = -1;
};

BusModel make_bus_model(const grid::GridCase& c) {
  const int n = static_cast<int>(c.buses.size());
  BusModel m;
  m.kind.resize(n);
  m.p_spec.assign(n, 0.0);
  m.q_spec.assign(n, 0.0);
  m.v_set.assign(n, 1.0);
  for (int i = 0; i < n; ++i) {
    switch (c.buses[i].kind) {
      case grid::BusKind::slack: m.kind[i] = 0; m.slack = i; break;
      case grid::BusKind::pv: m.kind[i] = 1; break;
      case grid::BusKind::pq: m.kind[i] = 2; break;
    }
    if (c.buses[i].kind != grid::BusKind::pq) m.v_set[i] = c.buses[i].v_set;
  }
  for (const grid::Generator& g : c.generators) {
    const int bi = c.bus_index(g.bus);
    m.p_spec[bi] += g.p_set;
    m.v_set[bi] = g.v_set;  // the attached machine owns the set point
  }
  for (const grid::Load& l : c.loads) {
    const int bi = c.bus_index(l.bus);
    m.p_spec[bi] -= l.p;
    m.q_spec[bi] -= l.q;
  }
  return m;
}

}  // namespace

AdmittanceMatrix build_ybus(const grid::GridCase& c) {
  const int n = static_cast<int>(c.buses.size());
  std::vector<Eigen::Triplet<Complex>> trip;
  trip.reserve(4 * c.branches.size());
  for (std::size_t k = 0; k < c.branches.size(); ++k) {
    const grid::Branch& br = c.branches[k];
    if (!br.in_service) continue;
    const int f = c.bus_index(br.from_bus);
    const int t = c.bus_index(br.to_bus);
    const Complex y = 1.0 / Complex(br.r, br.x);
    const Complex ysh(0.0, br.b / 2.0);
    const double tap = c.effective_tap(static_cast<int>(k));
    trip.emplace_back(f, f, (y + ysh) / (tap * tap));
    trip.emplace_back(t, t, y + ysh);
    trip.emplace_back(f, t, -y / tap);
    trip.emplace_back(t, f, -y / tap);
  }
  AdmittanceMatrix yb;
  yb.n = n;
  yb.entries.resize(n, n);
  yb.entries.setFromTriplets(trip.begin(), trip.end());
  return yb;
}

PowerFlowSolution solve(const grid::GridCase& c, const SolverSettings& settings,
                        const PowerFlowSolution* warm) {
  const int n = static_cast<int>(c.buses.size());
  const BusModel m = make_bus_model(c);
  const AdmittanceMatrix yb = build_ybus(c);
  const Eigen::MatrixXcd Y = Eigen::MatrixXcd(yb.entries);
  const Eigen::MatrixXd G = Y.real();
  const Eigen::MatrixXd B = Y.imag();

  Eigen::VectorXd vm(n), va(n);
  if (warm != nullptr && static_cast<int>(warm->v_mag.size()) == n) {
    for (int i = 0; i < n; ++i) {
      vm[i] = warm->v_mag[i];
      va[i] = warm->v_ang[i];
    }
  } else {
    for (int i = 0; i < n; ++i) {
      vm[i] = 1.0;
      va[i] = 0.0;
    }
  }
  for (int i = 0; i < n; ++i)
    if (m.kind[i] != 2) vm[i] = m.v_set[i];
  va[m.slack] = 0.0;

  std::vector<int> ang_vars;  // non-slack buses: unknown angle
  std::vector<int> mag_vars;  // pq buses: unknown magnitude
  for (int i = 0; i < n; ++i) {
    if (m.kind[i] != 0) ang_vars.push_back(i);
    if (m.kind[i] == 2) mag_vars.push_back(i);
  }
  const int na = static_cast<int>(ang_vars.size());
  const int nm = static_cast<int>(mag_vars.size());
  std::vector<int> ang_pos(n, -1), mag_pos(n, -1);
  for (int k = 0; k < na; ++k) ang_pos[ang_vars[k]] = k;
  for (int k = 0; k < nm; ++k) mag_pos[mag_vars[k]] = k;

  Eigen::VectorXd p_calc(n), q_calc(n);
  auto compute_injections = [&]() {
    for (int i = 0; i < n; ++i) {
      double p = 0.0, q = 0.0;
      for (int j = 0; j < n; ++j) {
        const double g = G(i, j), b = B(i, j);
        if (g == 0.0 && b == 0.0) continue;
        const double d = va[i] - va[j];
        const double cs = std::cos(d), sn = std::sin(d);
        p += vm[j] * (g * cs + b * sn);
        q += vm[j] * (g * sn - b * cs);
      }
      p_calc[i] = vm[i] * p;
      q_calc[i] = vm[i] * q;
    }
  };

  PowerFlowSolution sol;
  auto finalize = [&](bool converged, int iterations) {
    sol.converged = converged;
    sol.iterations = iterations;
    sol.v_mag.assign(vm.data(), vm.data() + n);
    sol.v_ang.assign(va.data(), va.data() + n);
    compute_injections();
    sol.p_inj.assign(p_calc.data(), p_calc.data() + n);
    sol.q_inj.assign(q_calc.data(), q_calc.data() + n);
    sol.branch_flows.assign(c.branches.size(), BranchFlow{});
    double loss = 0.0;
    for (std::size_t k = 0; k < c.branches.size(); ++k) {
      const grid::Branch& br = c.branches[k];
      if (!br.in_service) continue;
      const int f = c.bus_index(br.from_bus);
      const int t = c.bus_index(br.to_bus);
      const Complex y = 1.0 / Complex(br.r, br.x);
      const Complex ysh(0.0, br.b / 2.0);
      const double tap = c.effective_tap(static_cast<int>(k));
      const Complex vf = std::polar(vm[f], va[f]);
      const Complex vt = std::polar(vm[t], va[t]);
      const Complex i_f = (y + ysh) / (tap * tap) * vf - y / tap * vt;
      const Complex i_t = (y + ysh) * vt - y / tap * vf;
      sol.branch_flows[k].sending = vf * std::conj(i_f);
      sol.branch_flows[k].receiving = vt * std::conj(i_t);
      loss += sol.branch_flows[k].sending.real() + sol.branch_flows[k].receiving.real();
    }
    sol.total_loss = loss;
    return sol;
  };

  int evaluations = 0;
  for (int step = 0; step <= settings.max_iterations; ++step) {
    compute_injections();
    ++evaluations;
    double mismatch = 0.0;
    Eigen::VectorXd rhs(na + nm);
    for (int k = 0; k < na; ++k) {
      const int i = ang_vars[k];
      rhs[k] = m.p_spec[i] - p_calc[i];
      mismatch = std::max(mismatch, std::abs(rhs[k]));
    }
    for (int k = 0; k < nm; ++k) {
      const int i = mag_vars[k];
      rhs[na + k] = m.q_spec[i] - q_calc[i];
      mismatch = std::max(mismatch, std::abs(rhs[na + k]));
    }
    if (mismatch <= settings.tolerance) return finalize(true, evaluations);
    if (step == settings.max_iterations) break;

    // Full Jacobian, re-evaluated every iteration.
    Eigen::MatrixXd J(na + nm, na + nm);
    for (int r = 0; r < na; ++r) {
      const int i = ang_vars[r];
      for (int s = 0; s < na; ++s) {
        const int j = ang_vars[s];
        if (i == j) {
          J(r, s) = -q_calc[i] - B(i, i) * vm[i] * vm[i];
        } else {
          const double d = va[i] - va[j];
          J(r, s) = vm[i] * vm[j] * (G(i, j) * std::sin(d) - B(i, j) * std::cos(d));
        }
      }
      for (int s = 0; s < nm; ++s) {
        const int j = mag_vars[s];
        if (i == j) {
          J(r, na + s) = p_calc[i] / vm[i] + G(i, i) * vm[i];
        } else {
          const double d = va[i] - va[j];
          J(r, na + s) = vm[i] * (G(i, j) * std::cos(d) + B(i, j) * std::sin(d));
        }
      }
    }
    for (int r = 0; r < nm; ++r) {
      const int i = mag_vars[r];
      for (int s = 0; s < na; ++s) {
        const int j = ang_vars[s];
        if (i == j) {
          J(na + r, s) = p_calc[i] - G(i, i) * vm[i] * vm[i];
        } else {
          const double d = va[i] - va[j];
          J(na + r, s) = -vm[i] * vm[j] * (G(i, j) * std::cos(d) + B(i, j) * std::sin(d));
        }
      }
      for (int s = 0; s < nm; ++s) {
        const int j = mag_vars[s];
        if (i == j) {
          J(na + r, na + s) = q_calc[i] / vm[i] - B(i, i) * vm[i];
        } else {
          const double d = va[i] - va[j];
          J(na + r, na + s) = vm[i] * (G(i, j) * std::sin(d) - B(i, j) * std::cos(d));
        }
      }
    }

    Eigen::FullPivLU<Eigen::MatrixXd> lu(J);
    if (!lu.isInvertible()) {
      if (step == 0)
        throw Error(ErrorCode::singular, "Jacobian is singular at the first iteration");
      return finalize(false, evaluations);
    }
    const Eigen::VectorXd dx = lu.solve(rhs);
    for (int k = 0; k < na; ++k) va[ang_vars[k]] += dx[k];
    for (int k = 0; k < nm; ++k) vm[mag_vars[k]] += dx[na + k];

    for (int k = 0; k < nm; ++k) {
      const double v = vm[mag_vars[k]];
      if (!(v > kVmagFloor && v < kVmagCeil)) return finalize(false, evaluations);
    }
  }
  return finalize(false, evaluations);
}

double compute_losses(const PowerFlowSolution& solution) {
  if (!solution.converged)
    throw Error(ErrorCode::not_converged, "losses are undefined for a diverged solution");
  double loss = 0.0;
  for (const BranchFlow& f : solution.branch_flows)
    loss += f.sending.real() + f.receiving.real();
  return loss;
}

BandClass check_voltage_band(const PowerFlowSolution& solution, double lo, double hi,
                             double severe_lo, double severe_hi) {
  if (!solution.converged) return BandClass::severe;
  bool any_outside_normal = false;
  for (double v : solution.v_mag) {
    if (v < severe_lo || v > severe_hi) return BandClass::severe;
    if (v < lo || v > hi) any_outside_normal = true;
  }
  return any_outside_normal ? BandClass::violation : BandClass::all_normal;
}

const char* band_name(BandClass c) {
  switch (c) {
    case BandClass::all_normal: return "all_normal";
    case BandClass::violation: return "violation";
    default: return "severe";
  }
}

}  // namespace avc::pf
