#pragma once

#include <Eigen/Sparse>
#include <complex>
#include <vector>

#include "grid/model.hpp"

namespace avc::pf {

using Complex = std::complex<double>;

struct AdmittanceMatrix {
  int n = 0;
  Eigen::SparseMatrix<Complex> entries;  // per-unit nodal admittances
};

/// Assembles the nodal admittance matrix from in-service branches using the
/// standard pi model with off-nominal taps (LTC positions included).
AdmittanceMatrix build_ybus(const grid::GridCase& c);

struct BranchFlow {
  Complex sending;    // complex power into the branch at the from side, pu
  Complex receiving;  // complex power into the branch at the to side, pu
};

struct PowerFlowSolution {
  std::vector<double> v_mag;   // pu, per bus (case order)
  std::vector<double> v_ang;   // radians
  std::vector<double> p_inj;   // net active injection at the solved state
  std::vector<double> q_inj;
  std::vector<BranchFlow> branch_flows;  // zero for out-of-service branches
  double total_loss = 0.0;     // sum of branch active losses, pu
  bool converged = false;
  int iterations = 0;          // mismatch evaluations performed
};

struct SolverSettings {
  double tolerance = 1e-8;  // max |mismatch|, pu
  int max_iterations = 30;
  bool flat_start = true;
};

/// Polar Newton-Raphson over the PV/PQ mismatch equations. Divergence is a
/// normal result (converged=false, last iterate returned); only a Jacobian
/// that cannot be factorized on the very first step throws (modeling error).
/// `warm` seeds angles and PQ magnitudes when given (PV/slack magnitudes are
/// always pinned to their set points).
PowerFlowSolution solve(const grid::GridCase& c, const SolverSettings& settings = {},
                        const PowerFlowSolution* warm = nullptr);

/// Recomputes total active loss from branch flows. Throws when !converged.
double compute_losses(const PowerFlowSolution& solution);

enum class BandClass { all_normal, violation, severe };

/// Eq-style three-zone classification of a (possibly diverged) solution.
BandClass check_voltage_band(const PowerFlowSolution& solution, double lo = 0.95,
                             double hi = 1.05, double severe_lo = 0.8,
                             double severe_hi = 1.2);

const char* band_name(BandClass c);

}  // namespace avc::pf
