#pragma once

#include <cstdint>
#include <vector>

#include "hsm/kernels.hpp"
#include "hsm/lattice.hpp"

namespace hsm {

// Certificates attached to a solved gap equation.  Tolerances are part of
// the contract: interval membership and the propagator bound are hard
// flags, the residuals must stay below the thresholds in all_pass().
struct GapCertificates {
  bool interval_ok = false;          // omega in (-(4/(2d+1)) sin^2(pi/L), 0)
  bool bound_ok = false;             // -lambda D(z) >= 1 - 1e-9 for every z
  double stationarity_residual = 0;  // | -lambda D(0) - 1 |
  double zero_mode_residual = 0;     // max_x |(M r)_x| for r = -lambda D(.)
  double pin_shift_residual = 0;     // | omega_pin - (omega + lambda) |

  bool all_pass() const {
    return interval_ok && bound_ok && stationarity_residual <= 1e-10 &&
           zero_mode_residual <= 1e-9 && pin_shift_residual <= 1e-10;
  }
};

struct GapSolution {
  int dim = 0;
  int length = 0;
  int volume = 0;
  double lambda = 0.0;
  double omega_minus = 0.0;
  double pinned_site_omega = 0.0;
  // D(z) indexed by separation site z; D_{xy} = profile[separation(x,y)].
  std::vector<double> profile;
  GapCertificates cert;

  bool certified() const { return cert.all_pass(); }
};

// Left side of the gap equation, (1/V) sum_p 1/(E_p + omega).
double gap_lhs(double omega, const MomentumSpectrum& sp, Exec exec = Exec::Parallel);

// Unique root of gap_lhs(omega) = -1/lambda inside the guaranteed interval.
// Bisection to tol, then two Newton steps; the bracket cannot fail for
// lambda > 0 because gap_lhs is positive at the left end and diverges to
// -infinity at 0^-.
GapSolution solve_gap(double lambda, const Lattice& lat, double tol = 1e-13);

// The left interval end -(4/(2d+1)) sin^2(pi/L).
double gap_interval_left(int dim, int length);

// omega - 1/gap_lhs(omega); at the gap solution this equals omega + lambda.
double pinned_site_omega_of(double omega, const MomentumSpectrum& sp);

// M = -laplacian + omega I + lambda at the pinned diagonal entry.  Singular
// at the gap solution, with null vector -lambda D(. - x0).
SymMat build_pinned_matrix(const Lattice& lat, double omega, double lambda, int x0 = 0);

// D as a full matrix, D_{xy} = profile[separation(x,y)].
SymMat propagator_matrix(const Lattice& lat, const std::vector<double>& profile);

// Leading large-volume prediction for -V*omega: 4 pi / ln V in d=2,
// 1/(1/lambda + C_d) in d >= 3 with C_d the nonzero-mode Green constant.
double asymptotic_gap(double lambda, int dim, long long volume);

// C_d = (1/V) sum_{p != 0} 1/E_p evaluated at a reference size and cached
// per (dim, ref_length).
double green_sum_constant(int dim, int ref_length = 64);

struct UniqueMinimumReport {
  int n_starts = 0;
  int n_converged = 0;
  double max_site_deviation = 0.0;  // max over starts of max_x |a_x - omega|
  double max_grad_norm = 0.0;
  int persistent_domain_rejections = 0;
  bool all_within_tolerance = false;  // every start ends <= 1e-6 from omega
};

// Multi-start descent evidence that the action has no stationary point
// other than the constant one.
UniqueMinimumReport verify_unique_minimum(const Lattice& lat, double lambda,
                                          int n_starts, std::uint64_t seed);

}  // namespace hsm
