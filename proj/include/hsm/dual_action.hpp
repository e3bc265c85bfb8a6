#pragma once

#include <vector>

#include "hsm/densemat.hpp"
#include "hsm/gap.hpp"
#include "hsm/lattice.hpp"

namespace hsm {

// Coupling parameters.  Constructed either from lambda alone or from
// (N, beta), in which case lambda = (N+1)/beta is the derived one and
// lambda*beta recovers N+1 to rounding.
struct ModelParams {
  double lambda = 0.0;
  int spin_components = 0;  // 0 in lambda-only form
  double beta = 0.0;

  static ModelParams from_lambda(double lambda);
  static ModelParams from_spin_beta(int spin_components, double beta);
  bool has_spin_beta() const { return spin_components > 0; }
};

// Symmetric source on nearest-neighbor bonds.  Diagonal entries are zero and
// bond values must be <= 0; everything off the bond structure stays zero.
class SourceField {
 public:
  static SourceField zero(const Lattice& lat);

  bool is_zero() const { return !any_; }
  int volume() const { return volume_; }
  double operator()(int x, int y) const { return any_ ? h_(x, y) : 0.0; }
  void set_bond(const Lattice& lat, int x, int y, double value);

 private:
  explicit SourceField(int volume) : volume_(volume), h_(volume) {}

  int volume_ = 0;
  bool any_ = false;
  SymMat h_;
};

// Site fields are plain vectors of length V.  a-fields carry meaningful
// values off the pinned site only (entry x0 is ignored on input); theta
// fields must hold an exact 0 at x0.
void require_pinned(const std::vector<double>& theta, int x0);

// Full coupling matrix: off-diagonal entries -(1 - H_xy/beta) per bond with
// multiplicity, diagonal 2d + a_x, and the given value at the pinned site
// in place of a_{x0}.  A nonzero source requires the (N, beta) form.
SymMat build_coupling(const Lattice& lat, const std::vector<double>& afield,
                      double pin_value, const SourceField& source,
                      const ModelParams& params, int x0 = 0);

// Same matrix with row/column x0 removed (it never depends on a_{x0}).
SymMat hat_coupling(const Lattice& lat, const std::vector<double>& afield,
                    const SourceField& source, const ModelParams& params, int x0 = 0);

// The a-field is admissible iff the hatted coupling matrix is positive
// definite.  Positivity of the r-field is implied and cross-checked in tests.
bool in_domain(const Lattice& lat, const std::vector<double>& afield,
               const SourceField& source, const ModelParams& params, int x0 = 0);

// Value the pinned-site diagonal is forced to by the zero-determinant
// constraint, computed as a Schur complement through the positive definite
// hatted matrix; stays finite where the depinned matrix is singular.
double pin_constraint_value(const Lattice& lat, const std::vector<double>& afield,
                            const SourceField& source, const ModelParams& params,
                            int x0 = 0);

// r_x = e^{-theta_x} in the horospherical picture: r at x0 is 1, the rest
// solves the hatted linear system against the pinned column.
std::vector<double> r_field(const Lattice& lat, const std::vector<double>& afield,
                            const SourceField& source, const ModelParams& params,
                            int x0 = 0);

// Horospherical change of variables.  Returns the full a-field, including
// the constrained pinned entry, such that the coupling matrix built from it
// annihilates e^{-theta}.
std::vector<double> a_from_theta(const Lattice& lat, const std::vector<double>& theta,
                                 const SourceField& source, const ModelParams& params,
                                 int x0 = 0);

// Coupling matrix expressed directly in theta: off-diagonals as in
// build_coupling, diagonal e^{theta_x} sum_slots (1 - H/beta) e^{-theta_nbr}.
// Identical to build_coupling(a_from_theta(theta)) including the pinned row.
SymMat theta_matrix(const Lattice& lat, const std::vector<double>& theta,
                    const SourceField& source, const ModelParams& params);

// Effective action of the a-field after the Gaussian reduction, up to an
// a-independent constant.  Throws NotPositiveDefinite outside the domain.
double dual_action_value(const Lattice& lat, const std::vector<double>& afield,
                         const SourceField& source, const ModelParams& params,
                         int x0 = 0);

// Analytic gradient at zero source; entry x0 is 0.
std::vector<double> grad_dual_action(const Lattice& lat, const std::vector<double>& afield,
                                     const ModelParams& params, int x0 = 0);

// Analytic Hessian at zero source over the unpinned sites.
SymMat hess_dual_action(const Lattice& lat, const std::vector<double>& afield,
                        const ModelParams& params, int x0 = 0);

// Strictly convex theta-space action; equals twice the dual action
// composed with a_from_theta.  Zero source.
double theta_action(const Lattice& lat, const std::vector<double>& theta,
                    const ModelParams& params, int x0 = 0);

std::vector<double> grad_theta_action(const Lattice& lat, const std::vector<double>& theta,
                                      const ModelParams& params, int x0 = 0);

struct DescentOptions {
  int max_iter = 5000;
  double grad_tol = 1e-8;
  int polish_steps = 3;
};

struct DescentResult {
  std::vector<double> point;
  double value = 0.0;
  double grad_inf_norm = 0.0;
  int iterations = 0;
  int rejected_steps = 0;  // backtracks forced by domain violations
  bool converged = false;
};

// Backtracking gradient descent on the dual action with steps leaving the
// domain rejected in the line search, followed by Newton polish once the
// gradient is small.
DescentResult minimize_dual_action(const Lattice& lat, const ModelParams& params,
                                   const std::vector<double>& start, int x0 = 0,
                                   const DescentOptions& opts = {});

// Same scheme in theta coordinates.
DescentResult minimize_theta_action(const Lattice& lat, const ModelParams& params,
                                    const std::vector<double>& start, int x0 = 0,
                                    const DescentOptions& opts = {});

// Quadratic form of the second-order expansion around the certified constant
// saddle, over unpinned sites, plus the scalar source contraction.  Requires
// a certified GapSolution; anything else is rejected as uncertified input.
struct SaddleHessian {
  SymMat quadratic_form;
  double source_term = 0.0;
  double max_bracket = 0.0;  // largest D(x-y)^2 - lambda^2 D(x)^2 D(y)^2
  double min_eigenvalue = 0.0;
};

SaddleHessian saddle_hessian(const Lattice& lat, const GapSolution& sol,
                             const ModelParams& params, const SourceField& source,
                             int x0 = 0);

}  // namespace hsm
