#pragma once

#include <cstdint>
#include <vector>

#include "hsm/densemat.hpp"
#include "hsm/dual_action.hpp"
#include "hsm/lattice.hpp"

namespace hsm {

// Weighted graph Laplacian w_xy = -e^{-theta_x - theta_y} per bond (with
// multiplicity), diagonal fixed by zero row sums.  Equals
// diag(e^{-theta}) M(theta) diag(e^{-theta}) for the zero-source coupling
// matrix M.
SymMat weighted_laplacian(const Lattice& lat, const std::vector<double>& theta);

// Exact spanning-tree count via the integer Kirchhoff determinant of the
// lattice Laplacian with one site deleted.  Throws std::overflow_error when
// the count exceeds 64-bit range.
long long count_spanning_trees(const Lattice& lat);

// Sum over spanning trees of the product of positive bond weights
// e^{-theta_x-theta_y}, by deletion-contraction.  Parallel bonds at L=2 are
// distinct edges.  Throws std::runtime_error past the recursion budget.
double tree_weight_sum(const Lattice& lat, const std::vector<double>& theta,
                       long long budget = 40'000'000);

struct ConvexityReport {
  int grid_points = 0;
  double min_second_difference = 0.0;
  double midpoint_gap = 0.0;  // g(0)/2 + g(1)/2 - g(1/2)
  bool pass = false;          // all second differences >= -1e-9
};

// Discrete convexity of t -> ln det of the hatted weighted Laplacian along
// the segment between two pinned theta fields.
ConvexityReport log_det_convexity(const Lattice& lat, const std::vector<double>& theta_a,
                                  const std::vector<double>& theta_b, int grid_points,
                                  int x0 = 0);

struct CycleBoundReport {
  double r_value = 0.0;               // (2d + a_pin) det hat - det full
  double oriented_weighted_sum = 0.0; // sum over oriented cycles of bond factors
  long long oriented_count = 0;
  long long unoriented_count = 0;
  bool pass = false;  // r_value >= oriented_weighted_sum - slack
};

// Brute-force check of the determinant lower bound against the count of
// closed oriented nearest-neighbor paths visiting every site once.
CycleBoundReport cycle_bound_check(const Lattice& lat, const std::vector<double>& afield,
                                   const SourceField& source, const ModelParams& params,
                                   int x0 = 0);

}  // namespace hsm
