#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace hsm {

// Every factorization in this project treats a pivot as zero when it falls
// at or below kPivotRel times the largest diagonal magnitude of the input.
inline constexpr double kPivotRel = 1e-12;

struct NotPositiveDefinite : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SingularMatrix : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense symmetric matrix, full row-major storage.  set()/add() mirror both
// triangles, so reads never canonicalize the index pair.
class SymMat {
 public:
  SymMat() = default;
  SymMat(int n, double diag);
  explicit SymMat(int n) : SymMat(n, 0.0) {}

  static SymMat identity(int n) { return SymMat(n, 1.0); }

  int n() const { return n_; }
  double operator()(int i, int j) const {
    return a_[static_cast<std::size_t>(i) * n_ + j];
  }
  void set(int i, int j, double v);
  void add(int i, int j, double v);

  double max_abs() const;
  double max_abs_diag() const;
  double max_asymmetry() const;

 private:
  int n_ = 0;
  std::vector<double> a_;
};

SymMat delete_site(const SymMat& mat, int site);

// Cholesky factorization A = G Gt, G lower triangular.  Construction throws
// NotPositiveDefinite when a Schur-complement pivot is <= the relative floor;
// this doubles as the Hurwitz positivity test.
class Cholesky {
 public:
  explicit Cholesky(const SymMat& mat);

  int n() const { return n_; }
  double logdet() const { return logdet_; }
  std::vector<double> solve(std::vector<double> rhs) const;
  SymMat inverse() const;

  // Rank-one modifications A -> A +/- u ut, O(n^2), skipping leading zeros
  // of u.  downdate() throws NotPositiveDefinite when the result leaves the
  // positive definite cone.
  void update(const std::vector<double>& u);
  void downdate(const std::vector<double>& u);

  double lower(int i, int j) const {
    return g_[static_cast<std::size_t>(i) * n_ + j];
  }

 private:
  void refresh_logdet();

  int n_ = 0;
  std::vector<double> g_;
  double logdet_ = 0.0;
};

bool is_positive_definite(const SymMat& mat);
double logdet_spd(const SymMat& mat);    // requires PD; throws otherwise
SymMat inverse_spd(const SymMat& mat);   // requires PD; throws otherwise

// LU with partial pivoting for symmetric but possibly indefinite input.
// det() stays defined for singular matrices; solve()/inverse() throw.
class PivotedLU {
 public:
  explicit PivotedLU(const SymMat& mat);

  bool singular() const { return singular_; }
  double det() const;
  std::vector<double> solve(std::vector<double> rhs) const;

 private:
  int n_ = 0;
  std::vector<double> lu_;
  std::vector<int> perm_;
  int sign_ = 1;
  bool singular_ = false;
  double pivot_floor_ = 0.0;
};

double determinant(const SymMat& mat);

// Inverse of a symmetric indefinite matrix via PivotedLU; the result is
// re-symmetrized, and its asymmetry before that step must stay below
// 1e-12 relative (checked by tests, not here).
SymMat inverse_sym(const SymMat& mat);

// Cyclic Jacobi eigenvalues, ascending.  Slow and trusted: this is the
// oracle the fast paths are measured against.
std::vector<double> jacobi_eigenvalues(const SymMat& mat);

// Fraction-free Bareiss determinant over the integers.  Intermediates are
// held in __int128 and every product is overflow-checked; throws
// std::overflow_error instead of wrapping.
__int128 integer_determinant(std::vector<std::vector<long long>> m);
std::string int128_to_string(__int128 v);

// Inverse of the matrix with row/column x0 removed, computed from the
// inverse of the full matrix.  Throws SingularMatrix when the (x0,x0)
// entry of the full inverse vanishes.
SymMat hat_inverse_from_full(const SymMat& full_inverse, int x0);

// Residuals of the four shift identities relating A and At := A + shift at
// the (x0,x0) diagonal entry: the determinant reduction onto the deleted
// matrix (det_hat), the rank-one resolvent split (resolvent), the two
// pinned-entry ratio relations (pinned_entry), and the determinant split
// (det_split).
struct AuxReport {
  double det_hat_abs = 0.0, det_hat_rel = 0.0;
  double resolvent_abs = 0.0, resolvent_rel = 0.0;
  double pinned_entry_abs = 0.0, pinned_entry_rel = 0.0;
  double det_split_abs = 0.0, det_split_rel = 0.0;
  double max_rel = 0.0;
  bool pass = false;  // true iff every relative residual <= 1e-9
};

AuxReport verify_aux_identities(const SymMat& mat, int x0, double shift);

}  // namespace hsm
