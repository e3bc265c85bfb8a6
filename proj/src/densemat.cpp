#include "hsm/densemat.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>

namespace hsm {

namespace {

std::size_t flat(int n, int i, int j) {
  return static_cast<std::size_t>(i) * n + j;
}

double rel_residual(double lhs, double rhs) {
  double scale = std::max(std::abs(lhs), std::abs(rhs));
  if (scale == 0.0) return 0.0;
  return std::abs(lhs - rhs) / scale;
}

}  // namespace

SymMat::SymMat(int n, double diag) : n_(n), a_(static_cast<std::size_t>(n) * n, 0.0) {
  if (n < 0) throw std::invalid_argument("SymMat: negative dimension");
  for (int i = 0; i < n; ++i) a_[flat(n_, i, i)] = diag;
}

void SymMat::set(int i, int j, double v) {
  a_[flat(n_, i, j)] = v;
  a_[flat(n_, j, i)] = v;
}

void SymMat::add(int i, int j, double v) {
  a_[flat(n_, i, j)] += v;
  if (i != j) a_[flat(n_, j, i)] += v;
}

double SymMat::max_abs() const {
  double m = 0.0;
  for (double v : a_) m = std::max(m, std::abs(v));
  return m;
}

double SymMat::max_abs_diag() const {
  double m = 0.0;
  for (int i = 0; i < n_; ++i) m = std::max(m, std::abs((*this)(i, i)));
  return m;
}

double SymMat::max_asymmetry() const {
  double m = 0.0;
  for (int i = 0; i < n_; ++i)
    for (int j = i + 1; j < n_; ++j)
      m = std::max(m, std::abs((*this)(i, j) - (*this)(j, i)));
  return m;
}

SymMat delete_site(const SymMat& mat, int site) {
  const int n = mat.n();
  if (site < 0 || site >= n) throw std::invalid_argument("delete_site: site out of range");
  SymMat out(n - 1);
  for (int i = 0, ii = 0; i < n; ++i) {
    if (i == site) continue;
    for (int j = 0, jj = 0; j < n; ++j) {
      if (j == site) continue;
      out.set(ii, jj, mat(i, j));
      ++jj;
    }
    ++ii;
  }
  return out;
}

// ---------------------------------------------------------------- Cholesky

Cholesky::Cholesky(const SymMat& mat)
    : n_(mat.n()), g_(static_cast<std::size_t>(mat.n()) * mat.n(), 0.0) {
  const double floor = kPivotRel * mat.max_abs_diag();
  for (int i = 0; i < n_; ++i) {
    for (int j = 0; j <= i; ++j) {
      double s = mat(i, j);
      for (int k = 0; k < j; ++k) s -= g_[flat(n_, i, k)] * g_[flat(n_, j, k)];
      if (i == j) {
        // s is the Schur-complement pivot; the relative floor decides
        // positive definiteness.
        if (!(s > floor)) throw NotPositiveDefinite("Cholesky: pivot " + std::to_string(s));
        g_[flat(n_, i, i)] = std::sqrt(s);
      } else {
        g_[flat(n_, i, j)] = s / g_[flat(n_, j, j)];
      }
    }
  }
  refresh_logdet();
}

void Cholesky::refresh_logdet() {
  double s = 0.0;
  for (int i = 0; i < n_; ++i) s += std::log(g_[flat(n_, i, i)]);
  logdet_ = 2.0 * s;
}

std::vector<double> Cholesky::solve(std::vector<double> rhs) const {
  if (static_cast<int>(rhs.size()) != n_) throw std::invalid_argument("Cholesky::solve: size mismatch");
  for (int i = 0; i < n_; ++i) {
    double s = rhs[i];
    for (int k = 0; k < i; ++k) s -= g_[flat(n_, i, k)] * rhs[k];
    rhs[i] = s / g_[flat(n_, i, i)];
  }
  for (int i = n_ - 1; i >= 0; --i) {
    double s = rhs[i];
    for (int k = i + 1; k < n_; ++k) s -= g_[flat(n_, k, i)] * rhs[k];
    rhs[i] = s / g_[flat(n_, i, i)];
  }
  return rhs;
}

SymMat Cholesky::inverse() const {
  SymMat out(n_);
  std::vector<std::vector<double>> cols(n_);
  std::vector<double> e(n_, 0.0);
  for (int j = 0; j < n_; ++j) {
    e[j] = 1.0;
    cols[j] = solve(e);
    e[j] = 0.0;
  }
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j <= i; ++j) out.set(i, j, 0.5 * (cols[j][i] + cols[i][j]));
  return out;
}

void Cholesky::update(const std::vector<double>& u) {
  if (static_cast<int>(u.size()) != n_) throw std::invalid_argument("Cholesky::update: size mismatch");
  std::vector<double> w = u;
  int start = 0;
  while (start < n_ && w[start] == 0.0) ++start;
  for (int k = start; k < n_; ++k) {
    const double gkk = g_[flat(n_, k, k)];
    const double r = std::hypot(gkk, w[k]);
    const double c = r / gkk;
    const double s = w[k] / gkk;
    g_[flat(n_, k, k)] = r;
    for (int i = k + 1; i < n_; ++i) {
      double& gik = g_[flat(n_, i, k)];
      gik = (gik + s * w[i]) / c;
      w[i] = c * w[i] - s * gik;
    }
  }
  refresh_logdet();
}

void Cholesky::downdate(const std::vector<double>& u) {
  if (static_cast<int>(u.size()) != n_) throw std::invalid_argument("Cholesky::downdate: size mismatch");
  std::vector<double> w = u;
  int start = 0;
  while (start < n_ && w[start] == 0.0) ++start;
  for (int k = start; k < n_; ++k) {
    const double gkk = g_[flat(n_, k, k)];
    const double r2 = (gkk - w[k]) * (gkk + w[k]);
    if (!(r2 > kPivotRel * gkk * gkk))
      throw NotPositiveDefinite("Cholesky::downdate: leaves the cone");
    const double r = std::sqrt(r2);
    const double c = r / gkk;
    const double s = w[k] / gkk;
    g_[flat(n_, k, k)] = r;
    for (int i = k + 1; i < n_; ++i) {
      double& gik = g_[flat(n_, i, k)];
      gik = (gik - s * w[i]) / c;
      w[i] = c * w[i] - s * gik;
    }
  }
  refresh_logdet();
}

bool is_positive_definite(const SymMat& mat) {
  try {
    Cholesky chol(mat);
    return true;
  } catch (const NotPositiveDefinite&) {
    return false;
  }
}

double logdet_spd(const SymMat& mat) { return Cholesky(mat).logdet(); }

SymMat inverse_spd(const SymMat& mat) { return Cholesky(mat).inverse(); }

// --------------------------------------------------------------- PivotedLU

PivotedLU::PivotedLU(const SymMat& mat)
    : n_(mat.n()), lu_(static_cast<std::size_t>(mat.n()) * mat.n()), perm_(mat.n()) {
  for (int i = 0; i < n_; ++i)
    for (int j = 0; j < n_; ++j) lu_[flat(n_, i, j)] = mat(i, j);
  for (int i = 0; i < n_; ++i) perm_[i] = i;
  pivot_floor_ = kPivotRel * mat.max_abs();

  for (int k = 0; k < n_; ++k) {
    int piv = k;
    double best = std::abs(lu_[flat(n_, k, k)]);
    for (int i = k + 1; i < n_; ++i) {
      double v = std::abs(lu_[flat(n_, i, k)]);
      if (v > best) {
        best = v;
        piv = i;
      }
    }
    if (piv != k) {
      for (int j = 0; j < n_; ++j) std::swap(lu_[flat(n_, k, j)], lu_[flat(n_, piv, j)]);
      std::swap(perm_[k], perm_[piv]);
      sign_ = -sign_;
    }
    const double pivot = lu_[flat(n_, k, k)];
    if (std::abs(pivot) <= pivot_floor_) {
      singular_ = true;
      continue;
    }
    for (int i = k + 1; i < n_; ++i) {
      const double f = lu_[flat(n_, i, k)] / pivot;
      lu_[flat(n_, i, k)] = f;
      for (int j = k + 1; j < n_; ++j) lu_[flat(n_, i, j)] -= f * lu_[flat(n_, k, j)];
    }
  }
}

double PivotedLU::det() const {
  double d = sign_;
  for (int k = 0; k < n_; ++k) d *= lu_[flat(n_, k, k)];
  return d;
}

std::vector<double> PivotedLU::solve(std::vector<double> rhs) const {
  if (singular_) throw SingularMatrix("PivotedLU::solve: singular matrix");
  if (static_cast<int>(rhs.size()) != n_) throw std::invalid_argument("PivotedLU::solve: size mismatch");
  std::vector<double> x(n_);
  for (int i = 0; i < n_; ++i) x[i] = rhs[perm_[i]];
  for (int i = 0; i < n_; ++i) {
    double s = x[i];
    for (int k = 0; k < i; ++k) s -= lu_[flat(n_, i, k)] * x[k];
    x[i] = s;
  }
  for (int i = n_ - 1; i >= 0; --i) {
    double s = x[i];
    for (int k = i + 1; k < n_; ++k) s -= lu_[flat(n_, i, k)] * x[k];
    x[i] = s / lu_[flat(n_, i, i)];
  }
  return x;
}

double determinant(const SymMat& mat) { return PivotedLU(mat).det(); }

SymMat inverse_sym(const SymMat& mat) {
  PivotedLU lu(mat);
  if (lu.singular()) throw SingularMatrix("inverse_sym: singular matrix");
  const int n = mat.n();
  SymMat out(n);
  std::vector<std::vector<double>> cols(n);
  std::vector<double> e(n, 0.0);
  for (int j = 0; j < n; ++j) {
    e[j] = 1.0;
    cols[j] = lu.solve(e);
    e[j] = 0.0;
  }
  for (int i = 0; i < n; ++i)
    for (int j = 0; j <= i; ++j) out.set(i, j, 0.5 * (cols[j][i] + cols[i][j]));
  return out;
}

// ------------------------------------------------------------------ Jacobi

std::vector<double> jacobi_eigenvalues(const SymMat& mat) {
  const int n = mat.n();
  std::vector<double> a(static_cast<std::size_t>(n) * n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a[flat(n, i, j)] = mat(i, j);

  double frob = 0.0;
  for (double v : a) frob += v * v;
  frob = std::sqrt(frob);
  const double stop = 1e-14 * std::max(1.0, frob);

  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0;
    for (int i = 0; i < n; ++i)
      for (int j = i + 1; j < n; ++j) off += 2.0 * a[flat(n, i, j)] * a[flat(n, i, j)];
    if (std::sqrt(off) <= stop) break;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const double apq = a[flat(n, p, q)];
        if (apq == 0.0) continue;
        const double theta = (a[flat(n, q, q)] - a[flat(n, p, p)]) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double s = t * c;
        for (int k = 0; k < n; ++k) {
          const double akp = a[flat(n, k, p)];
          const double akq = a[flat(n, k, q)];
          a[flat(n, k, p)] = c * akp - s * akq;
          a[flat(n, k, q)] = s * akp + c * akq;
        }
        for (int k = 0; k < n; ++k) {
          const double apk = a[flat(n, p, k)];
          const double aqk = a[flat(n, q, k)];
          a[flat(n, p, k)] = c * apk - s * aqk;
          a[flat(n, q, k)] = s * apk + c * aqk;
        }
      }
    }
  }

  std::vector<double> eig(n);
  for (int i = 0; i < n; ++i) eig[i] = a[flat(n, i, i)];
  std::sort(eig.begin(), eig.end());
  return eig;
}

// ----------------------------------------------------------------- Bareiss

namespace {

__int128 mul_checked(__int128 a, __int128 b) {
  __int128 out;
  if (__builtin_mul_overflow(a, b, &out)) throw std::overflow_error("integer_determinant: overflow");
  return out;
}

__int128 sub_checked(__int128 a, __int128 b) {
  __int128 out;
  if (__builtin_sub_overflow(a, b, &out)) throw std::overflow_error("integer_determinant: overflow");
  return out;
}

}  // namespace

__int128 integer_determinant(std::vector<std::vector<long long>> m) {
  const int n = static_cast<int>(m.size());
  for (const auto& row : m)
    if (static_cast<int>(row.size()) != n) throw std::invalid_argument("integer_determinant: not square");
  if (n == 0) return 1;

  std::vector<std::vector<__int128>> w(n, std::vector<__int128>(n));
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) w[i][j] = m[i][j];

  __int128 prev = 1;
  int sign = 1;
  for (int k = 0; k + 1 < n; ++k) {
    if (w[k][k] == 0) {
      int piv = -1;
      for (int i = k + 1; i < n; ++i)
        if (w[i][k] != 0) {
          piv = i;
          break;
        }
      if (piv < 0) return 0;
      std::swap(w[k], w[piv]);
      sign = -sign;
    }
    for (int i = k + 1; i < n; ++i) {
      for (int j = k + 1; j < n; ++j) {
        const __int128 num =
            sub_checked(mul_checked(w[i][j], w[k][k]), mul_checked(w[i][k], w[k][j]));
        w[i][j] = num / prev;  // exact division, Bareiss invariant
      }
      w[i][k] = 0;
    }
    prev = w[k][k];
  }
  return sign > 0 ? w[n - 1][n - 1] : -w[n - 1][n - 1];
}

std::string int128_to_string(__int128 v) {
  if (v == 0) return "0";
  const bool neg = v < 0;
  unsigned __int128 u = neg ? -static_cast<unsigned __int128>(v) : static_cast<unsigned __int128>(v);
  std::string digits;
  while (u > 0) {
    digits.push_back(static_cast<char>('0' + static_cast<int>(u % 10)));
    u /= 10;
  }
  if (neg) digits.push_back('-');
  std::reverse(digits.begin(), digits.end());
  return digits;
}

// ---------------------------------------------------------- aux identities

SymMat hat_inverse_from_full(const SymMat& full_inverse, int x0) {
  const int n = full_inverse.n();
  if (x0 < 0 || x0 >= n) throw std::invalid_argument("hat_inverse_from_full: site out of range");
  const double pin = full_inverse(x0, x0);
  if (std::abs(pin) <= kPivotRel * full_inverse.max_abs_diag())
    throw SingularMatrix("hat_inverse_from_full: vanishing pinned diagonal entry");
  SymMat out(n - 1);
  for (int i = 0, ii = 0; i < n; ++i) {
    if (i == x0) continue;
    for (int j = 0, jj = 0; j <= i; ++j) {
      if (j == x0) continue;
      out.set(ii, jj, full_inverse(i, j) - full_inverse(i, x0) * full_inverse(j, x0) / pin);
      ++jj;
    }
    ++ii;
  }
  return out;
}

AuxReport verify_aux_identities(const SymMat& mat, int x0, double shift) {
  const int n = mat.n();
  if (x0 < 0 || x0 >= n) throw std::invalid_argument("verify_aux_identities: site out of range");

  SymMat shifted = mat;          // At = A + shift at (x0,x0)
  shifted.add(x0, x0, shift);

  PivotedLU lu_a(mat);
  PivotedLU lu_shifted(shifted);
  if (lu_a.singular() || lu_shifted.singular())
    throw SingularMatrix("verify_aux_identities: singular input");
  const double det_a = lu_a.det();
  const double det_shifted = lu_shifted.det();

  const SymMat inv_a = inverse_sym(mat);
  const SymMat inv_shifted = inverse_sym(shifted);
  const double det_hat = determinant(delete_site(mat, x0));

  AuxReport rep;

  // det A recovered from the deleted matrix and the pinned inverse entry.
  {
    const double rhs = det_hat / inv_a(x0, x0);
    rep.det_hat_abs = std::abs(det_a - rhs);
    rep.det_hat_rel = rel_residual(det_a, rhs);
  }

  // Rank-one resolvent split: inv(A) from inv(At).
  {
    const double denom = 1.0 - shift * inv_shifted(x0, x0);
    if (std::abs(denom) <= kPivotRel)
      throw SingularMatrix("verify_aux_identities: resolvent split degenerate");
    const double coef = shift / denom;
    double abs_err = 0.0, scale = 0.0;
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j <= i; ++j) {
        const double rhs = inv_shifted(i, j) + coef * inv_shifted(i, x0) * inv_shifted(j, x0);
        abs_err = std::max(abs_err, std::abs(inv_a(i, j) - rhs));
        scale = std::max({scale, std::abs(inv_a(i, j)), std::abs(rhs)});
      }
    }
    rep.resolvent_abs = abs_err;
    rep.resolvent_rel = scale > 0.0 ? abs_err / scale : 0.0;
  }

  // Pinned-entry relations: the reciprocal shift and the invariance of the
  // column ratio at x0.
  {
    const double lhs = 1.0 / inv_a(x0, x0);
    const double rhs = -shift + 1.0 / inv_shifted(x0, x0);
    double abs_err = std::abs(lhs - rhs);
    double rel_err = rel_residual(lhs, rhs);

    double ratio_abs = 0.0, ratio_scale = 0.0;
    for (int i = 0; i < n; ++i) {
      const double ra = inv_a(i, x0) / inv_a(x0, x0);
      const double rs = inv_shifted(i, x0) / inv_shifted(x0, x0);
      ratio_abs = std::max(ratio_abs, std::abs(ra - rs));
      ratio_scale = std::max({ratio_scale, std::abs(ra), std::abs(rs)});
    }
    rep.pinned_entry_abs = std::max(abs_err, ratio_abs);
    rep.pinned_entry_rel = std::max(rel_err, ratio_scale > 0.0 ? ratio_abs / ratio_scale : 0.0);
  }

  // Determinant split between A and the shifted matrix.
  {
    const double rhs = det_shifted - shift * det_hat;
    rep.det_split_abs = std::abs(det_a - rhs);
    rep.det_split_rel = rel_residual(det_a, rhs);
  }

  rep.max_rel = std::max({rep.det_hat_rel, rep.resolvent_rel, rep.pinned_entry_rel, rep.det_split_rel});
  rep.pass = rep.max_rel <= 1e-9;
  return rep;
}

}  // namespace hsm
