#include "hsm/dual_action.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hsm {

namespace {

int hat_index(int site, int x0) { return site < x0 ? site : site - 1; }

double bond_factor(const SourceField& source, const ModelParams& params, int x, int y) {
  if (source.is_zero()) return 1.0;
  return 1.0 - source(x, y) / params.beta;
}

void check_source_params(const SourceField& source, const ModelParams& params) {
  if (!source.is_zero() && !params.has_spin_beta())
    throw std::invalid_argument("nonzero source requires the (N, beta) parameter form");
}

// Column of the coupling matrix at the pinned site, restricted to the
// unpinned index set.
std::vector<double> pinned_column(const Lattice& lat, const SourceField& source,
                                  const ModelParams& params, int x0) {
  std::vector<double> col(lat.volume - 1, 0.0);
  for (int slot = 0; slot < 2 * lat.dim; ++slot) {
    const int y = lat.neighbor(x0, slot);
    col[hat_index(y, x0)] -= bond_factor(source, params, x0, y);
  }
  return col;
}

double unpinned_sum(const Lattice& lat, const std::vector<double>& afield, int x0) {
  double s = 0.0;
  for (int x = 0; x < lat.volume; ++x)
    if (x != x0) s += afield[x];
  return s;
}

}  // namespace

ModelParams ModelParams::from_lambda(double lambda) {
  if (!(lambda > 0.0)) throw std::invalid_argument("ModelParams: lambda must be positive");
  ModelParams p;
  p.lambda = lambda;
  return p;
}

ModelParams ModelParams::from_spin_beta(int spin_components, double beta) {
  if (spin_components < 1) throw std::invalid_argument("ModelParams: need at least one spin component");
  if (!(beta > 0.0)) throw std::invalid_argument("ModelParams: beta must be positive");
  ModelParams p;
  p.spin_components = spin_components;
  p.beta = beta;
  p.lambda = (spin_components + 1.0) / beta;
  return p;
}

SourceField SourceField::zero(const Lattice& lat) { return SourceField(lat.volume); }

void SourceField::set_bond(const Lattice& lat, int x, int y, double value) {
  if (x == y) throw std::invalid_argument("SourceField: diagonal entries stay zero");
  bool bonded = false;
  for (int slot = 0; slot < 2 * lat.dim && !bonded; ++slot) bonded = lat.neighbor(x, slot) == y;
  if (!bonded) throw std::invalid_argument("SourceField: sites are not nearest neighbors");
  if (value > 0.0) throw std::invalid_argument("SourceField: bond values must be <= 0");
  h_.set(x, y, value);
  any_ = true;
}

void require_pinned(const std::vector<double>& theta, int x0) {
  if (theta[x0] != 0.0) throw std::invalid_argument("theta field must vanish at the pinned site");
}

SymMat build_coupling(const Lattice& lat, const std::vector<double>& afield,
                      double pin_value, const SourceField& source,
                      const ModelParams& params, int x0) {
  check_source_params(source, params);
  SymMat out(lat.volume);
  for (int x = 0; x < lat.volume; ++x) {
    out.set(x, x, 2.0 * lat.dim + (x == x0 ? pin_value : afield[x]));
    for (int slot = 0; slot < 2 * lat.dim; ++slot) {
      const int y = lat.neighbor(x, slot);
      if (y > x) out.add(x, y, -bond_factor(source, params, x, y));
    }
  }
  return out;
}

SymMat hat_coupling(const Lattice& lat, const std::vector<double>& afield,
                    const SourceField& source, const ModelParams& params, int x0) {
  return delete_site(build_coupling(lat, afield, 0.0, source, params, x0), x0);
}

bool in_domain(const Lattice& lat, const std::vector<double>& afield,
               const SourceField& source, const ModelParams& params, int x0) {
  return is_positive_definite(hat_coupling(lat, afield, source, params, x0));
}

double pin_constraint_value(const Lattice& lat, const std::vector<double>& afield,
                            const SourceField& source, const ModelParams& params, int x0) {
  const Cholesky chol(hat_coupling(lat, afield, source, params, x0));
  const std::vector<double> col = pinned_column(lat, source, params, x0);
  const std::vector<double> sol = chol.solve(col);
  double quad = 0.0;
  for (int i = 0; i < lat.volume - 1; ++i) quad += col[i] * sol[i];
  // Schur complement of the depinned matrix at the pinned site; the
  // constrained diagonal shift is its negative.
  return -(2.0 * lat.dim - quad);
}

std::vector<double> r_field(const Lattice& lat, const std::vector<double>& afield,
                            const SourceField& source, const ModelParams& params, int x0) {
  const Cholesky chol(hat_coupling(lat, afield, source, params, x0));
  std::vector<double> rhs = pinned_column(lat, source, params, x0);
  for (double& v : rhs) v = -v;
  const std::vector<double> rhat = chol.solve(rhs);
  std::vector<double> out(lat.volume);
  out[x0] = 1.0;
  for (int x = 0; x < lat.volume; ++x)
    if (x != x0) out[x] = rhat[hat_index(x, x0)];
  return out;
}

std::vector<double> a_from_theta(const Lattice& lat, const std::vector<double>& theta,
                                 const SourceField& source, const ModelParams& params, int x0) {
  check_source_params(source, params);
  require_pinned(theta, x0);
  std::vector<double> out(lat.volume);
  for (int x = 0; x < lat.volume; ++x) {
    double acc = 0.0;
    for (int slot = 0; slot < 2 * lat.dim; ++slot) {
      const int y = lat.neighbor(x, slot);
      acc += bond_factor(source, params, x, y) * std::exp(-theta[y]);
    }
    out[x] = -2.0 * lat.dim + std::exp(theta[x]) * acc;
  }
  return out;
}

SymMat theta_matrix(const Lattice& lat, const std::vector<double>& theta,
                    const SourceField& source, const ModelParams& params) {
  check_source_params(source, params);
  SymMat out(lat.volume);
  for (int x = 0; x < lat.volume; ++x) {
    double acc = 0.0;
    for (int slot = 0; slot < 2 * lat.dim; ++slot) {
      const int y = lat.neighbor(x, slot);
      acc += bond_factor(source, params, x, y) * std::exp(-theta[y]);
      if (y > x) out.add(x, y, -bond_factor(source, params, x, y));
    }
    out.set(x, x, std::exp(theta[x]) * acc);
  }
  return out;
}

double dual_action_value(const Lattice& lat, const std::vector<double>& afield,
                         const SourceField& source, const ModelParams& params, int x0) {
  const Cholesky chol(hat_coupling(lat, afield, source, params, x0));
  const std::vector<double> col = pinned_column(lat, source, params, x0);
  const std::vector<double> sol = chol.solve(col);
  double quad = 0.0;
  for (int i = 0; i < lat.volume - 1; ++i) quad += col[i] * sol[i];
  const double schur = 2.0 * lat.dim - quad;
  return 0.5 * chol.logdet() + (unpinned_sum(lat, afield, x0) - schur) / (2.0 * params.lambda);
}

std::vector<double> grad_dual_action(const Lattice& lat, const std::vector<double>& afield,
                                     const ModelParams& params, int x0) {
  const SourceField none = SourceField::zero(lat);
  const Cholesky chol(hat_coupling(lat, afield, none, params, x0));
  const SymMat inv = chol.inverse();
  std::vector<double> rhs = pinned_column(lat, none, params, x0);
  for (double& v : rhs) v = -v;
  const std::vector<double> rhat = chol.solve(rhs);

  std::vector<double> grad(lat.volume, 0.0);
  for (int x = 0; x < lat.volume; ++x) {
    if (x == x0) continue;
    const int i = hat_index(x, x0);
    grad[x] = 0.5 * inv(i, i) + (1.0 - rhat[i] * rhat[i]) / (2.0 * params.lambda);
  }
  return grad;
}

SymMat hess_dual_action(const Lattice& lat, const std::vector<double>& afield,
                        const ModelParams& params, int x0) {
  const SourceField none = SourceField::zero(lat);
  const Cholesky chol(hat_coupling(lat, afield, none, params, x0));
  const SymMat inv = chol.inverse();
  std::vector<double> rhs = pinned_column(lat, none, params, x0);
  for (double& v : rhs) v = -v;
  const std::vector<double> rhat = chol.solve(rhs);

  const int m = lat.volume - 1;
  SymMat out(m);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j <= i; ++j) {
      const double gij = inv(i, j);
      out.set(i, j, -0.5 * gij * gij + gij * rhat[i] * rhat[j] / params.lambda);
    }
  return out;
}

double theta_action(const Lattice& lat, const std::vector<double>& theta,
                    const ModelParams& params, int x0) {
  require_pinned(theta, x0);
  const SourceField none = SourceField::zero(lat);
  const SymMat mhat = delete_site(theta_matrix(lat, theta, none, params), x0);
  double bonds = 0.0;
  for (int x = 0; x < lat.volume; ++x)
    for (int mu = 0; mu < lat.dim; ++mu)
      bonds += std::cosh(theta[x] - theta[lat.neighbor(x, 2 * mu)]) - 1.0;
  return Cholesky(mhat).logdet() + 2.0 * bonds / params.lambda;
}

std::vector<double> grad_theta_action(const Lattice& lat, const std::vector<double>& theta,
                                      const ModelParams& params, int x0) {
  require_pinned(theta, x0);
  const SourceField none = SourceField::zero(lat);
  const SymMat mfull = theta_matrix(lat, theta, none, params);
  const SymMat minv = Cholesky(delete_site(mfull, x0)).inverse();

  std::vector<double> grad(lat.volume, 0.0);
  for (int z = 0; z < lat.volume; ++z) {
    if (z == x0) continue;
    const int iz = hat_index(z, x0);
    double g = minv(iz, iz) * mfull(z, z);
    for (int slot = 0; slot < 2 * lat.dim; ++slot) {
      const int x = lat.neighbor(z, slot);
      if (x != x0) g -= minv(hat_index(x, x0), hat_index(x, x0)) * std::exp(theta[x] - theta[z]);
      g += 2.0 * std::sinh(theta[z] - theta[x]) / params.lambda;
    }
    grad[z] = g;
  }
  return grad;
}

namespace {

// Shared Armijo loop.  The value functor may throw NotPositiveDefinite to
// signal a domain violation; such steps are backtracked.
template <typename ValueFn, typename GradFn>
DescentResult descend(std::vector<double> point, int x0, const DescentOptions& opts,
                      ValueFn&& value_of, GradFn&& grad_of) {
  DescentResult res;
  double value = value_of(point);
  std::vector<double> grad = grad_of(point);
  double step = 1.0;

  auto inf_norm = [x0](const std::vector<double>& g) {
    double m = 0.0;
    for (int i = 0; i < static_cast<int>(g.size()); ++i)
      if (i != x0) m = std::max(m, std::abs(g[i]));
    return m;
  };

  int iter = 0;
  for (; iter < opts.max_iter; ++iter) {
    const double ginf = inf_norm(grad);
    if (ginf <= opts.grad_tol) break;
    double gsq = 0.0;
    for (int i = 0; i < static_cast<int>(grad.size()); ++i)
      if (i != x0) gsq += grad[i] * grad[i];

    double t = step;
    bool accepted = false;
    while (t > 1e-18) {
      std::vector<double> cand = point;
      for (int i = 0; i < static_cast<int>(cand.size()); ++i)
        if (i != x0) cand[i] -= t * grad[i];
      try {
        const double cval = value_of(cand);
        if (cval <= value - 1e-4 * t * gsq) {
          point = std::move(cand);
          value = cval;
          accepted = true;
          break;
        }
      } catch (const NotPositiveDefinite&) {
        ++res.rejected_steps;
      }
      t *= 0.5;
    }
    if (!accepted) break;  // stalled line search
    grad = grad_of(point);
    step = std::min(2.0 * t, 4.0);
  }

  res.point = std::move(point);
  res.value = value;
  res.grad_inf_norm = inf_norm(grad);
  res.iterations = iter;
  res.converged = res.grad_inf_norm <= opts.grad_tol;
  return res;
}

}  // namespace

DescentResult minimize_dual_action(const Lattice& lat, const ModelParams& params,
                                   const std::vector<double>& start, int x0,
                                   const DescentOptions& opts) {
  const SourceField none = SourceField::zero(lat);
  if (!in_domain(lat, start, none, params, x0))
    throw std::domain_error("minimize_dual_action: start outside the domain");

  auto value_of = [&](const std::vector<double>& a) {
    return dual_action_value(lat, a, none, params, x0);
  };
  auto grad_of = [&](const std::vector<double>& a) {
    return grad_dual_action(lat, a, params, x0);
  };

  DescentResult res = descend(start, x0, opts, value_of, grad_of);

  // Newton polish: near the minimum the analytic Hessian is positive
  // definite and one or two steps land at solver precision.
  for (int k = 0; k < opts.polish_steps; ++k) {
    std::vector<double> grad = grad_of(res.point);
    std::vector<double> ghat(lat.volume - 1);
    for (int x = 0; x < lat.volume; ++x)
      if (x != x0) ghat[hat_index(x, x0)] = grad[x];
    try {
      const Cholesky hess(hess_dual_action(lat, res.point, params, x0));
      const std::vector<double> dir = hess.solve(ghat);
      std::vector<double> cand = res.point;
      for (int x = 0; x < lat.volume; ++x)
        if (x != x0) cand[x] -= dir[hat_index(x, x0)];
      if (!in_domain(lat, cand, none, params, x0)) break;
      res.point = std::move(cand);
    } catch (const NotPositiveDefinite&) {
      break;
    }
  }
  std::vector<double> grad = grad_of(res.point);
  double ginf = 0.0;
  for (int x = 0; x < lat.volume; ++x)
    if (x != x0) ginf = std::max(ginf, std::abs(grad[x]));
  res.grad_inf_norm = ginf;
  res.value = value_of(res.point);
  res.converged = ginf <= opts.grad_tol;
  return res;
}

DescentResult minimize_theta_action(const Lattice& lat, const ModelParams& params,
                                    const std::vector<double>& start, int x0,
                                    const DescentOptions& opts) {
  require_pinned(start, x0);
  auto value_of = [&](const std::vector<double>& t) { return theta_action(lat, t, params, x0); };
  auto grad_of = [&](const std::vector<double>& t) { return grad_theta_action(lat, t, params, x0); };
  DescentResult res = descend(start, x0, opts, value_of, grad_of);

  // First-order descent crawls through the flat tail, so polish with Newton
  // steps on a central-difference Hessian of the analytic gradient.  The
  // theta functional is strictly convex with no domain boundary, which makes
  // the polish safe whenever the descent has landed near the minimum.
  const int v = lat.volume;
  const int m = v - 1;
  const double h = 1e-6;
  for (int k = 0; k < opts.polish_steps; ++k) {
    const std::vector<double> grad = grad_of(res.point);
    std::vector<double> ghat(m);
    for (int x = 0; x < v; ++x)
      if (x != x0) ghat[hat_index(x, x0)] = grad[x];

    SymMat hess(m);
    for (int y = 0; y < v; ++y) {
      if (y == x0) continue;
      std::vector<double> up = res.point;
      std::vector<double> dn = res.point;
      up[y] += h;
      dn[y] -= h;
      const std::vector<double> gp = grad_of(up);
      const std::vector<double> gm = grad_of(dn);
      const int col = hat_index(y, x0);
      for (int x = 0; x < v; ++x) {
        if (x == x0) continue;
        const int row = hat_index(x, x0);
        const double est = 0.5 * (gp[x] - gm[x]) / h;
        // add() mirrors into both slots; halving the off-diagonal lets the
        // matching pass through column x average the pair into symmetry.
        hess.add(row, col, row == col ? est : 0.5 * est);
      }
    }

    try {
      const Cholesky fac(hess);
      const std::vector<double> dir = fac.solve(ghat);
      std::vector<double> cand = res.point;
      for (int x = 0; x < v; ++x)
        if (x != x0) cand[x] -= dir[hat_index(x, x0)];
      res.point = std::move(cand);
    } catch (const NotPositiveDefinite&) {
      break;
    }
  }
  std::vector<double> grad = grad_of(res.point);
  double ginf = 0.0;
  for (int x = 0; x < v; ++x)
    if (x != x0) ginf = std::max(ginf, std::abs(grad[x]));
  res.grad_inf_norm = ginf;
  res.value = value_of(res.point);
  res.converged = ginf <= opts.grad_tol;
  return res;
}

SaddleHessian saddle_hessian(const Lattice& lat, const GapSolution& sol,
                             const ModelParams& params, const SourceField& source,
                             int x0) {
  if (lat.dim != sol.dim || lat.length != sol.length)
    throw std::invalid_argument("saddle_hessian: lattice does not match the solution");
  if (std::abs(params.lambda - sol.lambda) > 1e-12 * sol.lambda)
    throw std::invalid_argument("saddle_hessian: params do not match the solution");
  if (!sol.certified())
    throw std::invalid_argument("saddle_hessian: uncertified gap input");

  const int v = lat.volume;
  const double lam = params.lambda;
  const int m = v - 1;
  SaddleHessian out;
  out.quadratic_form = SymMat(m);
  out.max_bracket = -1e300;

  for (int x = 0; x < v; ++x) {
    if (x == x0) continue;
    const double dx = sol.profile[lat.separation(x0, x)];
    for (int y = 0; y <= x; ++y) {
      if (y == x0) continue;
      const double dy = sol.profile[lat.separation(x0, y)];
      const double dxy = sol.profile[lat.separation(x, y)];
      const double bracket = dxy * dxy - lam * lam * dx * dx * dy * dy;
      out.max_bracket = std::max(out.max_bracket, bracket);
      out.quadratic_form.set(hat_index(x, x0), hat_index(y, x0), -0.25 * bracket);
    }
  }

  if (!source.is_zero()) {
    double acc = 0.0;
    for (int x = 0; x < v; ++x)
      for (int y = 0; y < v; ++y)
        if (source(x, y) != 0.0) acc += source(x, y) * sol.profile[lat.separation(x, y)];
    out.source_term = 0.5 * lam * acc;
  }

  out.min_eigenvalue = jacobi_eigenvalues(out.quadratic_form).front();
  return out;
}

}  // namespace hsm
