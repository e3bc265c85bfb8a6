#include "hsm/gap.hpp"

#include <cmath>
#include <map>
#include <mutex>
#include <numbers>
#include <random>
#include <stdexcept>

#include "hsm/dual_action.hpp"

namespace hsm {

double gap_lhs(double omega, const MomentumSpectrum& sp, Exec exec) {
  return mode_sum_inverse(omega, sp, exec);
}

double gap_interval_left(int dim, int length) {
  return -(4.0 / (2.0 * dim + 1.0)) * std::pow(std::sin(std::numbers::pi / length), 2);
}

double pinned_site_omega_of(double omega, const MomentumSpectrum& sp) {
  const double lhs = gap_lhs(omega, sp);
  if (std::abs(lhs) <= 1e-300) throw std::domain_error("pinned_site_omega_of: vanishing gap sum");
  return omega - 1.0 / lhs;
}

SymMat build_pinned_matrix(const Lattice& lat, double omega, double lambda, int x0) {
  SymMat out = laplacian(lat);
  for (int x = 0; x < lat.volume; ++x) out.add(x, x, omega);
  out.add(x0, x0, lambda);
  return out;
}

SymMat propagator_matrix(const Lattice& lat, const std::vector<double>& profile) {
  SymMat out(lat.volume);
  for (int x = 0; x < lat.volume; ++x)
    for (int y = 0; y <= x; ++y) out.set(x, y, profile[lat.separation(x, y)]);
  return out;
}

GapSolution solve_gap(double lambda, const Lattice& lat, double tol) {
  if (!(lambda > 0.0)) throw std::invalid_argument("solve_gap: lambda must be positive");
  if (lat.dim < 2) throw std::invalid_argument("solve_gap: dim must be >= 2");
  if (!(tol > 0.0)) throw std::invalid_argument("solve_gap: tol must be positive");

  const MomentumSpectrum sp = momentum_spectrum(lat);
  const double target = -1.0 / lambda;

  // gap_lhs decreases strictly on the bracket: positive at the left end,
  // -infinity at 0^-, so the sign change is unique.
  double lo = gap_interval_left(lat.dim, lat.length) + 1e-13;
  double hi = -1e-13;  // stays clear of the pole guard at omega = 0
  const double flo = gap_lhs(lo, sp) - target;
  const double fhi = gap_lhs(hi, sp) - target;
  if (!(flo > 0.0) || !(fhi < 0.0))
    throw std::runtime_error("solve_gap: bracket failed, flo=" + std::to_string(flo) +
                             " fhi=" + std::to_string(fhi));

  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    if (gap_lhs(mid, sp) - target > 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double omega = 0.5 * (lo + hi);
  for (int k = 0; k < 2; ++k) {
    const double f = gap_lhs(omega, sp) - target;
    const double fp = mode_sum_inverse_deriv(omega, sp);
    const double next = omega - f / fp;
    if (next > gap_interval_left(lat.dim, lat.length) && next < 0.0) omega = next;
  }

  GapSolution sol;
  sol.dim = lat.dim;
  sol.length = lat.length;
  sol.volume = lat.volume;
  sol.lambda = lambda;
  sol.omega_minus = omega;
  sol.pinned_site_omega = pinned_site_omega_of(omega, sp);
  sol.profile = propagator_profile(omega, lat, sp);

  GapCertificates& cert = sol.cert;
  cert.interval_ok = omega > gap_interval_left(lat.dim, lat.length) && omega < 0.0;

  double min_bound = 1e300;
  for (double d : sol.profile) min_bound = std::min(min_bound, -lambda * d);
  cert.bound_ok = min_bound >= 1.0 - 1e-9;
  cert.stationarity_residual = std::abs(-lambda * sol.profile[0] - 1.0);
  cert.pin_shift_residual = std::abs(sol.pinned_site_omega - (omega + lambda));

  // The profile itself is the null vector of the pinned matrix: check
  // (M r)_x = 0 with r_x = -lambda D(x), using neighbor sums only.
  {
    double worst = 0.0;
    for (int x = 0; x < lat.volume; ++x) {
      const double rx = -lambda * sol.profile[x];
      double acc = (2.0 * lat.dim + omega) * rx;
      for (int slot = 0; slot < 2 * lat.dim; ++slot)
        acc -= -lambda * sol.profile[lat.neighbor(x, slot)];
      if (x == 0) acc += lambda * rx;  // pinned site x0 = 0 for the profile form
      worst = std::max(worst, std::abs(acc));
    }
    cert.zero_mode_residual = worst;
  }
  return sol;
}

double asymptotic_gap(double lambda, int dim, long long volume) {
  if (dim == 2) return 4.0 * std::numbers::pi / std::log(static_cast<double>(volume));
  if (dim >= 3) return 1.0 / (1.0 / lambda + green_sum_constant(dim));
  throw std::invalid_argument("asymptotic_gap: dim must be >= 2");
}

double green_sum_constant(int dim, int ref_length) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  const auto key = std::make_pair(dim, ref_length);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  const Lattice lat = build_lattice(dim, ref_length);
  const double value = mode_sum_inverse_nonzero(momentum_spectrum(lat));
  cache.emplace(key, value);
  return value;
}

UniqueMinimumReport verify_unique_minimum(const Lattice& lat, double lambda,
                                          int n_starts, std::uint64_t seed) {
  if (lat.dim < 2) throw std::invalid_argument("verify_unique_minimum: dim must be >= 2");

  const GapSolution sol = solve_gap(lambda, lat);
  const ModelParams params = ModelParams::from_lambda(lambda);
  const SourceField none = SourceField::zero(lat);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(-1.0, 1.0);

  UniqueMinimumReport rep;
  rep.n_starts = n_starts;

  for (int s = 0; s < n_starts; ++s) {
    // Random interior point: a scaled uniform perturbation around zero,
    // halved until it lands inside the domain (zero itself always is).
    std::vector<double> direction(lat.volume);
    for (double& v : direction) v = unit(rng);
    double amp = 1.0;
    std::vector<double> start(lat.volume, 0.0);
    for (int tries = 0; tries < 60; ++tries) {
      for (int x = 0; x < lat.volume; ++x) start[x] = amp * direction[x];
      start[0] = 0.0;
      if (in_domain(lat, start, none, params, 0)) break;
      amp *= 0.5;
    }

    const DescentResult res = minimize_dual_action(lat, params, start, 0);
    if (res.converged) ++rep.n_converged;
    if (!res.converged && res.rejected_steps > 0) ++rep.persistent_domain_rejections;
    rep.max_grad_norm = std::max(rep.max_grad_norm, res.grad_inf_norm);

    double dev = 0.0;
    for (int x = 1; x < lat.volume; ++x)
      dev = std::max(dev, std::abs(res.point[x] - sol.omega_minus));
    rep.max_site_deviation = std::max(rep.max_site_deviation, dev);
  }
  rep.all_within_tolerance = rep.n_converged == n_starts && rep.max_site_deviation <= 1e-6;
  return rep;
}

}  // namespace hsm
