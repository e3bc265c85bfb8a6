#include "hsm/kernels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hsm {

namespace {

void check_poles(double omega, const MomentumSpectrum& sp) {
  for (double e : sp.energy)
    if (std::abs(e + omega) <= 1e-14)
      throw std::domain_error("mode sum: omega within 1e-14 of a pole");
}

}  // namespace

double mode_sum_inverse(double omega, const MomentumSpectrum& sp, Exec exec) {
  check_poles(omega, sp);
  const int v = sp.volume;
  const double* e = sp.energy.data();
  double acc = 0.0;
  if (exec == Exec::Parallel) {
#pragma omp parallel for reduction(+ : acc) schedule(static)
    for (int p = 0; p < v; ++p) acc += 1.0 / (e[p] + omega);
  } else {
    for (int p = 0; p < v; ++p) acc += 1.0 / (e[p] + omega);
  }
  return acc / v;
}

double mode_sum_inverse_deriv(double omega, const MomentumSpectrum& sp, Exec exec) {
  check_poles(omega, sp);
  const int v = sp.volume;
  const double* e = sp.energy.data();
  double acc = 0.0;
  if (exec == Exec::Parallel) {
#pragma omp parallel for reduction(+ : acc) schedule(static)
    for (int p = 0; p < v; ++p) {
      const double t = 1.0 / (e[p] + omega);
      acc += t * t;
    }
  } else {
    for (int p = 0; p < v; ++p) {
      const double t = 1.0 / (e[p] + omega);
      acc += t * t;
    }
  }
  return -acc / v;
}

double mode_sum_inverse_nonzero(const MomentumSpectrum& sp, Exec exec) {
  const int v = sp.volume;
  const double* e = sp.energy.data();
  double acc = 0.0;
  if (exec == Exec::Parallel) {
#pragma omp parallel for reduction(+ : acc) schedule(static)
    for (int p = 1; p < v; ++p) acc += 1.0 / e[p];
  } else {
    for (int p = 1; p < v; ++p) acc += 1.0 / e[p];
  }
  return acc / v;
}

std::vector<double> propagator_profile(double omega, const Lattice& lat,
                                       const MomentumSpectrum& sp, Exec exec) {
  check_poles(omega, sp);
  const int v = lat.volume;
  const int len = lat.length;
  const int dim = lat.dim;
  if (dim > 8) throw std::invalid_argument("propagator_profile: dim > 8 unsupported");

  std::vector<double> ctab(len);
  for (int k = 0; k < len; ++k) ctab[k] = std::cos(2.0 * std::numbers::pi * k / len);

  // Mode coordinates flattened once; the inner loop is then integer phase
  // accumulation plus one table lookup per mode.
  std::vector<int> mode_coord(static_cast<std::size_t>(v) * dim);
  for (int p = 0; p < v; ++p)
    for (int mu = 0; mu < dim; ++mu)
      mode_coord[static_cast<std::size_t>(p) * dim + mu] = lat.coord(p, mu);

  std::vector<double> weight(v);
  for (int p = 0; p < v; ++p) weight[p] = 1.0 / (sp.energy[p] + omega);

  std::vector<double> out(v);
  auto body = [&](int z) {
    int zc[32] = {};  // dim <= 24 under the volume cap
    for (int mu = 0; mu < dim; ++mu) zc[mu] = lat.coord(z, mu);
    double acc = 0.0;
    for (int p = 0; p < v; ++p) {
      int phase = 0;
      const int* nc = &mode_coord[static_cast<std::size_t>(p) * dim];
      for (int mu = 0; mu < dim; ++mu) phase += nc[mu] * zc[mu];
      acc += ctab[phase % len] * weight[p];
    }
    out[z] = acc / v;
  };

  if (exec == Exec::Parallel) {
#pragma omp parallel for schedule(static)
    for (int z = 0; z < v; ++z) body(z);
  } else {
    for (int z = 0; z < v; ++z) body(z);
  }
  return out;
}

}  // namespace hsm
