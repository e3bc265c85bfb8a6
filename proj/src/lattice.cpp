#include "hsm/lattice.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace hsm {

int Lattice::coord(int site, int mu) const {
  int p = site;
  for (int k = 0; k < mu; ++k) p /= length;
  return p % length;
}

int Lattice::site_of(const std::vector<int>& coords) const {
  int site = 0;
  for (int mu = dim - 1; mu >= 0; --mu) {
    int c = coords[mu] % length;
    if (c < 0) c += length;
    site = site * length + c;
  }
  return site;
}

int Lattice::separation(int x, int y) const {
  int site = 0;
  for (int mu = dim - 1; mu >= 0; --mu) {
    int c = (coord(y, mu) - coord(x, mu)) % length;
    if (c < 0) c += length;
    site = site * length + c;
  }
  return site;
}

int Lattice::translate(int x, int z) const {
  int site = 0;
  for (int mu = dim - 1; mu >= 0; --mu) {
    const int c = (coord(x, mu) + coord(z, mu)) % length;
    site = site * length + c;
  }
  return site;
}

int Lattice::edge_id(int site, int slot) const {
  const int mu = slot / 2;
  if (slot % 2 == 0) return site * dim + mu;
  return neighbor(site, slot) * dim + mu;
}

Lattice build_lattice(int dim, int length) {
  if (dim < 1) throw std::invalid_argument("build_lattice: dim must be >= 1");
  if (length < 2) throw std::invalid_argument("build_lattice: length must be >= 2");

  Lattice lat;
  lat.dim = dim;
  lat.length = length;
  long long vol = 1;
  for (int mu = 0; mu < dim; ++mu) {
    vol *= length;
    if (vol > 1 << 24) throw std::invalid_argument("build_lattice: volume too large");
  }
  lat.volume = static_cast<int>(vol);

  lat.nbr.resize(static_cast<std::size_t>(lat.volume) * 2 * dim);
  int stride = 1;
  for (int mu = 0; mu < dim; ++mu) {
    for (int x = 0; x < lat.volume; ++x) {
      const int c = (x / stride) % length;
      const int up = x + (c + 1 == length ? (1 - length) : 1) * stride;
      const int dn = x + (c == 0 ? (length - 1) : -1) * stride;
      lat.nbr[static_cast<std::size_t>(x) * 2 * dim + 2 * mu] = up;
      lat.nbr[static_cast<std::size_t>(x) * 2 * dim + 2 * mu + 1] = dn;
    }
    stride *= length;
  }
  return lat;
}

SymMat laplacian(const Lattice& lat) {
  SymMat out(lat.volume, 2.0 * lat.dim);
  for (int x = 0; x < lat.volume; ++x)
    for (int slot = 0; slot < 2 * lat.dim; ++slot) {
      const int y = lat.neighbor(x, slot);
      if (y > x) out.add(x, y, -1.0);
    }
  return out;
}

MomentumSpectrum momentum_spectrum(const Lattice& lat) {
  MomentumSpectrum sp;
  sp.dim = lat.dim;
  sp.length = lat.length;
  sp.volume = lat.volume;
  sp.energy.resize(lat.volume);

  std::vector<double> ctab(lat.length);
  for (int k = 0; k < lat.length; ++k)
    ctab[k] = std::cos(2.0 * std::numbers::pi * k / lat.length);

  for (int mode = 0; mode < lat.volume; ++mode) {
    double e = 2.0 * lat.dim;
    for (int mu = 0; mu < lat.dim; ++mu) e -= 2.0 * ctab[lat.coord(mode, mu)];
    sp.energy[mode] = e;
  }
  // The softest nonzero mode is exact by construction; pin the zero mode to
  // an exact 0 so downstream pole checks have no rounding slack.
  sp.energy[0] = 0.0;
  return sp;
}

double min_nonzero_energy(int dim, int length) {
  (void)dim;
  const double s = std::sin(std::numbers::pi / length);
  return 4.0 * s * s;
}

}  // namespace hsm
