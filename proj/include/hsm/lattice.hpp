#pragma once

#include <vector>

#include "hsm/densemat.hpp"

namespace hsm {

// Periodic hypercubic lattice.  Sites are numbered lexicographically with
// coordinate 0 varying fastest; site 0 is the origin.  Neighbor slot 2*mu
// is +mu, slot 2*mu+1 is -mu.  At L=2 the two slots of a direction land on
// the same site, which makes the graph a multigraph with double bonds.
struct Lattice {
  int dim = 0;
  int length = 0;
  int volume = 0;
  std::vector<int> nbr;  // volume x 2*dim

  int neighbor(int site, int slot) const { return nbr[static_cast<std::size_t>(site) * 2 * dim + slot]; }
  int coord(int site, int mu) const;
  int site_of(const std::vector<int>& coords) const;
  // Site index of y-x with periodic wrap, used to bucket pairs by separation.
  int separation(int x, int y) const;
  // Site reached from x by the displacement encoded in separation site z.
  int translate(int x, int z) const;

  // Undirected edge id for (site, slot); the two slots that traverse the
  // same physical bond from opposite ends share an id, and at L=2 the two
  // parallel bonds of a direction get distinct ids.
  int edge_id(int site, int slot) const;
};

Lattice build_lattice(int dim, int length);

// Minus the lattice Laplacian: diagonal 2d, off-diagonal minus the bond
// multiplicity.  Positive semidefinite with a single zero mode (constants).
SymMat laplacian(const Lattice& lat);

// Fourier energies 2d - 2 sum_mu cos(2 pi n_mu / L), one per mode; modes are
// indexed exactly like sites (mode id = site index of the integer tuple n).
struct MomentumSpectrum {
  int dim = 0;
  int length = 0;
  int volume = 0;
  std::vector<double> energy;
};

MomentumSpectrum momentum_spectrum(const Lattice& lat);

double min_nonzero_energy(int dim, int length);  // 4 sin^2(pi/L)

}  // namespace hsm
