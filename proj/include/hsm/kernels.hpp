#pragma once

#include <vector>

#include "hsm/lattice.hpp"

namespace hsm {

// Every momentum-space reduction ships in two builds: an OpenMP-parallel
// kernel used by default and a plain serial loop kept as the reference the
// parallel one is tested and benchmarked against.
enum class Exec { Serial, Parallel };

// (1/V) sum over modes of 1/(E_p + omega).  Throws std::domain_error when
// some |E_p + omega| <= 1e-14 (pole proximity).
double mode_sum_inverse(double omega, const MomentumSpectrum& sp, Exec exec = Exec::Parallel);

// d/domega of the above: -(1/V) sum 1/(E_p + omega)^2.
double mode_sum_inverse_deriv(double omega, const MomentumSpectrum& sp, Exec exec = Exec::Parallel);

// (1/V) sum over nonzero modes of 1/E_p.
double mode_sum_inverse_nonzero(const MomentumSpectrum& sp, Exec exec = Exec::Parallel);

// Profile of the translation-invariant propagator: out[z] =
// (1/V) sum_p cos(p . z)/(E_p + omega), indexed by separation site z.
// The phase reduces to an integer multiple of 2 pi / L, so cosines come from
// a length-L table and the sum is exact up to rounding.
std::vector<double> propagator_profile(double omega, const Lattice& lat,
                                       const MomentumSpectrum& sp,
                                       Exec exec = Exec::Parallel);

}  // namespace hsm
