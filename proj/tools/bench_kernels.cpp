#include <chrono>
#include <cmath>
#include <cstdio>
#include <vector>

#include "hsm/gap.hpp"
#include "hsm/kernels.hpp"
#include "hsm/lattice.hpp"

// Timing comparison of the OpenMP kernels against their serial references,
// plus the agreement between the two paths.  The mode sums dominate the gap
// solves and the propagator profile dominates certification, so those are
// the two kernels worth watching.

namespace {

using clock_type = std::chrono::steady_clock;

double seconds_since(clock_type::time_point t0) {
  return std::chrono::duration<double>(clock_type::now() - t0).count();
}

template <typename Fn>
double time_best_of(int reps, const Fn& fn) {
  double best = 1e300;
  for (int r = 0; r < reps; ++r) {
    const auto t0 = clock_type::now();
    fn();
    best = std::min(best, seconds_since(t0));
  }
  return best;
}

}  // namespace

int main() {
  std::printf("%-28s %10s %10s %8s %12s\n", "kernel", "serial[s]", "openmp[s]", "speedup",
              "max |diff|");

  for (const auto& [dim, length] : std::vector<std::pair<int, int>>{{2, 64}, {2, 128}, {3, 24}}) {
    const hsm::Lattice lat = hsm::build_lattice(dim, length);
    const hsm::MomentumSpectrum sp = hsm::momentum_spectrum(lat);
    const double omega = -0.5 * hsm::min_nonzero_energy(dim, length);

    volatile double sink = 0.0;
    const double ts = time_best_of(3, [&] { sink = hsm::gap_lhs(omega, sp, hsm::Exec::Serial); });
    const double tp = time_best_of(3, [&] { sink = hsm::gap_lhs(omega, sp, hsm::Exec::Parallel); });
    const double diff = std::abs(hsm::gap_lhs(omega, sp, hsm::Exec::Serial) -
                                 hsm::gap_lhs(omega, sp, hsm::Exec::Parallel));
    (void)sink;
    std::printf("%-22s d=%d L=%-3d %10.4f %10.4f %8.2f %12.3e\n", "mode_sum_inverse", dim, length,
                ts, tp, ts / tp, diff);
  }

  for (const auto& [dim, length] : std::vector<std::pair<int, int>>{{2, 32}, {2, 48}}) {
    const hsm::Lattice lat = hsm::build_lattice(dim, length);
    const hsm::MomentumSpectrum sp = hsm::momentum_spectrum(lat);
    const double omega = -0.5 * hsm::min_nonzero_energy(dim, length);

    std::vector<double> prof_s, prof_p;
    const double ts =
        time_best_of(3, [&] { prof_s = hsm::propagator_profile(omega, lat, sp, hsm::Exec::Serial); });
    const double tp = time_best_of(
        3, [&] { prof_p = hsm::propagator_profile(omega, lat, sp, hsm::Exec::Parallel); });
    double diff = 0.0;
    for (size_t i = 0; i < prof_s.size(); ++i) diff = std::max(diff, std::abs(prof_s[i] - prof_p[i]));
    std::printf("%-22s d=%d L=%-3d %10.4f %10.4f %8.2f %12.3e\n", "propagator_profile", dim,
                length, ts, tp, ts / tp, diff);
  }

  return 0;
}
