#pragma once

#include <vector>

namespace hsm {

// Mean with a binned standard error (bins chosen so that at least 20 are
// available whenever the series allows it) and a Sokal-window integrated
// autocorrelation time.
struct SeriesStats {
  double mean = 0.0;
  double std_error = 0.0;
  double tau_int = 0.5;
  int bins = 0;
};

SeriesStats binned_stats(const std::vector<double>& series);

double integrated_autocorrelation(const std::vector<double>& series);

struct MergedStats {
  double mean = 0.0;
  double std_error = 0.0;
};

// Inverse-variance weighted combination of independent estimates.  Entries
// with zero error are exact and short-circuit the merge.
MergedStats merge_inverse_variance(const std::vector<double>& means,
                                   const std::vector<double>& errors);

}  // namespace hsm
