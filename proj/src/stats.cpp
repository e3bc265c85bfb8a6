#include "hsm/stats.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace hsm {

namespace {

double series_mean(const std::vector<double>& s) {
  double acc = 0.0;
  for (double v : s) acc += v;
  return acc / s.size();
}

}  // namespace

double integrated_autocorrelation(const std::vector<double>& series) {
  const int n = static_cast<int>(series.size());
  if (n < 2) return 0.5;
  const double mu = series_mean(series);

  double c0 = 0.0;
  for (double v : series) c0 += (v - mu) * (v - mu);
  c0 /= n;
  if (c0 == 0.0) return 0.5;

  // Self-consistent truncation: stop at the first window W >= 6 tau(W).
  double tau = 0.5;
  const int wmax = n / 4;
  for (int t = 1; t <= wmax; ++t) {
    double ct = 0.0;
    for (int i = 0; i + t < n; ++i) ct += (series[i] - mu) * (series[i + t] - mu);
    ct /= (n - t);
    tau += ct / c0;
    if (t >= 6.0 * tau) break;
  }
  return std::max(tau, 0.5);
}

SeriesStats binned_stats(const std::vector<double>& series) {
  const int n = static_cast<int>(series.size());
  if (n == 0) throw std::invalid_argument("binned_stats: empty series");

  SeriesStats out;
  out.mean = series_mean(series);
  out.tau_int = integrated_autocorrelation(series);

  const int bin_len = std::max(1, n / 64);
  const int bins = n / bin_len;
  out.bins = bins;
  if (bins < 2) {
    out.std_error = 0.0;
    return out;
  }

  double used_mean = 0.0;
  std::vector<double> bm(bins, 0.0);
  for (int b = 0; b < bins; ++b) {
    double acc = 0.0;
    for (int i = 0; i < bin_len; ++i) acc += series[b * bin_len + i];
    bm[b] = acc / bin_len;
    used_mean += bm[b];
  }
  used_mean /= bins;

  double var = 0.0;
  for (double v : bm) var += (v - used_mean) * (v - used_mean);
  var /= (bins - 1);
  out.std_error = std::sqrt(var / bins);
  return out;
}

MergedStats merge_inverse_variance(const std::vector<double>& means,
                                   const std::vector<double>& errors) {
  if (means.size() != errors.size() || means.empty())
    throw std::invalid_argument("merge_inverse_variance: size mismatch");

  for (std::size_t i = 0; i < means.size(); ++i)
    if (errors[i] == 0.0) return {means[i], 0.0};

  double wsum = 0.0, acc = 0.0;
  for (std::size_t i = 0; i < means.size(); ++i) {
    const double w = 1.0 / (errors[i] * errors[i]);
    wsum += w;
    acc += w * means[i];
  }
  return {acc / wsum, 1.0 / std::sqrt(wsum)};
}

}  // namespace hsm
