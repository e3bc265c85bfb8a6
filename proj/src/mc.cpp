#include "hsm/mc.hpp"

#include <cmath>
#include <random>
#include <stdexcept>
#include <utility>

namespace hsm {

namespace {

void check_mc_params(const ModelParams& params) {
  if (!params.has_spin_beta() || params.spin_components < 2)
    throw std::invalid_argument("monte carlo needs the (N, beta) parameter form with N >= 2");
}

int hat_index(int site, int x0) { return site < x0 ? site : site - 1; }

// Hatted theta matrix assembled from the diagonal cache; the off-diagonal
// part is the theta-independent bond structure.
SymMat hatted_from_diag(const Lattice& lat, const std::vector<double>& mdiag, int x0) {
  SymMat out(lat.volume - 1);
  for (int x = 0; x < lat.volume; ++x) {
    if (x == x0) continue;
    out.set(hat_index(x, x0), hat_index(x, x0), mdiag[x]);
    for (int slot = 0; slot < 2 * lat.dim; ++slot) {
      const int y = lat.neighbor(x, slot);
      if (y == x0 || y <= x) continue;
      out.add(hat_index(x, x0), hat_index(y, x0), -1.0);
    }
  }
  return out;
}

std::vector<double> diag_from_theta(const Lattice& lat, const std::vector<double>& theta) {
  std::vector<double> mdiag(lat.volume);
  for (int x = 0; x < lat.volume; ++x) {
    double acc = 0.0;
    for (int slot = 0; slot < 2 * lat.dim; ++slot) acc += std::exp(-theta[lat.neighbor(x, slot)]);
    mdiag[x] = std::exp(theta[x]) * acc;
  }
  return mdiag;
}

double pair_estimate(const SymMat& ghat, const std::vector<double>& theta, int x, int y,
                     int x0, double estimator_prefactor) {
  if (x == y) return 1.0;  // unit spins: exact at coincident sites
  const double rx_over_ry = std::exp(theta[y] - theta[x]);
  const double ry_over_rx = 1.0 / rx_over_ry;
  const double gxy = (x == x0 || y == x0) ? 0.0 : ghat(hat_index(x, x0), hat_index(y, x0));
  const double gxx = x == x0 ? 0.0 : ghat(hat_index(x, x0), hat_index(x, x0));
  const double gyy = y == x0 ? 0.0 : ghat(hat_index(y, x0), hat_index(y, x0));
  const double bracket = 2.0 * gxy - gxx * ry_over_rx - gyy * rx_over_ry;
  return -estimator_prefactor * bracket + 0.5 * (rx_over_ry + ry_over_rx);
}

std::vector<double> profile_from_green(const Lattice& lat, const SymMat& ghat,
                                       const std::vector<double>& theta, int x0,
                                       double estimator_prefactor) {
  std::vector<double> out(lat.volume);
  out[0] = 1.0;
  for (int z = 1; z < lat.volume; ++z) {
    double acc = 0.0;
    for (int x = 0; x < lat.volume; ++x)
      acc += pair_estimate(ghat, theta, x, lat.translate(x, z), x0, estimator_prefactor);
    out[z] = acc / lat.volume;
  }
  return out;
}

}  // namespace

double effective_action(const Lattice& lat, const std::vector<double>& theta,
                        const ModelParams& params, int x0) {
  check_mc_params(params);
  require_pinned(theta, x0);
  const SourceField none = SourceField::zero(lat);
  const SymMat mhat = delete_site(theta_matrix(lat, theta, none, params), x0);
  double bonds = 0.0;
  for (int x = 0; x < lat.volume; ++x)
    for (int mu = 0; mu < lat.dim; ++mu)
      bonds += std::cosh(theta[x] - theta[lat.neighbor(x, 2 * mu)]);
  return 0.5 * (params.spin_components - 1.0) * Cholesky(mhat).logdet() + params.beta * bonds;
}

double correlator_estimator(const Lattice& lat, const std::vector<double>& theta,
                            int x, int y, const ModelParams& params, int x0) {
  check_mc_params(params);
  require_pinned(theta, x0);
  const SourceField none = SourceField::zero(lat);
  const SymMat ghat = Cholesky(delete_site(theta_matrix(lat, theta, none, params), x0)).inverse();
  const double pref = (params.spin_components - 1.0) / (2.0 * params.beta);
  return pair_estimate(ghat, theta, x, y, x0, pref);
}

std::vector<double> estimator_profile(const Lattice& lat, const std::vector<double>& theta,
                                      const ModelParams& params, int x0) {
  check_mc_params(params);
  require_pinned(theta, x0);
  const SourceField none = SourceField::zero(lat);
  const SymMat ghat = Cholesky(delete_site(theta_matrix(lat, theta, none, params), x0)).inverse();
  const double pref = (params.spin_components - 1.0) / (2.0 * params.beta);
  return profile_from_green(lat, ghat, theta, x0, pref);
}

ChainResult run_chain(const Lattice& lat, const ModelParams& params,
                      const McOptions& opts, std::uint64_t chain_seed) {
  check_mc_params(params);
  if (opts.sweeps <= 0 || opts.burn_in < 0 || opts.thin < 1)
    throw std::invalid_argument("run_chain: need sweeps > 0, burn_in >= 0, thin >= 1");
  if (opts.pin_site < 0 || opts.pin_site >= lat.volume)
    throw std::invalid_argument("run_chain: pin site outside the lattice");

  const int x0 = opts.pin_site;
  const int v = lat.volume;
  const double half_spins = 0.5 * (params.spin_components - 1.0);
  const double pref = (params.spin_components - 1.0) / (2.0 * params.beta);

  std::vector<double> theta(v, 0.0);
  std::vector<double> mdiag = diag_from_theta(lat, theta);
  Cholesky chol(hatted_from_diag(lat, mdiag, x0));
  double logdet = chol.logdet();

  std::mt19937_64 rng(chain_seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);

  double width = opts.initial_width;
  long long accepted_meas = 0, proposed_meas = 0;
  int window_accepted = 0, window_proposed = 0;
  double max_drift = 0.0;

  std::vector<std::vector<double>> series(v);
  const int total_sweeps = opts.burn_in + opts.sweeps;

  std::vector<int> touched;
  std::vector<double> delta_diag(v);
  std::vector<double> unit(v - 1);

  for (int sweep = 0; sweep < total_sweeps; ++sweep) {
    const bool measuring = sweep >= opts.burn_in;

    for (int x = 0; x < v; ++x) {
      if (x == x0) continue;
      const double step = width * gauss(rng);
      const double u = unif(rng);

      // Bond energy change; slots enumerate the incident bonds once each.
      double dbond = 0.0;
      for (int slot = 0; slot < 2 * lat.dim; ++slot) {
        const double ty = theta[lat.neighbor(x, slot)];
        dbond += std::cosh(theta[x] + step - ty) - std::cosh(theta[x] - ty);
      }

      // A theta move at x rescales the diagonal entry at x and shifts the
      // neighbor entries; nothing else in the matrix moves.
      touched.clear();
      const double dxx = (std::exp(step) - 1.0) * mdiag[x];
      touched.push_back(x);
      delta_diag[x] = dxx;
      const double shrink = std::exp(-step) - 1.0;
      for (int slot = 0; slot < 2 * lat.dim; ++slot) {
        const int y = lat.neighbor(x, slot);
        const double dyy = std::exp(theta[y] - theta[x]) * shrink;
        bool seen = false;
        for (int t : touched) seen = seen || t == y;
        if (!seen) {
          touched.push_back(y);
          delta_diag[y] = dyy;
        } else {
          delta_diag[y] += dyy;
        }
      }

      bool feasible = true;
      double dlogdet = 0.0;
      if (opts.fast_path) {
        Cholesky cand = chol;
        try {
          // Apply the positive diagonal shifts before the negative ones.
          // The candidate matrix itself is always positive definite, so
          // with updates first every intermediate factor sits at the
          // candidate plus a positive semidefinite remainder and the
          // downdates cannot spuriously leave the cone mid-sequence.
          for (int pass = 0; pass < 2; ++pass) {
            for (int t : touched) {
              if (t == x0) continue;
              const double d = delta_diag[t];
              if (d == 0.0) continue;
              if ((pass == 0) != (d > 0.0)) continue;
              std::fill(unit.begin(), unit.end(), 0.0);
              unit[hat_index(t, x0)] = std::sqrt(std::abs(d));
              if (d > 0.0)
                cand.update(unit);
              else
                cand.downdate(unit);
            }
          }
          dlogdet = cand.logdet() - logdet;
        } catch (const NotPositiveDefinite&) {
          feasible = false;
        }
        if (feasible) {
          const double daction = half_spins * dlogdet + params.beta * dbond;
          if (std::log(u) < -daction) {
            theta[x] += step;
            for (int t : touched) mdiag[t] += delta_diag[t];
            chol = std::move(cand);
            logdet += dlogdet;
            if (measuring) ++accepted_meas;
            if (!measuring) ++window_accepted;
          }
        }
      } else {
        std::vector<double> cand_diag = mdiag;
        for (int t : touched) cand_diag[t] += delta_diag[t];
        try {
          Cholesky cand(hatted_from_diag(lat, cand_diag, x0));
          dlogdet = cand.logdet() - logdet;
          const double daction = half_spins * dlogdet + params.beta * dbond;
          if (std::log(u) < -daction) {
            theta[x] += step;
            mdiag = std::move(cand_diag);
            logdet += dlogdet;
            chol = std::move(cand);
            if (measuring) ++accepted_meas;
            if (!measuring) ++window_accepted;
          }
        } catch (const NotPositiveDefinite&) {
        }
      }
      for (int t : touched) delta_diag[t] = 0.0;
      if (measuring) ++proposed_meas;
      if (!measuring) ++window_proposed;
    }

    // Proposal width tuning runs only during burn-in so the measurement
    // kernel stays a fixed reversible chain.
    if (!measuring && window_proposed >= 50 * (v - 1)) {
      const double rate = static_cast<double>(window_accepted) / window_proposed;
      if (rate > 0.6) width *= 1.2;
      if (rate < 0.4) width /= 1.2;
      width = std::min(std::max(width, 1e-3), 10.0);
      window_accepted = 0;
      window_proposed = 0;
    }

    if ((sweep + 1) % opts.resync_interval == 0) {
      const std::vector<double> fresh_diag = diag_from_theta(lat, theta);
      Cholesky fresh(hatted_from_diag(lat, fresh_diag, x0));
      const double drift = std::abs(fresh.logdet() - logdet);
      max_drift = std::max(max_drift, drift);
      if (drift > 1e-8)
        throw std::runtime_error("run_chain: cached log-det drifted past 1e-8");
      mdiag = fresh_diag;
      chol = std::move(fresh);
      logdet = chol.logdet();
    }

    if (measuring && (sweep - opts.burn_in) % opts.thin == 0) {
      const SymMat ghat = chol.inverse();
      const std::vector<double> prof = profile_from_green(lat, ghat, theta, x0, pref);
      for (int z = 0; z < v; ++z) series[z].push_back(prof[z]);
    }
  }

  ChainResult res;
  res.seed = chain_seed;
  res.sweeps = opts.sweeps;
  res.burn_in = opts.burn_in;
  res.thin = opts.thin;
  res.acceptance_rate = proposed_meas > 0 ? static_cast<double>(accepted_meas) / proposed_meas : 0.0;
  res.tuned_width = width;
  res.max_resync_drift = max_drift;
  res.estimates.resize(v);
  for (int z = 0; z < v; ++z) {
    const SeriesStats st = binned_stats(series[z]);
    res.estimates[z] = {z, st.mean, st.std_error, st.tau_int};
  }
  return res;
}

McResult run_chains(const Lattice& lat, const ModelParams& params, const McOptions& opts) {
  check_mc_params(params);
  if (opts.chains < 1) throw std::invalid_argument("run_chains: need at least one chain");

  McResult out;
  out.chains.resize(opts.chains);
  bool failed = false;
  std::string message;

#pragma omp parallel for schedule(dynamic)
  for (int c = 0; c < opts.chains; ++c) {
    try {
      out.chains[c] = run_chain(lat, params, opts, opts.seed + c);
    } catch (const std::exception& e) {
#pragma omp critical
      {
        failed = true;
        message = e.what();
      }
    }
  }
  if (failed) throw std::runtime_error("run_chains: " + message);

  out.merged.resize(lat.volume);
  for (int z = 0; z < lat.volume; ++z) {
    std::vector<double> means, errors;
    double tau = 0.0;
    for (const ChainResult& ch : out.chains) {
      means.push_back(ch.estimates[z].mean);
      errors.push_back(ch.estimates[z].std_error);
      tau = std::max(tau, ch.estimates[z].tau_int);
    }
    const MergedStats m = merge_inverse_variance(means, errors);
    out.merged[z] = {z, m.mean, m.std_error, tau};
  }
  return out;
}

}  // namespace hsm
