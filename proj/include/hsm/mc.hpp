#pragma once

#include <cstdint>
#include <vector>

#include "hsm/dual_action.hpp"
#include "hsm/lattice.hpp"
#include "hsm/stats.hpp"

namespace hsm {

// Exact effective weight of the theta field after integrating out the
// Gaussian directions: (N-1)/2 ln det of the hatted theta matrix plus
// beta sum_{x,mu} cosh(theta_x - theta_{x+mu}).  Needs the (N, beta) form.
double effective_action(const Lattice& lat, const std::vector<double>& theta,
                        const ModelParams& params, int x0 = 0);

// Conditional estimate of the invariant two-point function given theta.
// Normalization is fixed by two anchors the tests enforce: the value is
// exactly 1 at coincident sites, and the chain average approaches
// -lambda D(x-y) as N grows at fixed lambda.
double correlator_estimator(const Lattice& lat, const std::vector<double>& theta,
                            int x, int y, const ModelParams& params, int x0 = 0);

// Translation average of the estimator per separation site.
std::vector<double> estimator_profile(const Lattice& lat, const std::vector<double>& theta,
                                      const ModelParams& params, int x0 = 0);

struct McOptions {
  int sweeps = 20000;   // measurement sweeps (after burn-in)
  int burn_in = 2000;
  int thin = 1;
  int chains = 4;
  std::uint64_t seed = 1;
  double initial_width = 0.5;
  int resync_interval = 100;
  int pin_site = 0;
  bool fast_path = true;  // rank-one factor updates; false refactorizes fully
};

struct SeparationEstimate {
  int separation = 0;
  double mean = 0.0;
  double std_error = 0.0;
  double tau_int = 0.5;
};

struct ChainResult {
  std::uint64_t seed = 0;
  int sweeps = 0;
  int burn_in = 0;
  int thin = 0;
  double acceptance_rate = 0.0;
  double tuned_width = 0.0;
  double max_resync_drift = 0.0;
  std::vector<SeparationEstimate> estimates;  // indexed by separation site
};

ChainResult run_chain(const Lattice& lat, const ModelParams& params,
                      const McOptions& opts, std::uint64_t chain_seed);

struct McResult {
  std::vector<SeparationEstimate> merged;
  std::vector<ChainResult> chains;
};

// Independent chains with seeds opts.seed + c, merged per separation by
// inverse-variance weighting.  Chains run in parallel; results do not
// depend on the thread count.
McResult run_chains(const Lattice& lat, const ModelParams& params, const McOptions& opts);

}  // namespace hsm
