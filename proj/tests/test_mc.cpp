#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "hsm/densemat.hpp"
#include "hsm/dual_action.hpp"
#include "hsm/gap.hpp"
#include "hsm/lattice.hpp"
#include "hsm/mc.hpp"
#include "hsm/stats.hpp"

using namespace hsm;

namespace {

std::vector<double> random_theta(std::mt19937_64& rng, int volume, int x0, double box = 0.8) {
  std::uniform_real_distribution<double> u(-box, box);
  std::vector<double> theta(volume);
  for (int x = 0; x < volume; ++x) theta[x] = x == x0 ? 0.0 : u(rng);
  return theta;
}

}  // namespace

TEST_CASE("flat field action value and parameter checks") {
  const Lattice lat = build_lattice(2, 3);
  const std::vector<double> zero(lat.volume, 0.0);
  const ModelParams nb = ModelParams::from_spin_beta(9, 10.0);

  // V*d bonds, each contributing cosh(0) = 1, on top of the Gaussian logdet.
  const double expected = 0.5 * (9 - 1) * std::log(11664.0) + 10.0 * 18.0;
  CHECK(effective_action(lat, zero, nb) == doctest::Approx(expected).epsilon(1e-13));

  CHECK_THROWS_AS(effective_action(lat, zero, ModelParams::from_lambda(1.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(effective_action(lat, zero, ModelParams::from_spin_beta(1, 2.0)),
                  std::invalid_argument);
}

TEST_CASE("action grows along rays") {
  std::mt19937_64 rng(301);
  const Lattice lat = build_lattice(2, 3);
  const ModelParams nb = ModelParams::from_spin_beta(9, 10.0);
  const std::vector<double> dir = random_theta(rng, lat.volume, 0);
  double prev = effective_action(lat, dir, nb);
  for (double t : {2.0, 4.0, 8.0}) {
    std::vector<double> theta(lat.volume);
    for (int x = 0; x < lat.volume; ++x) theta[x] = t * dir[x];
    const double val = effective_action(lat, theta, nb);
    CHECK(val > prev);
    prev = val;
  }
}

TEST_CASE("estimator anchors at the flat field") {
  const Lattice lat = build_lattice(2, 3);
  const std::vector<double> zero(lat.volume, 0.0);
  const ModelParams nb = ModelParams::from_spin_beta(9, 10.0);

  // Hatted Green function, extended by zeros on the pinned row/column.
  const SymMat ghat = Cholesky(delete_site(laplacian(lat), 0)).inverse();
  auto g = [&](int x, int y) {
    if (x == 0 || y == 0) return 0.0;
    return ghat(x - 1, y - 1);
  };
  for (int x = 0; x < lat.volume; ++x)
    for (int y = 0; y < lat.volume; ++y) {
      const double e = correlator_estimator(lat, zero, x, y, nb);
      if (x == y) {
        CHECK(e == 1.0);
      } else {
        const double closed = 1.0 - (9 - 1) / (2.0 * 10.0) * (2 * g(x, y) - g(x, x) - g(y, y));
        CHECK(e == doctest::Approx(closed).epsilon(1e-12));
        CHECK(e > 1.0);  // (e_x - e_y) quadratic form of a PD matrix
      }
    }
}

TEST_CASE("coincident estimator is exactly one for any field") {
  std::mt19937_64 rng(307);
  const Lattice lat = build_lattice(2, 3);
  const ModelParams nb = ModelParams::from_spin_beta(17, 9.0);
  for (int trial = 0; trial < 10; ++trial) {
    const std::vector<double> theta = random_theta(rng, lat.volume, 0);
    for (int x = 0; x < lat.volume; ++x)
      CHECK(correlator_estimator(lat, theta, x, x, nb) == 1.0);
  }
}

TEST_CASE("profile is the translation average of the pair estimator") {
  std::mt19937_64 rng(311);
  const Lattice lat = build_lattice(2, 3);
  const ModelParams nb = ModelParams::from_spin_beta(9, 10.0);
  const std::vector<double> theta = random_theta(rng, lat.volume, 0);
  const std::vector<double> profile = estimator_profile(lat, theta, nb);
  REQUIRE(static_cast<int>(profile.size()) == lat.volume);
  CHECK(profile[0] == 1.0);
  for (int z = 1; z < lat.volume; ++z) {
    double acc = 0.0;
    for (int x = 0; x < lat.volume; ++x)
      acc += correlator_estimator(lat, theta, x, lat.translate(x, z), nb);
    CHECK(profile[z] == doctest::Approx(acc / lat.volume).epsilon(1e-12));
  }
}

TEST_CASE("option validation") {
  const Lattice lat = build_lattice(1, 3);
  const ModelParams nb = ModelParams::from_spin_beta(4, 5.0);
  McOptions opts;
  opts.sweeps = 100;
  opts.burn_in = 10;

  McOptions bad = opts;
  bad.sweeps = 0;
  CHECK_THROWS_AS(run_chain(lat, nb, bad, 1), std::invalid_argument);
  bad = opts;
  bad.thin = 0;
  CHECK_THROWS_AS(run_chain(lat, nb, bad, 1), std::invalid_argument);
  bad = opts;
  bad.burn_in = -1;
  CHECK_THROWS_AS(run_chain(lat, nb, bad, 1), std::invalid_argument);
  bad = opts;
  bad.pin_site = lat.volume;
  CHECK_THROWS_AS(run_chain(lat, nb, bad, 1), std::invalid_argument);
  bad = opts;
  bad.chains = 0;
  CHECK_THROWS_AS(run_chains(lat, nb, bad), std::invalid_argument);
  CHECK_THROWS_AS(run_chain(lat, ModelParams::from_lambda(1.0), opts, 1), std::invalid_argument);
}

TEST_CASE("chains are deterministic in the seed") {
  const Lattice lat = build_lattice(1, 4);
  const ModelParams nb = ModelParams::from_spin_beta(8, 9.0);
  McOptions opts;
  opts.sweeps = 400;
  opts.burn_in = 100;
  const ChainResult a = run_chain(lat, nb, opts, 42);
  const ChainResult b = run_chain(lat, nb, opts, 42);
  CHECK(a.acceptance_rate == b.acceptance_rate);
  CHECK(a.tuned_width == b.tuned_width);
  REQUIRE(a.estimates.size() == b.estimates.size());
  for (std::size_t z = 0; z < a.estimates.size(); ++z) {
    CHECK(a.estimates[z].mean == b.estimates[z].mean);
    CHECK(a.estimates[z].std_error == b.estimates[z].std_error);
  }
  const ChainResult c = run_chain(lat, nb, opts, 43);
  CHECK(a.estimates[1].mean != c.estimates[1].mean);
}

TEST_CASE("factor update path matches full refactorization") {
  const Lattice lat = build_lattice(2, 3);
  const ModelParams nb = ModelParams::from_spin_beta(9, 10.0);
  McOptions opts;
  opts.sweeps = 300;
  opts.burn_in = 50;
  opts.resync_interval = 50;
  opts.fast_path = true;
  const ChainResult fast = run_chain(lat, nb, opts, 7);
  opts.fast_path = false;
  const ChainResult slow = run_chain(lat, nb, opts, 7);

  CHECK(fast.acceptance_rate == doctest::Approx(slow.acceptance_rate).epsilon(1e-12));
  REQUIRE(fast.estimates.size() == slow.estimates.size());
  for (std::size_t z = 0; z < fast.estimates.size(); ++z)
    CHECK(std::abs(fast.estimates[z].mean - slow.estimates[z].mean) <= 1e-10);
  CHECK(fast.max_resync_drift <= 1e-8);
  CHECK(slow.max_resync_drift <= 1e-10);
}

TEST_CASE("tiny proposals are almost always accepted") {
  const Lattice lat = build_lattice(1, 4);
  const ModelParams nb = ModelParams::from_spin_beta(8, 9.0);
  McOptions opts;
  opts.sweeps = 500;
  opts.burn_in = 0;  // no tuning, width stays fixed
  opts.initial_width = 1e-3;
  const ChainResult res = run_chain(lat, nb, opts, 5);
  CHECK(res.acceptance_rate > 0.95);
  CHECK(res.tuned_width == 1e-3);
}

TEST_CASE("stiffer weight lowers the acceptance at fixed width") {
  const Lattice lat = build_lattice(1, 4);
  McOptions opts;
  opts.sweeps = 2000;
  opts.burn_in = 0;
  opts.initial_width = 0.5;
  const ChainResult soft = run_chain(lat, ModelParams::from_spin_beta(4, 5.0), opts, 11);
  const ChainResult stiff = run_chain(lat, ModelParams::from_spin_beta(64, 65.0), opts, 11);
  CHECK(stiff.acceptance_rate < soft.acceptance_rate);
}

TEST_CASE("width tuning lands in the target window") {
  const Lattice lat = build_lattice(2, 3);
  const ModelParams nb = ModelParams::from_spin_beta(9, 10.0);
  McOptions opts;
  opts.sweeps = 2000;
  opts.burn_in = 3000;  // enough tuning windows to walk the width down
  opts.initial_width = 5.0;
  const ChainResult res = run_chain(lat, nb, opts, 3);
  CHECK(res.tuned_width < 5.0);
  CHECK(res.acceptance_rate > 0.3);
  CHECK(res.acceptance_rate < 0.7);
}

TEST_CASE("merged chain average approaches the leading-order correlator") {
  // Large N at fixed lambda: the conditional estimator concentrates on
  // -lambda D(x-y).  The residual systematic is O(1/N), so the tolerance
  // combines the statistical error with a 1/N allowance.
  const Lattice lat = build_lattice(2, 3);
  const int n_comp = 200;
  const double beta = 201.0;  // lambda = 1
  const ModelParams nb = ModelParams::from_spin_beta(n_comp, beta);
  REQUIRE(nb.lambda == doctest::Approx(1.0));
  const GapSolution sol = solve_gap(nb.lambda, lat);
  REQUIRE(sol.certified());

  McOptions opts;
  opts.sweeps = 20000;
  opts.burn_in = 2000;
  opts.chains = 2;
  opts.seed = 2026;
  const McResult res = run_chains(lat, nb, opts);
  REQUIRE(static_cast<int>(res.merged.size()) == lat.volume);
  for (int z = 1; z < lat.volume; ++z) {
    const double target = -nb.lambda * sol.profile[z];
    const double tol = 4 * res.merged[z].std_error + 2.0 / n_comp * std::abs(target);
    CHECK(std::abs(res.merged[z].mean - target) <= tol);
  }
  // Coincident separation is exact, with zero variance.
  CHECK(res.merged[0].mean == 1.0);
  CHECK(res.merged[0].std_error == 0.0);
}

TEST_CASE("series statistics") {
  SUBCASE("independent noise") {
    std::mt19937_64 rng(317);
    std::normal_distribution<double> gauss(2.0, 1.0);
    std::vector<double> series(20000);
    for (double& v : series) v = gauss(rng);
    const SeriesStats st = binned_stats(series);
    CHECK(std::abs(st.mean - 2.0) <= 5.0 / std::sqrt(20000.0));
    CHECK(st.std_error == doctest::Approx(1.0 / std::sqrt(20000.0)).epsilon(0.25));
    CHECK(st.tau_int >= 0.5);
    CHECK(st.tau_int < 0.8);
    CHECK(st.bins == 64);
  }

  SUBCASE("correlated chain inflates the error") {
    std::mt19937_64 rng(331);
    std::normal_distribution<double> gauss(0.0, 1.0);
    const double rho = 0.9;
    std::vector<double> series(20000);
    double state = 0.0;
    for (double& v : series) {
      state = rho * state + std::sqrt(1 - rho * rho) * gauss(rng);
      v = state;
    }
    const SeriesStats st = binned_stats(series);
    // tau for AR(1) at rho = 0.9 is (1+rho)/(2(1-rho)) = 9.5.
    CHECK(st.tau_int > 4.0);
    CHECK(st.std_error > 2.0 / std::sqrt(20000.0));
  }

  SUBCASE("constant series") {
    const std::vector<double> series(100, 3.25);
    const SeriesStats st = binned_stats(series);
    CHECK(st.mean == 3.25);
    CHECK(st.std_error == 0.0);
    CHECK(st.tau_int == 0.5);
  }

  SUBCASE("merge") {
    const MergedStats eq = merge_inverse_variance({1.0, 3.0}, {0.1, 0.1});
    CHECK(eq.mean == doctest::Approx(2.0));
    CHECK(eq.std_error == doctest::Approx(0.1 / std::sqrt(2.0)));

    const MergedStats exact = merge_inverse_variance({1.0, 3.0}, {0.0, 0.1});
    CHECK(exact.mean == 1.0);
    CHECK(exact.std_error == 0.0);

    CHECK_THROWS_AS(merge_inverse_variance({1.0}, {0.1, 0.2}), std::invalid_argument);
    CHECK_THROWS_AS(merge_inverse_variance({}, {}), std::invalid_argument);
  }
}
