#include <cmath>

#include "contactcd/heatsim.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace contactcd;

namespace {

SimConfig config(const ContactModel& m, double t, double dt, int paths,
                 uint64_t seed) {
  SimConfig c;
  c.model = &m;
  c.t = t;
  c.dt = dt;
  c.paths = paths;
  c.seed = seed;
  return c;
}

}  // namespace

TEST_CASE("t = 0 returns the start points with no escapes") {
  const ContactModel m = heisenberg_model(1);
  SimConfig c = config(m, 0.0, 1e-2, 16, 9);
  c.escape_radius = 5.0;
  const PathEnsemble e = simulate_paths(c);
  CHECK(e.escaped_fraction() == 0.0);
  for (const auto& y : e.terminal) CHECK((y - m.base_point().coords).norm() == 0.0);
}

TEST_CASE("determinism: identical (config, seed) reproduce the ensemble bitwise") {
  const ContactModel m = su2_model();
  const SimConfig c = config(m, 0.5, 1e-2, 64, 2718);
  const PathEnsemble a = simulate_paths(c);
  const PathEnsemble b = simulate_paths(c);
  for (int p = 0; p < a.paths(); ++p)
    CHECK((a.terminal[static_cast<size_t>(p)] - b.terminal[static_cast<size_t>(p)])
              .cwiseAbs()
              .maxCoeff() == 0.0);
  // and independently of the worker count
  setenv("CONTACTCD_WORKERS", "1", 1);
  const PathEnsemble serial = simulate_paths(c);
  unsetenv("CONTACTCD_WORKERS");
  for (int p = 0; p < a.paths(); ++p)
    CHECK((a.terminal[static_cast<size_t>(p)] -
           serial.terminal[static_cast<size_t>(p)])
              .cwiseAbs()
              .maxCoeff() == 0.0);
}

TEST_CASE("Heisenberg moments: E[z] = 0 and E[x^2 + y^2] = 4t within 3 SE") {
  const ContactModel m = heisenberg_model(1);
  const double t = 0.7;
  const PathEnsemble e = simulate_paths(config(m, t, 1e-2, 20000, 31415));
  double mz = 0, mr = 0, vz = 0, vr = 0;
  for (const auto& y : e.terminal) {
    mz += y[2];
    mr += y[0] * y[0] + y[1] * y[1];
  }
  mz /= e.paths();
  mr /= e.paths();
  for (const auto& y : e.terminal) {
    vz += (y[2] - mz) * (y[2] - mz);
    vr += std::pow(y[0] * y[0] + y[1] * y[1] - mr, 2);
  }
  const double se_z = std::sqrt(vz / e.paths() / e.paths());
  const double se_r = std::sqrt(vr / e.paths() / e.paths());
  CHECK(std::abs(mz) <= 3 * se_z);
  CHECK(std::abs(mr - 4 * t) <= 3 * se_r);
}

TEST_CASE("group backend is structurally complete; unit norm is preserved") {
  const ContactModel m = su2_model();
  const PathEnsemble e = simulate_paths(config(m, 1.0, 1e-3, 200, 5));
  CHECK(e.escaped_fraction() == 0.0);
  CHECK(max_constraint_violation(m, e) < 1e-8);
}

TEST_CASE("Heisenberg chart with radius 100: escapes are negligible at t = 1") {
  const ContactModel m = heisenberg_model(1);
  SimConfig c = config(m, 1.0, 1e-2, 2000, 99);
  c.escape_radius = 100.0;
  const PathEnsemble e = simulate_paths(c);
  CHECK(e.escaped_fraction() < 1e-3);
}

TEST_CASE("sub-Markov convention: P_t 1 = 1 on groups, near 1 on wide charts") {
  const ContactModel su2 = su2_model();
  const MeanStderr a =
      estimate_semigroup(config(su2, 0.5, 1e-2, 256, 11), ScalarField::constant(4, 1.0));
  CHECK(a.mean == doctest::Approx(1.0));
  CHECK(a.se == doctest::Approx(0.0));

  const ContactModel h3 = heisenberg_model(1);
  SimConfig c = config(h3, 1.0, 1e-2, 2000, 12);
  c.escape_radius = 100.0;
  const MeanStderr b = estimate_semigroup(c, ScalarField::constant(3, 1.0));
  CHECK(b.mean >= 0.999);
}

TEST_CASE("ergodic limit on the compact model: long-horizon means agree") {
  const ContactModel m = su2_model();
  const ScalarField f = random_polynomial(4, 2, 616, 0.5);
  const MeanStderr a = estimate_semigroup(config(m, 6.0, 2e-2, 4000, 100), f);
  const MeanStderr b = estimate_semigroup(config(m, 9.0, 2e-2, 4000, 200), f);
  const double se = std::sqrt(a.se * a.se + b.se * b.se);
  CHECK(std::abs(a.mean - b.mean) <= 3 * se + 1e-3);
}

TEST_CASE("weak-order consistency: halving dt moves means by less than 3 SE") {
  const ContactModel m = su2_model();
  const ScalarField f = random_polynomial(4, 2, 4242, 0.5);
  const MeanStderr coarse = estimate_semigroup(config(m, 0.5, 2e-2, 20000, 7), f);
  const MeanStderr fine = estimate_semigroup(config(m, 0.5, 1e-2, 20000, 8), f);
  const double se = std::sqrt(coarse.se * coarse.se + fine.se * fine.se);
  CHECK(std::abs(coarse.mean - fine.mean) <= 3 * se + 1e-4);
}

TEST_CASE("first variation: alpha = Id at t = 0 and on the Heisenberg horizontal block") {
  const ContactModel m = heisenberg_model(1);
  SimConfig c = config(m, 0.0, 1e-2, 4, 3);
  c.record_first_variation = true;
  const PathEnsemble e0 = simulate_paths(c);
  for (const auto& a : e0.alpha)
    CHECK((a - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() == 0.0);

  c.t = 0.5;
  const PathEnsemble e = simulate_paths(c);
  for (const auto& a : e.alpha) {
    // horizontal 2x2 block stays the identity; only the Z-column moves
    CHECK(std::abs(a(0, 0) - 1.0) < 1e-12);
    CHECK(std::abs(a(1, 1) - 1.0) < 1e-12);
    CHECK(std::abs(a(0, 1)) < 1e-12);
    CHECK(std::abs(a(1, 0)) < 1e-12);
    CHECK(std::abs(a(2, 2) - 1.0) < 1e-12);
  }
}

TEST_CASE("first variation growth stays within the transport-norm bound") {
  {
    const ContactModel m = heisenberg_model(1);
    SimConfig c = config(m, 1.0, 1e-2, 200, 21);
    const FirstVariationCheck fv = first_variation_growth(c);
    INFO("heisenberg rate ", fv.empirical_rate, " bound ", fv.rate_bound);
    CHECK(fv.within);
  }
  {
    // nonconstant structure: the shear drift is cubic, so keep the horizon
    // short and stop paths at a modest radius
    const ContactModel m = test_support::shear_model();
    SimConfig c = config(m, 0.3, 1e-2, 100, 22);
    c.escape_radius = 3.0;
    const FirstVariationCheck fv = first_variation_growth(c);
    INFO("shear rate ", fv.empirical_rate, " bound ", fv.rate_bound);
    CHECK(fv.within);
  }
}

TEST_CASE("gradient bound holds on su2type at several horizons") {
  const ContactModel m = su2_model();
  const CdConstants consts = estimate_constants(m, {1, 1.0, 3});
  const GapCertificate cert = gap_and_poincare(cd_params(consts, 1.0, 1.0));
  const ScalarField f = ScalarField::coordinate(4, 1);
  for (double t : {0.25, 0.5}) {
    const GradientBoundCheck gb =
        check_gradient_bound(config(m, t, 2e-3, 4000, 1001), f, cert);
    INFO("t ", t, " lhs ", gb.lhs, " rhs ", gb.rhs);
    CHECK(gb.holds);
  }
}

TEST_CASE("gradient bound at t = 0 degenerates to equality") {
  const ContactModel m = su2_model();
  const CdConstants consts = estimate_constants(m, {1, 1.0, 3});
  const GapCertificate cert = gap_and_poincare(cd_params(consts, 1.0, 1.0));
  const ScalarField f = ScalarField::coordinate(4, 1);
  const GradientBoundCheck gb =
      check_gradient_bound(config(m, 0.0, 1e-2, 100, 2), f, cert);
  CHECK(gb.holds);
  CHECK(std::abs(gb.lhs - gb.rhs) < 1e-4);  // finite-difference bias only
}

TEST_CASE("Sasakian limit: Gamma(P_t f) <= P_t Gamma(f) on the Heisenberg group") {
  const ContactModel m = heisenberg_model(1);
  const CdConstants consts = estimate_constants(m, {8, 1.0, 3});
  const GapCertificate cert = gap_and_poincare(cd_params(consts, 1.0, 1.0));
  CHECK(cert.sigma == doctest::Approx(0.0));
  SimConfig c = config(m, 0.5, 5e-3, 4000, 77);
  c.escape_radius = 100.0;
  const GradientBoundCheck gb =
      check_gradient_bound(c, ScalarField::coordinate(3, 0), cert);
  CHECK(gb.holds);
}

TEST_CASE("variance decay on su2type beats twice the certified gap") {
  const ContactModel m = su2_model();
  const ScalarField f = ScalarField::coordinate(4, 0);
  const std::vector<double> grid{0.5, 1.0, 1.5, 2.0};
  const VarianceDecay vd =
      variance_decay_rate(config(m, 1.0, 1e-2, 0x7777, 55), f, 6.0, grid, 32, 160);
  INFO("rate ", vd.rate, " ci ", vd.rate_ci);
  CHECK_FALSE(vd.degenerate);
  CHECK(vd.rate >= 2.0 / 3.0 - vd.rate_ci);
}

TEST_CASE("variance decay rejects constant functions and noncompact models") {
  const ContactModel m = su2_model();
  const std::vector<double> grid{0.5, 1.0};
  const VarianceDecay vd = variance_decay_rate(
      config(m, 1.0, 1e-2, 100, 5), ScalarField::constant(4, 3.0), 1.0, grid, 8, 16);
  CHECK(vd.degenerate);

  const ContactModel h3 = heisenberg_model(1);
  CHECK_THROWS_AS(variance_decay_rate(config(h3, 1.0, 1e-2, 100, 5),
                                      ScalarField::coordinate(3, 0), 1.0, grid, 8, 16),
                  Error);
  CHECK_FALSE(model_is_compact(h3));
  CHECK(model_is_compact(su2_model()));
  CHECK_FALSE(model_is_compact(twisted_model(0.0, 1.0)));
}

TEST_CASE("doubling the outer sample shrinks the variance CI roughly by sqrt 2") {
  const ContactModel m = su2_model();
  const ScalarField f = ScalarField::coordinate(4, 0);
  const std::vector<double> grid{0.5, 1.0, 1.5};
  const VarianceDecay small =
      variance_decay_rate(config(m, 1.0, 2e-2, 0, 505), f, 4.0, grid, 24, 64);
  const VarianceDecay big =
      variance_decay_rate(config(m, 1.0, 2e-2, 0, 505), f, 4.0, grid, 96, 64);
  // quadrupling the outer sample should halve the CI within +-30%
  const double ratio = big.rate_ci / small.rate_ci;
  INFO("ratio ", ratio);
  CHECK(ratio > 0.5 * 0.7);
  CHECK(ratio < 0.5 * 1.3);
}

TEST_CASE("config validation") {
  const ContactModel m = heisenberg_model(1);
  SimConfig c = config(m, 1.0, 0.0, 10, 1);
  CHECK_THROWS_AS(simulate_paths(c), Error);
  c.dt = 1e-2;
  c.paths = 0;
  CHECK_THROWS_AS(simulate_paths(c), Error);
}
