// Acceptance suite: every criterion prints one PASS/FAIL line; the process
// exits nonzero if any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <limits>
#include <string>
#include <vector>

#include "contactcd/report.hpp"
#include "test_support.hpp"

using namespace contactcd;

namespace {

int g_failures = 0;

void line(int criterion, const std::string& what, bool pass,
          const std::string& detail) {
  std::printf("%s  criterion %d: %s (%s)\n", pass ? "PASS" : "FAIL", criterion,
              what.c_str(), detail.c_str());
  if (!pass) ++g_failures;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
      .count();
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.3g", v);
  return buf;
}

}  // namespace

int main() {
  const auto t_all = std::chrono::steady_clock::now();
  // the degree-2 chart frame enters through the public loader
  std::vector<ContactModel> models;
  models.push_back(heisenberg_model(1));
  models.push_back(heisenberg_model(2));
  models.push_back(twisted_model(0.0, 1.0));
  models.push_back(su2_model());
  models.push_back(load_model(std::string(CONTACTCD_TEST_DATA_DIR) + "/shear.json"));

  // ---- 1 & 2: Bochner identity suite + rescaled exact identity ----
  {
    const auto t0 = std::chrono::steady_clock::now();
    double worst_h = 0, worst_v = 0, worst_r = 0;
    for (const auto& m : models) {
      const IdentitySweepResult r = run_identity_sweep(m, 100, 20260810);
      worst_h = std::max(worst_h, r.horizontal.residual);
      worst_v = std::max(worst_v, r.vertical.residual);
      worst_r = std::max(worst_r, r.rescaled.residual);
    }
    const double el = seconds_since(t0);
    line(1, "Bochner identities, 100 random cubics x 5 models",
         worst_h <= 1e-8 && worst_v <= 1e-8 && el < 30.0,
         "max horizontal " + fmt(worst_h) + ", max vertical " + fmt(worst_v) +
             ", " + fmt(el) + " s");
    line(2, "rescaled-metric exact identity over the same sweep",
         worst_r <= 1e-8, "max residual " + fmt(worst_r));
  }

  // ---- 3: constant regression ----
  {
    auto tuple_ok = [](const CdConstants& c, double c1, double c2, double c3,
                       double iota, double alpha) {
      const double tol = 1e-10;
      return std::abs(c.c1 - c1) <= tol && std::abs(c.c2 - c2) <= tol &&
             std::abs(c.c3 - c3) <= tol && std::abs(c.iota - iota) <= tol &&
             std::abs(c.alpha - alpha) <= tol;
    };
    const CdConstants h1 = estimate_constants(heisenberg_model(1), {32, 1.0, 3});
    const CdConstants tm11 = estimate_constants(twisted_model(-1, 1), {1, 1.0, 3});
    const CdConstants t01 = estimate_constants(twisted_model(0, 1), {1, 1.0, 3});
    const bool ok = tuple_ok(h1, 0, 0, 0, 0, 0) &&
                    tuple_ok(tm11, 1, 0, 0, 0, 0) &&
                    tuple_ok(t01, 0, 0, 0, 0.25, 0.5);
    line(3, "constants (0,0,0,0,0) / (1,0,0,0,0) / (0,0,0,0.25,0.5)", ok,
         "heisenberg c1 " + fmt(h1.c1) + ", twisted(-1,1) c1 " + fmt(tm11.c1) +
             ", twisted(0,1) iota " + fmt(t01.iota) + " alpha " + fmt(t01.alpha));
  }

  // ---- 4: CD soundness sweep ----
  {
    const double nus[3] = {0.1, 1.0, 10.0};
    double worst = std::numeric_limits<double>::infinity();
    for (const auto& m : models) {
      const CdConstants c =
          estimate_constants(m, {m.is_chart() ? 32 : 1, 1.0, 11});
      const CdSweepResult r = run_cd_sweep(m, c, 500, 424242, nus);
      worst = std::min(worst, r.min_slack);
    }
    line(4, "CD inequality slack >= -1e-8 over 500 tuples x 5 models",
         worst >= -1e-8, "min slack " + fmt(worst));
  }

  // ---- 5: certificates ----
  {
    const CertificateReport su2 =
        analyze_model(twisted_model(-1, 1), {1, 1.0, 3});
    bool ok = su2.myers.holds &&
              std::abs(su2.myers.margin - 1.0 / 3.0) <= 1e-10 &&
              su2.gap.gap_lower_bound &&
              std::abs(*su2.gap.gap_lower_bound - 1.0 / 3.0) <= 1e-10 &&
              su2.gap.poincare_constant &&
              std::abs(*su2.gap.poincare_constant - 3.0) <= 1e-9 &&
              std::abs(su2.gap.sigma - 2.0 / 3.0) <= 1e-10 &&
              std::abs(su2.gap.delta_coeff - 2.0 / 3.0) <= 1e-10;
    const CertificateReport h1 = analyze_model(heisenberg_model(1), {16, 1.0, 3});
    const CertificateReport t01 = analyze_model(twisted_model(0, 1), {1, 1.0, 3});
    auto absent = [](const CertificateReport& r) {
      return !r.myers.holds && !r.gap.gap_lower_bound &&
             !r.gap.poincare_constant && !r.volume.finite_volume;
    };
    ok = ok && absent(h1) && absent(t01);
    line(5, "twisted(-1,1) certificates at closed forms; others absent", ok,
         "margin " + fmt(su2.myers.margin) + ", gap " +
             fmt(su2.gap.gap_lower_bound.value_or(-1)) + ", Poincare " +
             fmt(su2.gap.poincare_constant.value_or(-1)) + ", sigma " +
             fmt(su2.gap.sigma) + ", delta " + fmt(su2.gap.delta_coeff));
  }

  // ---- 6: equality-case jets ----
  {
    double worst = 0;
    for (const auto& m : models) {
      const EqualityJetSweepResult r = run_equality_jet_sweep(m, 50, 777);
      worst = std::max(worst, r.max_residual);
    }
    line(6, "equality-case jets: curvature form recovered, 50 per model", worst <= 1e-8,
         "max residual " + fmt(worst));
  }

  // ---- 7: simulation ----
  {
    const auto t0 = std::chrono::steady_clock::now();
    const ContactModel su2 = su2_model();
    const ContactModel h3 = heisenberg_model(1);

    // (a) completeness
    SimConfig cg;
    cg.model = &su2;
    cg.t = 1.0;
    cg.dt = 1e-3;
    cg.paths = 10000;
    cg.seed = 1;
    const PathEnsemble eg = simulate_paths(cg);
    SimConfig ch;
    ch.model = &h3;
    ch.t = 1.0;
    ch.dt = 1e-2;
    ch.paths = 10000;
    ch.seed = 2;
    ch.escape_radius = 100.0;
    const PathEnsemble eh = simulate_paths(ch);
    line(7, "(a) stochastic completeness",
         eg.escaped_fraction() == 0.0 && eh.escaped_fraction() < 1e-3,
         "group escapes " + fmt(eg.escaped_fraction()) + ", chart escapes " +
             fmt(eh.escaped_fraction()));

    // (b) Heisenberg moment E[x^2+y^2] = 4t
    {
      const double t = 1.0;
      double mean = 0, var = 0;
      for (const auto& y : eh.terminal) mean += y[0] * y[0] + y[1] * y[1];
      mean /= eh.paths();
      for (const auto& y : eh.terminal)
        var += std::pow(y[0] * y[0] + y[1] * y[1] - mean, 2);
      const double se = std::sqrt(var / eh.paths() / eh.paths());
      line(7, "(b) E[x^2 + y^2](t) = 4t within 3 SE",
           std::abs(mean - 4 * t) <= 3 * se,
           "mean " + fmt(mean) + " vs " + fmt(4 * t) + ", SE " + fmt(se));
    }

    // (c) gradient bound on twisted(-1,1)
    {
      const CdConstants c = estimate_constants(su2, {1, 1.0, 3});
      const GapCertificate cert = gap_and_poincare(cd_params(c, 1.0, 1.0));
      const ScalarField f = ScalarField::coordinate(4, 1);
      bool ok = true;
      std::string detail;
      for (double t : {0.25, 0.5, 1.0}) {
        SimConfig cs;
        cs.model = &su2;
        cs.t = t;
        cs.dt = 2e-3;
        cs.paths = 10000;
        cs.seed = 7;
        const GradientBoundCheck gb = check_gradient_bound(cs, f, cert);
        ok = ok && gb.holds;
        detail += "t=" + fmt(t) + ": " + fmt(gb.lhs) + " <= " + fmt(gb.rhs) + "; ";
      }
      line(7, "(c) semigroup gradient bound, sigma = 2/3, delta = 2/3", ok, detail);
    }

    // (d) variance decay rate >= 2/3 - CI
    {
      const ScalarField f = ScalarField::coordinate(4, 0);
      SimConfig cs;
      cs.model = &su2;
      cs.dt = 1e-2;
      cs.seed = 9;
      cs.paths = 10000;
      const std::vector<double> grid{0.5, 1.0, 1.5, 2.0};
      const VarianceDecay vd = variance_decay_rate(cs, f, 6.0, grid, 40, 250);
      line(7, "(d) variance decay rate >= 2/3 - CI",
           !vd.degenerate && vd.rate >= 2.0 / 3.0 - vd.rate_ci,
           "rate " + fmt(vd.rate) + ", CI " + fmt(vd.rate_ci));
    }
    const double el = seconds_since(t0);
    line(7, "(runtime) simulation block under 5 minutes", el < 300.0,
         fmt(el) + " s");
  }

  // ---- 8: determinism ----
  {
    AnalyzeOptions ao;
    ao.sampler = SamplerSpec{16, 1.0, 5};
    const std::string a1 = analyze_report(heisenberg_model(1), ao).dump();
    const std::string a2 = analyze_report(heisenberg_model(1), ao).dump();
    VerifyOptions vo;
    vo.count = 10;
    vo.seed = 3;
    const std::string v1 = verify_report(twisted_model(0, 1), vo).report.dump();
    const std::string v2 = verify_report(twisted_model(0, 1), vo).report.dump();
    SimulateOptions so;
    so.t = 0.2;
    so.dt = 1e-2;
    so.paths = 500;
    so.seed = 11;
    const std::string s1 = simulate_report(su2_model(), so).report.dump();
    const std::string s2 = simulate_report(su2_model(), so).report.dump();
    line(8, "byte-identical reports for identical seeds",
         a1 == a2 && v1 == v2 && s1 == s2,
         "analyze " + std::to_string(a1.size()) + " B, verify " +
             std::to_string(v1.size()) + " B, simulate " +
             std::to_string(s1.size()) + " B");
  }

  std::printf("%s: %d criterion failure(s), total %.1f s\n",
              g_failures == 0 ? "ACCEPTANCE PASS" : "ACCEPTANCE FAIL",
              g_failures, seconds_since(t_all));
  return g_failures == 0 ? 0 : 1;
}
