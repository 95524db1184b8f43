#include "contactcd/report.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

namespace contactcd {

namespace {

using nlohmann::json;

std::string hex64(uint64_t v) {
  std::ostringstream os;
  os << std::hex << v;
  return os.str();
}

json point_json(const Point& p) {
  json a = json::array();
  for (int i = 0; i < p.dim(); ++i) a.push_back(p.coords[i]);
  return a;
}

json finite_or_string(double v) {
  if (std::isfinite(v)) return v;
  return v > 0 ? "inf" : "-inf";
}

json constants_json(const CdConstants& c) {
  return {{"c1", c.c1},       {"c2", c.c2},
          {"c3", c.c3},       {"iota", c.iota},
          {"alpha", c.alpha}, {"uBound", c.u_bound},
          {"kappa", c.kappa}, {"n", c.n},
          {"sample",
           {{"count", c.sample.count},
            {"radius", c.sample.radius},
            {"seed", c.sample.seed},
            {"hash", hex64(c.sample.hash)}}}};
}

json params_json(const CdParams& p) {
  return {{"rho1", p.rho1},
          {"rho2", p.rho2},
          {"rho3", p.rho3},
          {"kappa", p.kappa},
          {"m", p.m},
          {"z", p.z},
          {"w", p.w},
          {"rho2Positive", p.rho2_positive},
          {"sasakianLimit", p.sasakian_limit}};
}

}  // namespace

json report_envelope(const ContactModel* m, const std::string& command,
                     json parameters, json results) {
  json j;
  j["tool"] = {{"name", kToolName}, {"version", kToolVersion}};
  if (m) {
    j["model"] = {{"name", m->name},
                  {"hash", hex64(model_hash(*m))},
                  {"n", m->n},
                  {"backend", m->is_chart() ? "chart" : "lie"}};
  }
  j["command"] = command;
  j["parameters"] = std::move(parameters);
  j["results"] = std::move(results);
  return j;
}

json analyze_report(const ContactModel& m, const AnalyzeOptions& opt) {
  const CertificateReport rep = analyze_model(m, opt.sampler, opt.objective);
  json myers = {{"holds", rep.myers.holds},
                {"margin", finite_or_string(rep.myers.margin)},
                {"lambdaStar", rep.myers.lambda_star},
                {"cAtLambda", finite_or_string(rep.myers.c_at_lambda)},
                {"threshold", finite_or_string(rep.myers.threshold)},
                {"thresholdHolds", rep.myers.threshold_holds},
                {"disagreement", rep.myers.disagreement}};
  json gap = {{"sigma", rep.gap.sigma}, {"deltaCoeff", rep.gap.delta_coeff}};
  gap["gapLowerBound"] =
      rep.gap.gap_lower_bound ? json(*rep.gap.gap_lower_bound) : json(nullptr);
  gap["poincareConstant"] =
      rep.gap.poincare_constant ? json(*rep.gap.poincare_constant) : json(nullptr);
  json volume = {{"expGrowth", rep.volume.exp_growth}};
  volume["finiteVolume"] =
      rep.volume.finite_volume ? json(*rep.volume.finite_volume) : json(nullptr);
  // generator convention note: the simulated SDE uses drift X0 and noise
  // sqrt(2) X_i so that the generator is L = sum X_i^2 + X0
  json results = {{"constants", constants_json(rep.constants)},
                  {"params", params_json(rep.params)},
                  {"objective", rep.objective},
                  {"myers", myers},
                  {"gap", gap},
                  {"volume", volume},
                  {"generatorConvention", "L = sum X_i^2 + X0; noise sqrt(2) X_i"}};
  json params = {{"samples", opt.sampler.count},
                 {"radius", opt.sampler.radius},
                 {"seed", opt.sampler.seed},
                 {"objective", objective_name(opt.objective)}};
  return report_envelope(&m, "analyze", params, results);
}

VerifyOutcome verify_report(const ContactModel& m, const VerifyOptions& opt) {
  VerifyOutcome out;
  const IdentitySweepResult ids =
      run_identity_sweep(m, opt.count, opt.seed, opt.fault_ric);
  const EqualityJetSweepResult eq =
      run_equality_jet_sweep(m, std::max(10, opt.count / 2), opt.seed);
  const CdConstants consts = estimate_constants(m, SamplerSpec{64, 1.0, opt.seed});
  const double nus[3] = {0.1, 1.0, 10.0};
  const CdSweepResult cds = run_cd_sweep(m, consts, opt.count, opt.seed, nus);

  auto witness = [&](const SweepWitness& w) {
    return json{{"fSeed", w.f_seed}, {"point", point_json(w.x)},
                {"residual", w.residual}};
  };
  json identities = {
      {"horizontal", witness(ids.horizontal)},
      {"vertical", witness(ids.vertical)},
      {"rescaled", witness(ids.rescaled)},
      {"gammaDefinition", witness(ids.gamma_def)},
  };
  const bool ids_pass = ids.pass(opt.tol);
  const bool eq_pass = eq.max_residual <= opt.tol && eq.max_residual_sat <= opt.tol;
  const bool cd_pass = cds.min_slack >= -opt.tol;
  out.pass = ids_pass && eq_pass && cd_pass;

  json results = {{"identities", identities},
                  {"equalityJets",
                   {{"maxResidual", eq.max_residual},
                    {"maxResidualSaturating", eq.max_residual_sat},
                    {"count", eq.count}}},
                  {"cdSlack",
                   {{"minSlack", cds.min_slack},
                    {"count", cds.count},
                    {"argmin", witness(cds.argmin)}}},
                  {"constants", constants_json(consts)},
                  {"pass", out.pass}};
  json params = {{"count", opt.count}, {"seed", opt.seed}, {"tol", opt.tol}};
  if (opt.fault_ric != 0.0) params["injectFault"] = "ric";
  out.report = report_envelope(&m, "verify", params, results);
  return out;
}

SimulateOutcome simulate_report(const ContactModel& m, const SimulateOptions& opt) {
  SimulateOutcome out;
  SimConfig cfg;
  cfg.model = &m;
  cfg.t = opt.t;
  cfg.dt = opt.dt;
  cfg.paths = opt.paths;
  cfg.seed = opt.seed;
  cfg.escape_radius = opt.escape_radius;

  json params = {{"t", opt.t},
                 {"dt", opt.dt},
                 {"paths", opt.paths},
                 {"seed", opt.seed},
                 {"check", opt.check.empty() ? json(nullptr) : json(opt.check)}};
  if (opt.escape_radius) params["escapeRadius"] = *opt.escape_radius;

  json results;
  if (opt.check.empty() || opt.check == "completeness") {
    const PathEnsemble e = simulate_paths(cfg);
    results["escapedFraction"] = e.escaped_fraction();
    results["paths"] = e.paths();
    results["constraintViolation"] = max_constraint_violation(m, e);
    if (!opt.csv_path.empty()) {
      std::ofstream csv(opt.csv_path);
      if (!csv) throw Error("cannot write CSV: " + opt.csv_path);
      csv << "path,escaped";
      for (int a = 0; a < m.ambient_dim(); ++a) csv << ",x" << a;
      csv << "\n";
      for (int p = 0; p < e.paths(); ++p) {
        csv << p << "," << static_cast<int>(e.escaped[static_cast<size_t>(p)]);
        for (int a = 0; a < m.ambient_dim(); ++a)
          csv << "," << e.terminal[static_cast<size_t>(p)][a];
        csv << "\n";
      }
      results["csv"] = opt.csv_path;
    }
    if (opt.check == "completeness") {
      const double threshold = m.is_chart() ? 1e-3 : 0.0;
      out.pass = e.escaped_fraction() <= threshold;
      results["threshold"] = threshold;
      results["pass"] = out.pass;
    }
  } else if (opt.check == "gradient") {
    const CdConstants consts = estimate_constants(m, SamplerSpec{64, 1.0, opt.seed});
    const CdParams p = optimize_zw(consts, Objective::SpectralGap).params;
    const GapCertificate cert = gap_and_poincare(p);
    const ScalarField f = ScalarField::coordinate(m.ambient_dim(), 0);
    const GradientBoundCheck gb = check_gradient_bound(cfg, f, cert);
    out.pass = gb.holds;
    results = {{"t", gb.t},
               {"sigma", gb.sigma},
               {"deltaCoeff", gb.delta_coeff},
               {"coeffGamma", gb.coeff_gamma},
               {"coeffGammaZ", gb.coeff_gammaZ},
               {"lhs", gb.lhs},
               {"rhs", gb.rhs},
               {"lhsSe", gb.lhs_se},
               {"rhsSe", gb.rhs_se},
               {"fdStep", gb.fd_step},
               {"holds", gb.holds},
               {"f", "x1"}};
  } else if (opt.check == "variance") {
    if (!model_is_compact(m))
      throw Error("variance check requires a compact group model");
    const CdConstants consts = estimate_constants(m, SamplerSpec{16, 1.0, opt.seed});
    const CdParams p = optimize_zw(consts, Objective::SpectralGap).params;
    const GapCertificate cert = gap_and_poincare(p);
    const double target = cert.gap_lower_bound ? 2.0 * *cert.gap_lower_bound : 0.0;
    const ScalarField f = ScalarField::coordinate(m.ambient_dim(), 0);
    const int outer = 48;
    const int inner = std::max(32, opt.paths / outer);
    const std::vector<double> grid{0.5, 1.0, 1.5, 2.0};
    const VarianceDecay vd = variance_decay_rate(cfg, f, 6.0, grid, outer, inner);
    out.pass = !vd.degenerate && vd.rate >= target - vd.rate_ci;
    results = {{"tGrid", vd.t_grid},
               {"variance", vd.variance},
               {"varianceSe", vd.variance_se},
               {"rate", vd.rate},
               {"rateCi", vd.rate_ci},
               {"target", target},
               {"burnIn", vd.burn_in},
               {"burnInDrift", vd.burn_in_drift},
               {"degenerate", vd.degenerate},
               {"pass", out.pass},
               {"f", "x1"}};
  } else {
    throw Error("unknown simulate check: " + opt.check);
  }
  out.report = report_envelope(&m, "simulate", params, results);
  return out;
}

json models_report() {
  json list = json::array();
  for (const auto& entry : model_catalog()) {
    list.push_back({{"name", entry.name},
                    {"description", entry.description},
                    {"params", entry.params},
                    {"expected", entry.expected}});
  }
  return report_envelope(nullptr, "models", json::object(), {{"catalog", list}});
}

}  // namespace contactcd
