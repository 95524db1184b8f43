#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "contactcd/report.hpp"

namespace {

using namespace contactcd;

ContactModel resolve_model(const std::string& spec, int n, double a, double b) {
  if (spec.find(".json") != std::string::npos ||
      spec.find('/') != std::string::npos)
    return load_model(spec);
  std::map<std::string, double> params;
  params["n"] = n;
  params["a"] = a;
  params["b"] = b;
  return builtin_model(spec, params);
}

void emit(const nlohmann::json& report, const std::string& json_path) {
  const std::string dump = report.dump(2);
  if (json_path.empty()) {
    std::cout << dump << "\n";
  } else {
    std::ofstream out(json_path);
    if (!out) throw Error("cannot write report file: " + json_path);
    out << dump << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"curvature-dimension analysis of contact Riemannian manifolds"};
  app.require_subcommand(1);

  std::string model_spec = "heisenberg";
  int n = 1;
  double a = 0.0, b = 1.0;
  std::string json_path;

  auto add_model_opts = [&](CLI::App* cmd) {
    cmd->add_option("model", model_spec,
                    "builtin name (heisenberg, twisted, su2type, sl2type) or "
                    "path to a model JSON file");
    cmd->add_option("--n", n, "heisenberg dimension parameter");
    cmd->add_option("--a", a, "twisted parameter a");
    cmd->add_option("--b", b, "twisted parameter b");
    cmd->add_option("--json", json_path, "write the report to this file");
  };

  auto* cmd_models = app.add_subcommand("models", "list the shipped catalog");
  cmd_models->add_option("--json", json_path, "write the report to this file");

  auto* cmd_analyze =
      app.add_subcommand("analyze", "constants, CD parameters and certificates");
  int samples = 64;
  uint64_t seed = 1;
  double radius = 1.0;
  std::string objective = "spectral_gap";
  add_model_opts(cmd_analyze);
  cmd_analyze->add_option("--samples", samples, "chart sample count");
  cmd_analyze->add_option("--seed", seed, "sampler seed");
  cmd_analyze->add_option("--radius", radius, "chart sampling box radius");
  cmd_analyze->add_option("--objective", objective,
                          "spectral_gap | myers_margin | c_lambda");

  auto* cmd_verify =
      app.add_subcommand("verify", "Bochner / rescaled / equality-jet / CD sweeps");
  int count = 100;
  double tol = 1e-8;
  std::string inject;
  add_model_opts(cmd_verify);
  cmd_verify->add_option("--count", count, "sweep size");
  cmd_verify->add_option("--seed", seed, "sweep seed");
  cmd_verify->add_option("--tol", tol, "residual tolerance");
  cmd_verify->add_option("--inject-fault", inject,
                         "self-test hook: 'ric' corrupts the curvature matrix");

  auto* cmd_sim = app.add_subcommand("simulate", "hypoelliptic diffusion checks");
  double t = 1.0, dt = 1e-3;
  int paths = 1000;
  std::string check;
  std::string csv;
  double escape = 0.0;
  add_model_opts(cmd_sim);
  cmd_sim->add_option("--t", t, "horizon");
  cmd_sim->add_option("--dt", dt, "step size");
  cmd_sim->add_option("--paths", paths, "path count");
  cmd_sim->add_option("--seed", seed, "RNG seed");
  cmd_sim->add_option("--radius", escape, "escape radius (chart models)");
  cmd_sim->add_option("--check", check, "completeness | gradient | variance");
  cmd_sim->add_option("--csv", csv, "dump terminal points to CSV");

  CLI11_PARSE(app, argc, argv);

  const auto t0 = std::chrono::steady_clock::now();
  int rc = 0;
  try {
    if (cmd_models->parsed()) {
      emit(models_report(), json_path);
    } else if (cmd_analyze->parsed()) {
      const ContactModel m = resolve_model(model_spec, n, a, b);
      AnalyzeOptions opt;
      opt.sampler = SamplerSpec{samples, radius, seed};
      opt.objective = objective_from_string(objective);
      emit(analyze_report(m, opt), json_path);
    } else if (cmd_verify->parsed()) {
      const ContactModel m = resolve_model(model_spec, n, a, b);
      VerifyOptions opt;
      opt.count = count;
      opt.seed = seed;
      opt.tol = tol;
      if (inject == "ric") opt.fault_ric = 0.1;
      else if (!inject.empty()) throw Error("unknown fault: " + inject);
      const VerifyOutcome out = verify_report(m, opt);
      emit(out.report, json_path);
      rc = out.pass ? 0 : 1;
    } else if (cmd_sim->parsed()) {
      const ContactModel m = resolve_model(model_spec, n, a, b);
      SimulateOptions opt;
      opt.t = t;
      opt.dt = dt;
      opt.paths = paths;
      opt.seed = seed;
      opt.check = check;
      opt.csv_path = csv;
      if (escape > 0.0) opt.escape_radius = escape;
      const SimulateOutcome out = simulate_report(m, opt);
      emit(out.report, json_path);
      rc = out.pass ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  const auto t1 = std::chrono::steady_clock::now();
  std::cerr << "elapsed: "
            << std::chrono::duration_cast<std::chrono::milliseconds>(t1 - t0).count()
            << " ms\n";
  return rc;
}
