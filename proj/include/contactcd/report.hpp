#pragma once

#include "contactcd/heatsim.hpp"
#include "json.hpp"

namespace contactcd {

inline constexpr const char* kToolName = "contactcd";
inline constexpr const char* kToolVersion = "0.1.0";

// Reports are deterministic: identical inputs produce byte-identical dumps.
// Wall-clock timing is never part of the JSON (it goes to stderr in the CLI).
nlohmann::json report_envelope(const ContactModel* m, const std::string& command,
                               nlohmann::json parameters, nlohmann::json results);

struct AnalyzeOptions {
  SamplerSpec sampler;
  Objective objective = Objective::SpectralGap;
};
nlohmann::json analyze_report(const ContactModel& m, const AnalyzeOptions& opt);

struct VerifyOptions {
  int count = 100;
  uint64_t seed = 1;
  double tol = 1e-8;
  double fault_ric = 0.0;  // fault-injection hook for self-tests
};
struct VerifyOutcome {
  nlohmann::json report;
  bool pass = false;
};
VerifyOutcome verify_report(const ContactModel& m, const VerifyOptions& opt);

struct SimulateOptions {
  double t = 1.0;
  double dt = 1e-3;
  int paths = 1000;
  uint64_t seed = 1;
  std::optional<double> escape_radius;
  std::string check;  // "", "completeness", "gradient", "variance"
  std::string csv_path;
};
struct SimulateOutcome {
  nlohmann::json report;
  bool pass = true;
};
SimulateOutcome simulate_report(const ContactModel& m, const SimulateOptions& opt);

nlohmann::json models_report();

}  // namespace contactcd
