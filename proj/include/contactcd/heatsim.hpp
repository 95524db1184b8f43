#pragma once

#include "contactcd/cd.hpp"

namespace contactcd {

// Counter-based per-path RNG substream: identical (seed, stream) always
// produces the same draws regardless of worker count.
class PathRng {
 public:
  PathRng(uint64_t seed, uint64_t stream);
  double uniform();  // [0, 1)
  double normal();   // Box-Muller, no spare caching

 private:
  uint64_t s_;
};

struct SimConfig {
  const ContactModel* model = nullptr;
  std::optional<Point> start;            // default: model base point
  double t = 1.0;
  double dt = 1e-3;
  int paths = 1000;
  uint64_t seed = 1;
  std::optional<double> escape_radius;   // chart backend only
  bool record_first_variation = false;
};

struct PathEnsemble {
  std::vector<Vector> terminal;      // escaped paths keep their last position
  std::vector<uint8_t> escaped;
  std::vector<double> escape_time;   // -1 when the path never escaped
  std::vector<uint64_t> substream;   // per-path RNG substream ids
  std::vector<Matrix> alpha;         // first-variation matrices, when recorded
  int paths() const { return static_cast<int>(terminal.size()); }
  double escaped_fraction() const;
};

PathEnsemble simulate_paths(const SimConfig& cfg);

struct MeanStderr {
  double mean = 0;
  double se = 0;
};

// Monte Carlo P_t f; escaped paths contribute 0 (sub-Markov convention)
MeanStderr estimate_semigroup(const SimConfig& cfg, const ScalarField& f);
MeanStderr semigroup_mean(const PathEnsemble& e, const ScalarField& f);

// pointwise Gamma / Gamma^Z of a polynomial along simulated points
class GradientEvaluator {
 public:
  GradientEvaluator(const ContactModel& m, const ScalarField& f);
  double value(const Vector& y) const;
  double gamma(const Vector& y) const;
  double gammaZ(const Vector& y) const;

 private:
  const ContactModel* model_;
  ScalarField f_;
  std::vector<ScalarField> df_;
};

struct GradientBoundCheck {
  double t = 0;
  double sigma = 0, delta_coeff = 0;
  double coeff_gamma = 1, coeff_gammaZ = 0;  // weights actually checked
  double lhs = 0, rhs = 0;
  double lhs_se = 0, rhs_se = 0;
  double fd_step = 1e-3;
  bool holds = false;
};
// Semigroup gradient bound with the weights under which the semigroup
// comparison argument closes: delta Gamma(P_t f) + Gamma^Z(P_t f)
// <= e^{-sigma t}(delta P_t Gamma(f) + P_t Gamma^Z(f)). When delta = 0
// (degenerate Sasakian limit) the pairing falls back to
// Gamma(P_t f) <= P_t Gamma(f). LHS gradients by common-random-number
// central differences along the frame directions.
GradientBoundCheck check_gradient_bound(const SimConfig& cfg,
                                        const ScalarField& f,
                                        const GapCertificate& cert);

struct VarianceDecay {
  std::vector<double> t_grid, variance, variance_se;
  double rate = 0;            // fitted decay rate of Var(P_t f)
  double rate_ci = 0;         // 1.96 sigma half-width
  bool degenerate = false;
  double burn_in = 0;
  double burn_in_drift = 0;   // half-sample mean drift diagnostic, in SE units
};
VarianceDecay variance_decay_rate(const SimConfig& cfg, const ScalarField& f,
                                  double burn_in, std::span<const double> t_grid,
                                  int outer, int inner);

struct FirstVariationCheck {
  std::vector<double> t_grid, mean_norm;
  double empirical_rate = 0;  // slope of log E|alpha|_F
  double rate_bound = 0;      // from sup norms of the transport matrices
  bool within = false;
};
FirstVariationCheck first_variation_growth(const SimConfig& cfg);

// compact exactly when the bracket table is of su(2) type (a < 0 < b)
bool model_is_compact(const ContactModel& m);

// |1 - |s|| for unit-norm realizations, 0 otherwise
double max_constraint_violation(const ContactModel& m, const PathEnsemble& e);

int worker_count();  // CONTACTCD_WORKERS env var, default hardware concurrency

}  // namespace contactcd
