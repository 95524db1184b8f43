#pragma once

#include "contactcd/operators.hpp"

namespace contactcd {

struct SamplerSpec {
  int count = 64;
  double radius = 1.0;
  uint64_t seed = 1;
};

struct SampleInfo {
  int count = 0;
  double radius = 0;
  uint64_t seed = 0;
  uint64_t hash = 0;  // FNV over the sampled coordinates
};

// Certified geometric bounds over the sampled region. `iota` is the operator
// norm bound lambda_max(tau^T tau); `u_bound` is the Frobenius quantity
// sup sum_k |tau(X_k)|^2, the constant the nu^2 term of the
// curvature-dimension inequality needs.
struct CdConstants {
  double c1 = 0;       // inf lambda_min(Sym R)
  double c2 = 0;       // sup |W|^2
  double c3 = 0;       // sup |V|^2
  double iota = 0;     // sup lambda_max(tau^T tau)
  double alpha = 0;    // sup lambda_max(Sym nabla_Z tau)
  double u_bound = 0;  // sup sum_k |tau(X_k)|^2
  double kappa = 1.0;
  int n = 1;
  SampleInfo sample;
};

struct CdParams {
  double rho1 = 0, rho2 = 0, rho3 = 0;
  double kappa = 1.0;
  double m = 2.0;  // = 2n
  double z = 1.0, w = 1.0;
  bool rho2_positive = true;
  bool sasakian_limit = false;  // rho3 == 0 convention
};

struct MyersCertificate {
  bool holds = false;
  double margin = 0;          // sup_lambda c(lambda)
  double lambda_star = 0;     // argmax (lambda, not lambda^2)
  double c_at_lambda = 0;
  // closed-form threshold rho1 - sqrt(rho3/rho2) k - sqrt(rho2/rho3)(2 iota +
  // alpha), reported alongside the sup_lambda criterion
  bool threshold_holds = false;
  double threshold = 0;
  bool disagreement = false;  // the two criteria can differ near degeneracy
};

struct GapCertificate {
  double sigma = 0;
  double delta_coeff = 0;
  std::optional<double> gap_lower_bound;    // sigma/2 when positive
  std::optional<double> poincare_constant;  // reciprocal
};

struct VolumeCertificate {
  bool exp_growth = false;                 // qualitative, from alpha/iota bounds
  std::optional<bool> finite_volume;       // absent = no certificate
};

struct CertificateReport {
  CdConstants constants;
  CdParams params;
  MyersCertificate myers;
  GapCertificate gap;
  VolumeCertificate volume;
  std::string objective = "spectral_gap";
};

CdConstants estimate_constants(const ContactModel& m, const SamplerSpec& spec);

// rho1 = c1 - sqrt(c2) z/2 - sqrt(c3) w/2, rho2 = n/2 - sqrt(c2)/(2z),
// rho3 = sqrt(c3)/(2w) + u_bound. Terms with a vanishing constant are dropped
// rather than sent through z,w limits.
CdParams cd_params(const CdConstants& c, double z, double w);

enum class Objective { SpectralGap, MyersMargin, CLambda };
Objective objective_from_string(const std::string& s);
std::string objective_name(Objective o);

struct OptimizeResult {
  double z = 1.0, w = 1.0;
  double lambda = 1.0;
  double value = 0;
  bool defined = false;
  CdParams params;
};
OptimizeResult optimize_zw(const CdConstants& c, Objective objective);

// c(lambda) = min{rho1 - k/l^2 - l^2 (2 iota + alpha), rho2/l^2 - rho3 l^2}
double c_of_lambda(const CdParams& p, double iota, double alpha, double lambda);
MyersCertificate myers_certificate(const CdParams& p, double iota, double alpha);
GapCertificate gap_and_poincare(const CdParams& p);
VolumeCertificate volume_certificate(const CdConstants& c, const CdParams& p);

// slack of the curvature-dimension inequality at one jet:
// G2 + nu G2Z - [ (Lf)^2/(2n) + (c1 - k/nu) G - (sqrt(c2) + sqrt(c3) nu)
//   sqrt(G GZ) + (n/2 - nu^2 u_bound) GZ ]
double cd_inequality_slack(const OperatorContext& ctx, const ScalarField& f,
                           double nu, const CdConstants& c);

struct CdSweepResult {
  double min_slack = 0;
  SweepWitness argmin;
  int count = 0;
};
CdSweepResult run_cd_sweep(const ContactModel& m, const CdConstants& c,
                           int count, uint64_t seed,
                           std::span<const double> nus);

CertificateReport analyze_model(const ContactModel& m, const SamplerSpec& spec,
                                Objective objective = Objective::SpectralGap);

}  // namespace contactcd
