#pragma once

#include "contactcd/geometry.hpp"

namespace contactcd {

// Everything needed to evaluate L, Gamma, Gamma_2 and the Bochner right-hand
// sides at one point. Construction does the frame/structure work once.
struct OperatorContext {
  const ContactModel* model = nullptr;
  Point x;
  int jet_order = 4;
  FrameJets frames;       // coefficient jets, order jet_order - 1
  StructureJets sjets;    // structure-function jets, order jet_order - 2
  StructureData sd;
  GeometryData geo;

  int n() const { return model->n; }
  int h() const { return 2 * model->n; }
  int zfield() const { return 2 * model->n; }
  int dim() const { return model->ambient_dim(); }
};

OperatorContext make_context(const ContactModel& m, const Point& x,
                             int jet_order = 4);

// L g as a jet (order decreases by 2); L = sum X_i^2 - sum b_i X_i
Jet apply_L_jet(const OperatorContext& ctx, const Jet& g);
double apply_L(const OperatorContext& ctx, const ScalarField& f);

// (Gamma(f,g), Gamma^Z(f,g))
std::pair<double, double> gamma_forms(const OperatorContext& ctx,
                                      const ScalarField& f,
                                      const ScalarField& g);
// (Gamma_2(f), Gamma_2^Z(f)) straight from the definitions
std::pair<double, double> gamma2_forms(const OperatorContext& ctx,
                                       const ScalarField& f);

double bochner_horizontal_rhs(const OperatorContext& ctx, const ScalarField& f);
double bochner_vertical_rhs(const OperatorContext& ctx, const ScalarField& f);

struct RescaledForms {
  double gamma_lambda = 0;       // Gamma(f) + lambda^2 (Zf)^2
  double gamma2_lambda = 0;      // Gamma_2 form of L + lambda^2 Z^2
  double identity_residual = 0;  // |lhs - rhs| of the exact vertical-commutation identity
};
RescaledForms rescaled_forms(const OperatorContext& ctx, const ScalarField& f,
                             double lambda);

// Prescribed 2-jet. The defaults build the jet that saturates the
// curvature-dimension inequality: hessian = (nu/2) tau v and
// xz_j = (1/nu) sum_i gamma_ij u_i.
struct JetPrescription {
  Point x0;
  Vector u;                      // horizontal gradient target
  double v = 0.0;                // vertical gradient target
  double nu = 1.0;
  std::optional<Matrix> hessian; // symmetric Tanno Hessian target (2n x 2n)
  std::optional<Vector> xz;      // X_j Zf targets (2n)
};
ScalarField prescribe_jet_function(const ContactModel& m,
                                   const JetPrescription& p);

// Equality-case jets extract the curvature form back out of the Gamma_2
// combination. With v = 0 and X_j Zf = 0 the combination equals Sym(R)
// applied to u for every nu; with the saturating X_j Zf values it equals
// Sym(R)(u) - |u|^2 / nu. Both identities are checked.
struct EqualityJetCheck {
  double combination = 0;     // Gamma_2 + nu Gamma_2^Z at the xz = 0 jet
  double quad_form = 0;       // u^T Sym(R) u
  double combination_sat = 0; // same at the saturating-xz jet
  double residual = 0;        // |combination - quad_form|
  double residual_sat = 0;    // |combination_sat - (quad_form - |u|^2/nu)|
};
EqualityJetCheck equality_jet_check(const ContactModel& m, const Point& x0,
                                    const Vector& u, double nu);

// Bochner/rescaled/definitional residual sweep over random cubic fields.
struct SweepWitness {
  uint64_t f_seed = 0;
  Point x;
  double residual = 0;
};
struct IdentitySweepResult {
  SweepWitness horizontal, vertical, rescaled, gamma_def;
  int count = 0;
  double max_residual() const;
  bool pass(double tol) const { return max_residual() <= tol; }
};
// fault_ric != 0 perturbs the R matrix used in the horizontal RHS; test hook
// for the fault-injection fixture.
IdentitySweepResult run_identity_sweep(const ContactModel& m, int count,
                                       uint64_t seed, double fault_ric = 0.0);

struct EqualityJetSweepResult {
  double max_residual = 0;      // xz = 0 jet vs Sym(R) quadratic form
  double max_residual_sat = 0;  // saturating jet vs Sym(R)(u) - |u|^2/nu
  int count = 0;
};
EqualityJetSweepResult run_equality_jet_sweep(const ContactModel& m, int count,
                                              uint64_t seed);

// deterministic sample points: box-uniform for charts, exp-ball for groups
Point random_model_point(const ContactModel& m, uint64_t seed, double radius = 1.0);
ScalarField random_cubic(const ContactModel& m, uint64_t seed);

}  // namespace contactcd
