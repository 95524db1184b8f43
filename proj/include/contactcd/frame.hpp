#pragma once

#include <optional>

#include "contactcd/model.hpp"

namespace contactcd {

struct Tensor3 {
  int d = 0;
  std::vector<double> v;
  Tensor3() = default;
  explicit Tensor3(int d_) : d(d_), v(static_cast<size_t>(d_) * d_ * d_, 0.0) {}
  double& at(int i, int j, int k) {
    return v[(static_cast<size_t>(i) * d + j) * d + k];
  }
  double at(int i, int j, int k) const {
    return v[(static_cast<size_t>(i) * d + j) * d + k];
  }
};

// Pointwise structure functions and their first frame derivatives.
// Derivative tables are indexed by the differentiating field l = 0..2n,
// where l = 2n means Z.
struct StructureData {
  int n = 1;
  Tensor3 w;             // w[i][j][k]
  Matrix gamma, delta;   // 2n x 2n
  Vector reeb_defect;    // Z-component of [X_i, Z]; zero on adapted frames
  std::vector<Tensor3> dw;
  std::vector<Matrix> dgamma, ddelta;

  int h() const { return 2 * n; }
  double b(int i) const {  // b_i = sum_k w_ik^k, the X0 coefficient
    double s = 0;
    for (int k = 0; k < h(); ++k) s += w.at(i, k, k);
    return s;
  }
};

// Frame coefficient jets at a point; the evaluation backbone for operators.
class FrameJets {
 public:
  FrameJets() = default;
  FrameJets(const ContactModel& m, const Point& x, int order);
  int order() const { return order_; }
  int fields() const { return static_cast<int>(coeff_.size()); }
  // X_field applied to g; result order = g.order() - 1
  Jet apply(int field, const Jet& g) const;
  const Jet& coeff(int field, int a) const {
    return coeff_[static_cast<size_t>(field)][static_cast<size_t>(a)];
  }

 private:
  int order_ = 0;
  int dim_ = 0;
  std::vector<std::vector<Jet>> coeff_;
};

// Structure functions as jets of the requested order (chart backend solves a
// jet-valued linear system against the frame; Lie backend returns constants).
struct StructureJets {
  int n = 1;
  int order = 0;
  std::vector<Jet> w;       // (2n)^3, same indexing as Tensor3
  std::vector<Jet> gamma;   // (2n)^2
  std::vector<Jet> delta;   // (2n)^2
  std::vector<Jet> zdef;    // 2n

  int h() const { return 2 * n; }
  const Jet& wjet(int i, int j, int k) const {
    return w[(static_cast<size_t>(i) * h() + j) * h() + k];
  }
  const Jet& gammajet(int i, int j) const {
    return gamma[static_cast<size_t>(i) * h() + j];
  }
  const Jet& deltajet(int i, int j) const {
    return delta[static_cast<size_t>(i) * h() + j];
  }
  Jet bjet(int i) const;  // sum_k w_ik^k
};

StructureJets structure_jets(const ContactModel& m, const Point& x, int order);
StructureData structure_functions(const ContactModel& m, const Point& x);

struct DiagnosticFlag {
  bool pass = true;
  double violation = 0.0;
};

struct DiagnosticsReport {
  DiagnosticFlag w_antisym, gamma_antisym, gamma_orthogonal, reeb_component,
      delta_diagonal;
  bool pass() const {
    return w_antisym.pass && gamma_antisym.pass && gamma_orthogonal.pass &&
           reeb_component.pass && delta_diagonal.pass;
  }
  double max_violation() const;
};

DiagnosticsReport check_adapted_frame(const ContactModel& m, const Point& x,
                                      double tol = 1e-10);

// Orthogonal change of horizontal frame that zeroes the diagonal of delta at
// this point via a pointwise similarity rotation; diagnostic helper.
std::optional<Matrix> delta_normalizing_rotation(const StructureData& sd,
                                                 double tol = 1e-10);

// X_{w_1} ... X_{w_k} f at x; word entries in [0, 2n], 2n meaning Z.
double frame_derivative(const ContactModel& m, const ScalarField& f,
                        const Point& x, std::span<const int> word);

}  // namespace contactcd
