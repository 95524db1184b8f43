#pragma once

#include "contactcd/frame.hpp"

namespace contactcd {

// Derived pointwise tensors of the sub-Riemannian (Tanno) connection.
struct GeometryData {
  int n = 1;
  Tensor3 christoffel;   // Gamma_ij^k = (w_ij^k + w_ki^j + w_kj^i)/2
  Matrix tau;            // tau_ik = (delta_k^i + delta_i^k)/2, symmetric
  Matrix J;              // J_ij = gamma_ij
  Matrix ric_tau2;       // R_kl; quadratic-form bounds use the symmetric part
  Vector W;              // coefficient of Zf X_kf (horizontal trace of Q)
  Vector V;              // the invariant first-order field
  Matrix nabla_z_tau;    // symmetrized quadratic form of <(nabla_Z tau) grad, grad>
  double u_coeff = 0.0;  // sum_k |tau(X_k)|^2 (Frobenius norm squared of tau)

  int h() const { return 2 * n; }
  Matrix ric_tau2_sym() const { return 0.5 * (ric_tau2 + ric_tau2.transpose()); }
  double ric_min_eigenvalue() const;
  double tau_op_norm_sq() const;     // lambda_max(tau^T tau)
  double nabla_z_tau_max() const;    // lambda_max of the symmetrized form
};

Tensor3 christoffels(const StructureData& sd);
std::pair<Matrix, Matrix> tau_and_J(const StructureData& sd);
Matrix ric_tau2_matrix(const StructureData& sd);
Vector cross_field_W(const StructureData& sd);
Vector v_field(const StructureData& sd);
Matrix nablaZ_tau_form(const StructureData& sd);

GeometryData geometry_data(const StructureData& sd);

}  // namespace contactcd
