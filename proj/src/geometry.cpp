#include "contactcd/geometry.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

namespace contactcd {

Tensor3 christoffels(const StructureData& sd) {
  const int h = sd.h();
  Tensor3 g(h);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j)
      for (int k = 0; k < h; ++k)
        g.at(i, j, k) =
            0.5 * (sd.w.at(i, j, k) + sd.w.at(k, i, j) + sd.w.at(k, j, i));
  return g;
}

std::pair<Matrix, Matrix> tau_and_J(const StructureData& sd) {
  const int h = sd.h();
  Matrix tau(h, h);
  for (int i = 0; i < h; ++i)
    for (int k = 0; k < h; ++k)
      tau(i, k) = 0.5 * (sd.delta(k, i) + sd.delta(i, k));
  return {tau, sd.gamma};
}

Matrix ric_tau2_matrix(const StructureData& sd) {
  const int h = sd.h();
  const int Z = h;  // derivative index of the Reeb field
  Matrix R = Matrix::Zero(h, h);
  for (int k = 0; k < h; ++k) {
    for (int l = 0; l < h; ++l) {
      double t = 0;
      for (int j = 0; j < h; ++j) t += sd.gamma(k, j) * sd.delta(j, l);
      for (int j = 0; j < h; ++j)
        t += sd.dw[static_cast<size_t>(l)].at(k, j, j) -
             sd.dw[static_cast<size_t>(j)].at(l, j, k);
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < h; ++j)
          t += sd.w.at(j, i, i) * sd.w.at(k, j, l);
      for (int i = 0; i < h; ++i) t -= sd.w.at(k, i, i) * sd.w.at(l, i, i);
      for (int i = 0; i < h; ++i)
        for (int j = i + 1; j < h; ++j)
          t += 0.5 * (sd.w.at(i, j, l) * sd.w.at(i, j, k) -
                      (sd.w.at(l, j, i) + sd.w.at(l, i, j)) *
                          (sd.w.at(k, j, i) + sd.w.at(k, i, j)));
      R(k, l) = t;
    }
  }
  (void)Z;
  return R;
}

Vector cross_field_W(const StructureData& sd) {
  const int h = sd.h();
  Vector W = Vector::Zero(h);
  for (int k = 0; k < h; ++k) {
    double t = 0;
    for (int j = 0; j < h; ++j)
      for (int l = 0; l < h; ++l) t += sd.w.at(j, l, l) * sd.gamma(k, j);
    for (int l = 0; l < h; ++l)
      for (int j = l + 1; j < h; ++j) t += sd.w.at(l, j, k) * sd.gamma(l, j);
    for (int j = 0; j < h; ++j) t -= sd.dgamma[static_cast<size_t>(j)](k, j);
    W[k] = t;
  }
  return W;
}

Vector v_field(const StructureData& sd) {
  const int h = sd.h();
  const int Z = h;
  Vector V = Vector::Zero(h);
  for (int i = 0; i < h; ++i) {
    double t = 0;
    for (int j = 0; j < h; ++j)
      for (int l = 0; l < h; ++l)
        t += 0.5 * (sd.delta(j, l) + sd.delta(l, j)) *
             (sd.w.at(i, l, j) + sd.w.at(i, j, l));
    for (int j = 0; j < h; ++j) t += sd.ddelta[static_cast<size_t>(j)](j, i);
    for (int j = 0; j < h; ++j)
      for (int k = 0; k < h; ++k) t -= sd.w.at(j, k, k) * sd.delta(j, i);
    for (int k = 0; k < h; ++k) t += sd.dw[static_cast<size_t>(Z)].at(i, k, k);
    V[i] = t;
  }
  return V;
}

Matrix nablaZ_tau_form(const StructureData& sd) {
  const int h = sd.h();
  const int Z = h;
  Matrix N = Matrix::Zero(h, h);
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j) {
      double t = sd.ddelta[static_cast<size_t>(Z)](i, j);
      for (int k = 0; k < h; ++k)
        t += 0.5 * (sd.delta(i, k) * sd.delta(j, k) -
                    sd.delta(k, i) * sd.delta(k, j));
      N(i, j) = t;
    }
  return 0.5 * (N + N.transpose());
}

GeometryData geometry_data(const StructureData& sd) {
  GeometryData g;
  g.n = sd.n;
  g.christoffel = christoffels(sd);
  std::tie(g.tau, g.J) = tau_and_J(sd);
  g.ric_tau2 = ric_tau2_matrix(sd);
  g.W = cross_field_W(sd);
  g.V = v_field(sd);
  g.nabla_z_tau = nablaZ_tau_form(sd);
  g.u_coeff = g.tau.squaredNorm();
  return g;
}

double GeometryData::ric_min_eigenvalue() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(ric_tau2_sym());
  return es.eigenvalues().minCoeff();
}

double GeometryData::tau_op_norm_sq() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(tau.transpose() * tau);
  return es.eigenvalues().maxCoeff();
}

double GeometryData::nabla_z_tau_max() const {
  Eigen::SelfAdjointEigenSolver<Matrix> es(nabla_z_tau);
  return es.eigenvalues().maxCoeff();
}

}  // namespace contactcd
