#include <cmath>

#include "contactcd/geometry.hpp"
#include "doctest.h"
#include "test_support.hpp"

using namespace contactcd;

namespace {

// independent route: Ricci contraction of the connection coefficients plus the
// torsion contraction; independent cross-check of the consolidated display
Matrix ric_tau2_contraction_route(const StructureData& sd) {
  const int h = sd.h();
  const Tensor3 G = christoffels(sd);
  Matrix R = Matrix::Zero(h, h);  // coefficient of X_l f X_k f at (l, k)
  for (int l = 0; l < h; ++l)
    for (int k = 0; k < h; ++k) {
      double t = 0;
      for (int i = 0; i < h; ++i)
        for (int j = 0; j < h; ++j)
          t += G.at(l, k, i) * G.at(j, i, j) - G.at(j, k, i) * G.at(l, i, j) -
               sd.w.at(j, l, i) * G.at(i, k, j);
      // derivative terms X_j Gamma_lk^j - X_l Gamma_jk^j,
      // where Gamma_jk^j = (w_jk^j + w_jj^k + w_jk^j)/2 = w_jk^j
      for (int j = 0; j < h; ++j) {
        const double xj_glk = 0.5 * (sd.dw[static_cast<size_t>(j)].at(l, k, j) +
                                     sd.dw[static_cast<size_t>(j)].at(j, l, k) +
                                     sd.dw[static_cast<size_t>(j)].at(j, k, l));
        const double xl_gjk = sd.dw[static_cast<size_t>(l)].at(j, k, j);
        t += xj_glk - xl_gjk;
      }
      // gamma (delta - delta)/2 term from the Ricci display
      for (int j = 0; j < h; ++j)
        t -= sd.gamma(j, l) * 0.5 * (sd.delta(j, k) - sd.delta(k, j));
      // tau_2 contraction
      for (int j = 0; j < h; ++j)
        t -= 0.5 * (sd.delta(k, j) + sd.delta(j, k)) * sd.gamma(j, l);
      R(l, k) = t;
    }
  return R;
}

}  // namespace

TEST_CASE("christoffels vanish when w vanishes; antisymmetry in the last two slots") {
  const ContactModel h3 = heisenberg_model(1);
  const StructureData sd = structure_functions(h3, h3.base_point());
  const Tensor3 G = christoffels(sd);
  for (double v : G.v) CHECK(v == 0.0);

  // random antisymmetric w: Gamma_ij^k + Gamma_ik^j = 0 exactly
  StructureData fake = sd;
  uint64_t s = 5;
  for (int i = 0; i < 2; ++i)
    for (int j = i + 1; j < 2; ++j)
      for (int k = 0; k < 2; ++k) {
        s = s * 6364136223846793005ULL + 1442695040888963407ULL;
        const double v = static_cast<double>(static_cast<int64_t>(s >> 33)) * 1e-9;
        fake.w.at(i, j, k) = v;
        fake.w.at(j, i, k) = -v;
      }
  const Tensor3 Gf = christoffels(fake);
  for (int i = 0; i < 2; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k)
        CHECK(Gf.at(i, j, k) + Gf.at(i, k, j) == 0.0);
}

TEST_CASE("tau and J on the twisted family") {
  {
    const ContactModel m = heisenberg_model(1);
    const StructureData sd = structure_functions(m, m.base_point());
    const auto [tau, J] = tau_and_J(sd);
    CHECK(tau.cwiseAbs().maxCoeff() == 0.0);
    CHECK(J(0, 1) == doctest::Approx(1.0));
    CHECK(J(1, 0) == doctest::Approx(-1.0));
  }
  {
    const ContactModel m = twisted_model(0.0, 1.0);
    const auto [tau, J] = tau_and_J(structure_functions(m, m.base_point()));
    CHECK(tau(0, 1) == doctest::Approx(0.5));
    CHECK(tau(1, 0) == doctest::Approx(0.5));
    CHECK(tau(0, 0) == 0.0);
    // operator norm 1/2
    Eigen::SelfAdjointEigenSolver<Matrix> es(tau.transpose() * tau);
    CHECK(es.eigenvalues().maxCoeff() == doctest::Approx(0.25));
  }
  {
    const ContactModel m = twisted_model(-1.0, 1.0);
    const auto [tau, J] = tau_and_J(structure_functions(m, m.base_point()));
    CHECK(tau.cwiseAbs().maxCoeff() == doctest::Approx(0.0));
    (void)J;
  }
}

TEST_CASE("tau anticommutes with J on adapted models") {
  for (const auto& m : test_support::all_models()) {
    const Point x = random_model_point_for_test(m, 11);
    const GeometryData g = geometry_data(structure_functions(m, x));
    INFO(m.name);
    CHECK((g.tau * g.J + g.J * g.tau).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((g.J * g.J.transpose() - Matrix::Identity(g.h(), g.h()))
              .cwiseAbs()
              .maxCoeff() < 1e-10);
  }
}

TEST_CASE("R matrix closed forms: flat Heisenberg and twisted diag(b, -a)") {
  {
    const ContactModel m = heisenberg_model(1);
    const Matrix R = ric_tau2_matrix(structure_functions(m, m.base_point()));
    CHECK(R.cwiseAbs().maxCoeff() < 1e-14);
  }
  for (const auto& [a, b] : std::vector<std::pair<double, double>>{
           {0.0, 1.0}, {-1.0, 1.0}, {0.7, -0.2}}) {
    const ContactModel m = twisted_model(a, b);
    const Matrix R = ric_tau2_matrix(structure_functions(m, m.base_point()));
    CHECK(R(0, 0) == doctest::Approx(b));
    CHECK(R(1, 1) == doctest::Approx(-a));
    CHECK(std::abs(R(0, 1)) < 1e-14);
    CHECK(std::abs(R(1, 0)) < 1e-14);
  }
}

TEST_CASE("R matrix agrees with the independent contraction route on all models") {
  for (const auto& m : test_support::all_models()) {
    const Point x = random_model_point_for_test(m, 17);
    const StructureData sd = structure_functions(m, x);
    const Matrix direct = ric_tau2_matrix(sd);
    const Matrix contraction = ric_tau2_contraction_route(sd);
    // both act as quadratic forms on the horizontal gradient: compare
    // symmetric parts (coefficient of X_l f X_k f vs X_k f X_l f)
    const Matrix sym_direct = 0.5 * (direct + direct.transpose());
    const Matrix sym_contraction = 0.5 * (contraction + contraction.transpose());
    INFO(m.name);
    CHECK((sym_direct - sym_contraction).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("W vanishes on shipped models; synthetic gamma-derivative term") {
  for (const auto& m : test_support::all_models()) {
    const Point x = random_model_point_for_test(m, 23);
    const Vector W = cross_field_W(structure_functions(m, x));
    INFO(m.name);
    CHECK(W.cwiseAbs().maxCoeff() < 1e-12);
  }
  // synthetic structure data with gamma varying linearly: W_k = -sum_j X_j gamma_kj
  StructureData sd;
  sd.n = 1;
  sd.w = Tensor3(2);
  sd.gamma = Matrix::Zero(2, 2);
  sd.gamma(0, 1) = 1.0;
  sd.gamma(1, 0) = -1.0;
  sd.delta = Matrix::Zero(2, 2);
  sd.reeb_defect = Vector::Zero(2);
  sd.dw.assign(3, Tensor3(2));
  sd.dgamma.assign(3, Matrix::Zero(2, 2));
  sd.ddelta.assign(3, Matrix::Zero(2, 2));
  sd.dgamma[0](0, 1) = 0.3;   // X_1 gamma_12
  sd.dgamma[0](1, 0) = -0.3;
  sd.dgamma[1](0, 1) = -0.1;  // X_2 gamma_12
  sd.dgamma[1](1, 0) = 0.1;
  const Vector W = cross_field_W(sd);
  // with w = 0: W_k = -sum_j X_j gamma_kj
  CHECK(W[0] == doctest::Approx(0.1));
  CHECK(W[1] == doctest::Approx(0.3));
}

TEST_CASE("V field: vanishing cases, the skew chart, and the synthetic term") {
  for (const auto& m : {heisenberg_model(2), twisted_model(0.3, 1.1),
                        test_support::shear_model()}) {
    const Point x = random_model_point_for_test(m, 29);
    const Vector V = v_field(structure_functions(m, x));
    INFO(m.name);
    CHECK(V.cwiseAbs().maxCoeff() < 1e-12);
  }
  {
    // both w and delta active: V = (0, -2 a^2 x)
    const double a = 1.5;
    const ContactModel m = test_support::skew_model(a);
    const Point x = Point::of({0.4, -0.2, 0.7});
    const Vector V = v_field(structure_functions(m, x));
    CHECK(V[0] == doctest::Approx(0.0));
    CHECK(V[1] == doctest::Approx(-2.0 * a * a * 0.4));
  }
  StructureData sd;
  sd.n = 1;
  sd.w = Tensor3(2);
  sd.gamma = Matrix::Zero(2, 2);
  sd.gamma(0, 1) = 1.0;
  sd.gamma(1, 0) = -1.0;
  sd.delta = Matrix::Zero(2, 2);
  sd.reeb_defect = Vector::Zero(2);
  sd.dw.assign(3, Tensor3(2));
  sd.dgamma.assign(3, Matrix::Zero(2, 2));
  sd.ddelta.assign(3, Matrix::Zero(2, 2));
  sd.ddelta[0](0, 1) = 0.4;  // X_1 delta_1^2
  sd.ddelta[1](1, 0) = 0.7;  // X_2 delta_2^1
  const Vector V = v_field(sd);
  // V_i = sum_j X_j delta_j^i for this data
  CHECK(V[0] == doctest::Approx(0.7));
  CHECK(V[1] == doctest::Approx(0.4));
}

TEST_CASE("structure Reeb-derivatives are live on the zskew chart") {
  const ContactModel m = test_support::zskew_model();
  const Point p = Point::of({0.5, 0.3, -0.4});
  const StructureData sd = structure_functions(m, p);
  // w_12^2 = -2 x^2 z, delta_1^2 = -2 x z
  CHECK(sd.w.at(0, 1, 1) == doctest::Approx(-2 * 0.25 * -0.4));
  CHECK(sd.delta(0, 1) == doctest::Approx(-2 * 0.5 * -0.4));
  CHECK(sd.dw[2].at(0, 1, 1) == doctest::Approx(-2 * 0.25));   // Z w
  CHECK(sd.ddelta[2](0, 1) == doctest::Approx(-2 * 0.5));      // Z delta
  // Z delta feeds the nabla_Z tau form; alpha is strictly positive here
  const GeometryData g = geometry_data(sd);
  CHECK(g.nabla_z_tau_max() > 0.1);
}

TEST_CASE("nabla_Z tau form on the twisted family") {
  {
    const ContactModel m = twisted_model(0.0, 1.0);
    const Matrix N = nablaZ_tau_form(structure_functions(m, m.base_point()));
    CHECK(N(0, 0) == doctest::Approx(-0.5));
    CHECK(N(1, 1) == doctest::Approx(0.5));
    const GeometryData g = geometry_data(structure_functions(m, m.base_point()));
    CHECK(g.nabla_z_tau_max() == doctest::Approx(0.5));
    CHECK(g.u_coeff == doctest::Approx(0.5));  // two entries of 1/2 squared, doubled
  }
  {
    const ContactModel m = twisted_model(-1.0, 1.0);
    const Matrix N = nablaZ_tau_form(structure_functions(m, m.base_point()));
    CHECK(N.cwiseAbs().maxCoeff() < 1e-14);
  }
}

TEST_CASE("frame covariance: invariants unchanged under a constant rotation") {
  // rotate the twisted(0.4, 1.1) table by a J-commuting orthogonal matrix and
  // compare the spectral invariants
  const double a = 0.4, b = 1.1;
  const ContactModel m = twisted_model(a, b);
  const StructureData sd = structure_functions(m, m.base_point());
  const GeometryData g = geometry_data(sd);

  const double th = 0.77;
  Matrix R(2, 2);
  R << std::cos(th), std::sin(th), -std::sin(th), std::cos(th);
  StructureData rot = sd;
  rot.gamma = R * sd.gamma * R.transpose();
  rot.delta = R * sd.delta * R.transpose();
  // w = 0 stays 0; a rotated constant frame keeps zero derivatives
  const GeometryData gr = geometry_data(rot);

  Eigen::SelfAdjointEigenSolver<Matrix> e1(g.ric_tau2_sym());
  Eigen::SelfAdjointEigenSolver<Matrix> e2(gr.ric_tau2_sym());
  CHECK((e1.eigenvalues() - e2.eigenvalues()).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(g.V.norm() == doctest::Approx(gr.V.norm()).epsilon(1e-10));
  CHECK(g.W.norm() == doctest::Approx(gr.W.norm()).epsilon(1e-10));
  CHECK(g.tau_op_norm_sq() == doctest::Approx(gr.tau_op_norm_sq()).epsilon(1e-10));
  CHECK(g.u_coeff == doctest::Approx(gr.u_coeff).epsilon(1e-10));
}
