#include "contactcd/frame.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>
#include <algorithm>
#include <cmath>

namespace contactcd {

namespace {

constexpr double kCondLimit = 1e12;

// LU factorization over the jet ring with value-part pivoting.
class JetLU {
 public:
  JetLU(std::vector<std::vector<Jet>> a) : a_(std::move(a)) {
    const int n = static_cast<int>(a_.size());
    perm_.resize(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) perm_[static_cast<size_t>(i)] = i;
    for (int k = 0; k < n; ++k) {
      int piv = k;
      double best = std::abs(a_[static_cast<size_t>(k)][static_cast<size_t>(k)].value());
      for (int r = k + 1; r < n; ++r) {
        const double v =
            std::abs(a_[static_cast<size_t>(r)][static_cast<size_t>(k)].value());
        if (v > best) {
          best = v;
          piv = r;
        }
      }
      if (best == 0.0) throw Error("singular frame matrix (jet solve)");
      std::swap(a_[static_cast<size_t>(k)], a_[static_cast<size_t>(piv)]);
      std::swap(perm_[static_cast<size_t>(k)], perm_[static_cast<size_t>(piv)]);
      const Jet inv = jet_reciprocal(a_[static_cast<size_t>(k)][static_cast<size_t>(k)]);
      for (int r = k + 1; r < n; ++r) {
        Jet factor = jet_mul(a_[static_cast<size_t>(r)][static_cast<size_t>(k)], inv);
        for (int c = k + 1; c < n; ++c)
          a_[static_cast<size_t>(r)][static_cast<size_t>(c)] -=
              jet_mul(factor, a_[static_cast<size_t>(k)][static_cast<size_t>(c)]);
        a_[static_cast<size_t>(r)][static_cast<size_t>(k)] = std::move(factor);
      }
    }
  }

  std::vector<Jet> solve(const std::vector<Jet>& rhs) const {
    const int n = static_cast<int>(a_.size());
    std::vector<Jet> y;
    y.reserve(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i)
      y.push_back(rhs[static_cast<size_t>(perm_[static_cast<size_t>(i)])]);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < i; ++j)
        y[static_cast<size_t>(i)] -=
            jet_mul(a_[static_cast<size_t>(i)][static_cast<size_t>(j)],
                    y[static_cast<size_t>(j)]);
    for (int i = n - 1; i >= 0; --i) {
      for (int j = i + 1; j < n; ++j)
        y[static_cast<size_t>(i)] -=
            jet_mul(a_[static_cast<size_t>(i)][static_cast<size_t>(j)],
                    y[static_cast<size_t>(j)]);
      y[static_cast<size_t>(i)] =
          jet_mul(y[static_cast<size_t>(i)],
                  jet_reciprocal(a_[static_cast<size_t>(i)][static_cast<size_t>(i)]));
    }
    return y;
  }

 private:
  std::vector<std::vector<Jet>> a_;
  std::vector<int> perm_;
};

void check_chart_condition(const ContactModel& m, const Point& x) {
  const int dim = m.ambient_dim();
  Matrix F(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int a = 0; a < dim; ++a)
      F(a, i) = m.frame()[static_cast<size_t>(i)][static_cast<size_t>(a)].eval(
          x.span());
  Eigen::JacobiSVD<Matrix> svd(F);
  const double smin = svd.singularValues().minCoeff();
  const double smax = svd.singularValues().maxCoeff();
  if (smin <= 0.0 || smax / smin > kCondLimit)
    throw Error("singular frame matrix at evaluation point (cond > 1e12)");
}

}  // namespace

FrameJets::FrameJets(const ContactModel& m, const Point& x, int order)
    : order_(order), dim_(m.ambient_dim()) {
  if (x.dim() != dim_) throw Error("point dimension mismatch");
  for (int i = 0; i < m.frame_count(); ++i) {
    std::vector<Jet> c;
    c.reserve(static_cast<size_t>(dim_));
    for (int a = 0; a < dim_; ++a)
      c.push_back(jet_eval(
          m.frame()[static_cast<size_t>(i)][static_cast<size_t>(a)], x.span(),
          order));
    coeff_.push_back(std::move(c));
  }
}

Jet FrameJets::apply(int field, const Jet& g) const {
  if (field < 0 || field >= fields()) throw Error("frame field index out of range");
  if (g.order() < 1) throw Error("jet order budget exhausted in field application");
  const int r = g.order() - 1;
  Jet out(g.dim(), r);
  for (int a = 0; a < dim_; ++a) {
    const Jet& ca = coeff(field, a);
    Jet da = g.derivative(a);
    out += jet_mul(ca.order() == r ? ca : ca.truncated(r), da);
  }
  return out;
}

Jet StructureJets::bjet(int i) const {
  Jet b = wjet(i, 0, 0);
  for (int k = 1; k < h(); ++k) b += wjet(i, k, k);
  return b;
}

StructureJets structure_jets(const ContactModel& m, const Point& x, int order) {
  const int hn = 2 * m.n;
  StructureJets out;
  out.n = m.n;
  out.order = order;
  const int D = m.ambient_dim();

  if (!m.is_chart()) {
    const auto& t = m.lie().table;
    auto cj = [&](double v) { return Jet::constant(D, order, v); };
    out.w.reserve(static_cast<size_t>(hn) * hn * hn);
    for (int i = 0; i < hn; ++i)
      for (int j = 0; j < hn; ++j)
        for (int k = 0; k < hn; ++k) out.w.push_back(cj(t.wval(i, j, k)));
    for (int i = 0; i < hn; ++i)
      for (int j = 0; j < hn; ++j) {
        out.gamma.push_back(cj(t.gamma(i, j)));
        out.delta.push_back(cj(t.delta(i, j)));
      }
    for (int i = 0; i < hn; ++i) out.zdef.push_back(cj(0.0));
    return out;
  }

  check_chart_condition(m, x);
  const int dim = D;  // chart ambient = 2n+1
  FrameJets fj(m, x, order + 1);

  // bracket jets [X_i, X_j]^a = sum_b (F_i^b d_b F_j^a - F_j^b d_b F_i^a)
  auto bracket_jet = [&](int i, int j, int a) {
    Jet acc(dim, order);
    for (int b = 0; b < dim; ++b) {
      acc += jet_mul(fj.coeff(i, b).truncated(order),
                     fj.coeff(j, a).derivative(b));
      acc -= jet_mul(fj.coeff(j, b).truncated(order),
                     fj.coeff(i, a).derivative(b));
    }
    return acc;
  };

  std::vector<std::vector<Jet>> G;
  for (int a = 0; a < dim; ++a) {
    std::vector<Jet> row;
    for (int mfield = 0; mfield < dim; ++mfield)
      row.push_back(fj.coeff(mfield, a).truncated(order));
    G.push_back(std::move(row));
  }
  JetLU lu(std::move(G));

  const Jet zero(dim, order);
  out.w.assign(static_cast<size_t>(hn) * hn * hn, zero);
  out.gamma.assign(static_cast<size_t>(hn) * hn, zero);
  out.delta.assign(static_cast<size_t>(hn) * hn, zero);
  out.zdef.assign(static_cast<size_t>(hn), zero);

  auto widx = [hn](int i, int j, int k) {
    return (static_cast<size_t>(i) * hn + j) * hn + k;
  };
  for (int i = 0; i < hn; ++i) {
    for (int j = i + 1; j < hn; ++j) {
      std::vector<Jet> rhs;
      for (int a = 0; a < dim; ++a) rhs.push_back(bracket_jet(i, j, a));
      auto sol = lu.solve(rhs);
      for (int k = 0; k < hn; ++k) {
        out.w[widx(i, j, k)] = sol[static_cast<size_t>(k)];
        out.w[widx(j, i, k)] = -sol[static_cast<size_t>(k)];
      }
      out.gamma[static_cast<size_t>(i) * hn + j] = sol[static_cast<size_t>(hn)];
      out.gamma[static_cast<size_t>(j) * hn + i] = -sol[static_cast<size_t>(hn)];
    }
    std::vector<Jet> rhs;
    for (int a = 0; a < dim; ++a) rhs.push_back(bracket_jet(i, hn, a));
    auto sol = lu.solve(rhs);
    for (int j = 0; j < hn; ++j)
      out.delta[static_cast<size_t>(i) * hn + j] = sol[static_cast<size_t>(j)];
    out.zdef[static_cast<size_t>(i)] = sol[static_cast<size_t>(hn)];
  }
  return out;
}

StructureData structure_functions(const ContactModel& m, const Point& x) {
  const int hn = 2 * m.n;
  StructureData sd;
  sd.n = m.n;
  sd.w = Tensor3(hn);
  sd.gamma = Matrix::Zero(hn, hn);
  sd.delta = Matrix::Zero(hn, hn);
  sd.reeb_defect = Vector::Zero(hn);
  sd.dw.assign(static_cast<size_t>(hn) + 1, Tensor3(hn));
  sd.dgamma.assign(static_cast<size_t>(hn) + 1, Matrix::Zero(hn, hn));
  sd.ddelta.assign(static_cast<size_t>(hn) + 1, Matrix::Zero(hn, hn));

  if (!m.is_chart()) {
    const auto& t = m.lie().table;
    for (int i = 0; i < hn; ++i)
      for (int j = 0; j < hn; ++j) {
        sd.gamma(i, j) = t.gamma(i, j);
        sd.delta(i, j) = t.delta(i, j);
        for (int k = 0; k < hn; ++k) sd.w.at(i, j, k) = t.wval(i, j, k);
      }
    return sd;
  }

  StructureJets sj = structure_jets(m, x, 1);
  const int dim = m.ambient_dim();
  // frame values at x, for converting coordinate derivatives to frame ones
  Matrix F(dim, dim);
  for (int i = 0; i < dim; ++i)
    for (int a = 0; a < dim; ++a)
      F(i, a) = m.frame()[static_cast<size_t>(i)][static_cast<size_t>(a)].eval(
          x.span());
  auto frame_derivs = [&](const Jet& c, double& val, std::vector<double>& d) {
    val = c.value();
    d.assign(static_cast<size_t>(hn) + 1, 0.0);
    for (int l = 0; l <= hn; ++l)
      for (int a = 0; a < dim; ++a)
        d[static_cast<size_t>(l)] += F(l, a) * c.derivative(a).value();
  };

  std::vector<double> d;
  double val;
  for (int i = 0; i < hn; ++i) {
    for (int j = 0; j < hn; ++j) {
      for (int k = 0; k < hn; ++k) {
        frame_derivs(sj.wjet(i, j, k), val, d);
        sd.w.at(i, j, k) = val;
        for (int l = 0; l <= hn; ++l) sd.dw[static_cast<size_t>(l)].at(i, j, k) = d[static_cast<size_t>(l)];
      }
      frame_derivs(sj.gammajet(i, j), val, d);
      sd.gamma(i, j) = val;
      for (int l = 0; l <= hn; ++l) sd.dgamma[static_cast<size_t>(l)](i, j) = d[static_cast<size_t>(l)];
      frame_derivs(sj.deltajet(i, j), val, d);
      sd.delta(i, j) = val;
      for (int l = 0; l <= hn; ++l) sd.ddelta[static_cast<size_t>(l)](i, j) = d[static_cast<size_t>(l)];
    }
    sd.reeb_defect[i] = sj.zdef[static_cast<size_t>(i)].value();
  }
  return sd;
}

double DiagnosticsReport::max_violation() const {
  return std::max({w_antisym.violation, gamma_antisym.violation,
                   gamma_orthogonal.violation, reeb_component.violation,
                   delta_diagonal.violation});
}

DiagnosticsReport check_adapted_frame(const ContactModel& m, const Point& x,
                                      double tol) {
  const StructureData sd = structure_functions(m, x);
  const int hn = sd.h();
  DiagnosticsReport rep;
  auto flag = [&](double violation) {
    return DiagnosticFlag{violation <= tol, violation};
  };
  double wv = 0, gv = 0;
  for (int i = 0; i < hn; ++i)
    for (int j = 0; j < hn; ++j) {
      gv = std::max(gv, std::abs(sd.gamma(i, j) + sd.gamma(j, i)));
      for (int k = 0; k < hn; ++k)
        wv = std::max(wv, std::abs(sd.w.at(i, j, k) + sd.w.at(j, i, k)));
    }
  rep.w_antisym = flag(wv);
  rep.gamma_antisym = flag(gv);
  const Matrix gg =
      sd.gamma * sd.gamma.transpose() - Matrix::Identity(hn, hn);
  rep.gamma_orthogonal = flag(gg.cwiseAbs().maxCoeff());
  rep.reeb_component = flag(sd.reeb_defect.cwiseAbs().maxCoeff());
  double dd = 0;
  for (int i = 0; i < hn; ++i) dd = std::max(dd, std::abs(sd.delta(i, i)));
  rep.delta_diagonal = flag(dd);
  return rep;
}

std::optional<Matrix> delta_normalizing_rotation(const StructureData& sd,
                                                 double tol) {
  const int hn = sd.h();
  const Matrix sym = 0.5 * (sd.delta + sd.delta.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> es(sym);
  const Vector lam = es.eigenvalues();  // ascending
  const Matrix Q = es.eigenvectors();
  const double scale = std::max(1.0, lam.cwiseAbs().maxCoeff());
  // eigenvalues must come in (+l, -l) pairs for a hollow similarity to exist
  std::vector<int> order;
  for (int p = 0; p < hn / 2; ++p) {
    if (std::abs(lam[p] + lam[hn - 1 - p]) > tol * scale) return std::nullopt;
    order.push_back(p);
    order.push_back(hn - 1 - p);
  }
  Matrix Qp(hn, hn);
  for (int c = 0; c < hn; ++c) Qp.col(c) = Q.col(order[static_cast<size_t>(c)]);
  Matrix U = Matrix::Identity(hn, hn);
  const double r = 1.0 / std::sqrt(2.0);
  for (int p = 0; p < hn; p += 2) {
    U(p, p) = r;
    U(p, p + 1) = r;
    U(p + 1, p) = -r;
    U(p + 1, p + 1) = r;
  }
  // R delta R^T has zero diagonal with R = (Qp U)^T
  return (Qp * U).transpose();
}

double frame_derivative(const ContactModel& m, const ScalarField& f,
                        const Point& x, std::span<const int> word) {
  if (word.size() > 3) throw Error("frame_derivative word too long (max 3)");
  for (int idx : word)
    if (idx < 0 || idx > 2 * m.n) throw Error("frame_derivative bad field index");
  if (f.dim() != m.ambient_dim())
    throw Error("scalar field dimension does not match model");
  if (word.empty()) return f.eval(x.span());
  if (m.is_chart()) check_chart_condition(m, x);
  const int k = static_cast<int>(word.size());
  FrameJets fj(m, x, k - 1);
  Jet g = jet_eval(f, x.span(), k);
  for (int i = k - 1; i >= 0; --i) g = fj.apply(word[static_cast<size_t>(i)], g);
  return g.value();
}

}  // namespace contactcd
