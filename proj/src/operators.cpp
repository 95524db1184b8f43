#include "contactcd/operators.hpp"

#include <Eigen/Eigenvalues>
#include <cmath>

#include "contactcd/util.hpp"

namespace contactcd {

namespace {

using util::mix;
using util::unit_uniform;

// all pointwise f-derivative values the Bochner displays need
struct FValues {
  std::vector<double> xf;    // X_i f, i < 2n, plus zf at index 2n
  double zf = 0;
  std::vector<double> xzf;   // X_i Z f
  Matrix fsym;               // (X_i X_j + X_j X_i) f / 2, horizontal block
  double zzf = 0;
};

FValues f_values(const OperatorContext& ctx, const Jet& fj) {
  const int h = ctx.h();
  FValues v;
  v.fsym = Matrix::Zero(h, h);
  std::vector<Jet> xjets;
  xjets.reserve(static_cast<size_t>(h) + 1);
  for (int i = 0; i <= h; ++i) xjets.push_back(ctx.frames.apply(i, fj));
  for (int i = 0; i < h; ++i) v.xf.push_back(xjets[static_cast<size_t>(i)].value());
  v.zf = xjets[static_cast<size_t>(h)].value();
  const Jet& zjet = xjets[static_cast<size_t>(h)];
  for (int i = 0; i < h; ++i)
    v.xzf.push_back(ctx.frames.apply(i, zjet).value());
  for (int i = 0; i < h; ++i)
    for (int j = i; j < h; ++j) {
      const double a = ctx.frames.apply(i, xjets[static_cast<size_t>(j)]).value();
      const double b = ctx.frames.apply(j, xjets[static_cast<size_t>(i)]).value();
      v.fsym(i, j) = v.fsym(j, i) = 0.5 * (a + b);
    }
  v.zzf = ctx.frames.apply(h, zjet).value();
  return v;
}

double horizontal_rhs_impl(const OperatorContext& ctx, const FValues& v,
                           const Matrix& ric) {
  const int h = ctx.h();
  const auto& sd = ctx.sd;
  double hess = 0;
  for (int j = 0; j < h; ++j)
    for (int l = 0; l < h; ++l) {
      double H = v.fsym(j, l);
      for (int i = 0; i < h; ++i)
        H -= 0.5 * (sd.w.at(i, j, l) + sd.w.at(i, l, j)) * v.xf[static_cast<size_t>(i)];
      hess += H * H;
    }
  double quad = 0;
  for (int k = 0; k < h; ++k)
    for (int l = 0; l < h; ++l)
      quad += ric(k, l) * v.xf[static_cast<size_t>(k)] * v.xf[static_cast<size_t>(l)];
  double cross = 0;
  for (int k = 0; k < h; ++k) cross += ctx.geo.W[k] * v.zf * v.xf[static_cast<size_t>(k)];
  const double vert = 0.5 * ctx.n() * v.zf * v.zf;
  double mixed = 0;
  for (int i = 0; i < h; ++i)
    for (int j = 0; j < h; ++j)
      mixed += sd.gamma(i, j) * v.xzf[static_cast<size_t>(j)] * v.xf[static_cast<size_t>(i)];
  return hess + quad + cross + vert - 2.0 * mixed;
}

Jet gamma_jet(const OperatorContext& ctx, const Jet& fj, const Jet& gj,
              int order) {
  Jet acc(fj.dim(), order);
  for (int i = 0; i < ctx.h(); ++i) {
    Jet xf = ctx.frames.apply(i, fj);
    Jet xg = ctx.frames.apply(i, gj);
    acc += jet_mul(xf.order() == order ? xf : xf.truncated(order),
                   xg.order() == order ? xg : xg.truncated(order));
  }
  return acc;
}

}  // namespace

OperatorContext make_context(const ContactModel& m, const Point& x,
                             int jet_order) {
  if (jet_order < 3)
    throw Error("operator context needs jet order >= 3 for Gamma_2");
  if (jet_order > max_jet_order())
    throw Error("operator context order exceeds configured jet maximum");
  OperatorContext ctx{
      &m, x, jet_order,
      FrameJets(m, x, jet_order - 1),
      structure_jets(m, x, jet_order - 2),
      structure_functions(m, x),
      GeometryData{}};
  ctx.geo = geometry_data(ctx.sd);
  return ctx;
}

Jet apply_L_jet(const OperatorContext& ctx, const Jet& g) {
  if (g.order() < 2) throw Error("jet order budget too small for L");
  const int target = g.order() - 2;
  Jet acc(g.dim(), target);
  for (int i = 0; i < ctx.h(); ++i) {
    Jet xi = ctx.frames.apply(i, g);
    acc += ctx.frames.apply(i, xi);
    Jet b = ctx.sjets.bjet(i);
    acc -= jet_mul(b.order() == target ? b : b.truncated(target),
                   xi.order() == target ? xi : xi.truncated(target));
  }
  return acc;
}

double apply_L(const OperatorContext& ctx, const ScalarField& f) {
  Jet fj = jet_eval(f, ctx.x.span(), 2);
  return apply_L_jet(ctx, fj).value();
}

std::pair<double, double> gamma_forms(const OperatorContext& ctx,
                                      const ScalarField& f,
                                      const ScalarField& g) {
  Jet fj = jet_eval(f, ctx.x.span(), 1);
  Jet gj = jet_eval(g, ctx.x.span(), 1);
  double gam = 0;
  for (int i = 0; i < ctx.h(); ++i)
    gam += ctx.frames.apply(i, fj).value() * ctx.frames.apply(i, gj).value();
  const double gz = ctx.frames.apply(ctx.zfield(), fj).value() *
                    ctx.frames.apply(ctx.zfield(), gj).value();
  return {gam, gz};
}

std::pair<double, double> gamma2_forms(const OperatorContext& ctx,
                                       const ScalarField& f) {
  const int ord = ctx.jet_order;
  Jet fj = jet_eval(f, ctx.x.span(), ord);
  Jet lf = apply_L_jet(ctx, fj);  // order ord-2 >= 1

  Jet gam2 = gamma_jet(ctx, fj, fj, 2);
  const double lgam = apply_L_jet(ctx, gam2).value();
  double gam_f_lf = 0;
  for (int i = 0; i < ctx.h(); ++i)
    gam_f_lf += ctx.frames.apply(i, fj).value() * ctx.frames.apply(i, lf).value();
  const double g2 = 0.5 * (lgam - 2.0 * gam_f_lf);

  Jet zf = ctx.frames.apply(ctx.zfield(), fj);  // order ord-1
  Jet zf2 = zf.truncated(2);
  Jet gz_jet = jet_mul(zf2, zf2);
  const double lgz = apply_L_jet(ctx, gz_jet).value();
  const double gz_f_lf =
      zf.value() * ctx.frames.apply(ctx.zfield(), lf).value();
  const double g2z = 0.5 * (lgz - 2.0 * gz_f_lf);
  return {g2, g2z};
}

double bochner_horizontal_rhs(const OperatorContext& ctx, const ScalarField& f) {
  Jet fj = jet_eval(f, ctx.x.span(), 3);
  return horizontal_rhs_impl(ctx, f_values(ctx, fj), ctx.geo.ric_tau2);
}

double bochner_vertical_rhs(const OperatorContext& ctx, const ScalarField& f) {
  const int h = ctx.h();
  for (int i = 0; i < h; ++i)
    if (std::abs(ctx.sd.delta(i, i)) > 1e-8)
      throw Error("vertical Bochner display requires a delta-normalized frame "
                  "(delta_i^i = 0)");
  Jet fj = jet_eval(f, ctx.x.span(), 3);
  const FValues v = f_values(ctx, fj);
  const auto& sd = ctx.sd;
  double t = 0;
  for (int i = 0; i < h; ++i) t += v.xzf[static_cast<size_t>(i)] * v.xzf[static_cast<size_t>(i)];
  for (int i = 0; i < h; ++i)
    for (int l = 0; l < h; ++l)
      t += 0.5 * (sd.delta(i, l) + sd.delta(l, i)) * (2.0 * v.fsym(i, l)) * v.zf;
  const int Z = h;
  for (int l = 0; l < h; ++l) {
    double coef = 0;
    for (int i = 0; i < h; ++i) coef += sd.ddelta[static_cast<size_t>(i)](i, l);
    for (int i = 0; i < h; ++i)
      for (int k = 0; k < h; ++k) coef -= sd.w.at(i, k, k) * sd.delta(i, l);
    for (int k = 0; k < h; ++k) coef += sd.dw[static_cast<size_t>(Z)].at(l, k, k);
    t += coef * v.xf[static_cast<size_t>(l)] * v.zf;
  }
  return t;
}

RescaledForms rescaled_forms(const OperatorContext& ctx, const ScalarField& f,
                             double lambda) {
  if (lambda <= 0) throw Error("rescaled metric needs lambda > 0");
  const int ord = ctx.jet_order;
  const int h = ctx.h();
  const int Z = ctx.zfield();
  const double l2 = lambda * lambda;
  Jet fj = jet_eval(f, ctx.x.span(), ord);
  const FValues v = f_values(ctx, fj);

  RescaledForms out;
  double gam = 0;
  for (int i = 0; i < h; ++i) gam += v.xf[static_cast<size_t>(i)] * v.xf[static_cast<size_t>(i)];
  out.gamma_lambda = gam + l2 * v.zf * v.zf;

  // Gamma_2^lambda from the definition with Delta^lambda = L + lambda^2 Z^2
  auto delta_lambda = [&](const Jet& g) {
    Jet zz = ctx.frames.apply(Z, ctx.frames.apply(Z, g));
    return apply_L_jet(ctx, g) + zz * l2;
  };
  Jet zf_jet = ctx.frames.apply(Z, fj);          // order ord-1
  Jet gl_jet = gamma_jet(ctx, fj, fj, 2);        // Gamma(f) at order 2
  Jet zf2 = zf_jet.truncated(2);
  gl_jet += jet_mul(zf2, zf2) * l2;              // + lambda^2 (Zf)^2
  const double dl_gl = delta_lambda(gl_jet).value();
  Jet dlf = delta_lambda(fj);                    // order ord-2
  double gl_f_dlf = 0;
  for (int i = 0; i < h; ++i)
    gl_f_dlf += v.xf[static_cast<size_t>(i)] * ctx.frames.apply(i, dlf).value();
  gl_f_dlf += l2 * v.zf * ctx.frames.apply(Z, dlf).value();
  out.gamma2_lambda = 0.5 * (dl_gl - 2.0 * gl_f_dlf);

  // exact identity:
  // Z^2 Gamma(f)/2 - Gamma(f, Z^2 f)
  //   = sum_k (X_k Zf - 2 tau(X_k) f)^2 - 2 |tau grad f|^2 - <(nabla_Z tau) grad f, grad f>
  Jet gam2_jet = gamma_jet(ctx, fj, fj, 2);
  const double zz_gamma =
      ctx.frames.apply(Z, ctx.frames.apply(Z, gam2_jet)).value();
  Jet zzf_jet = ctx.frames.apply(Z, zf_jet);  // order ord-2
  double gam_f_zzf = 0;
  for (int i = 0; i < h; ++i)
    gam_f_zzf += v.xf[static_cast<size_t>(i)] * ctx.frames.apply(i, zzf_jet).value();
  const double lhs = 0.5 * zz_gamma - gam_f_zzf;

  Vector grad(h);
  for (int i = 0; i < h; ++i) grad[i] = v.xf[static_cast<size_t>(i)];
  const Vector taug = ctx.geo.tau * grad;
  double rhs = 0;
  for (int k = 0; k < h; ++k) {
    const double s = v.xzf[static_cast<size_t>(k)] - 2.0 * taug[k];
    rhs += s * s;
  }
  rhs -= 2.0 * taug.squaredNorm();
  rhs -= grad.dot(ctx.geo.nabla_z_tau * grad);
  out.identity_residual = std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
  return out;
}

ScalarField prescribe_jet_function(const ContactModel& m,
                                   const JetPrescription& p) {
  if (p.nu <= 0) throw Error("jet prescription needs nu > 0");
  const int h = 2 * m.n;
  const int nf = h + 1;
  const int D = m.ambient_dim();
  if (p.u.size() != h) throw Error("prescription u must have 2n entries");
  const Point& x0 = p.x0;
  const StructureData sd = structure_functions(m, x0);
  const auto [tau, J] = tau_and_J(sd);

  Matrix F(nf, D);
  for (int i = 0; i < nf; ++i)
    for (int a = 0; a < D; ++a)
      F(i, a) = m.frame()[static_cast<size_t>(i)][static_cast<size_t>(a)].eval(
          x0.span());
  // minimum-norm right inverse; exact because the frame has full row rank
  const Matrix P = F.transpose() * (F * F.transpose()).inverse();

  Vector rhs1(nf);
  rhs1.head(h) = p.u;
  rhs1[h] = p.v;
  const Vector grad = P * rhs1;

  Matrix H = p.hessian.value_or(Matrix(0.5 * p.nu * p.v * tau));
  if (H.rows() != h || H.cols() != h)
    throw Error("prescription hessian must be 2n x 2n");
  Vector xz(h);
  if (p.xz) {
    xz = *p.xz;
  } else {
    for (int j = 0; j < h; ++j) {
      double s = 0;
      for (int i = 0; i < h; ++i) s += sd.gamma(i, j) * p.u[i];
      xz[j] = s / p.nu;
    }
  }

  Matrix M = Matrix::Zero(nf, nf);
  for (int l = 0; l < h; ++l)
    for (int j = 0; j < h; ++j) {
      double corr = 0;
      for (int i = 0; i < h; ++i)
        corr += 0.5 * (sd.w.at(i, j, l) + sd.w.at(i, l, j)) * p.u[i];
      M(l, j) = H(l, j) + corr;
    }
  for (int j = 0; j < h; ++j) {
    double corr = 0;
    for (int k = 0; k < h; ++k) corr += 0.5 * sd.delta(j, k) * p.u[k];
    M(j, h) = M(h, j) = xz[j] - corr;
  }

  // f_{,jk} = sum_ab F_j^a F_k^b S_ab + (X_j F_k^b + X_k F_j^b)/2 grad_b
  FrameJets fj(m, x0, 1);
  Matrix C = Matrix::Zero(nf, nf);
  for (int j = 0; j < nf; ++j)
    for (int k = 0; k < nf; ++k) {
      double corr = 0;
      for (int b = 0; b < D; ++b) {
        double xjfk = 0, xkfj = 0;
        for (int a = 0; a < D; ++a) {
          xjfk += F(j, a) * fj.coeff(k, b).derivative(a).value();
          xkfj += F(k, a) * fj.coeff(j, b).derivative(a).value();
        }
        corr += 0.5 * (xjfk + xkfj) * grad[b];
      }
      C(j, k) = corr;
    }
  const Matrix S = P * (M - C) * P.transpose();

  std::vector<PolyTerm> terms;
  auto add_term = [&](double c, int a, int b) {
    if (c == 0.0) return;
    std::vector<int> pw(static_cast<size_t>(D), 0);
    if (a >= 0) pw[static_cast<size_t>(a)] += 1;
    if (b >= 0) pw[static_cast<size_t>(b)] += 1;
    terms.push_back(PolyTerm{c, std::move(pw)});
  };
  for (int a = 0; a < D; ++a) {
    add_term(grad[a], a, -1);
    add_term(-grad[a] * x0.coords[a], -1, -1);
  }
  for (int a = 0; a < D; ++a)
    for (int b = 0; b < D; ++b) {
      const double s = 0.5 * S(a, b);
      if (s == 0.0) continue;
      add_term(s, a, b);
      add_term(-s * x0.coords[b], a, -1);
      add_term(-s * x0.coords[a], b, -1);
      add_term(s * x0.coords[a] * x0.coords[b], -1, -1);
    }
  ScalarField f(D, std::move(terms), "prescribed-jet");
  f.simplify();
  return f;
}

EqualityJetCheck equality_jet_check(const ContactModel& m, const Point& x0,
                                    const Vector& u, double nu) {
  const int h = 2 * m.n;
  EqualityJetCheck out;
  JetPrescription p;
  p.x0 = x0;
  p.u = u;
  p.v = 0.0;
  p.nu = nu;
  p.xz = Vector::Zero(h);
  const ScalarField f0 = prescribe_jet_function(m, p);
  OperatorContext ctx = make_context(m, x0);
  auto [g2a, g2za] = gamma2_forms(ctx, f0);
  out.combination = g2a + nu * g2za;

  const Matrix sym = ctx.geo.ric_tau2_sym();
  out.quad_form = u.dot(sym * u);

  p.xz.reset();  // saturating X_j Zf defaults
  const ScalarField f1 = prescribe_jet_function(m, p);
  auto [g2b, g2zb] = gamma2_forms(ctx, f1);
  out.combination_sat = g2b + nu * g2zb;

  out.residual = std::abs(out.combination - out.quad_form);
  out.residual_sat =
      std::abs(out.combination_sat - (out.quad_form - u.squaredNorm() / nu));
  return out;
}

Point random_model_point(const ContactModel& m, uint64_t seed, double radius) {
  uint64_t s = mix(seed, 0x706f696e74ULL);
  if (m.is_chart()) {
    const int dim = m.ambient_dim();
    Vector v(dim);
    for (int a = 0; a < dim; ++a) v[a] = radius * (2.0 * unit_uniform(s) - 1.0);
    return Point(std::move(v));
  }
  const auto& lie = m.lie();
  Matrix A = Matrix::Zero(lie.ambient_dim, lie.ambient_dim);
  for (const auto& G : lie.field_mats)
    A += radius * (2.0 * unit_uniform(s) - 1.0) * G;
  return Point(util::matrix_exp(A) * lie.start);
}

ScalarField random_cubic(const ContactModel& m, uint64_t seed) {
  return random_polynomial(m.ambient_dim(), 3, mix(seed, 0x637562696355ULL));
}

EqualityJetSweepResult run_equality_jet_sweep(const ContactModel& m, int count,
                                              uint64_t seed) {
  EqualityJetSweepResult res;
  res.count = count;
  const int h = 2 * m.n;
  for (int t = 0; t < count; ++t) {
    uint64_t s = mix(seed, static_cast<uint64_t>(t));
    const Point x = random_model_point(m, mix(s, 11));
    Vector u(h);
    for (int i = 0; i < h; ++i) u[i] = 2.0 * unit_uniform(s) - 1.0;
    const double nu = std::pow(10.0, 2.0 * unit_uniform(s) - 1.0);  // [0.1, 10]
    const EqualityJetCheck cc = equality_jet_check(m, x, u, nu);
    res.max_residual = std::max(res.max_residual, cc.residual);
    res.max_residual_sat = std::max(res.max_residual_sat, cc.residual_sat);
  }
  return res;
}

double IdentitySweepResult::max_residual() const {
  return std::max({horizontal.residual, vertical.residual, rescaled.residual,
                   gamma_def.residual});
}

IdentitySweepResult run_identity_sweep(const ContactModel& m, int count,
                                       uint64_t seed, double fault_ric) {
  IdentitySweepResult res;
  res.count = count;
  const double lambdas[3] = {0.5, 1.0, 2.0};
  for (int t = 0; t < count; ++t) {
    const uint64_t fseed = mix(seed, static_cast<uint64_t>(2 * t));
    const Point x = random_model_point(m, mix(seed, static_cast<uint64_t>(2 * t + 1)));
    const ScalarField f = random_cubic(m, fseed);
    OperatorContext ctx = make_context(m, x);
    auto [g2, g2z] = gamma2_forms(ctx, f);

    Matrix ric = ctx.geo.ric_tau2;
    if (fault_ric != 0.0) ric(0, 0) += fault_ric;
    Jet fj3 = jet_eval(f, ctx.x.span(), 3);
    const double rhs_h = horizontal_rhs_impl(ctx, f_values(ctx, fj3), ric);
    const double rhs_v = bochner_vertical_rhs(ctx, f);
    const RescaledForms rf =
        rescaled_forms(ctx, f, lambdas[static_cast<size_t>(t % 3)]);

    const ScalarField g = random_polynomial(m.ambient_dim(), 2, mix(fseed, 77));
    auto [gam, gz] = gamma_forms(ctx, f, g);
    (void)gz;
    // definitional identity Gamma(f,g) = (L(fg) - f Lg - g Lf)/2
    ScalarField fg(m.ambient_dim(), {});
    {
      std::vector<PolyTerm> terms;
      for (const auto& tf : f.terms())
        for (const auto& tg : g.terms()) {
          PolyTerm pt;
          pt.coeff = tf.coeff * tg.coeff;
          pt.powers.resize(static_cast<size_t>(m.ambient_dim()));
          for (int a = 0; a < m.ambient_dim(); ++a)
            pt.powers[static_cast<size_t>(a)] =
                tf.powers[static_cast<size_t>(a)] + tg.powers[static_cast<size_t>(a)];
          terms.push_back(std::move(pt));
        }
      fg = ScalarField(m.ambient_dim(), std::move(terms));
      fg.simplify();
    }
    const double lfg = apply_L(ctx, fg);
    const double lf = apply_L(ctx, f);
    const double lg = apply_L(ctx, g);
    const double fv = f.eval(x.span());
    const double gv = g.eval(x.span());
    const double gam_def = 0.5 * (lfg - fv * lg - gv * lf);

    auto update = [&](SweepWitness& w, double lhs, double rhs) {
      const double r = std::abs(lhs - rhs) / (1.0 + std::abs(lhs));
      if (r > w.residual) w = SweepWitness{fseed, x, r};
    };
    update(res.horizontal, g2, rhs_h);
    update(res.vertical, g2z, rhs_v);
    if (rf.identity_residual > res.rescaled.residual)
      res.rescaled = SweepWitness{fseed, x, rf.identity_residual};
    update(res.gamma_def, gam, gam_def);
  }
  return res;
}

}  // namespace contactcd
