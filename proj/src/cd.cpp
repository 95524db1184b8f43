#include "contactcd/cd.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>

#include "contactcd/util.hpp"

namespace contactcd {

namespace {

using util::fnv1a;
using util::mix;

constexpr double kInf = std::numeric_limits<double>::infinity();

}  // namespace

CdConstants estimate_constants(const ContactModel& m, const SamplerSpec& spec) {
  if (spec.count < 1) throw Error("estimate_constants: empty sample");
  if (spec.radius <= 0) throw Error("estimate_constants: radius must be > 0");
  CdConstants c;
  c.n = m.n;

  // evaluation points: the base point, a deterministic lattice spanning the
  // box (corners included, charts only; pointless for constant tables), and
  // the requested random sample
  std::vector<Point> points;
  points.push_back(m.base_point());
  if (m.is_chart()) {
    const int dim = m.ambient_dim();
    int per_dim = 2;
    while (std::pow(per_dim + 1.0, dim) <= 600.0) ++per_dim;
    std::vector<int> idx(static_cast<size_t>(dim), 0);
    while (true) {
      Vector v(dim);
      for (int a = 0; a < dim; ++a)
        v[a] = -spec.radius +
               2.0 * spec.radius * idx[static_cast<size_t>(a)] / (per_dim - 1);
      points.emplace_back(std::move(v));
      int a = 0;
      while (a < dim && ++idx[static_cast<size_t>(a)] == per_dim) {
        idx[static_cast<size_t>(a)] = 0;
        ++a;
      }
      if (a == dim) break;
    }
    for (int t = 1; t < spec.count; ++t)
      points.push_back(random_model_point(
          m, mix(spec.seed, static_cast<uint64_t>(t)), spec.radius));
  }

  double c1_min = kInf, c1_max = -kInf;
  double c2_max = 0, c3_max = 0, iota_max = 0, alpha_max = 0, ub_max = 0;
  double c2_min = kInf, c3_min = kInf, iota_min = kInf, alpha_min = kInf,
         ub_min = kInf;
  uint64_t hash = 0xcbf29ce484222325ULL;
  for (const Point& x : points) {
    hash = fnv1a(hash, x.coords.data(),
                 sizeof(double) * static_cast<size_t>(x.dim()));
    const DiagnosticsReport diag = check_adapted_frame(m, x, 1e-8);
    if (!diag.pass())
      throw Error("estimate_constants: frame diagnostics failed at a sample "
                  "point (max violation " + std::to_string(diag.max_violation()) + ")");
    const StructureData sd = structure_functions(m, x);
    const GeometryData geo = geometry_data(sd);
    const double l1 = geo.ric_min_eigenvalue();
    c1_min = std::min(c1_min, l1);
    c1_max = std::max(c1_max, l1);
    auto track = [](double v, double& lo, double& hi) {
      lo = std::min(lo, v);
      hi = std::max(hi, v);
    };
    track(geo.W.squaredNorm(), c2_min, c2_max);
    track(geo.V.squaredNorm(), c3_min, c3_max);
    track(geo.tau_op_norm_sq(), iota_min, iota_max);
    track(geo.nabla_z_tau_max(), alpha_min, alpha_max);
    track(geo.u_coeff, ub_min, ub_max);
  }
  // widen by a fraction of the observed spatial range so the bounds also
  // cover the region between evaluation points; exact for constant tables
  const double eta = m.is_chart() ? 0.1 : 0.0;
  c.c1 = c1_min - eta * (c1_max - c1_min);
  c.c2 = c2_max + eta * (c2_max - c2_min);
  c.c3 = c3_max + eta * (c3_max - c3_min);
  c.iota = iota_max + eta * (iota_max - iota_min);
  c.alpha = alpha_max + eta * (alpha_max - alpha_min);
  c.u_bound = ub_max + eta * (ub_max - ub_min);

  // clean up eigensolver noise on structurally-zero quantities
  auto snap = [](double& v) {
    if (std::abs(v) < 1e-13) v = 0.0;
  };
  snap(c.c1);
  snap(c.c2);
  snap(c.c3);
  snap(c.iota);
  snap(c.alpha);
  snap(c.u_bound);
  c.sample = SampleInfo{static_cast<int>(points.size()), spec.radius, spec.seed,
                        hash};
  return c;
}

CdParams cd_params(const CdConstants& c, double z, double w) {
  if (z <= 0 || w <= 0) throw Error("cd_params needs z, w > 0");
  CdParams p;
  p.z = z;
  p.w = w;
  p.kappa = c.kappa;
  p.m = 2.0 * c.n;
  const double w2 = std::sqrt(std::max(0.0, c.c2));
  const double w3 = std::sqrt(std::max(0.0, c.c3));
  p.rho1 = c.c1 - (c.c2 > 0 ? 0.5 * w2 * z : 0.0) - (c.c3 > 0 ? 0.5 * w3 * w : 0.0);
  p.rho2 = 0.5 * c.n - (c.c2 > 0 ? 0.5 * w2 / z : 0.0);
  p.rho3 = (c.c3 > 0 ? 0.5 * w3 / w : 0.0) + c.u_bound;
  p.rho2_positive = p.rho2 > 0;
  p.sasakian_limit = p.rho3 == 0.0;
  return p;
}

double c_of_lambda(const CdParams& p, double iota, double alpha, double lambda) {
  const double u = lambda * lambda;
  const double a = p.rho1 - p.kappa / u - u * (2.0 * iota + alpha);
  const double b = p.rho2 / u - p.rho3 * u;
  return std::min(a, b);
}

MyersCertificate myers_certificate(const CdParams& p, double iota, double alpha) {
  MyersCertificate out;
  const double A = 2.0 * iota + alpha;
  const double k = p.kappa;
  std::vector<double> candidates;  // in u = lambda^2
  if (A > 0) candidates.push_back(std::sqrt(k / A));
  // crossing branch1 = branch2: (rho3 - A) u^2 + rho1 u - (k + rho2) = 0
  const double qa = p.rho3 - A;
  const double qb = p.rho1;
  const double qc = -(k + p.rho2);
  if (std::abs(qa) < 1e-300) {
    if (qb > 0) candidates.push_back(-qc / qb);
  } else {
    const double disc = qb * qb - 4.0 * qa * qc;
    if (disc >= 0) {
      const double r = std::sqrt(disc);
      for (double root : {(-qb + r) / (2.0 * qa), (-qb - r) / (2.0 * qa)})
        if (root > 0 && std::isfinite(root)) candidates.push_back(root);
    }
  }
  for (int e = -9; e <= 9; ++e) candidates.push_back(std::pow(10.0, e));
  candidates.push_back(1e18);  // u -> infinity limit for the rho3 = A = 0 case

  out.margin = -kInf;
  for (double u : candidates) {
    const double val = c_of_lambda(p, iota, alpha, std::sqrt(u));
    if (val > out.margin) {
      out.margin = val;
      out.lambda_star = std::sqrt(u);
    }
  }
  out.c_at_lambda = out.margin;
  out.holds = out.margin > 0;

  if (p.rho3 > 0 && p.rho2 > 0) {
    out.threshold =
        p.rho1 - (std::sqrt(p.rho3 / p.rho2) * k + std::sqrt(p.rho2 / p.rho3) * A);
  } else if (p.rho3 == 0.0 && A == 0.0) {
    out.threshold = p.rho1;
  } else {
    out.threshold = -kInf;  // formula degenerates
  }
  out.threshold_holds = out.threshold > 0;
  out.disagreement = out.threshold_holds != out.holds;
  return out;
}

GapCertificate gap_and_poincare(const CdParams& p) {
  GapCertificate out;
  if (p.rho2 <= 0) return out;
  const double k = p.kappa;
  const double root = std::sqrt(p.rho2 * std::max(0.0, p.rho3));
  out.sigma = (2.0 * p.rho1 * p.rho2 - 2.0 * k * root) / (p.rho2 + k);
  out.delta_coeff =
      (out.sigma + std::sqrt(out.sigma * out.sigma + 16.0 * p.rho2 * p.rho3)) /
      (4.0 * p.rho2);
  if (out.sigma > 0) {
    out.gap_lower_bound = 0.5 * out.sigma;
    out.poincare_constant = 1.0 / *out.gap_lower_bound;
  }
  return out;
}

VolumeCertificate volume_certificate(const CdConstants& c, const CdParams& p) {
  VolumeCertificate out;
  out.exp_growth = c.iota >= 0 && c.alpha >= 0;  // bounds exist by construction
  if (p.rho2 > 0) {
    const double margin = p.rho1 - p.kappa * std::sqrt(std::max(0.0, p.rho3) / p.rho2);
    if (margin > 0) out.finite_volume = true;
  }
  return out;
}

Objective objective_from_string(const std::string& s) {
  if (s == "spectral_gap" || s == "gap") return Objective::SpectralGap;
  if (s == "myers_margin" || s == "myers") return Objective::MyersMargin;
  if (s == "c_lambda" || s == "clambda") return Objective::CLambda;
  throw Error("unknown objective: " + s);
}

std::string objective_name(Objective o) {
  switch (o) {
    case Objective::SpectralGap: return "spectral_gap";
    case Objective::MyersMargin: return "myers_margin";
    case Objective::CLambda: return "c_lambda";
  }
  return "?";
}

namespace {

double objective_value(const CdConstants& c, const CdParams& p, Objective o,
                       double* lambda_star) {
  switch (o) {
    case Objective::SpectralGap: {
      const GapCertificate g = gap_and_poincare(p);
      if (lambda_star) *lambda_star = 0;
      return p.rho2 > 0 ? 0.5 * g.sigma : -kInf;
    }
    case Objective::MyersMargin:
    case Objective::CLambda: {
      const MyersCertificate m = myers_certificate(p, c.iota, c.alpha);
      if (lambda_star) *lambda_star = m.lambda_star;
      return m.margin;
    }
  }
  return -kInf;
}

}  // namespace

OptimizeResult optimize_zw(const CdConstants& c, Objective objective) {
  OptimizeResult best;
  best.value = -kInf;
  const bool vary_z = c.c2 > 0;
  const bool vary_w = c.c3 > 0;

  auto eval = [&](double z, double w) {
    const CdParams p = cd_params(c, z, w);
    double lam = 0;
    const double val = objective_value(c, p, objective, &lam);
    if (val > best.value) {
      best.value = val;
      best.z = z;
      best.w = w;
      best.lambda = lam;
      best.params = p;
    }
  };

  if (!vary_z && !vary_w) {
    eval(1.0, 1.0);
  } else {
    std::vector<double> zs{1.0}, ws{1.0};
    if (vary_z) {
      zs.clear();
      for (int e = -12; e <= 12; ++e) zs.push_back(std::pow(10.0, 0.25 * e));
    }
    if (vary_w) {
      ws.clear();
      for (int e = -12; e <= 12; ++e) ws.push_back(std::pow(10.0, 0.25 * e));
    }
    for (double z : zs)
      for (double w : ws) eval(z, w);
    // local log-space pattern refinement around the grid optimum
    double step = 0.25;
    for (int it = 0; it < 60; ++it) {
      const double z0 = best.z, w0 = best.w;
      const double f = std::pow(10.0, step);
      if (vary_z) {
        eval(z0 * f, w0);
        eval(z0 / f, w0);
      }
      if (vary_w) {
        eval(z0, w0 * f);
        eval(z0, w0 / f);
      }
      if (vary_z && vary_w) {
        eval(z0 * f, w0 * f);
        eval(z0 / f, w0 / f);
        eval(z0 * f, w0 / f);
        eval(z0 / f, w0 * f);
      }
      if (best.z == z0 && best.w == w0) step *= 0.5;
      if (step < 1e-8) break;
    }
  }
  best.defined = std::isfinite(best.value) && best.value > 0;
  return best;
}

double cd_inequality_slack(const OperatorContext& ctx, const ScalarField& f,
                           double nu, const CdConstants& c) {
  if (nu <= 0) throw Error("cd inequality needs nu > 0");
  auto [g2, g2z] = gamma2_forms(ctx, f);
  auto [gam, gz] = gamma_forms(ctx, f, f);
  const double lf = apply_L(ctx, f);
  const double n = ctx.n();
  const double rhs = lf * lf / (2.0 * n) + (c.c1 - c.kappa / nu) * gam -
                     (std::sqrt(std::max(0.0, c.c2)) +
                      std::sqrt(std::max(0.0, c.c3)) * nu) *
                         std::sqrt(std::max(0.0, gam * gz)) +
                     (0.5 * n - nu * nu * c.u_bound) * gz;
  return g2 + nu * g2z - rhs;
}

CdSweepResult run_cd_sweep(const ContactModel& m, const CdConstants& c,
                           int count, uint64_t seed,
                           std::span<const double> nus) {
  CdSweepResult res;
  res.min_slack = kInf;
  for (int t = 0; t < count; ++t) {
    const uint64_t fseed = mix(seed, static_cast<uint64_t>(3 * t));
    const Point x = random_model_point(m, mix(seed, static_cast<uint64_t>(3 * t + 1)));
    const ScalarField f = random_cubic(m, fseed);
    OperatorContext ctx = make_context(m, x);
    for (double nu : nus) {
      const double s = cd_inequality_slack(ctx, f, nu, c);
      ++res.count;
      if (s < res.min_slack) {
        res.min_slack = s;
        res.argmin = SweepWitness{fseed, x, s};
      }
    }
  }
  return res;
}

CertificateReport analyze_model(const ContactModel& m, const SamplerSpec& spec,
                                Objective objective) {
  CertificateReport rep;
  rep.constants = estimate_constants(m, spec);
  rep.objective = objective_name(objective);
  const OptimizeResult opt = optimize_zw(rep.constants, objective);
  rep.params = opt.params;
  rep.myers = myers_certificate(rep.params, rep.constants.iota, rep.constants.alpha);
  rep.gap = gap_and_poincare(rep.params);
  rep.volume = volume_certificate(rep.constants, rep.params);
  return rep;
}

}  // namespace contactcd
