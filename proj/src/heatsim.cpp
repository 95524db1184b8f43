#include "contactcd/heatsim.hpp"

#include <Eigen/LU>
#include <algorithm>
#include <cmath>

#include "contactcd/util.hpp"

namespace contactcd {

namespace {

using util::mix;

constexpr double kSqrt2 = 1.4142135623730951;

struct Quat {
  double w, x, y, z;
};

Quat qmul(const Quat& a, const Quat& b) {
  return {a.w * b.w - a.x * b.x - a.y * b.y - a.z * b.z,
          a.w * b.x + a.x * b.w + a.y * b.z - a.z * b.y,
          a.w * b.y - a.x * b.z + a.y * b.w + a.z * b.x,
          a.w * b.z + a.x * b.y - a.y * b.x + a.z * b.w};
}

Quat qexp_imag(double x, double y, double z) {
  const double th = std::sqrt(x * x + y * y + z * z);
  if (th < 1e-300) return {1.0, x, y, z};
  const double s = std::sin(th) / th;
  return {std::cos(th), s * x, s * y, s * z};
}

// transport matrices of the first-variation SDE, from structure data
struct TransportMats {
  std::vector<Matrix> c;  // per driving field, (2n+1)^2
  Matrix c0;
};

TransportMats transport_mats(const StructureData& sd) {
  const int h = sd.h();
  TransportMats tm;
  tm.c0 = Matrix::Zero(h + 1, h + 1);
  for (int k = 0; k < h; ++k) {
    Matrix ck = Matrix::Zero(h + 1, h + 1);
    for (int i = 0; i < h; ++i) {
      for (int l = 0; l < h; ++l) ck(i, l) = kSqrt2 * sd.w.at(k, i, l);
      ck(i, h) = kSqrt2 * sd.gamma(k, i);
    }
    for (int j = 0; j < h; ++j) ck(h, j) = kSqrt2 * sd.delta(k, j);
    tm.c.push_back(std::move(ck));
  }
  std::vector<double> b(static_cast<size_t>(h));
  for (int i = 0; i < h; ++i) b[static_cast<size_t>(i)] = sd.b(i);
  for (int i = 0; i < h; ++i) {
    for (int l = 0; l < h; ++l) {
      double t = 0;
      for (int m = 0; m < h; ++m) t -= b[static_cast<size_t>(m)] * sd.w.at(m, i, l);
      for (int k = 0; k < h; ++k) t += sd.dw[static_cast<size_t>(i)].at(l, k, k);
      tm.c0(i, l) = t;
    }
    double t = 0;
    for (int m = 0; m < h; ++m) t -= b[static_cast<size_t>(m)] * sd.gamma(m, i);
    tm.c0(i, h) = t;
  }
  for (int j = 0; j < h; ++j) {
    double t = 0;
    for (int m = 0; m < h; ++m) t -= b[static_cast<size_t>(m)] * sd.delta(m, j);
    for (int k = 0; k < h; ++k) t += sd.dw[static_cast<size_t>(h)].at(j, k, k);
    tm.c0(h, j) = t;
  }
  return tm;
}

// chart backend: Heun predictor-corrector in Stratonovich form
class ChartStepper {
 public:
  ChartStepper(const ContactModel& m, bool with_alpha)
      : model_(&m), dim_(m.ambient_dim()), h_(2 * m.n), with_alpha_(with_alpha) {
    for (int i = 0; i <= h_; ++i) {
      std::vector<ScalarField> parts;
      for (int a = 0; a < dim_; ++a) {
        coeffs_.push_back(m.frame()[static_cast<size_t>(i)][static_cast<size_t>(a)]);
        for (int b = 0; b < dim_; ++b)
          parts.push_back(
              m.frame()[static_cast<size_t>(i)][static_cast<size_t>(a)].partial(b));
      }
      partials_.push_back(std::move(parts));
    }
    // structure-constancy probe: constant tables let the drift and the
    // first-variation transport be cached
    const StructureData sd0 = structure_functions(m, m.base_point());
    bool constant = true;
    uint64_t s = 99;
    for (int t = 0; t < 4 && constant; ++t) {
      const Point p = random_model_point(m, util::splitmix64(s));
      const StructureData sd = structure_functions(m, p);
      double diff = 0;
      for (size_t i = 0; i < sd.w.v.size(); ++i)
        diff = std::max(diff, std::abs(sd.w.v[i] - sd0.w.v[i]));
      diff = std::max(diff, (sd.gamma - sd0.gamma).cwiseAbs().maxCoeff());
      diff = std::max(diff, (sd.delta - sd0.delta).cwiseAbs().maxCoeff());
      constant = diff < 1e-12;
    }
    constant_structure_ = constant;
    if (constant_structure_) {
      cached_sd_ = sd0;
      cached_tm_ = transport_mats(sd0);
      zero_drift_ = true;
      for (int i = 0; i < h_; ++i)
        if (std::abs(sd0.b(i)) > 1e-13) zero_drift_ = false;
    }
  }

  int dim() const { return dim_; }

  void field_at(int i, const Vector& y, Vector& out) const {
    for (int a = 0; a < dim_; ++a)
      out[a] = coeffs_[static_cast<size_t>(i * dim_ + a)].eval(
          {y.data(), static_cast<size_t>(dim_)});
  }

  // drift X0 = -sum_i b_i X_i
  void drift_at(const Vector& y, Vector& out, const StructureData* sd) const {
    out.setZero();
    if (constant_structure_ && zero_drift_) return;
    const StructureData& s = sd ? *sd : cached_sd_;
    Vector xi(dim_);
    for (int i = 0; i < h_; ++i) {
      const double bi = s.b(i);
      if (bi == 0.0) continue;
      field_at(i, y, xi);
      out -= bi * xi;
    }
  }

  StructureData structure_at(const Vector& y) const {
    if (constant_structure_) return cached_sd_;
    return structure_functions(*model_, Point(y));
  }

  bool needs_structure() const {
    return !constant_structure_ || !zero_drift_ || with_alpha_;
  }
  bool constant_structure() const { return constant_structure_; }
  const TransportMats& cached_transport() const { return cached_tm_; }

  const ContactModel* model_;
  int dim_, h_;
  bool with_alpha_ = false;
  bool constant_structure_ = false;
  bool zero_drift_ = false;
  std::vector<ScalarField> coeffs_;
  std::vector<std::vector<ScalarField>> partials_;
  StructureData cached_sd_;
  TransportMats cached_tm_;
};

struct StepScratch {
  Vector drift0, drift1, xi, pred, ynew;
  std::vector<Vector> sig0, sig1;
};

void chart_step(const ChartStepper& st, Vector& y, std::optional<Matrix>& alpha,
                std::span<const double> dW, double dt, StepScratch& sc) {
  const int h = st.h_;
  if (sc.sig0.empty()) {
    sc.sig0.assign(static_cast<size_t>(h), Vector(st.dim()));
    sc.sig1.assign(static_cast<size_t>(h), Vector(st.dim()));
    sc.drift0.resize(st.dim());
    sc.drift1.resize(st.dim());
    sc.xi.resize(st.dim());
    sc.pred.resize(st.dim());
    sc.ynew.resize(st.dim());
  }
  StructureData sd0, sd1;
  const bool need_sd = st.needs_structure() && !st.constant_structure();
  if (need_sd) sd0 = st.structure_at(y);
  const StructureData* psd0 = st.constant_structure() ? nullptr : &sd0;

  for (int k = 0; k < h; ++k) st.field_at(k, y, sc.sig0[static_cast<size_t>(k)]);
  st.drift_at(y, sc.drift0, psd0);
  sc.pred = y + sc.drift0 * dt;
  for (int k = 0; k < h; ++k)
    sc.pred += kSqrt2 * dW[static_cast<size_t>(k)] * sc.sig0[static_cast<size_t>(k)];

  if (need_sd) sd1 = st.structure_at(sc.pred);
  const StructureData* psd1 = st.constant_structure() ? nullptr : &sd1;
  for (int k = 0; k < h; ++k) st.field_at(k, sc.pred, sc.sig1[static_cast<size_t>(k)]);
  st.drift_at(sc.pred, sc.drift1, psd1);

  sc.ynew = y + 0.5 * dt * (sc.drift0 + sc.drift1);
  for (int k = 0; k < h; ++k)
    sc.ynew += 0.5 * kSqrt2 * dW[static_cast<size_t>(k)] *
               (sc.sig0[static_cast<size_t>(k)] + sc.sig1[static_cast<size_t>(k)]);

  if (alpha) {
    const TransportMats tm0 = st.constant_structure() ? st.cached_transport()
                                                      : transport_mats(sd0);
    const TransportMats tm1 = st.constant_structure() ? st.cached_transport()
                                                      : transport_mats(sd1);
    auto increment = [&](const TransportMats& tm) {
      Matrix M = tm.c0 * dt;
      for (int k = 0; k < h; ++k)
        M += kSqrt2 * dW[static_cast<size_t>(k)] * tm.c[static_cast<size_t>(k)];
      return M;
    };
    const Matrix M0 = increment(tm0);
    const Matrix M1 = increment(tm1);
    const Matrix ap = *alpha - (*alpha) * M0;  // predictor
    *alpha = *alpha - 0.5 * ((*alpha) * M0 + ap * M1);
  }
  y = sc.ynew;
}

class GroupStepper {
 public:
  GroupStepper(const ContactModel& m, bool with_alpha) : model_(&m) {
    const auto& lie = m.lie();
    D_ = lie.ambient_dim;
    h_ = 2 * m.n;
    // constant drift matrix G0 = -sum_i b_i G_i
    G0_ = Matrix::Zero(D_, D_);
    const StructureData sd = structure_functions(m, m.base_point());
    bool drift = false;
    for (int i = 0; i < h_; ++i) {
      const double bi = sd.b(i);
      if (bi != 0.0) {
        G0_ -= bi * lie.field_mats[static_cast<size_t>(i)];
        drift = true;
      }
    }
    has_drift_ = drift;
    quat_fast_ = lie.unit_norm && D_ == 4 && !drift;
    if (with_alpha) tm_ = transport_mats(sd);
  }

  void step(Vector& s, std::optional<Matrix>& alpha, std::span<const double> dW,
            double dt) const {
    const auto& lie = model_->lie();
    if (quat_fast_) {
      // generators i/2, j/2, k/2: the algebra increment is the imaginary
      // quaternion (sqrt2 dW1, sqrt2 dW2, 0)/2
      const Quat g = qexp_imag(0.5 * kSqrt2 * dW[0], 0.5 * kSqrt2 * dW[1], 0.0);
      const Quat q{s[0], s[1], s[2], s[3]};
      const Quat r = qmul(q, g);
      s[0] = r.w;
      s[1] = r.x;
      s[2] = r.y;
      s[3] = r.z;
    } else {
      Matrix A = G0_ * dt;
      for (int k = 0; k < h_; ++k)
        A += kSqrt2 * dW[static_cast<size_t>(k)] * lie.field_mats[static_cast<size_t>(k)];
      s = util::matrix_exp(A) * s;
    }
    if (alpha) {
      Matrix M = tm_.c0 * dt;
      for (int k = 0; k < h_; ++k)
        M += kSqrt2 * dW[static_cast<size_t>(k)] * tm_.c[static_cast<size_t>(k)];
      *alpha = (*alpha) * util::matrix_exp(-M);
    }
  }

  const ContactModel* model_;
  int D_ = 0, h_ = 0;
  Matrix G0_;
  bool has_drift_ = false, quat_fast_ = false;
  TransportMats tm_;
};

}  // namespace

PathRng::PathRng(uint64_t seed, uint64_t stream) : s_(mix(seed, stream)) {}

double PathRng::uniform() { return util::unit_uniform(s_); }

double PathRng::normal() {
  double u1 = uniform();
  while (u1 <= 0.0) u1 = uniform();
  const double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586 * u2);
}

double PathEnsemble::escaped_fraction() const {
  if (terminal.empty()) return 0;
  double e = 0;
  for (uint8_t f : escaped) e += f;
  return e / static_cast<double>(terminal.size());
}

PathEnsemble simulate_paths(const SimConfig& cfg) {
  if (!cfg.model) throw Error("simulate_paths: no model");
  if (cfg.dt <= 0 || cfg.t < 0 || cfg.paths < 1)
    throw Error("simulate_paths: invalid config (need dt > 0, t >= 0, paths >= 1)");
  const ContactModel& m = *cfg.model;
  const Point start = cfg.start.value_or(m.base_point());
  if (start.dim() != m.ambient_dim())
    throw Error("simulate_paths: start point dimension mismatch");
  const int nsteps = cfg.t == 0.0
                         ? 0
                         : std::max<int>(1, static_cast<int>(std::llround(cfg.t / cfg.dt)));
  const double dt = nsteps ? cfg.t / nsteps : 0.0;
  const int h = 2 * m.n;
  const int fsize = h + 1;

  PathEnsemble out;
  out.terminal.assign(static_cast<size_t>(cfg.paths), start.coords);
  out.escaped.assign(static_cast<size_t>(cfg.paths), 0);
  out.escape_time.assign(static_cast<size_t>(cfg.paths), -1.0);
  out.substream.resize(static_cast<size_t>(cfg.paths));
  for (int p = 0; p < cfg.paths; ++p)
    out.substream[static_cast<size_t>(p)] = mix(cfg.seed, static_cast<uint64_t>(p));
  if (cfg.record_first_variation)
    out.alpha.assign(static_cast<size_t>(cfg.paths), Matrix::Identity(fsize, fsize));

  if (m.is_chart()) {
    const ChartStepper stepper(m, cfg.record_first_variation);
    util::parallel_for(cfg.paths, [&](int p) {
      PathRng rng(cfg.seed, static_cast<uint64_t>(p));
      Vector y = start.coords;
      std::optional<Matrix> alpha;
      if (cfg.record_first_variation) alpha = Matrix::Identity(fsize, fsize);
      StepScratch sc;
      std::vector<double> dW(static_cast<size_t>(h));
      for (int sidx = 0; sidx < nsteps; ++sidx) {
        for (int k = 0; k < h; ++k)
          dW[static_cast<size_t>(k)] = rng.normal() * std::sqrt(dt);
        chart_step(stepper, y, alpha, dW, dt, sc);
        if (cfg.escape_radius && y.norm() > *cfg.escape_radius) {
          out.escaped[static_cast<size_t>(p)] = 1;
          out.escape_time[static_cast<size_t>(p)] = (sidx + 1) * dt;
          break;
        }
      }
      out.terminal[static_cast<size_t>(p)] = y;
      if (alpha) out.alpha[static_cast<size_t>(p)] = *alpha;
    });
  } else {
    const GroupStepper stepper(m, cfg.record_first_variation);
    util::parallel_for(cfg.paths, [&](int p) {
      PathRng rng(cfg.seed, static_cast<uint64_t>(p));
      Vector s = start.coords;
      std::optional<Matrix> alpha;
      if (cfg.record_first_variation) alpha = Matrix::Identity(fsize, fsize);
      std::vector<double> dW(static_cast<size_t>(h));
      for (int sidx = 0; sidx < nsteps; ++sidx) {
        for (int k = 0; k < h; ++k)
          dW[static_cast<size_t>(k)] = rng.normal() * std::sqrt(dt);
        stepper.step(s, alpha, dW, dt);
      }
      out.terminal[static_cast<size_t>(p)] = s;
      if (alpha) out.alpha[static_cast<size_t>(p)] = *alpha;
    });
  }
  return out;
}

MeanStderr semigroup_mean(const PathEnsemble& e, const ScalarField& f) {
  const int n = e.paths();
  double sum = 0, sumsq = 0;
  for (int p = 0; p < n; ++p) {
    const double v = e.escaped[static_cast<size_t>(p)]
                         ? 0.0
                         : f.eval({e.terminal[static_cast<size_t>(p)].data(),
                                   static_cast<size_t>(
                                       e.terminal[static_cast<size_t>(p)].size())});
    sum += v;
    sumsq += v * v;
  }
  MeanStderr r;
  r.mean = sum / n;
  const double var = std::max(0.0, sumsq / n - r.mean * r.mean);
  r.se = std::sqrt(var / n);
  return r;
}

MeanStderr estimate_semigroup(const SimConfig& cfg, const ScalarField& f) {
  return semigroup_mean(simulate_paths(cfg), f);
}

GradientEvaluator::GradientEvaluator(const ContactModel& m, const ScalarField& f)
    : model_(&m), f_(f) {
  for (int a = 0; a < m.ambient_dim(); ++a) df_.push_back(f.partial(a));
}

double GradientEvaluator::value(const Vector& y) const {
  return f_.eval({y.data(), static_cast<size_t>(y.size())});
}

double GradientEvaluator::gamma(const Vector& y) const {
  const int h = 2 * model_->n;
  const int D = model_->ambient_dim();
  double acc = 0;
  std::span<const double> ys{y.data(), static_cast<size_t>(D)};
  for (int i = 0; i < h; ++i) {
    double xi = 0;
    for (int a = 0; a < D; ++a)
      xi += model_->frame()[static_cast<size_t>(i)][static_cast<size_t>(a)].eval(ys) *
            df_[static_cast<size_t>(a)].eval(ys);
    acc += xi * xi;
  }
  return acc;
}

double GradientEvaluator::gammaZ(const Vector& y) const {
  const int h = 2 * model_->n;
  const int D = model_->ambient_dim();
  std::span<const double> ys{y.data(), static_cast<size_t>(D)};
  double z = 0;
  for (int a = 0; a < D; ++a)
    z += model_->frame()[static_cast<size_t>(h)][static_cast<size_t>(a)].eval(ys) *
         df_[static_cast<size_t>(a)].eval(ys);
  return z * z;
}

GradientBoundCheck check_gradient_bound(const SimConfig& cfg,
                                        const ScalarField& f,
                                        const GapCertificate& cert) {
  const ContactModel& m = *cfg.model;
  const int h = 2 * m.n;
  const Point x0 = cfg.start.value_or(m.base_point());
  GradientBoundCheck out;
  out.t = cfg.t;
  out.sigma = cert.sigma;
  out.delta_coeff = cert.delta_coeff;
  if (cert.delta_coeff > 0) {
    out.coeff_gamma = cert.delta_coeff;
    out.coeff_gammaZ = 1.0;
  } else {
    out.coeff_gamma = 1.0;
    out.coeff_gammaZ = 0.0;
  }
  const double hstep = out.fd_step;

  // RHS: e^{-sigma t} P_t( cG Gamma(f) + cGZ Gamma^Z(f) )
  const GradientEvaluator ge(m, f);
  {
    SimConfig c = cfg;
    c.start = x0;
    c.seed = mix(cfg.seed, 0x7268ULL);
    const PathEnsemble e = simulate_paths(c);
    double sum = 0, sumsq = 0;
    for (int p = 0; p < e.paths(); ++p) {
      double v = 0;
      if (!e.escaped[static_cast<size_t>(p)]) {
        const Vector& y = e.terminal[static_cast<size_t>(p)];
        v = out.coeff_gamma * ge.gamma(y) + out.coeff_gammaZ * ge.gammaZ(y);
      }
      sum += v;
      sumsq += v * v;
    }
    const double mean = sum / e.paths();
    const double var = std::max(0.0, sumsq / e.paths() - mean * mean);
    const double damp = std::exp(-cert.sigma * cfg.t);
    out.rhs = damp * mean;
    out.rhs_se = damp * std::sqrt(var / e.paths());
  }

  // LHS: central differences of P_t f along the frame directions at x0, with
  // common random numbers across each +/- ensemble pair
  std::vector<double> D(static_cast<size_t>(h) + 1, 0.0);
  std::vector<double> Dse(static_cast<size_t>(h) + 1, 0.0);
  for (int j = 0; j <= h; ++j) {
    Point xp = x0, xm = x0;
    if (m.is_chart()) {
      Vector dir(m.ambient_dim());
      for (int a = 0; a < m.ambient_dim(); ++a)
        dir[a] = m.frame()[static_cast<size_t>(j)][static_cast<size_t>(a)].eval(
            x0.span());
      xp.coords += hstep * dir;
      xm.coords -= hstep * dir;
    } else {
      const Matrix& G = m.lie().field_mats[static_cast<size_t>(j)];
      xp.coords = util::matrix_exp(hstep * G) * x0.coords;
      xm.coords = util::matrix_exp(-hstep * G) * x0.coords;
    }
    SimConfig cp = cfg;
    cp.start = xp;
    SimConfig cm = cfg;
    cm.start = xm;
    const PathEnsemble ep = simulate_paths(cp);
    const PathEnsemble em = simulate_paths(cm);
    double sum = 0, sumsq = 0;
    const int N = ep.paths();
    for (int p = 0; p < N; ++p) {
      const double vp = ep.escaped[static_cast<size_t>(p)]
                            ? 0.0
                            : ge.value(ep.terminal[static_cast<size_t>(p)]);
      const double vm = em.escaped[static_cast<size_t>(p)]
                            ? 0.0
                            : ge.value(em.terminal[static_cast<size_t>(p)]);
      const double d = (vp - vm) / (2.0 * hstep);
      sum += d;
      sumsq += d * d;
    }
    D[static_cast<size_t>(j)] = sum / N;
    const double var = std::max(0.0, sumsq / N - D[static_cast<size_t>(j)] * D[static_cast<size_t>(j)]);
    Dse[static_cast<size_t>(j)] = std::sqrt(var / N);
  }
  double lhs = 0, varl = 0;
  for (int j = 0; j < h; ++j) {
    lhs += out.coeff_gamma * D[static_cast<size_t>(j)] * D[static_cast<size_t>(j)];
    varl += std::pow(2.0 * out.coeff_gamma * D[static_cast<size_t>(j)] *
                         Dse[static_cast<size_t>(j)], 2);
  }
  lhs += out.coeff_gammaZ * D[static_cast<size_t>(h)] * D[static_cast<size_t>(h)];
  varl += std::pow(2.0 * out.coeff_gammaZ * D[static_cast<size_t>(h)] *
                       Dse[static_cast<size_t>(h)], 2);
  out.lhs = lhs;
  out.lhs_se = std::sqrt(varl);

  const double fd_bias = 10.0 * hstep * hstep * (1.0 + std::abs(out.lhs) + std::abs(out.rhs));
  out.holds = out.lhs <= out.rhs +
                             3.0 * std::sqrt(out.lhs_se * out.lhs_se +
                                             out.rhs_se * out.rhs_se) +
                             fd_bias;
  return out;
}

bool model_is_compact(const ContactModel& m) {
  if (m.is_chart()) return false;
  const auto ita = m.params.find("a");
  const auto itb = m.params.find("b");
  if (ita == m.params.end() || itb == m.params.end()) return false;
  return ita->second < 0 && itb->second > 0;  // su(2) type
}

double max_constraint_violation(const ContactModel& m, const PathEnsemble& e) {
  if (m.is_chart() || !m.lie().unit_norm) return 0.0;
  double worst = 0;
  for (const auto& s : e.terminal)
    worst = std::max(worst, std::abs(s.norm() - 1.0));
  return worst;
}

VarianceDecay variance_decay_rate(const SimConfig& cfg, const ScalarField& f,
                                  double burn_in, std::span<const double> t_grid,
                                  int outer, int inner) {
  const ContactModel& m = *cfg.model;
  if (!model_is_compact(m))
    throw Error("variance decay requires a compact (su(2)-type) group model");
  if (t_grid.size() < 2) throw Error("variance decay needs >= 2 grid times");
  VarianceDecay out;
  out.burn_in = burn_in;
  out.t_grid.assign(t_grid.begin(), t_grid.end());

  // approximately stationary outer sample by burn-in
  std::vector<Vector> xs(static_cast<size_t>(outer));
  {
    SimConfig c = cfg;
    c.t = burn_in;
    c.paths = outer;
    c.seed = mix(cfg.seed, 0xB00ULL);
    c.record_first_variation = false;
    const PathEnsemble e = simulate_paths(c);
    for (int j = 0; j < outer; ++j) xs[static_cast<size_t>(j)] = e.terminal[static_cast<size_t>(j)];
    // burn-in diagnostic: drift between half-sample means of f, in SE units
    double m1 = 0, m2 = 0, var = 0;
    std::vector<double> vals;
    for (const auto& y : e.terminal)
      vals.push_back(f.eval({y.data(), static_cast<size_t>(y.size())}));
    const int half = outer / 2;
    for (int j = 0; j < half; ++j) m1 += vals[static_cast<size_t>(j)];
    for (int j = half; j < outer; ++j) m2 += vals[static_cast<size_t>(j)];
    m1 /= half;
    m2 /= (outer - half);
    double mean = 0;
    for (double v : vals) mean += v;
    mean /= outer;
    for (double v : vals) var += (v - mean) * (v - mean);
    var /= outer;
    const double se = std::sqrt(var / outer) + 1e-300;
    out.burn_in_drift = std::abs(m1 - m2) / se;
  }

  std::vector<double> logv, logv_se;
  for (size_t gi = 0; gi < t_grid.size(); ++gi) {
    std::vector<double> means(static_cast<size_t>(outer));
    std::vector<double> ses(static_cast<size_t>(outer));
    for (int j = 0; j < outer; ++j) {
      SimConfig c = cfg;
      c.t = t_grid[gi];
      c.paths = inner;
      c.start = Point(xs[static_cast<size_t>(j)]);
      c.seed = mix(cfg.seed, mix(0xC00ULL + gi, static_cast<uint64_t>(j)));
      c.record_first_variation = false;
      const MeanStderr ms = estimate_semigroup(c, f);
      means[static_cast<size_t>(j)] = ms.mean;
      ses[static_cast<size_t>(j)] = ms.se;
    }
    double mean = 0;
    for (double v : means) mean += v;
    mean /= outer;
    double m2 = 0, m4 = 0, noise = 0;
    for (int j = 0; j < outer; ++j) {
      const double d = means[static_cast<size_t>(j)] - mean;
      m2 += d * d;
      m4 += d * d * d * d;
      noise += ses[static_cast<size_t>(j)] * ses[static_cast<size_t>(j)];
    }
    m2 /= outer;
    m4 /= outer;
    noise /= outer;
    const double v_hat = std::max(m2 - noise, 1e-300);
    const double v_se = std::sqrt(std::max(0.0, m4 - m2 * m2) / outer);
    out.variance.push_back(v_hat);
    out.variance_se.push_back(v_se);
    logv.push_back(std::log(v_hat));
    logv_se.push_back(v_se / v_hat);
  }

  if (out.variance[0] < 1e-14) {
    out.degenerate = true;
    return out;
  }

  // OLS slope of log-variance with per-point noise propagation
  const int G = static_cast<int>(t_grid.size());
  double tbar = 0;
  for (double t : t_grid) tbar += t;
  tbar /= G;
  double stt = 0;
  for (double t : t_grid) stt += (t - tbar) * (t - tbar);
  double slope = 0, varslope = 0;
  double ybar = 0;
  for (double y : logv) ybar += y;
  ybar /= G;
  for (int i = 0; i < G; ++i) {
    const double wt = (t_grid[static_cast<size_t>(i)] - tbar) / stt;
    slope += wt * (logv[static_cast<size_t>(i)] - ybar);
    varslope += wt * wt * logv_se[static_cast<size_t>(i)] * logv_se[static_cast<size_t>(i)];
  }
  out.rate = -slope;
  out.rate_ci = 1.96 * std::sqrt(varslope);
  return out;
}

FirstVariationCheck first_variation_growth(const SimConfig& cfg) {
  const ContactModel& m = *cfg.model;
  FirstVariationCheck out;
  const std::vector<double> fracs{0.25, 0.5, 0.75, 1.0};
  // snapshots via separate runs sharing nothing; growth in expectation is all
  // that matters here
  for (double fr : fracs) {
    SimConfig c = cfg;
    c.t = cfg.t * fr;
    c.record_first_variation = true;
    const PathEnsemble e = simulate_paths(c);
    double acc = 0;
    for (const auto& a : e.alpha) acc += a.norm();
    out.t_grid.push_back(c.t);
    out.mean_norm.push_back(acc / e.paths());
  }
  const int G = static_cast<int>(fracs.size());
  double tbar = 0, ybar = 0;
  for (int i = 0; i < G; ++i) {
    tbar += out.t_grid[static_cast<size_t>(i)];
    ybar += std::log(out.mean_norm[static_cast<size_t>(i)]);
  }
  tbar /= G;
  ybar /= G;
  double stt = 0, sty = 0;
  for (int i = 0; i < G; ++i) {
    const double dt = out.t_grid[static_cast<size_t>(i)] - tbar;
    stt += dt * dt;
    sty += dt * (std::log(out.mean_norm[static_cast<size_t>(i)]) - ybar);
  }
  out.empirical_rate = sty / stt;

  // sup-norm bound on the exponential growth rate of E|alpha|, with the
  // transport matrices sampled over the region the paths can reach
  const double radius = cfg.escape_radius.value_or(1.0);
  double bound = 0;
  for (uint64_t s = 0; s < 16; ++s) {
    const Point x = s == 0 ? m.base_point()
                           : random_model_point(m, mix(0xFABULL, s), radius);
    const TransportMats tm = transport_mats(structure_functions(m, x));
    double b = tm.c0.operatorNorm();
    for (const auto& c : tm.c) {
      const double nc = c.operatorNorm();
      b += nc * nc;
    }
    bound = std::max(bound, b);
    if (!m.is_chart()) break;  // constant structure: one point suffices
  }
  out.rate_bound = bound;
  out.within = out.empirical_rate <= bound + 1e-6;
  return out;
}

int worker_count() { return util::worker_count_impl(); }

}  // namespace contactcd
