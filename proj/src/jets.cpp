#include "contactcd/jets.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <map>
#include <mutex>
#include <unordered_map>

namespace contactcd {

namespace {

std::atomic<int> g_max_order{4};

uint64_t pack_exponents(std::span<const int> mu, int order) {
  // base (order+1) packing; dim <= 12, order <= 8 stays well inside 64 bits
  uint64_t key = 0;
  const uint64_t base = static_cast<uint64_t>(order) + 1;
  for (int e : mu) key = key * base + static_cast<uint64_t>(e);
  return key;
}

struct LayoutKey {
  int dim, order;
  bool operator<(const LayoutKey& o) const {
    return dim != o.dim ? dim < o.dim : order < o.order;
  }
};

std::mutex g_layout_mutex;
std::map<LayoutKey, std::shared_ptr<const JetLayout>>& layout_cache() {
  static std::map<LayoutKey, std::shared_ptr<const JetLayout>> cache;
  return cache;
}

}  // namespace

int max_jet_order() { return g_max_order.load(); }

void set_max_jet_order(int order) {
  if (order < 0 || order > 8) throw Error("max jet order out of range [0,8]");
  g_max_order.store(order);
}

JetLayout::JetLayout(int dim, int order) : dim_(dim), order_(order) {
  if (dim < 1) throw Error("jet dim must be >= 1");
  if (order < 0) throw Error("jet order must be >= 0");
  prefix_.assign(static_cast<size_t>(order) + 1, 0);
  // graded lexicographic enumeration
  std::vector<int> mu(static_cast<size_t>(dim), 0);
  for (int d = 0; d <= order; ++d) {
    std::fill(mu.begin(), mu.end(), 0);
    mu[0] = d;
    while (true) {
      exps_.push_back(mu);
      degree_.push_back(d);
      // next composition of d into dim parts (lexicographic)
      int k = dim - 2;
      while (k >= 0 && mu[static_cast<size_t>(k)] == 0) --k;
      if (k < 0) break;
      int tail = 0;
      for (int j = k + 1; j < dim; ++j) {
        tail += mu[static_cast<size_t>(j)];
        mu[static_cast<size_t>(j)] = 0;
      }
      mu[static_cast<size_t>(k)] -= 1;
      mu[static_cast<size_t>(k + 1)] = tail + 1;
    }
    prefix_[static_cast<size_t>(d)] = static_cast<int>(exps_.size());
  }
  mufact_.reserve(exps_.size());
  for (const auto& e : exps_) {
    double f = 1.0;
    for (int v : e)
      for (int j = 2; j <= v; ++j) f *= j;
    mufact_.push_back(f);
  }
  // rank lookup
  rank_.reserve(exps_.size() * 2);
  for (size_t i = 0; i < exps_.size(); ++i)
    rank_.emplace(pack_exponents(exps_[i], order_), static_cast<int>(i));
  // product table
  const int n = size();
  prod_.assign(static_cast<size_t>(n) * static_cast<size_t>(n), -1);
  std::vector<int> sum(static_cast<size_t>(dim), 0);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) {
      if (degree_[static_cast<size_t>(i)] + degree_[static_cast<size_t>(j)] > order_) continue;
      for (int a = 0; a < dim; ++a)
        sum[static_cast<size_t>(a)] =
            exps_[static_cast<size_t>(i)][static_cast<size_t>(a)] +
            exps_[static_cast<size_t>(j)][static_cast<size_t>(a)];
      prod_[static_cast<size_t>(i) * static_cast<size_t>(n) + static_cast<size_t>(j)] =
          rank(sum);
    }
  }
}

int JetLayout::rank(std::span<const int> mu) const {
  int deg = 0;
  for (int e : mu) deg += e;
  if (deg > order_) return -1;
  auto it = rank_.find(pack_exponents(mu, order_));
  return it == rank_.end() ? -1 : it->second;
}

std::shared_ptr<const JetLayout> JetLayout::get(int dim, int order) {
  std::lock_guard<std::mutex> lk(g_layout_mutex);
  auto& cache = layout_cache();
  const LayoutKey key{dim, order};
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  auto layout = std::shared_ptr<const JetLayout>(new JetLayout(dim, order));
  cache.emplace(key, layout);
  return layout;
}

Jet::Jet(int dim, int order)
    : layout_(JetLayout::get(dim, order)),
      c_(static_cast<size_t>(layout_->size()), 0.0) {}

Jet Jet::constant(int dim, int order, double v) {
  Jet j(dim, order);
  j.c_[0] = v;
  return j;
}

Jet Jet::variable(int dim, int order, int a, double base) {
  if (a < 0 || a >= dim) throw Error("jet variable index out of range");
  Jet j(dim, order);
  j.c_[0] = base;
  if (order >= 1) j.c_[static_cast<size_t>(1 + a)] = 1.0;
  return j;
}

double Jet::coeff(std::span<const int> mu) const {
  const int r = layout_->rank(mu);
  if (r < 0) throw Error("multi-index exceeds jet order");
  return c_[static_cast<size_t>(r)];
}

double Jet::partial(std::span<const int> mu) const {
  const int r = layout_->rank(mu);
  if (r < 0) throw Error("multi-index exceeds jet order");
  return c_[static_cast<size_t>(r)] * layout_->multi_factorial(r);
}

Jet Jet::truncated(int new_order) const {
  if (new_order > order()) throw Error("truncation order exceeds jet order");
  Jet out(dim(), new_order);
  std::copy(c_.begin(), c_.begin() + out.layout_->size(), out.c_.begin());
  return out;
}

Jet Jet::derivative(int a) const {
  if (order() < 1) throw Error("cannot differentiate an order-0 jet");
  if (a < 0 || a >= dim()) throw Error("derivative index out of range");
  Jet out(dim(), order() - 1);
  const int n = out.layout_->size();
  std::vector<int> mu(static_cast<size_t>(dim()));
  for (int i = 0; i < n; ++i) {
    auto e = out.layout_->exponents(i);
    std::copy(e.begin(), e.end(), mu.begin());
    mu[static_cast<size_t>(a)] += 1;
    const int src = layout_->rank(mu);
    out.c_[static_cast<size_t>(i)] =
        c_[static_cast<size_t>(src)] * static_cast<double>(mu[static_cast<size_t>(a)]);
  }
  return out;
}

void Jet::require_same_shape(const Jet& o) const {
  if (dim() != o.dim() || order() != o.order())
    throw Error("jet shape mismatch: (" + std::to_string(dim()) + "," +
                std::to_string(order()) + ") vs (" + std::to_string(o.dim()) +
                "," + std::to_string(o.order()) + ")");
}

Jet& Jet::operator+=(const Jet& o) {
  require_same_shape(o);
  for (size_t i = 0; i < c_.size(); ++i) c_[i] += o.c_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& o) {
  require_same_shape(o);
  for (size_t i = 0; i < c_.size(); ++i) c_[i] -= o.c_[i];
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (double& v : c_) v *= s;
  return *this;
}

Jet Jet::operator+(const Jet& o) const {
  Jet r = *this;
  r += o;
  return r;
}

Jet Jet::operator-(const Jet& o) const {
  Jet r = *this;
  r -= o;
  return r;
}

Jet Jet::operator-() const {
  Jet r = *this;
  for (double& v : r.c_) v = -v;
  return r;
}

Jet Jet::operator*(double s) const {
  Jet r = *this;
  r *= s;
  return r;
}

Jet Jet::operator*(const Jet& o) const { return jet_mul(*this, o); }

Jet jet_reciprocal(const Jet& a) {
  const double a0 = a.value();
  if (a0 == 0.0) throw Error("jet_reciprocal: zero value part");
  // a = a0 (1 + u); 1/a = (1/a0) sum (-u)^k
  Jet u = a * (1.0 / a0);
  u -= Jet::constant(a.dim(), a.order(), 1.0);
  Jet acc = Jet::constant(a.dim(), a.order(), 1.0);
  Jet pw = Jet::constant(a.dim(), a.order(), 1.0);
  for (int k = 1; k <= a.order(); ++k) {
    pw = jet_mul(pw, u);
    acc += pw * ((k % 2 == 0) ? 1.0 : -1.0);
  }
  return acc * (1.0 / a0);
}

Jet jet_mul(const Jet& a, const Jet& b) {
  if (a.dim() != b.dim() || a.order() != b.order())
    throw Error("jet_mul shape mismatch");
  const JetLayout& L = a.layout();
  Jet out(a.dim(), a.order());
  auto ca = a.coeffs();
  auto cb = b.coeffs();
  auto co = const_cast<double*>(out.coeffs().data());
  const int n = L.size();
  for (int i = 0; i < n; ++i) {
    const double ai = ca[static_cast<size_t>(i)];
    if (ai == 0.0) continue;
    const int jmax = L.size_at_order(L.order() - L.degree(i));
    for (int j = 0; j < jmax; ++j) {
      const double bj = cb[static_cast<size_t>(j)];
      if (bj == 0.0) continue;
      co[L.product_rank(i, j)] += ai * bj;
    }
  }
  return out;
}

ScalarField::ScalarField(int dim, std::vector<PolyTerm> terms, std::string name)
    : dim_(dim), terms_(std::move(terms)), name_(std::move(name)) {
  for (const auto& t : terms_) {
    if (static_cast<int>(t.powers.size()) != dim_)
      throw Error("polynomial term power length != dim");
    for (int p : t.powers)
      if (p < 0) throw Error("negative exponent in polynomial term");
  }
}

ScalarField ScalarField::zero(int dim) { return ScalarField(dim, {}); }

ScalarField ScalarField::constant(int dim, double v) {
  return ScalarField(dim, {PolyTerm{v, std::vector<int>(static_cast<size_t>(dim), 0)}});
}

ScalarField ScalarField::coordinate(int dim, int a) {
  if (a < 0 || a >= dim) throw Error("coordinate index out of range");
  std::vector<int> p(static_cast<size_t>(dim), 0);
  p[static_cast<size_t>(a)] = 1;
  return ScalarField(dim, {PolyTerm{1.0, std::move(p)}},
                     "x" + std::to_string(a + 1));
}

int ScalarField::degree() const {
  int d = 0;
  for (const auto& t : terms_) {
    int s = 0;
    for (int p : t.powers) s += p;
    d = std::max(d, s);
  }
  return d;
}

double ScalarField::eval(std::span<const double> x) const {
  if (static_cast<int>(x.size()) != dim_) throw Error("eval dimension mismatch");
  double acc = 0.0;
  for (const auto& t : terms_) {
    double m = t.coeff;
    for (int a = 0; a < dim_; ++a) {
      const int p = t.powers[static_cast<size_t>(a)];
      for (int k = 0; k < p; ++k) m *= x[static_cast<size_t>(a)];
    }
    acc += m;
  }
  return acc;
}

ScalarField ScalarField::partial(int a) const {
  if (a < 0 || a >= dim_) throw Error("partial index out of range");
  std::vector<PolyTerm> out;
  for (const auto& t : terms_) {
    const int p = t.powers[static_cast<size_t>(a)];
    if (p == 0) continue;
    PolyTerm d = t;
    d.coeff *= p;
    d.powers[static_cast<size_t>(a)] = p - 1;
    out.push_back(std::move(d));
  }
  return ScalarField(dim_, std::move(out));
}

ScalarField& ScalarField::operator+=(const ScalarField& o) {
  if (dim_ == 0 && terms_.empty()) {
    *this = o;
    return *this;
  }
  if (o.dim_ != dim_) throw Error("polynomial dimension mismatch");
  terms_.insert(terms_.end(), o.terms_.begin(), o.terms_.end());
  return *this;
}

ScalarField ScalarField::operator+(const ScalarField& o) const {
  ScalarField r = *this;
  r += o;
  return r;
}

ScalarField ScalarField::operator*(double s) const {
  ScalarField r = *this;
  for (auto& t : r.terms_) t.coeff *= s;
  return r;
}

void ScalarField::simplify(double tol) {
  std::map<std::vector<int>, double> acc;
  for (const auto& t : terms_) acc[t.powers] += t.coeff;
  std::vector<PolyTerm> out;
  for (auto& [p, c] : acc)
    if (std::abs(c) > tol) out.push_back(PolyTerm{c, p});
  terms_ = std::move(out);
}

Jet jet_eval(const ScalarField& f, std::span<const double> x, int order) {
  if (order > max_jet_order())
    throw Error("requested jet order " + std::to_string(order) +
                " exceeds configured maximum " + std::to_string(max_jet_order()));
  if (static_cast<int>(x.size()) != f.dim())
    throw Error("jet_eval dimension mismatch");
  const int dim = f.dim();
  Jet acc(dim, order);
  // per-variable power cache
  std::vector<std::vector<Jet>> pows(static_cast<size_t>(dim));
  auto power_of = [&](int a, int p) -> const Jet& {
    auto& v = pows[static_cast<size_t>(a)];
    if (v.empty()) v.push_back(Jet::constant(dim, order, 1.0));
    while (static_cast<int>(v.size()) <= p) {
      const Jet base = Jet::variable(dim, order, a, x[static_cast<size_t>(a)]);
      v.push_back(jet_mul(v.back(), base));
    }
    return v[static_cast<size_t>(p)];
  };
  for (const auto& t : f.terms()) {
    Jet m = Jet::constant(dim, order, t.coeff);
    for (int a = 0; a < dim; ++a) {
      const int p = t.powers[static_cast<size_t>(a)];
      if (p > 0) m = jet_mul(m, power_of(a, p));
    }
    acc += m;
  }
  return acc;
}

namespace {
uint64_t splitmix64_step(uint64_t& s) {
  s += 0x9e3779b97f4a7c15ULL;
  uint64_t z = s;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

ScalarField random_polynomial(int dim, int max_degree, uint64_t seed, double scale) {
  uint64_t s = seed ^ 0xc0ffee123456789ULL;
  std::vector<PolyTerm> terms;
  auto layout = JetLayout::get(dim, max_degree);
  for (int r = 0; r < layout->size(); ++r) {
    auto e = layout->exponents(r);
    const double u =
        static_cast<double>(splitmix64_step(s) >> 11) * 0x1.0p-53;  // [0,1)
    PolyTerm t;
    t.coeff = scale * (2.0 * u - 1.0);
    t.powers.assign(e.begin(), e.end());
    terms.push_back(std::move(t));
  }
  return ScalarField(dim, std::move(terms));
}

}  // namespace contactcd
