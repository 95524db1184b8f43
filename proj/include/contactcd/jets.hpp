#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

namespace contactcd {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Process-wide cap on jet truncation order. Everything in the pipeline needs
// order <= 4; the cap exists so a bad call fails loudly instead of allocating
// huge coefficient tables.
int max_jet_order();
void set_max_jet_order(int order);

// Shared multi-index bookkeeping for one (dim, order) pair. Coefficients are
// stored dense in graded lexicographic order, so truncation is a prefix copy.
class JetLayout {
 public:
  static std::shared_ptr<const JetLayout> get(int dim, int order);

  int dim() const { return dim_; }
  int order() const { return order_; }
  int size() const { return static_cast<int>(exps_.size()); }
  int size_at_order(int k) const { return prefix_[static_cast<size_t>(k)]; }
  std::span<const int> exponents(int rank) const {
    return {exps_[static_cast<size_t>(rank)].data(), static_cast<size_t>(dim_)};
  }
  int degree(int rank) const { return degree_[static_cast<size_t>(rank)]; }
  // -1 when |mu| exceeds the order
  int rank(std::span<const int> mu) const;
  int product_rank(int i, int j) const {
    return prod_[static_cast<size_t>(i) * static_cast<size_t>(size()) +
                 static_cast<size_t>(j)];
  }
  double multi_factorial(int rank) const { return mufact_[static_cast<size_t>(rank)]; }

 private:
  JetLayout(int dim, int order);
  int dim_ = 0, order_ = 0;
  std::vector<std::vector<int>> exps_;
  std::vector<int> degree_;
  std::vector<int> prefix_;       // prefix_[k] = #indices with |mu| <= k
  std::vector<int32_t> prod_;     // rank of mu_i + mu_j, -1 on overflow
  std::vector<double> mufact_;
  std::unordered_map<uint64_t, int> rank_;
};

// Truncated multivariate Taylor expansion of a scalar quantity at a point.
// c[rank(mu)] stores d^mu f / mu! .
class Jet {
 public:
  Jet() = default;
  Jet(int dim, int order);
  static Jet constant(int dim, int order, double v);
  // the jet of the coordinate function x_a at base value `base`
  static Jet variable(int dim, int order, int a, double base);

  int dim() const { return layout_ ? layout_->dim() : 0; }
  int order() const { return layout_ ? layout_->order() : -1; }
  double value() const { return c_.empty() ? 0.0 : c_[0]; }
  double coeff(std::span<const int> mu) const;
  double partial(std::span<const int> mu) const;

  Jet truncated(int new_order) const;
  Jet derivative(int a) const;

  Jet& operator+=(const Jet& o);
  Jet& operator-=(const Jet& o);
  Jet& operator*=(double s);
  Jet operator+(const Jet& o) const;
  Jet operator-(const Jet& o) const;
  Jet operator-() const;
  Jet operator*(const Jet& o) const;
  Jet operator*(double s) const;

  std::span<const double> coeffs() const { return c_; }
  const JetLayout& layout() const { return *layout_; }

 private:
  void require_same_shape(const Jet& o) const;
  std::shared_ptr<const JetLayout> layout_;
  std::vector<double> c_;
};

struct PolyTerm {
  double coeff = 0.0;
  std::vector<int> powers;
};

// Polynomial scalar field. Jet evaluation is exact. The optional name tags
// shipped builtins (coordinates, matrix entries) in reports.
class ScalarField {
 public:
  ScalarField() = default;
  ScalarField(int dim, std::vector<PolyTerm> terms, std::string name = "");
  static ScalarField zero(int dim);
  static ScalarField constant(int dim, double v);
  static ScalarField coordinate(int dim, int a);

  int dim() const { return dim_; }
  const std::vector<PolyTerm>& terms() const { return terms_; }
  const std::string& name() const { return name_; }
  int degree() const;

  double eval(std::span<const double> x) const;
  ScalarField partial(int a) const;

  ScalarField& operator+=(const ScalarField& o);
  ScalarField operator+(const ScalarField& o) const;
  ScalarField operator*(double s) const;

  void simplify(double tol = 0.0);

 private:
  int dim_ = 0;
  std::vector<PolyTerm> terms_;
  std::string name_;
};

// Exact Taylor coefficients of f at x up to `order`.
Jet jet_eval(const ScalarField& f, std::span<const double> x, int order);

// Truncated Cauchy product (same (dim, order) required).
Jet jet_mul(const Jet& a, const Jet& b);

// Series reciprocal; requires a nonzero value part.
Jet jet_reciprocal(const Jet& a);

// Uniform-coefficient random polynomial of total degree <= max_degree.
ScalarField random_polynomial(int dim, int max_degree, uint64_t seed,
                              double scale = 1.0);

}  // namespace contactcd
