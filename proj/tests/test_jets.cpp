#include <cmath>
#include <vector>

#include "contactcd/jets.hpp"
#include "doctest.h"

using namespace contactcd;

namespace {

double finite_diff(const ScalarField& f, std::vector<double> x, int a, int b) {
  // central second difference with one Richardson step; first derivative when b < 0
  auto d1 = [&](double h) {
    auto xp = x, xm = x;
    xp[static_cast<size_t>(a)] += h;
    xm[static_cast<size_t>(a)] -= h;
    return (f.eval(xp) - f.eval(xm)) / (2 * h);
  };
  auto d2 = [&](double h) {
    auto xpp = x, xpm = x, xmp = x, xmm = x;
    xpp[static_cast<size_t>(a)] += h;
    xpp[static_cast<size_t>(b)] += h;
    xpm[static_cast<size_t>(a)] += h;
    xpm[static_cast<size_t>(b)] -= h;
    xmp[static_cast<size_t>(a)] -= h;
    xmp[static_cast<size_t>(b)] += h;
    xmm[static_cast<size_t>(a)] -= h;
    xmm[static_cast<size_t>(b)] -= h;
    return (f.eval(xpp) - f.eval(xpm) - f.eval(xmp) + f.eval(xmm)) / (4 * h * h);
  };
  const double h = 1e-4;
  if (b < 0) return (4 * d1(h / 2) - d1(h)) / 3.0;
  return (4 * d2(h / 2) - d2(h)) / 3.0;
}

}  // namespace

TEST_CASE("jet_eval on x1^2 x2 matches hand derivatives") {
  ScalarField f(3, {PolyTerm{1.0, {2, 1, 0}}});
  const std::vector<double> x{1.0, 1.0, 0.0};
  const Jet j = jet_eval(f, x, 2);
  CHECK(j.value() == doctest::Approx(1.0));
  CHECK(j.partial(std::vector<int>{1, 0, 0}) == doctest::Approx(2.0));
  CHECK(j.partial(std::vector<int>{0, 1, 0}) == doctest::Approx(1.0));
  CHECK(j.partial(std::vector<int>{1, 1, 0}) == doctest::Approx(2.0));
  // Taylor coefficient of d1^2 is the derivative over 2!
  CHECK(j.coeff(std::vector<int>{2, 0, 0}) == doctest::Approx(1.0));
}

TEST_CASE("jet of a constant") {
  ScalarField f = ScalarField::constant(4, 1.0);
  const std::vector<double> x{0.3, -0.7, 2.0, 0.1};
  const Jet j = jet_eval(f, x, 4);
  CHECK(j.value() == doctest::Approx(1.0));
  double sum_abs = 0;
  for (double c : j.coeffs()) sum_abs += std::abs(c);
  CHECK(sum_abs == doctest::Approx(1.0));
}

TEST_CASE("random cubic jet matches finite differences to 1e-6 relative") {
  const ScalarField f = random_polynomial(3, 3, 99);
  const std::vector<double> x{0.4, -0.2, 0.7};
  const Jet j = jet_eval(f, x, 2);
  for (int a = 0; a < 3; ++a) {
    std::vector<int> mu(3, 0);
    mu[static_cast<size_t>(a)] = 1;
    const double fd = finite_diff(f, x, a, -1);
    CHECK(std::abs(j.partial(mu) - fd) <= 1e-6 * (1 + std::abs(fd)));
  }
  for (int a = 0; a < 3; ++a)
    for (int b = a; b < 3; ++b) {
      std::vector<int> mu(3, 0);
      mu[static_cast<size_t>(a)] += 1;
      mu[static_cast<size_t>(b)] += 1;
      const double fd = finite_diff(f, x, a, b);
      CHECK(std::abs(j.partial(mu) - fd) <= 1e-6 * (1 + std::abs(fd)));
    }
}

TEST_CASE("jet_mul: x1 * x2 at origin is the jet of x1 x2") {
  const Jet a = Jet::variable(2, 2, 0, 0.0);
  const Jet b = Jet::variable(2, 2, 1, 0.0);
  const Jet p = jet_mul(a, b);
  CHECK(p.value() == 0.0);
  CHECK(p.partial(std::vector<int>{1, 1}) == doctest::Approx(1.0));
  CHECK(p.partial(std::vector<int>{1, 0}) == 0.0);
}

TEST_CASE("jet_mul identity and product-of-polynomials consistency") {
  const ScalarField f = random_polynomial(3, 2, 7);
  const ScalarField g = random_polynomial(3, 2, 8);
  const std::vector<double> x{0.2, 0.5, -0.3};
  const Jet jf = jet_eval(f, x, 3);
  const Jet one = Jet::constant(3, 3, 1.0);
  const Jet id = jet_mul(jf, one);
  for (size_t i = 0; i < jf.coeffs().size(); ++i)
    CHECK(id.coeffs()[i] == doctest::Approx(jf.coeffs()[i]));

  // product of jets equals jet of the symbolic product
  std::vector<PolyTerm> terms;
  for (const auto& tf : f.terms())
    for (const auto& tg : g.terms()) {
      PolyTerm t;
      t.coeff = tf.coeff * tg.coeff;
      t.powers = {tf.powers[0] + tg.powers[0], tf.powers[1] + tg.powers[1],
                  tf.powers[2] + tg.powers[2]};
      terms.push_back(t);
    }
  ScalarField fg(3, terms);
  const Jet direct = jet_eval(fg, x, 3);
  const Jet viamul = jet_mul(jet_eval(f, x, 3), jet_eval(g, x, 3));
  for (size_t i = 0; i < direct.coeffs().size(); ++i)
    CHECK(viamul.coeffs()[i] ==
          doctest::Approx(direct.coeffs()[i]).epsilon(1e-12));
}

TEST_CASE("Leibniz rule via binomial convolution of coefficients") {
  const ScalarField f = random_polynomial(2, 3, 21);
  const ScalarField g = random_polynomial(2, 3, 22);
  const std::vector<double> x{0.6, -0.4};
  const Jet jf = jet_eval(f, x, 4);
  const Jet jg = jet_eval(g, x, 4);
  const Jet p = jet_mul(jf, jg);
  // Taylor coefficients multiply by plain convolution: c_mu(fg) = sum c_a(f) c_b(g)
  for (int i = 0; i <= 4; ++i)
    for (int jj = 0; i + jj <= 4; ++jj) {
      double conv = 0;
      for (int p1 = 0; p1 <= i; ++p1)
        for (int p2 = 0; p2 <= jj; ++p2) {
          std::vector<int> m1{p1, p2}, m2{i - p1, jj - p2};
          conv += jf.coeff(m1) * jg.coeff(m2);
        }
      std::vector<int> mu{i, jj};
      CHECK(p.coeff(mu) == doctest::Approx(conv).epsilon(1e-12));
    }
}

TEST_CASE("truncation of an order-k jet equals direct lower-order evaluation") {
  const ScalarField f = random_polynomial(3, 4, 31);
  const std::vector<double> x{0.9, 0.1, -0.5};
  const Jet j4 = jet_eval(f, x, 4);
  const Jet j3 = jet_eval(f, x, 3);
  const Jet t3 = j4.truncated(3);
  for (size_t i = 0; i < j3.coeffs().size(); ++i)
    CHECK(t3.coeffs()[i] == doctest::Approx(j3.coeffs()[i]));
}

TEST_CASE("polynomial jets are exact: re-expansion reproduces coefficients") {
  // expanding around 0 recovers the monomial coefficients exactly
  const ScalarField f = random_polynomial(2, 3, 55);
  const std::vector<double> x{0.0, 0.0};
  const Jet j = jet_eval(f, x, 3);
  for (const auto& t : f.terms()) {
    double expanded = j.coeff(t.powers);
    // several terms may share a power pattern only if random_polynomial
    // emitted duplicates; it does not
    CHECK(std::abs(expanded - t.coeff) <= 1e-12 * (1 + std::abs(t.coeff)));
  }
}

TEST_CASE("jet reciprocal inverts within the truncation order") {
  const ScalarField f = random_polynomial(3, 2, 909);
  const std::vector<double> x{0.3, -0.2, 0.15};
  Jet a = jet_eval(f, x, 4);
  // keep the value part away from zero
  a += Jet::constant(3, 4, 2.0 + std::abs(a.value()));
  const Jet r = jet_reciprocal(a);
  const Jet prod = jet_mul(a, r);
  CHECK(prod.value() == doctest::Approx(1.0).epsilon(1e-14));
  double off = 0;
  for (size_t i = 1; i < prod.coeffs().size(); ++i)
    off = std::max(off, std::abs(prod.coeffs()[i]));
  CHECK(off < 1e-13);
  CHECK_THROWS_AS(jet_reciprocal(Jet(2, 3)), Error);
}

TEST_CASE("order cap and shape mismatches are rejected") {
  const ScalarField f = random_polynomial(2, 2, 5);
  const std::vector<double> x{0.0, 0.0};
  CHECK_THROWS_AS(jet_eval(f, x, max_jet_order() + 1), Error);
  const Jet a(2, 2);
  const Jet b(3, 2);
  CHECK_THROWS_AS(jet_mul(a, b), Error);
  const std::vector<double> bad{1.0};
  CHECK_THROWS_AS(jet_eval(f, bad, 2), Error);
}
