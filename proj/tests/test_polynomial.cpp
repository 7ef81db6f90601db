#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "cps/polynomial.hpp"

using cps::Box;
using cps::Monomial;
using cps::Polynomial;
using Eigen::VectorXd;

namespace {

// Deterministic generator for property tests. Integer coefficients keep
// term-level comparisons exact.
Polynomial random_poly(std::mt19937_64& rng, int nvars, int max_degree,
                       int max_terms, bool integer_coeffs) {
  std::uniform_int_distribution<int> nterms(1, max_terms);
  std::uniform_int_distribution<int> deg(0, max_degree);
  std::uniform_int_distribution<int> var(0, nvars - 1);
  std::uniform_int_distribution<int> icoeff(-4, 4);
  std::uniform_real_distribution<double> rcoeff(-3.0, 3.0);
  Polynomial p(nvars);
  int count = nterms(rng);
  for (int t = 0; t < count; ++t) {
    int d = deg(rng);
    std::vector<std::pair<int, int>> powers;
    for (int k = 0; k < d; ++k) powers.emplace_back(var(rng), 1);
    double c = integer_coeffs ? static_cast<double>(icoeff(rng)) : rcoeff(rng);
    p.add_term(Monomial(std::move(powers)), c);
  }
  return p;
}

VectorXd random_point(std::mt19937_64& rng, int n, double lo, double hi) {
  std::uniform_real_distribution<double> d(lo, hi);
  VectorXd x(n);
  for (int i = 0; i < n; ++i) x(i) = d(rng);
  return x;
}

// Mean-based quadratic safety function used by the heating case study.
Polynomial band_h(int n, double lo, double hi) {
  Polynomial mean(n);
  for (int i = 0; i < n; ++i)
    mean += Polynomial::variable(n, i) * (1.0 / n);
  return (mean - Polynomial::constant(n, lo)) *
         (Polynomial::constant(n, hi) - mean);
}

}  // namespace

TEST_CASE("eval on basic examples") {
  Polynomial zero(3);
  CHECK(zero.eval(VectorXd::Zero(3)) == 0.0);

  Polynomial p(2);
  p.add_term(Monomial({{0, 2}, {1, 1}}), 3.0);
  VectorXd x(2);
  x << 2.0, 5.0;
  CHECK(p.eval(x) == doctest::Approx(60.0).epsilon(1e-14));
}

TEST_CASE("eval of the mean-band safety function at the box center") {
  Polynomial h = band_h(3, 15.0, 20.0);
  VectorXd x(3);
  x << 17.5, 17.5, 17.5;
  CHECK(h.eval(x) == doctest::Approx(6.25).epsilon(1e-14));
}

TEST_CASE("eval rejects undersized points") {
  Polynomial p = Polynomial::variable(3, 2);
  CHECK_THROWS_AS(p.eval(VectorXd::Zero(2)), std::invalid_argument);
  CHECK_NOTHROW(p.eval(VectorXd::Zero(3)));
}

TEST_CASE("eval is linear in coefficients") {
  std::mt19937_64 rng(11);
  for (int rep = 0; rep < 50; ++rep) {
    Polynomial p = random_poly(rng, 3, 3, 6, false);
    Polynomial q = random_poly(rng, 3, 3, 6, false);
    VectorXd x = random_point(rng, 3, -2.0, 2.0);
    double lhs = (p * 2.5 + q * (-1.25)).eval(x);
    double rhs = 2.5 * p.eval(x) - 1.25 * q.eval(x);
    CHECK(lhs == doctest::Approx(rhs).epsilon(1e-9));
  }
}

TEST_CASE("derivative of a single term") {
  Polynomial p(2);
  p.add_term(Monomial({{0, 2}, {1, 1}}), 3.0);
  Polynomial d = p.derivative(0);
  Polynomial expect(2);
  expect.add_term(Monomial({{0, 1}, {1, 1}}), 6.0);
  CHECK(d == expect);
  CHECK(p.derivative(5).is_zero());
}

TEST_CASE("derivative matches central finite differences") {
  std::mt19937_64 rng(12);
  const double h = 1e-5;
  for (int rep = 0; rep < 100; ++rep) {
    Polynomial p = random_poly(rng, 3, 3, 8, false);
    VectorXd x = random_point(rng, 3, -1.0, 1.0);
    for (int k = 0; k < 3; ++k) {
      VectorXd xp = x, xm = x;
      xp(k) += h;
      xm(k) -= h;
      double fd = (p.eval(xp) - p.eval(xm)) / (2.0 * h);
      CHECK(p.derivative(k).eval(x) == doctest::Approx(fd).epsilon(1e-6));
    }
  }
}

TEST_CASE("product rule holds termwise for integer coefficients") {
  std::mt19937_64 rng(13);
  for (int rep = 0; rep < 50; ++rep) {
    Polynomial p = random_poly(rng, 3, 2, 5, true);
    Polynomial q = random_poly(rng, 3, 2, 5, true);
    for (int k = 0; k < 3; ++k) {
      Polynomial lhs = (p * q).derivative(k);
      Polynomial rhs = p.derivative(k) * q + p * q.derivative(k);
      CHECK(lhs == rhs);
    }
  }
}

TEST_CASE("square expansion is exact") {
  Polynomial x0 = Polynomial::variable(2, 0);
  Polynomial one = Polynomial::constant(2, 1.0);
  Polynomial sq = (x0 + one) * (x0 + one);
  Polynomial expect(2);
  expect.add_term(Monomial({{0, 2}}), 1.0);
  expect.add_term(Monomial({{0, 1}}), 2.0);
  expect.add_term(Monomial(), 1.0);
  CHECK(sq == expect);
}

TEST_CASE("ring identities on random polynomials") {
  std::mt19937_64 rng(14);
  for (int rep = 0; rep < 30; ++rep) {
    Polynomial a = random_poly(rng, 2, 2, 4, true);
    Polynomial b = random_poly(rng, 2, 2, 4, true);
    Polynomial c = random_poly(rng, 2, 2, 4, true);
    CHECK(a + b == b + a);
    CHECK(a * b == b * a);
    CHECK((a + b) + c == a + (b + c));
    CHECK(a * (b + c) == a * b + a * c);
    CHECK((a - a).is_zero());
  }
}

TEST_CASE("arithmetic prunes vanishing coefficients") {
  Polynomial x0 = Polynomial::variable(1, 0);
  Polynomial one = Polynomial::constant(1, 1.0);
  CHECK(((x0 + one) - x0 - one).is_zero());

  Polynomial tiny(1);
  tiny.add_term(Monomial::variable(0), 1e-13);
  CHECK(tiny.is_zero());
}

TEST_CASE("degree and max_variable edge cases") {
  Polynomial zero(4);
  CHECK(zero.degree() == 0);
  CHECK(zero.max_variable() == -1);
  Polynomial p(4);
  p.add_term(Monomial({{3, 2}, {1, 1}}), 1.0);
  CHECK(p.degree() == 3);
  CHECK(p.max_variable() == 3);
}

TEST_CASE("text form uses descending graded-lex order") {
  Polynomial p(2);
  p.add_term(Monomial(), 1.0);
  p.add_term(Monomial({{0, 2}}), 3.0);
  p.add_term(Monomial({{0, 1}, {1, 1}}), -2.0);
  p.add_term(Monomial({{1, 1}}), 4.0);
  CHECK(p.to_string() == "3*x0^2 - 2*x0^1*x1^1 + 4*x1^1 + 1");
  CHECK(Polynomial(2).to_string() == "0");
}

TEST_CASE("parse accepts grammar variants") {
  Polynomial expect(2);
  expect.add_term(Monomial({{0, 2}}), 1.0);
  expect.add_term(Monomial({{1, 1}}), -2.5);
  CHECK(Polynomial::parse("x0^2 - 2.5*x1", 2) == expect);
  CHECK(Polynomial::parse("1*x0^2 + -2.5*x1^1", 2) == expect);
  CHECK(Polynomial::parse("0", 2).is_zero());
  CHECK(Polynomial::parse("2.5e-1", 1) == Polynomial::constant(1, 0.25));
}

TEST_CASE("parse rejects malformed input") {
  CHECK_THROWS_AS(Polynomial::parse("x9", 2), std::invalid_argument);
  CHECK_THROWS_AS(Polynomial::parse("3*", 2), std::invalid_argument);
  CHECK_THROWS_AS(Polynomial::parse("x0 x1", 2), std::invalid_argument);
  CHECK_THROWS_AS(Polynomial::parse("3x0^-1", 2), std::invalid_argument);
}

TEST_CASE("serialization round-trips exactly") {
  std::mt19937_64 rng(15);
  for (int rep = 0; rep < 100; ++rep) {
    Polynomial p = random_poly(rng, 4, 4, 10, false);
    CHECK(Polynomial::parse(p.to_string(), 4) == p);
  }
}

TEST_CASE("box constructor validates bounds") {
  VectorXd lo(2), hi(2);
  lo << 0.0, 1.0;
  hi << 1.0, 0.5;
  CHECK_THROWS_AS(Box(lo, hi), std::invalid_argument);
  hi << 1.0, 2.0;
  Box b(lo, hi);
  VectorXd in(2), out(2);
  in << 0.5, 1.5;
  out << 0.5, 2.5;
  CHECK(b.contains(in));
  CHECK_FALSE(b.contains(out));
}

TEST_CASE("gradient bound on hand examples") {
  VectorXd lo(1), hi(1);
  lo << -2.0;
  hi << 2.0;
  Box box(lo, hi);

  CHECK(cps::gradient_sup_norm_bound(Polynomial(1), box) == 0.0);

  Polynomial lin = Polynomial::variable(1, 0) * 3.0;
  CHECK(cps::gradient_sup_norm_bound(lin, box) == doctest::Approx(3.0).epsilon(1e-14));

  Polynomial sq = Polynomial::variable(1, 0) * Polynomial::variable(1, 0);
  double L = cps::gradient_sup_norm_bound(sq, box);
  CHECK(L == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("gradient bound dominates sampled gradient norms") {
  std::mt19937_64 rng(16);
  for (int rep = 0; rep < 20; ++rep) {
    Polynomial p = random_poly(rng, 3, 3, 8, false);
    VectorXd lo = random_point(rng, 3, -3.0, 0.0);
    VectorXd hi = lo + random_point(rng, 3, 0.5, 3.0).cwiseAbs();
    Box box(lo, hi);
    double L = cps::gradient_sup_norm_bound(p, box);
    for (int s = 0; s < 50; ++s) {
      VectorXd x(3);
      for (int k = 0; k < 3; ++k) {
        std::uniform_real_distribution<double> d(lo(k), hi(k));
        x(k) = d(rng);
      }
      double norm_sq = 0.0;
      for (int k = 0; k < 3; ++k) {
        double g = p.derivative(k).eval(x);
        norm_sq += g * g;
      }
      CHECK(std::sqrt(norm_sq) <= L + 1e-9);
    }
  }
}

TEST_CASE("quadratic form extraction and reconstruction") {
  Polynomial p(2);
  p.add_term(Monomial({{0, 2}}), 1.0);
  p.add_term(Monomial({{0, 1}, {1, 1}}), 2.0);
  p.add_term(Monomial({{1, 1}}), -1.0);
  p.add_term(Monomial(), 5.0);
  auto f = cps::quadratic_form(p);
  REQUIRE(f.has_value());
  CHECK(f->Q(0, 0) == 1.0);
  CHECK(f->Q(0, 1) == 1.0);
  CHECK(f->Q(1, 0) == 1.0);
  CHECK(f->Q(1, 1) == 0.0);
  CHECK(f->b(0) == 0.0);
  CHECK(f->b(1) == -1.0);
  CHECK(f->c0 == 5.0);

  std::mt19937_64 rng(17);
  for (int s = 0; s < 100; ++s) {
    VectorXd x = random_point(rng, 2, -4.0, 4.0);
    double rebuilt = x.dot(f->Q * x) + f->b.dot(x) + f->c0;
    CHECK(rebuilt == doctest::Approx(p.eval(x)).epsilon(1e-10));
  }
}

TEST_CASE("quadratic form rejects higher degree") {
  Polynomial cubic(1);
  cubic.add_term(Monomial({{0, 3}}), 1.0);
  CHECK_FALSE(cps::quadratic_form(cubic).has_value());
}

TEST_CASE("affine substitution agrees with evaluation at the mapped point") {
  std::mt19937_64 rng(18);
  for (int rep = 0; rep < 40; ++rep) {
    Polynomial p = random_poly(rng, 3, 4, 8, false);
    VectorXd shift = random_point(rng, 3, -2.0, 2.0);
    VectorXd scale = random_point(rng, 3, 0.1, 3.0);
    Polynomial q = cps::substitute_affine(p, shift, scale);
    for (int s = 0; s < 10; ++s) {
      VectorXd z = random_point(rng, 3, -1.0, 1.0);
      VectorXd mapped = shift + scale.cwiseProduct(z).eval();
      CHECK(q.eval(z) == doctest::Approx(p.eval(mapped)).epsilon(1e-9));
    }
  }
}
