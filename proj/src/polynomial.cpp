#include "cps/polynomial.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <stdexcept>

namespace cps {

namespace {

double ipow(double base, int e) {
  double r = 1.0;
  while (e > 0) {
    if (e & 1) r *= base;
    base *= base;
    e >>= 1;
  }
  return r;
}

}  // namespace

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

Monomial::Monomial(std::vector<std::pair<int, int>> powers) {
  std::sort(powers.begin(), powers.end());
  for (const auto& [var, exp] : powers) {
    if (var < 0) throw std::invalid_argument("monomial: negative variable index");
    if (exp < 0) throw std::invalid_argument("monomial: negative exponent");
    if (exp == 0) continue;
    if (!powers_.empty() && powers_.back().first == var) {
      powers_.back().second += exp;
    } else {
      powers_.emplace_back(var, exp);
    }
    degree_ += exp;
  }
}

Monomial Monomial::variable(int index, int exponent) {
  return Monomial({{index, exponent}});
}

int Monomial::exponent_of(int var) const {
  for (const auto& [v, e] : powers_) {
    if (v == var) return e;
    if (v > var) break;
  }
  return 0;
}

int Monomial::max_variable() const {
  return powers_.empty() ? -1 : powers_.back().first;
}

Monomial Monomial::operator*(const Monomial& other) const {
  Monomial out;
  out.degree_ = degree_ + other.degree_;
  out.powers_.reserve(powers_.size() + other.powers_.size());
  auto a = powers_.begin();
  auto b = other.powers_.begin();
  while (a != powers_.end() || b != other.powers_.end()) {
    if (b == other.powers_.end() || (a != powers_.end() && a->first < b->first)) {
      out.powers_.push_back(*a++);
    } else if (a == powers_.end() || b->first < a->first) {
      out.powers_.push_back(*b++);
    } else {
      out.powers_.emplace_back(a->first, a->second + b->second);
      ++a;
      ++b;
    }
  }
  return out;
}

double Monomial::eval(const Eigen::VectorXd& point) const {
  double r = 1.0;
  for (const auto& [var, exp] : powers_) r *= ipow(point(var), exp);
  return r;
}

bool Monomial::operator<(const Monomial& other) const {
  if (degree_ != other.degree_) return degree_ < other.degree_;
  auto a = powers_.begin();
  auto b = other.powers_.begin();
  while (a != powers_.end() && b != other.powers_.end()) {
    if (a->first != b->first) {
      // the one holding the earlier variable has a positive exponent there
      return a->first > b->first ? true : false;
    }
    if (a->second != b->second) return a->second < b->second;
    ++a;
    ++b;
  }
  return false;  // equal degree and identical prefix implies equal
}

bool Monomial::operator==(const Monomial& other) const {
  return degree_ == other.degree_ && powers_ == other.powers_;
}

Polynomial::Polynomial(int nvars) : nvars_(nvars) {
  if (nvars < 0) throw std::invalid_argument("polynomial: negative nvars");
}

Polynomial Polynomial::constant(int nvars, double value) {
  Polynomial p(nvars);
  p.add_term(Monomial(), value);
  return p;
}

Polynomial Polynomial::variable(int nvars, int index) {
  if (index < 0 || index >= nvars)
    throw std::invalid_argument("polynomial: variable index out of range");
  Polynomial p(nvars);
  p.add_term(Monomial::variable(index), 1.0);
  return p;
}

int Polynomial::degree() const {
  return terms_.empty() ? 0 : terms_.rbegin()->first.degree();
}

int Polynomial::max_variable() const {
  int m = -1;
  for (const auto& [mono, c] : terms_) m = std::max(m, mono.max_variable());
  return m;
}

double Polynomial::coeff(const Monomial& m) const {
  auto it = terms_.find(m);
  return it == terms_.end() ? 0.0 : it->second;
}

double Polynomial::eval(const Eigen::VectorXd& point) const {
  if (point.size() <= max_variable())
    throw std::invalid_argument("polynomial eval: point dimension too small");
  double r = 0.0;
  for (const auto& [mono, c] : terms_) r += c * mono.eval(point);
  return r;
}

Polynomial Polynomial::derivative(int var) const {
  if (var < 0) throw std::invalid_argument("derivative: negative variable index");
  Polynomial out(nvars_);
  for (const auto& [mono, c] : terms_) {
    int e = mono.exponent_of(var);
    if (e == 0) continue;
    std::vector<std::pair<int, int>> powers = mono.powers();
    for (auto& [v, x] : powers) {
      if (v == var) x -= 1;
    }
    out.add_term(Monomial(std::move(powers)), c * e);
  }
  return out;
}

Polynomial Polynomial::operator-() const {
  Polynomial out(nvars_);
  for (const auto& [mono, c] : terms_) out.terms_.emplace(mono, -c);
  return out;
}

Polynomial Polynomial::operator+(const Polynomial& other) const {
  Polynomial out = *this;
  out += other;
  return out;
}

Polynomial Polynomial::operator-(const Polynomial& other) const {
  Polynomial out = *this;
  out -= other;
  return out;
}

Polynomial& Polynomial::operator+=(const Polynomial& other) {
  if (nvars_ != other.nvars_)
    throw std::invalid_argument("polynomial arithmetic: nvars mismatch");
  for (const auto& [mono, c] : other.terms_) add_term(mono, c);
  return *this;
}

Polynomial& Polynomial::operator-=(const Polynomial& other) {
  if (nvars_ != other.nvars_)
    throw std::invalid_argument("polynomial arithmetic: nvars mismatch");
  for (const auto& [mono, c] : other.terms_) add_term(mono, -c);
  return *this;
}

Polynomial Polynomial::operator*(const Polynomial& other) const {
  if (nvars_ != other.nvars_)
    throw std::invalid_argument("polynomial arithmetic: nvars mismatch");
  Polynomial out(nvars_);
  for (const auto& [ma, ca] : terms_)
    for (const auto& [mb, cb] : other.terms_) out.add_term(ma * mb, ca * cb);
  return out;
}

Polynomial Polynomial::operator*(double s) const {
  Polynomial out(nvars_);
  for (const auto& [mono, c] : terms_) out.add_term(mono, c * s);
  return out;
}

bool Polynomial::operator==(const Polynomial& other) const {
  return nvars_ == other.nvars_ && terms_ == other.terms_;
}

void Polynomial::add_term(const Monomial& m, double coeff) {
  if (m.max_variable() >= nvars_)
    throw std::invalid_argument("polynomial: monomial variable beyond nvars");
  auto [it, inserted] = terms_.emplace(m, coeff);
  if (!inserted) it->second += coeff;
  if (std::abs(it->second) < kCoeffTol) terms_.erase(it);
}

std::string Polynomial::to_string() const {
  if (terms_.empty()) return "0";
  std::string out;
  for (auto it = terms_.rbegin(); it != terms_.rend(); ++it) {
    double c = it->second;
    if (out.empty()) {
      if (c < 0) out += "-";
    } else {
      out += c < 0 ? " - " : " + ";
    }
    out += format_double(std::abs(c));
    for (const auto& [var, exp] : it->first.powers()) {
      out += "*x" + std::to_string(var) + "^" + std::to_string(exp);
    }
  }
  return out;
}

namespace {

struct Scanner {
  const char* p;
  const char* end;
  const char* begin;

  void skip_ws() {
    while (p != end && std::isspace(static_cast<unsigned char>(*p))) ++p;
  }
  bool done() {
    skip_ws();
    return p == end;
  }
  [[noreturn]] void fail(const std::string& what) {
    throw std::invalid_argument("poly parse error at offset " +
                                std::to_string(p - begin) + ": " + what);
  }
  int read_int() {
    skip_ws();
    char* after = nullptr;
    long v = std::strtol(p, &after, 10);
    if (after == p) fail("expected integer");
    p = after;
    return static_cast<int>(v);
  }
  double read_number() {
    skip_ws();
    char* after = nullptr;
    double v = std::strtod(p, &after);
    if (after == p) fail("expected number");
    p = after;
    return v;
  }
};

}  // namespace

Polynomial Polynomial::parse(const std::string& text, int nvars) {
  Polynomial out(nvars);
  Scanner s{text.c_str(), text.c_str() + text.size(), text.c_str()};
  bool first = true;
  while (!s.done()) {
    double sign = 1.0;
    s.skip_ws();
    if (*s.p == '+' || *s.p == '-') {
      sign = *s.p == '-' ? -1.0 : 1.0;
      ++s.p;
    } else if (!first) {
      s.fail("expected '+' or '-' between terms");
    }
    s.skip_ws();
    double coeff = 1.0;
    bool saw_factor = false;
    bool pending_factor = false;
    if (s.p != s.end && *s.p != 'x') {
      coeff = s.read_number();
      saw_factor = true;
      s.skip_ws();
      if (s.p != s.end && *s.p == '*') {
        ++s.p;
        pending_factor = true;
      }
    }
    std::vector<std::pair<int, int>> powers;
    while (true) {
      s.skip_ws();
      if (s.p == s.end || *s.p != 'x') {
        if (pending_factor) s.fail("expected factor after '*'");
        break;
      }
      pending_factor = false;
      ++s.p;
      int var = s.read_int();
      if (var < 0 || var >= nvars) s.fail("variable index out of range");
      int exp = 1;
      s.skip_ws();
      if (s.p != s.end && *s.p == '^') {
        ++s.p;
        exp = s.read_int();
        if (exp < 0) s.fail("negative exponent");
      }
      powers.emplace_back(var, exp);
      saw_factor = true;
      s.skip_ws();
      if (s.p != s.end && *s.p == '*') {
        ++s.p;
        pending_factor = true;
        continue;
      }
      break;
    }
    if (!saw_factor) s.fail("empty term");
    out.add_term(Monomial(std::move(powers)), sign * coeff);
    first = false;
  }
  return out;
}

Box::Box(Eigen::VectorXd lo, Eigen::VectorXd hi)
    : lower(std::move(lo)), upper(std::move(hi)) {
  if (lower.size() != upper.size())
    throw std::invalid_argument("box: bound dimensions differ");
  for (int k = 0; k < lower.size(); ++k)
    if (lower(k) > upper(k))
      throw std::invalid_argument("box: lower > upper at axis " + std::to_string(k));
}

bool Box::contains(const Eigen::VectorXd& point, double tol) const {
  if (point.size() != lower.size()) return false;
  for (int k = 0; k < lower.size(); ++k)
    if (point(k) < lower(k) - tol || point(k) > upper(k) + tol) return false;
  return true;
}

double sup_abs_bound(const Polynomial& p, const Box& box) {
  if (box.dimension() <= p.max_variable())
    throw std::invalid_argument("sup_abs_bound: box dimension too small");
  double total = 0.0;
  for (const auto& [mono, c] : p.terms()) {
    double m = std::abs(c);
    for (const auto& [var, exp] : mono.powers()) {
      double mag = std::max(std::abs(box.lower(var)), std::abs(box.upper(var)));
      m *= ipow(mag, exp);
    }
    total += m;
  }
  return total;
}

double gradient_sup_norm_bound(const Polynomial& p, const Box& box) {
  if (box.dimension() <= p.max_variable())
    throw std::invalid_argument("gradient_sup_norm_bound: box dimension too small");
  double sum_sq = 0.0;
  for (int k = 0; k <= p.max_variable(); ++k) {
    Polynomial dk = p.derivative(k);
    if (dk.is_zero()) continue;
    double bk = sup_abs_bound(dk, box);
    sum_sq += bk * bk;
  }
  return std::sqrt(sum_sq);
}

Polynomial substitute_affine(const Polynomial& p, const Eigen::VectorXd& shift,
                             const Eigen::VectorXd& scale) {
  if (shift.size() <= p.max_variable() || scale.size() <= p.max_variable())
    throw std::invalid_argument("substitute_affine: map dimension too small");
  Polynomial out(p.nvars());
  for (const auto& [mono, c] : p.terms()) {
    Polynomial term = Polynomial::constant(p.nvars(), c);
    for (const auto& [var, exp] : mono.powers()) {
      Polynomial lin = Polynomial::constant(p.nvars(), shift(var)) +
                       Polynomial::variable(p.nvars(), var) * scale(var);
      for (int e = 0; e < exp; ++e) term = term * lin;
    }
    out += term;
  }
  return out;
}

std::optional<QuadraticForm> quadratic_form(const Polynomial& p) {
  if (p.degree() > 2) return std::nullopt;
  int n = p.nvars();
  QuadraticForm f;
  f.Q = Eigen::MatrixXd::Zero(n, n);
  f.b = Eigen::VectorXd::Zero(n);
  f.c0 = 0.0;
  for (const auto& [mono, c] : p.terms()) {
    const auto& pw = mono.powers();
    if (mono.degree() == 0) {
      f.c0 = c;
    } else if (mono.degree() == 1) {
      f.b(pw[0].first) = c;
    } else if (pw.size() == 1) {
      f.Q(pw[0].first, pw[0].first) = c;
    } else {
      f.Q(pw[0].first, pw[1].first) = 0.5 * c;
      f.Q(pw[1].first, pw[0].first) = 0.5 * c;
    }
  }
  return f;
}

}  // namespace cps
