#pragma once

#include <Eigen/Core>

#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace cps {

// Sparse multivariate polynomials over a fixed variable space x0, x1, ...
// Values are immutable after construction; all operations return new values,
// so they can be shared freely across threads.

/// Product of variables with positive integer exponents. The empty product
/// is the constant monomial 1.
class Monomial {
 public:
  Monomial() = default;
  explicit Monomial(std::vector<std::pair<int, int>> powers);
  static Monomial variable(int index, int exponent = 1);

  int degree() const { return degree_; }
  int exponent_of(int var) const;
  int max_variable() const;  // -1 for the constant monomial
  const std::vector<std::pair<int, int>>& powers() const { return powers_; }

  Monomial operator*(const Monomial& other) const;
  double eval(const Eigen::VectorXd& point) const;

  // Graded lexicographic: lower total degree sorts first; ties compare
  // exponents starting at variable 0 (smaller exponent sorts first).
  bool operator<(const Monomial& other) const;
  bool operator==(const Monomial& other) const;

 private:
  std::vector<std::pair<int, int>> powers_;  // sorted by variable index
  int degree_ = 0;
};

// Coefficients with magnitude below this are dropped after every operation.
inline constexpr double kCoeffTol = 1e-12;

class Polynomial {
 public:
  Polynomial() = default;  // zero polynomial over zero variables
  explicit Polynomial(int nvars);
  static Polynomial constant(int nvars, double value);
  static Polynomial variable(int nvars, int index);

  int nvars() const { return nvars_; }
  bool is_zero() const { return terms_.empty(); }
  int degree() const;        // 0 for the zero polynomial
  int max_variable() const;  // -1 if no variable appears
  std::size_t term_count() const { return terms_.size(); }
  const std::map<Monomial, double>& terms() const { return terms_; }
  double coeff(const Monomial& m) const;

  /// point must cover every variable index used (size > max_variable()).
  double eval(const Eigen::VectorXd& point) const;

  Polynomial derivative(int var) const;

  Polynomial operator-() const;
  Polynomial operator+(const Polynomial& other) const;
  Polynomial operator-(const Polynomial& other) const;
  Polynomial operator*(const Polynomial& other) const;
  Polynomial operator*(double s) const;
  Polynomial& operator+=(const Polynomial& other);
  Polynomial& operator-=(const Polynomial& other);
  bool operator==(const Polynomial& other) const;

  /// Accumulate coeff on monomial m, pruning near-zero results.
  void add_term(const Monomial& m, double coeff);

  // Text form: terms in descending graded-lex order, "coeff*x<k>^<e>" joined
  // by " + " / " - ". Round-trips exactly through parse().
  std::string to_string() const;
  static Polynomial parse(const std::string& text, int nvars);

 private:
  std::map<Monomial, double> terms_;
  int nvars_ = 0;
};

inline Polynomial operator*(double s, const Polynomial& p) { return p * s; }

/// Axis-aligned box; lower(k) <= upper(k) for every axis.
struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;

  Box() = default;
  Box(Eigen::VectorXd lo, Eigen::VectorXd hi);

  int dimension() const { return static_cast<int>(lower.size()); }
  Eigen::VectorXd center() const { return 0.5 * (lower + upper); }
  Eigen::VectorXd widths() const { return upper - lower; }
  bool contains(const Eigen::VectorXd& point, double tol = 0.0) const;
};

/// Interval bound M >= sup over the box of |p|: each monomial is bounded by
/// |coeff| * prod_k max(|lo_k|, |hi_k|)^exp.
double sup_abs_bound(const Polynomial& p, const Box& box);

/// Interval bound L >= sup over the box of the euclidean norm of grad p,
/// from per-partial sup_abs_bound values. Box must cover every variable of p.
double gradient_sup_norm_bound(const Polynomial& p, const Box& box);

/// p(z) = z'Qz + b'z + c0 with Q symmetric; empty if degree exceeds 2.
struct QuadraticForm {
  Eigen::MatrixXd Q;
  Eigen::VectorXd b;
  double c0 = 0.0;
};
std::optional<QuadraticForm> quadratic_form(const Polynomial& p);

/// Shortest text that round-trips the value (%.17g).
std::string format_double(double v);

/// Substitute x_v := shift(v) + scale(v) * x_v for every variable. Both
/// vectors must cover every variable of p.
Polynomial substitute_affine(const Polynomial& p, const Eigen::VectorXd& shift,
                             const Eigen::VectorXd& scale);

}  // namespace cps
