#pragma once

// Truncated multivariate Taylor arithmetic ("jets") at a base point of a
// fixed 6-dimensional chart.
//
// Conventions used throughout the library:
//
//   - Chart coordinates are ordered (x1, x2, x3, y1, y2, y3); axis indices
//     run 0..5, with 0..2 the x-block and 3..5 the y-block.
//   - A Jet of order N at base point p stores coefficients c_mu with
//     f(p + u) = sum_{|mu| <= N} c_mu u^mu, u = x - p.
//   - Monomials are enumerated in graded order (total degree first), and
//     within a degree by decreasing exponent of the first axis, recursively.
//     monomial_rank() and monomial_table() realize this bijection.
//   - Binary operations require identical base points and truncate to the
//     smaller order. Differentiation lowers the guaranteed order by one and
//     refuses order-0 input rather than returning garbage.

#include <array>
#include <cstdint>
#include <vector>

namespace plane6 {

inline constexpr int kChartDim = 6;

using Point = std::array<double, kChartDim>;
using Exponents = std::array<std::uint8_t, kChartDim>;

// C(order + 6, 6): number of monomials of total degree <= order.
int jet_coeff_count(int order);

// Monomials of degree <= order, graded order as described above.
const std::vector<Exponents>& monomial_table(int order);

// Inverse of monomial_table ordering.
int monomial_rank(const Exponents& e);

int exponents_degree(const Exponents& e);

class Jet {
 public:
  Jet() : order_(0), base_{}, coef_(1, 0.0) {}
  Jet(int order, const Point& base);

  static Jet constant(double value, int order, const Point& base);
  static Jet coordinate(int axis, int order, const Point& base);

  int order() const { return order_; }
  const Point& base_point() const { return base_; }

  double value() const { return coef_[0]; }
  double coeff(const Exponents& e) const;
  void set_coeff(const Exponents& e, double v);

  const std::vector<double>& raw() const { return coef_; }
  std::vector<double>& raw() { return coef_; }

  Jet truncated(int new_order) const;

  // Largest absolute coefficient; the scale used by relative tolerances.
  double sup_norm() const;

  Jet operator-() const;
  Jet& operator+=(const Jet& rhs);
  Jet& operator-=(const Jet& rhs);
  Jet& operator*=(double s);

  friend Jet operator+(const Jet& a, const Jet& b);
  friend Jet operator-(const Jet& a, const Jet& b);
  friend Jet operator*(const Jet& a, const Jet& b);
  friend Jet operator*(const Jet& a, double s);
  friend Jet operator*(double s, const Jet& a);

  // d/dx_axis; requires order >= 1, result order = order - 1.
  Jet partial(int axis) const;

  // Multiplicative inverse; requires nonzero value at the base point.
  Jet reciprocal() const;

  Jet exp() const;

 private:
  int order_;
  Point base_;
  std::vector<double> coef_;
};

void require_compatible(const Jet& a, const Jet& b);

// Exact re-centering of a polynomial given in absolute chart coordinates:
// terms (mu, c) mean c * x^mu with x the raw coordinates, and the result is
// the jet of that polynomial at `base`. Terms of degree beyond `order` still
// contribute to the retained coefficients.
Jet polynomial_to_jet(const std::vector<std::pair<Exponents, double>>& terms, int order,
                      const Point& base);

// A map U -> R^6 given by six component jets at a common source base point.
// Used both as a chart diffeomorphism and as a tuple of scalar fields.
struct JetMap {
  std::array<Jet, 6> comp;

  int order() const { return comp[0].order(); }
  const Point& base_point() const { return comp[0].base_point(); }

  // Image of the base point (the constant terms).
  Point value() const;

  static JetMap identity(int order, const Point& base);
};

// f must be based at phi.value(); the result is based at phi.base_point().
Jet compose(const Jet& f, const JetMap& phi);

// Truncated functional composition phi o psi (psi applied first).
JetMap compose(const JetMap& phi, const JetMap& psi);

// Jacobian of phi at its base point.
std::array<std::array<double, 6>, 6> jacobian_at_base(const JetMap& phi);

// Newton inversion on the jet ring: returns psi with phi o psi = identity
// (based at phi.value()) up to the truncation order. Requires an invertible
// Jacobian at the base point.
JetMap invert(const JetMap& phi);

}  // namespace plane6
