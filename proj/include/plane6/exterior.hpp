#pragma once

// Differential forms and vector fields with Jet coefficients on the fixed
// 6-dimensional chart, and the exterior-calculus operations on them: wedge,
// exterior derivative, interior product / evaluation, Lie bracket, and
// transport under a chart diffeomorphism.
//
// A KForm of degree k stores one Jet per strictly increasing k-tuple of axis
// indices, in the lexicographic order produced by combination_table(k).

#include <array>
#include <vector>

#include "plane6/jet.hpp"

namespace plane6 {

// Strictly increasing k-subsets of {0..5}, lexicographic.
const std::vector<std::vector<int>>& combination_table(int k);
int combination_rank(int k, const std::vector<int>& combo);

class VectorField {
 public:
  VectorField() = default;
  VectorField(int order, const Point& base);

  static VectorField coordinate_axis(int axis, int order, const Point& base);

  int order() const;
  const Point& base_point() const { return comp_[0].base_point(); }

  Jet& comp(int axis) { return comp_[axis]; }
  const Jet& comp(int axis) const { return comp_[axis]; }

  // Component values at the base point.
  std::array<double, 6> value() const;

  double sup_norm() const;

  VectorField operator+(const VectorField& rhs) const;
  VectorField operator-(const VectorField& rhs) const;
  VectorField operator*(double s) const;
  VectorField operator*(const Jet& f) const;

 private:
  std::array<Jet, 6> comp_;
};

class KForm {
 public:
  KForm() : degree_(0) {}
  KForm(int degree, int order, const Point& base);

  // dx^axis as a 1-form.
  static KForm coordinate_differential(int axis, int order, const Point& base);
  static KForm from_jet(const Jet& f);  // degree 0

  int degree() const { return degree_; }
  int order() const;
  const Point& base_point() const { return comp_[0].base_point(); }
  int component_count() const { return static_cast<int>(comp_.size()); }

  Jet& comp(int rank) { return comp_[rank]; }
  const Jet& comp(int rank) const { return comp_[rank]; }
  Jet& comp(const std::vector<int>& combo) { return comp_[combination_rank(degree_, combo)]; }
  const Jet& comp(const std::vector<int>& combo) const {
    return comp_[combination_rank(degree_, combo)];
  }

  double sup_norm() const;

  KForm operator+(const KForm& rhs) const;
  KForm operator-(const KForm& rhs) const;
  KForm operator-() const;
  KForm operator*(double s) const;
  KForm operator*(const Jet& f) const;

 private:
  int degree_;
  std::vector<Jet> comp_;
};

KForm wedge(const KForm& a, const KForm& b);
KForm exterior_derivative(const KForm& a);

// Interior product iota_X a; degree drops by one. Degree-0 input is refused.
KForm interior_product(const KForm& a, const VectorField& x);

// Full evaluation a(x_1, ..., x_k) as a Jet; the span length must equal the
// degree of a.
Jet evaluate(const KForm& a, const std::vector<VectorField>& args);

VectorField lie_bracket(const VectorField& x, const VectorField& y);

// Pullback of a form along phi (coefficients land at phi.base_point()).
KForm pullback(const KForm& a, const JetMap& phi);

// Pushforward of a field along phi (components land at phi.value()); needs
// the inverse map, which callers usually already have.
VectorField pushforward(const VectorField& x, const JetMap& phi, const JetMap& phi_inverse);
VectorField pushforward(const VectorField& x, const JetMap& phi);

}  // namespace plane6
