#pragma once

// Rank-3 plane fields D on the 6-dimensional chart, described both by three
// spanning vector fields and by three annihilating 1-forms. The library only
// analyzes plane fields that are maximally nonintegrable at the base point:
// X_1, X_2, X_3, [X_2,X_3], [X_3,X_1], [X_1,X_2] span the tangent space.

#include <array>
#include <cstdint>
#include <vector>

#include "plane6/exterior.hpp"
#include "plane6/jet.hpp"

namespace plane6 {

// Totally antisymmetric symbol on three indices, eps3(0,1,2) = 1.
int eps3(int i, int j, int k);

struct NondegeneracyCertificate {
  double gram_determinant = 0.0;
  double sigma_min = 0.0;
  double sigma_max = 0.0;
  bool verdict = false;
};

class Distribution {
 public:
  // Computes the generators as the pointwise-jet kernel of the annihilators.
  static Distribution from_annihilators(const std::array<KForm, 3>& theta);

  // Computes the annihilators as the dual completion of the generators.
  static Distribution from_generators(const std::array<VectorField, 3>& gens);

  const std::array<VectorField, 3>& generators() const { return gens_; }
  const std::array<KForm, 3>& annihilators() const { return theta_; }

  int order() const;
  const Point& base_point() const { return theta_[0].base_point(); }

  // max_ij |theta_i(X_j)| relative to the input scales.
  double annihilation_residual() const;

 private:
  Distribution() = default;
  std::array<VectorField, 3> gens_;
  std::array<KForm, 3> theta_;
};

// The plane field annihilated by dy_i + eps_{ijk} x^j dx^k, expanded at base.
Distribution flat_model(const Point& base, int order);

// Flat model plus c times three seed-generated polynomial 1-forms in the
// dx-components (degree <= 3, coefficients in [-1, 1], fixed global
// polynomials independent of the base point). Throws if nondegeneracy is
// lost at the base point.
Distribution perturbed_family(double c, std::uint64_t seed, const Point& base, int order);

NondegeneracyCertificate check_nondegenerate(const Distribution& d);

// Transport: generators pushed forward, annihilators pulled back along the
// inverse; the result lives at phi(base).
Distribution apply_diffeo(const Distribution& d, const JetMap& phi);

}  // namespace plane6
