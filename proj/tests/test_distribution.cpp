#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "plane6/distribution.hpp"
#include "plane6/rng.hpp"

using namespace plane6;

namespace {

Point origin() { return Point{0, 0, 0, 0, 0, 0}; }

JetMap random_cubic_diffeo(DeterministicRng& rng, const Point& base, int order, double scale) {
  JetMap phi = JetMap::identity(order, base);
  for (int i = 0; i < 6; ++i) {
    Jet pert(order, base);
    for (double& c : pert.raw()) c = scale * rng.symmetric();
    for (int r = 0; r < jet_coeff_count(1); ++r) pert.raw()[r] = 0.0;
    const size_t cap = static_cast<size_t>(jet_coeff_count(std::min(order, 3)));
    for (size_t r = cap; r < pert.raw().size(); ++r) pert.raw()[r] = 0.0;
    phi.comp[i] += pert;
  }
  return phi;
}

}  // namespace

TEST_CASE("construct from coordinate fields splits the chart") {
  Point p = origin();
  std::array<VectorField, 3> gens = {VectorField::coordinate_axis(0, 4, p),
                                     VectorField::coordinate_axis(1, 4, p),
                                     VectorField::coordinate_axis(2, 4, p)};
  Distribution d = Distribution::from_generators(gens);
  // Annihilators span {dy1, dy2, dy3}: no dx components at all.
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a) CHECK(d.annihilators()[i].comp(a).sup_norm() == 0.0);
  CHECK(d.annihilation_residual() < 1e-14);

  // All brackets vanish, so the certificate must refuse.
  CHECK_FALSE(check_nondegenerate(d).verdict);
}

TEST_CASE("flat model annihilators and generators") {
  Point p = origin();
  Distribution d = flat_model(p, 4);

  // theta_1 = dy1 + x2 dx3 - x3 dx2.
  const KForm& t1 = d.annihilators()[0];
  CHECK(t1.comp(3).value() == doctest::Approx(1.0));
  Exponents e2{}, e3{};
  e2[1] = 1;
  e3[2] = 1;
  CHECK(t1.comp(2).coeff(e2) == doctest::Approx(1.0));
  CHECK(t1.comp(1).coeff(e3) == doctest::Approx(-1.0));

  // d theta_1 = 2 dx2 ^ dx3.
  KForm dt1 = exterior_derivative(t1);
  CHECK(dt1.comp(std::vector<int>{1, 2}).value() == doctest::Approx(2.0));
  CHECK(dt1.sup_norm() == doctest::Approx(2.0));

  // Generators carry the expected x-block and annihilate the triple.
  for (int k = 0; k < 3; ++k) {
    CHECK(d.generators()[k].comp(k).value() == doctest::Approx(1.0));
    for (int a = 0; a < 3; ++a)
      if (a != k) CHECK(d.generators()[k].comp(a).sup_norm() == 0.0);
  }
  CHECK(d.annihilation_residual() < 1e-14);

  CHECK(check_nondegenerate(d).verdict);
  Point q{0.4, -0.7, 0.2, 1.1, -0.3, 0.6};
  CHECK(check_nondegenerate(flat_model(q, 4)).verdict);
}

TEST_CASE("dependent annihilator triple is rejected") {
  Point p = origin();
  KForm dx1 = KForm::coordinate_differential(0, 3, p);
  KForm dx2 = KForm::coordinate_differential(1, 3, p);
  CHECK_THROWS_AS(Distribution::from_annihilators({dx1, dx1, dx2}), std::invalid_argument);
}

TEST_CASE("perturbed family") {
  Point p = origin();
  SUBCASE("c = 0 reproduces the flat model coefficient-by-coefficient") {
    Distribution d0 = perturbed_family(0.0, 1, p, 4);
    Distribution fl = flat_model(p, 4);
    for (int i = 0; i < 3; ++i) {
      KForm diff = d0.annihilators()[i] - fl.annihilators()[i];
      CHECK(diff.sup_norm() == 0.0);
    }
  }
  SUBCASE("small perturbations stay nondegenerate") {
    CHECK(check_nondegenerate(perturbed_family(0.1, 1, p, 4)).verdict);
    CHECK(check_nondegenerate(perturbed_family(0.05, 2, p, 4)).verdict);
  }
  SUBCASE("same seed gives identical jets, different seeds differ") {
    Distribution a = perturbed_family(0.1, 7, p, 4);
    Distribution b = perturbed_family(0.1, 7, p, 4);
    Distribution c = perturbed_family(0.1, 8, p, 4);
    double same = 0.0, diff = 0.0;
    for (int i = 0; i < 3; ++i) {
      same = std::max(same, (a.annihilators()[i] - b.annihilators()[i]).sup_norm());
      diff = std::max(diff, (a.annihilators()[i] - c.annihilators()[i]).sup_norm());
    }
    CHECK(same == 0.0);
    CHECK(diff > 1e-3);
  }
  SUBCASE("perturbation is a fixed global field: base point only re-centers it") {
    Point q{0.2, -0.1, 0.3, 0.0, 0.1, -0.2};
    Distribution dq = perturbed_family(0.1, 3, q, 4);
    Distribution dp = perturbed_family(0.1, 3, p, 5);
    for (int i = 0; i < 3; ++i)
      for (int a = 0; a < 6; ++a) {
        const Jet& jp = dp.annihilators()[i].comp(a);
        // Evaluate dp's coefficient at offset q - p by brute force.
        double val = 0.0;
        const auto& mono = monomial_table(jp.order());
        for (size_t r = 0; r < mono.size(); ++r) {
          double term = jp.raw()[r];
          for (int ax = 0; ax < 6; ++ax)
            for (int t = 0; t < mono[r][ax]; ++t) term *= (q[ax] - p[ax]);
          val += term;
        }
        CHECK(val == doctest::Approx(dq.annihilators()[i].comp(a).value()).epsilon(1e-10));
      }
  }
}

TEST_CASE("apply_diffeo") {
  Point p = origin();
  DeterministicRng rng(2024);

  SUBCASE("identity map keeps the distribution") {
    Distribution d = flat_model(p, 4);
    Distribution d2 = apply_diffeo(d, JetMap::identity(5, p));
    for (int i = 0; i < 3; ++i)
      CHECK((d2.annihilators()[i] - d.annihilators()[i]).sup_norm() < 1e-12);
  }

  SUBCASE("linear map x -> 2x keeps nondegeneracy") {
    Distribution d = flat_model(p, 4);
    JetMap two = JetMap::identity(5, p);
    for (int i = 0; i < 6; ++i) two.comp[i] = Jet::coordinate(i, 5, p) * 2.0;
    CHECK(check_nondegenerate(apply_diffeo(d, two)).verdict);
  }

  SUBCASE("verdict invariant under random diffeos") {
    for (int k = 0; k < 5; ++k) {
      JetMap phi = random_cubic_diffeo(rng, p, 5, 0.05);
      for (std::uint64_t seed : {11ull, 12ull, 13ull}) {
        Distribution d = perturbed_family(0.05, seed, p, 4);
        bool before = check_nondegenerate(d).verdict;
        bool after = check_nondegenerate(apply_diffeo(d, phi)).verdict;
        CHECK(before == after);
      }
    }
  }
}
