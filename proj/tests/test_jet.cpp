#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "plane6/jet.hpp"
#include "plane6/jet_matrix.hpp"

using namespace plane6;

namespace {

Point origin() { return Point{0, 0, 0, 0, 0, 0}; }

double uniform(std::mt19937_64& rng) {
  return 2.0 * ((rng() >> 11) * 0x1.0p-53) - 1.0;
}

Jet random_jet(std::mt19937_64& rng, int order, const Point& base) {
  Jet j(order, base);
  for (double& c : j.raw()) c = uniform(rng);
  return j;
}

// Evaluate the truncated polynomial at base + u by brute force.
double eval(const Jet& j, const std::array<double, 6>& u) {
  const auto& mono = monomial_table(j.order());
  double sum = 0.0;
  for (size_t r = 0; r < mono.size(); ++r) {
    double term = j.raw()[r];
    for (int a = 0; a < 6; ++a)
      for (int k = 0; k < mono[r][a]; ++k) term *= u[a];
    sum += term;
  }
  return sum;
}

}  // namespace

TEST_CASE("monomial tables are consistent with monomial_rank") {
  for (int order : {0, 1, 2, 3, 5}) {
    const auto& table = monomial_table(order);
    CHECK(static_cast<int>(table.size()) == jet_coeff_count(order));
    for (size_t r = 0; r < table.size(); ++r)
      CHECK(monomial_rank(table[r]) == static_cast<int>(r));
  }
  // Graded prefix property: lower-order tables are prefixes of higher ones.
  const auto& t3 = monomial_table(3);
  const auto& t6 = monomial_table(6);
  for (size_t r = 0; r < t3.size(); ++r) CHECK(t3[r] == t6[r]);
}

TEST_CASE("monomial product: x1 * x1 at order 3") {
  Jet x1 = Jet::coordinate(0, 3, origin());
  Jet sq = x1 * x1;
  Exponents e{};
  e[0] = 2;
  CHECK(sq.coeff(e) == doctest::Approx(1.0));
  double total = 0.0;
  for (double c : sq.raw()) total += std::abs(c);
  CHECK(total == doctest::Approx(1.0));
}

TEST_CASE("additive identity and polynomial product (1+x1)(1-x1)") {
  Point p{0.3, -0.2, 0.1, 0.7, -0.5, 0.9};
  std::mt19937_64 rng(7);
  Jet a = random_jet(rng, 4, p);
  Jet zero(4, p);
  CHECK((a + zero - a).sup_norm() == 0.0);

  Jet one = Jet::constant(1.0, 4, p);
  Jet u = Jet::coordinate(0, 4, p) - Jet::constant(p[0], 4, p);  // centered x1
  Jet prod = (one + u) * (one - u);
  Jet expect = one - u * u;
  CHECK((prod - expect).sup_norm() < 1e-15);
}

TEST_CASE("partial derivatives") {
  Point p = origin();
  Jet x1 = Jet::coordinate(0, 4, p);
  Jet x2 = Jet::coordinate(1, 4, p);
  CHECK((x1 * x1).partial(0).coeff(Exponents{1, 0, 0, 0, 0, 0}) == doctest::Approx(2.0));
  CHECK(x1.partial(1).sup_norm() == 0.0);

  // d/dx1 (x1 x2 + x1^3) = x2 + 3 x1^2
  Jet f = x1 * x2 + x1 * x1 * x1;
  Jet df = f.partial(0);
  Jet expect = x2.truncated(3) + (x1 * x1).truncated(3) * 3.0;
  CHECK((df - expect).sup_norm() < 1e-15);

  CHECK_THROWS_AS(Jet::constant(1.0, 0, p).partial(0), std::invalid_argument);
}

TEST_CASE("base point mismatch is rejected") {
  Jet a = Jet::constant(1.0, 3, origin());
  Jet b = Jet::constant(1.0, 3, Point{1, 0, 0, 0, 0, 0});
  CHECK_THROWS_AS(a + b, std::invalid_argument);
}

TEST_CASE("Leibniz rule on random jets") {
  std::mt19937_64 rng(12);
  Point p{0.1, 0.2, -0.3, 0.4, 0.5, -0.6};
  for (int rep = 0; rep < 20; ++rep) {
    Jet a = random_jet(rng, 4, p);
    Jet b = random_jet(rng, 4, p);
    for (int ax = 0; ax < 6; ++ax) {
      Jet lhs = (a * b).partial(ax);
      Jet rhs = a.partial(ax) * b.truncated(3) + a.truncated(3) * b.partial(ax);
      CHECK((lhs - rhs).sup_norm() < 1e-13 * (1.0 + lhs.sup_norm()));
    }
  }
}

TEST_CASE("reciprocal and exp") {
  std::mt19937_64 rng(3);
  Point p = origin();
  Jet a = random_jet(rng, 5, p);
  a.raw()[0] = 2.5;
  Jet r = a.reciprocal();
  Jet prod = a * r;
  prod.raw()[0] -= 1.0;
  CHECK(prod.sup_norm() < 1e-13);

  Jet f = random_jet(rng, 5, p) * 0.3;
  Jet e = f.exp();
  // exp matches pointwise evaluation for small offsets.
  std::array<double, 6> u{0.01, -0.02, 0.015, 0.0, 0.005, -0.01};
  CHECK(eval(e, u) == doctest::Approx(std::exp(eval(f, u))).epsilon(1e-9));
}

TEST_CASE("jet map composition and inversion") {
  Point p = origin();

  SUBCASE("invert identity") {
    JetMap id = JetMap::identity(4, p);
    JetMap inv = invert(id);
    for (int i = 0; i < 6; ++i)
      CHECK((inv.comp[i] - id.comp[i]).sup_norm() < 1e-14);
  }

  SUBCASE("invert x -> 2x") {
    JetMap two;
    for (int i = 0; i < 6; ++i) two.comp[i] = Jet::coordinate(i, 4, p) * 2.0;
    JetMap inv = invert(two);
    for (int i = 0; i < 6; ++i) {
      Jet expect = Jet::coordinate(i, 4, p) * 0.5;
      CHECK((inv.comp[i] - expect).sup_norm() < 1e-14);
    }
  }

  SUBCASE("invert x1 -> x1 + x2^2 at order 3") {
    JetMap phi = JetMap::identity(3, p);
    Jet x2 = Jet::coordinate(1, 3, p);
    phi.comp[0] += x2 * x2;
    JetMap inv = invert(phi);
    Jet expect = Jet::coordinate(0, 3, p) - x2 * x2;
    CHECK((inv.comp[0] - expect).sup_norm() < 1e-13);
    JetMap round = compose(phi, inv);
    for (int i = 0; i < 6; ++i)
      CHECK((round.comp[i] - Jet::coordinate(i, 3, p)).sup_norm() < 1e-12);
  }

  SUBCASE("random cubic perturbation round trip") {
    std::mt19937_64 rng(99);
    Point base{0.2, -0.1, 0.05, 0.3, -0.25, 0.15};
    JetMap phi = JetMap::identity(5, base);
    for (int i = 0; i < 6; ++i) {
      Jet pert = random_jet(rng, 5, base) * 0.05;
      // Keep the linear part the identity: zero out degrees 0 and 1.
      for (int r = 0; r < jet_coeff_count(1); ++r) pert.raw()[r] = 0.0;
      phi.comp[i] += pert;
    }
    JetMap inv = invert(phi);
    JetMap round = compose(phi, inv);
    double resid = 0.0;
    for (int i = 0; i < 6; ++i)
      resid = std::max(resid, (round.comp[i] - Jet::coordinate(i, 5, phi.value())).sup_norm());
    CHECK(resid < 1e-10);
  }

  SUBCASE("singular Jacobian is rejected") {
    JetMap bad = JetMap::identity(3, p);
    bad.comp[0] = Jet::constant(0.0, 3, p);
    CHECK_THROWS_AS(invert(bad), std::invalid_argument);
  }
}

TEST_CASE("jet matrix inverse") {
  std::mt19937_64 rng(5);
  Point p = origin();
  JetMatrix m(6, 6, 3, p);
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) {
      Jet e = random_jet(rng, 3, p) * 0.2;
      if (r == c) e += Jet::constant(1.0, 3, p);
      m.at(r, c) = e;
    }
  JetMatrix inv = m.inverse();
  JetMatrix prod = m * inv;
  double resid = 0.0;
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 6; ++c) {
      Jet e = prod.at(r, c);
      if (r == c) e -= Jet::constant(1.0, e.order(), p);
      resid = std::max(resid, e.sup_norm());
    }
  CHECK(resid < 1e-12);
}
