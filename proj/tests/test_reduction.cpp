#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "plane6/linsolve.hpp"
#include "plane6/reduction.hpp"
#include "plane6/rng.hpp"

using namespace plane6;

namespace {

Point origin() { return Point{0, 0, 0, 0, 0, 0}; }

AdaptedCoframe two_adapted(const Distribution& d) {
  return reduce_to_two_adapted(build_one_adapted(d), d);
}

double s4_diff(const FundamentalTensor& a, const FundamentalTensor& b) {
  double acc = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) {
          double d = a.s4[i][k][j][l] - b.s4[i][k][j][l];
          acc += d * d;
        }
  return std::sqrt(acc);
}

}  // namespace

TEST_CASE("flat model: pseudo-connection, vanishing curvature, flat frames") {
  Point p = origin();
  Distribution d = flat_model(p, 5);
  AdaptedCoframe cf = two_adapted(d);

  PseudoConnection pc = solve_pseudo_connection(cf);
  CHECK(pc.gauge_dimension == 3);
  CHECK(pc.structure_residual < 1e-10);
  CHECK(pc.gauge_basis.size() == 3);

  CurvatureTwoForms ctf = curvature_two_forms(pc, cf);
  CHECK(ctf.omega_omega_residual < 1e-10);

  auto [ns, ft] = normalize_extract(ctf, pc, cf);
  CHECK(ft.norm_s4 < 1e-8);
  CHECK(ft.norm_s3 < 1e-8);
  CHECK(ft.norm_s2 < 1e-8);
  CHECK(ns.residuals["normalization"] < 1e-10);
  CHECK(ns.residuals["a_trace"] < 1e-8);
  CHECK(ns.residuals["b_match"] < 1e-8);
  CHECK(flatness_test(ft, 1e-8));

  CartanMatrices cm = build_cartan_matrices(pc, cf, ns);
  CHECK(cm.q7_membership < 1e-14);
  CHECK(cm.q8_membership < 1e-14);
  CHECK(cartan_curvature_7(cm).sup_norm() < 1e-9);
  CHECK(cartan_curvature(cm).sup_norm() < 1e-9);
}

TEST_CASE("perturbed model: nonzero fundamental tensor with clean relations") {
  Point p = origin();
  Distribution d = perturbed_family(0.1, 1, p, 5);
  AdaptedCoframe cf = two_adapted(d);

  PseudoConnection pc = solve_pseudo_connection(cf);
  CHECK(pc.gauge_dimension == 3);
  CHECK(pc.structure_residual < 1e-9);

  CurvatureTwoForms ctf = curvature_two_forms(pc, cf);
  auto [ns, ft] = normalize_extract(ctf, pc, cf);
  CHECK(ft.norm_s4 > 1e-4);
  CHECK(ft.relations_residual < 1e-8);
  CHECK(ns.residuals["normalization"] < 1e-9);
  CHECK(ns.residuals["b_match"] < 1e-8);
  CHECK_FALSE(flatness_test(ft, 1e-8));

  CartanMatrices cm = build_cartan_matrices(pc, cf, ns);
  TwoFormValueMatrix phat = cartan_curvature(cm);
  CHECK(phat.sup_norm() > 1e-4);
  CHECK(phat.omega_omega_norm() < 1e-8 * phat.sup_norm());
}

TEST_CASE("level-1 input is rejected as inconsistent") {
  Point p = origin();
  Distribution d = perturbed_family(0.1, 1, p, 5);
  AdaptedCoframe cf1 = build_one_adapted(d);
  CHECK_THROWS_AS(solve_pseudo_connection(cf1), std::invalid_argument);
  AdaptedCoframe fake = cf1;
  fake.level = 2;  // lie about the level; the residual must catch it
  CHECK_THROWS_AS(solve_pseudo_connection(fake), std::runtime_error);
}

TEST_CASE("gauge freedom") {
  Point p = origin();
  Distribution d = perturbed_family(0.1, 1, p, 5);
  AdaptedCoframe cf = two_adapted(d);
  PseudoConnection pc = solve_pseudo_connection(cf);
  CurvatureTwoForms ctf = curvature_two_forms(pc, cf);
  auto [ns, ft] = normalize_extract(ctf, pc, cf);

  SUBCASE("t = 0 is the identity") {
    PseudoConnection same = gauge_shift(pc, {0, 0, 0});
    double diff = 0.0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        diff = std::max(diff, (same.alpha[i][j] - pc.alpha[i][j]).sup_norm());
    CHECK(diff == 0.0);
  }

  SUBCASE("constant shifts leave the structure equations and S4 alone") {
    PseudoConnection moved = gauge_shift(pc, {0.7, -0.3, 0.45});
    // Structure equations hold for the shifted connection too.
    double resid = 0.0;
    for (int i = 0; i < 3; ++i) {
      KForm lhs = exterior_derivative(cf.omega[i]);
      for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 3; ++j) {
          const int e = eps3(i, k, j);
          if (e != 0) lhs = lhs + wedge(moved.beta[k], cf.theta[j]) * static_cast<double>(e);
        }
      for (int j = 0; j < 3; ++j) lhs = lhs + wedge(moved.alpha[i][j], cf.omega[j]);
      resid = std::max(resid, lhs.sup_norm());
    }
    CHECK(resid < 1e-9);

    auto [ns2, ft2] = normalize_extract(curvature_two_forms(moved, cf), moved, cf);
    CHECK(s4_diff(ft, ft2) < 1e-9 * (ft.norm_s4 + 1.0));
  }

  SUBCASE("function-valued shifts leave S4 alone as well") {
    DeterministicRng rng(31);
    const int q = pc.alpha[0][0].order();
    std::array<Jet, 3> t;
    for (int k = 0; k < 3; ++k) {
      Jet jt(q, p);
      for (int r = 0; r < jet_coeff_count(1); ++r) jt.raw()[r] = 0.5 * rng.symmetric();
      t[k] = jt;
    }
    PseudoConnection moved = pc;
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        KForm delta(1, q, p);
        if (i == j)
          for (int k = 0; k < 3; ++k) delta = delta + cf.theta[k] * t[k];
        delta = delta - cf.theta[j] * t[i];
        moved.alpha[i][j] = moved.alpha[i][j] + delta;
      }
      KForm db(1, q, p);
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k) {
          const int e = eps3(i, j, k);
          if (e != 0) db = db + cf.omega[k] * (t[j] * static_cast<double>(e));
        }
      moved.beta[i] = moved.beta[i] + db;
    }
    auto [ns2, ft2] = normalize_extract(curvature_two_forms(moved, cf), moved, cf);
    CHECK(s4_diff(ft, ft2) < 1e-9 * (ft.norm_s4 + 1.0));
  }
}

TEST_CASE("structure blocks have the expected numerical ranks") {
  CHECK(detail::pseudo_connection_system().nullity() == 3);
  CHECK(detail::normalization_system().nullity() == 0);

  // The analytic constant-t directions span the numerical kernel.
  Point p = origin();
  Distribution d = flat_model(p, 5);
  AdaptedCoframe cf = two_adapted(d);
  PseudoConnection pc = solve_pseudo_connection(cf);
  Eigen::MatrixXd kernel = detail::pseudo_connection_system().kernel();
  for (const auto& dir : pc.gauge_basis) {
    Eigen::VectorXd proj = dir - kernel * (kernel.transpose() * dir);
    CHECK(proj.norm() < 1e-10);
  }
}

TEST_CASE("the 7x7 pairing algebra has dimension 21") {
  Eigen::MatrixXd q7 = cartan_q7();
  Eigen::MatrixXd op(49, 49);
  for (int c = 0; c < 49; ++c) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(7, 7);
    e(c / 7, c % 7) = 1.0;
    Eigen::MatrixXd img = q7 * e + e.transpose() * q7;
    for (int r = 0; r < 49; ++r) op(r, c) = img(r / 7, r % 7);
  }
  LeastSquares ls(op);
  CHECK(ls.nullity() == 21);

  // Same count for the 8x8 pairing: so(4,4) has dimension 28.
  Eigen::MatrixXd q8 = cartan_q8();
  Eigen::MatrixXd op8(64, 64);
  for (int c = 0; c < 64; ++c) {
    Eigen::MatrixXd e = Eigen::MatrixXd::Zero(8, 8);
    e(c / 8, c % 8) = 1.0;
    Eigen::MatrixXd img = q8 * e + e.transpose() * q8;
    for (int r = 0; r < 64; ++r) op8(r, c) = img(r / 8, r % 8);
  }
  CHECK(LeastSquares(op8).nullity() == 28);
}
