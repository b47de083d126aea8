#include "plane6/adaptation.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "plane6/linsolve.hpp"

namespace plane6 {

namespace {

// Unknown layout of the level-1 structure block, 117 columns:
//   alpha^i_j expanded as A^i_{j,m} (coframe component m: m<3 theta, m>=3 omega)
//   beta^{ij} likewise, then the nine torsion scalars P^{il}.
int alpha_col(int i, int j, int m) { return (i * 3 + j) * 6 + m; }
int beta_col(int i, int j, int m) { return 54 + (i * 3 + j) * 6 + m; }
int p_col(int i, int l) { return 108 + i * 3 + l; }

Eigen::MatrixXd build_level1_op() {
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(90, 117);
  // d theta_i rows: -alpha^k_k ^ theta_i + alpha^j_i ^ theta_j.
  for (int i = 0; i < 3; ++i) {
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int m = 0; m < 6; ++m) {
          if (b == i) {  // alpha^a_i ^ theta_a
            auto [slot, sign] = basis_wedge(m, a);
            if (slot >= 0) op(i * 15 + slot, alpha_col(a, b, m)) += sign;
          }
          if (a == b) {  // -alpha^a_a ^ theta_i
            auto [slot, sign] = basis_wedge(m, i);
            if (slot >= 0) op(i * 15 + slot, alpha_col(a, b, m)) -= sign;
          }
        }
  }
  // d omega^i rows: -beta^{ij} ^ theta_j - alpha^i_j ^ omega^j
  //                 + P^{il} eps_{ljk} omega^j ^ omega^k.
  for (int i = 0; i < 3; ++i) {
    const int row0 = (3 + i) * 15;
    for (int j = 0; j < 3; ++j)
      for (int m = 0; m < 6; ++m) {
        auto [slot_b, sign_b] = basis_wedge(m, j);
        if (slot_b >= 0) op(row0 + slot_b, beta_col(i, j, m)) -= sign_b;
        auto [slot_a, sign_a] = basis_wedge(m, 3 + j);
        if (slot_a >= 0) op(row0 + slot_a, alpha_col(i, j, m)) -= sign_a;
      }
    for (int l = 0; l < 3; ++l)
      for (int j = 0; j < 3; ++j)
        for (int k = j + 1; k < 3; ++k) {
          const int e = eps3(l, j, k);
          if (e == 0) continue;
          op(row0 + two_form_slot(3 + j, 3 + k), p_col(i, l)) += 2.0 * e;
        }
  }
  return op;
}

const LeastSquares& level1_system() {
  static const LeastSquares ls(build_level1_op());
  return ls;
}

struct TorsionSolve {
  JetMatrix p;                // raw 3x3 torsion jets
  double structure_residual;  // aggregated relative least-squares residual
  double one_adapt_residual;  // omega-omega mismatch of the d theta rows
};

TorsionSolve solve_torsion_jets(const AdaptedCoframe& cf) {
  const int n = cf.order();
  if (n < 2) throw std::invalid_argument("torsion solve: coframe order >= 2 required");
  const Point& base = cf.base_point();
  const auto frame = frame_fields(cf);

  // Right-hand sides: coframe-basis coefficients of d theta_i (minus the eps
  // term) and of d omega^i.
  std::array<std::array<Jet, 15>, 6> rhs;
  double one_adapt = 0.0;
  double rhs_scale = 1.0;
  for (int i = 0; i < 3; ++i) {
    auto c = expand_two_form(exterior_derivative(cf.theta[i]), frame);
    for (int j = 0; j < 3; ++j)
      for (int k = j + 1; k < 3; ++k) {
        Jet& slot = c[two_form_slot(3 + j, 3 + k)];
        slot -= Jet::constant(2.0 * eps3(i, j, k), slot.order(), base);
        one_adapt = std::max(one_adapt, slot.sup_norm());
      }
    for (auto& jet : c) rhs_scale = std::max(rhs_scale, jet.sup_norm());
    rhs[i] = c;
  }
  for (int i = 0; i < 3; ++i) {
    rhs[3 + i] = expand_two_form(exterior_derivative(cf.omega[i]), frame);
    for (auto& jet : rhs[3 + i]) rhs_scale = std::max(rhs_scale, jet.sup_norm());
  }

  int q = rhs[0][0].order();
  for (const auto& block : rhs)
    for (const auto& jet : block) q = std::min(q, jet.order());

  const LeastSquares& ls = level1_system();
  TorsionSolve out{JetMatrix(3, 3, q, base), 0.0, one_adapt / rhs_scale};
  const int coeffs = jet_coeff_count(q);
  for (int r = 0; r < coeffs; ++r) {
    Eigen::VectorXd b(90);
    for (int blk = 0; blk < 6; ++blk)
      for (int s = 0; s < 15; ++s) b[blk * 15 + s] = rhs[blk][s].raw()[r];
    double resid = 0.0;
    Eigen::VectorXd x = ls.solve(b, &resid);
    out.structure_residual = std::max(out.structure_residual, resid / rhs_scale);
    for (int i = 0; i < 3; ++i)
      for (int l = 0; l < 3; ++l) out.p.at(i, l).raw()[r] = x[p_col(i, l)];
  }
  return out;
}

double sigma_ratio_at_base(const AdaptedCoframe& cf) {
  Eigen::MatrixXd m(6, 6);
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 6; ++a) {
      m(i, a) = cf.theta[i].comp(a).value();
      m(3 + i, a) = cf.omega[i].comp(a).value();
    }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  return svd.singularValues()(5) / svd.singularValues()(0);
}

double annihilation_residual(const AdaptedCoframe& cf, const Distribution& d) {
  double scale = 0.0, resid = 0.0;
  for (const auto& t : cf.theta)
    for (const auto& g : d.generators()) {
      scale = std::max(scale, t.sup_norm() * g.sup_norm());
      resid = std::max(resid, evaluate(t, {g}).sup_norm());
    }
  return resid / (scale + 1e-300);
}

}  // namespace

int AdaptedCoframe::order() const {
  int o = theta[0].order();
  for (const auto& f : theta) o = std::min(o, f.order());
  for (const auto& f : omega) o = std::min(o, f.order());
  return o;
}

GroupElement GroupElement::from_constant(const Eigen::Matrix3d& a, const Eigen::Matrix3d& b,
                                         int order, const Point& base) {
  GroupElement g;
  g.A = a;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) g.B[i][j] = Jet::constant(b(i, j), order, base);
  return g;
}

bool GroupElement::b_skew_at_base(double tol) const {
  double m = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) m = std::max(m, std::abs(B[i][j].value() + B[j][i].value()));
  return m <= tol;
}

JetMatrix coframe_matrix(const AdaptedCoframe& cf) {
  const int n = cf.order();
  JetMatrix m(6, 6, n, cf.base_point());
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 6; ++a) {
      m.at(i, a) = cf.theta[i].comp(a).truncated(n);
      m.at(3 + i, a) = cf.omega[i].comp(a).truncated(n);
    }
  return m;
}

std::array<VectorField, 6> frame_fields(const AdaptedCoframe& cf) {
  JetMatrix inv = coframe_matrix(cf).inverse();
  std::array<VectorField, 6> frame;
  for (int col = 0; col < 6; ++col) {
    VectorField v(inv.at(0, 0).order(), cf.base_point());
    for (int a = 0; a < 6; ++a) v.comp(a) = inv.at(a, col);
    frame[col] = v;
  }
  return frame;
}

int two_form_slot(int a, int b) {
  // Requires a < b. theta block 0..2, mixed 3..11, omega block 12..14.
  if (b < 3) return (a == 0) ? (b - 1) : 2;
  if (a >= 3) return 12 + ((a == 3) ? (b - 4) : 2);
  return 3 + a * 3 + (b - 3);
}

std::pair<int, double> basis_wedge(int a, int b) {
  if (a == b) return {-1, 0.0};
  if (a < b) return {two_form_slot(a, b), 1.0};
  return {two_form_slot(b, a), -1.0};
}

std::array<Jet, 15> expand_two_form(const KForm& f, const std::array<VectorField, 6>& frame) {
  std::array<Jet, 15> out;
  for (int a = 0; a < 6; ++a)
    for (int b = a + 1; b < 6; ++b) out[two_form_slot(a, b)] = evaluate(f, {frame[a], frame[b]});
  return out;
}

std::array<Jet, 6> expand_one_form(const KForm& f, const std::array<VectorField, 6>& frame) {
  std::array<Jet, 6> out;
  for (int a = 0; a < 6; ++a) out[a] = evaluate(f, {frame[a]});
  return out;
}

AdaptedCoframe build_one_adapted(const Distribution& d) {
  if (d.order() < 2) throw std::invalid_argument("build_one_adapted: order >= 2 required");
  if (!check_nondegenerate(d).verdict)
    throw std::invalid_argument("build_one_adapted: distribution is degenerate at base point");

  const int n = d.order();
  const Point& base = d.base_point();
  const auto& gens = d.generators();

  // Dual complement: stack the generators as columns, complete with
  // coordinate axes, and read the first three rows of the inverse.
  std::vector<int> extra;
  {
    std::vector<Eigen::VectorXd> basis;
    for (int j = 0; j < 3; ++j) {
      Eigen::VectorXd v(6);
      for (int a = 0; a < 6; ++a) v[a] = gens[j].comp(a).value();
      for (const auto& bb : basis) v -= bb.dot(v) * bb;
      basis.push_back(v.normalized());
    }
    for (double threshold : {0.5, 1e-6}) {
      for (int a = 0; a < 6 && static_cast<int>(extra.size()) < 3; ++a) {
        if (std::find(extra.begin(), extra.end(), a) != extra.end()) continue;
        Eigen::VectorXd v = Eigen::VectorXd::Zero(6);
        v[a] = 1.0;
        for (const auto& bb : basis) v -= bb.dot(v) * bb;
        if (v.norm() > threshold) {
          basis.push_back(v.normalized());
          extra.push_back(a);
        }
      }
    }
  }
  JetMatrix m(6, 6, n, base);
  for (int j = 0; j < 3; ++j)
    for (int a = 0; a < 6; ++a) m.at(a, j) = gens[j].comp(a).truncated(n);
  for (int j = 0; j < 3; ++j) m.at(extra[j], 3 + j) = Jet::constant(1.0, n, base);
  JetMatrix minv = m.inverse();

  std::array<KForm, 3> omega_t;
  for (int i = 0; i < 3; ++i) {
    KForm w(1, n, base);
    for (int a = 0; a < 6; ++a) w.comp(a) = minv.at(i, a);
    omega_t[i] = w;
  }

  // Torsion matrix N of the raw annihilators:
  //   d theta~_i = N_i^m eps_{mjk} omega~^j ^ omega~^k   (mod theta~),
  // recovered by evaluating on generator pairs.
  JetMatrix big_n(3, 3, n - 1, base);
  for (int i = 0; i < 3; ++i) {
    KForm dt = exterior_derivative(d.annihilators()[i]);
    for (int mm = 0; mm < 3; ++mm) {
      Jet acc(n - 1, base);
      for (int a = 0; a < 3; ++a)
        for (int b = 0; b < 3; ++b) {
          const int e = eps3(mm, a, b);
          if (e == 0) continue;
          acc += evaluate(dt, {gens[a], gens[b]}).truncated(n - 1) * (0.25 * e);
        }
      big_n.at(i, mm) = acc;
    }
  }
  {
    Eigen::Matrix3d nv;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) nv(i, j) = big_n.at(i, j).value();
    Eigen::JacobiSVD<Eigen::Matrix3d> svd(nv);
    if (svd.singularValues()(2) < 1e-10 * svd.singularValues()(0))
      throw std::runtime_error(
          "build_one_adapted: torsion matrix singular despite nondegeneracy certificate");
  }
  JetMatrix ninv = big_n.inverse();

  AdaptedCoframe cf;
  for (int i = 0; i < 3; ++i) {
    KForm t(1, n - 1, base);
    for (int j = 0; j < 3; ++j) t = t + d.annihilators()[j] * ninv.at(i, j);
    cf.theta[i] = t;
    cf.omega[i] = omega_t[i];
  }
  cf.level = 1;

  const auto frame = frame_fields(cf);
  double resid = 0.0, scale = 1.0;
  for (int i = 0; i < 3; ++i) {
    auto c = expand_two_form(exterior_derivative(cf.theta[i]), frame);
    for (auto& jet : c) scale = std::max(scale, jet.sup_norm());
    for (int j = 0; j < 3; ++j)
      for (int k = j + 1; k < 3; ++k) {
        Jet slot = c[two_form_slot(3 + j, 3 + k)];
        slot -= Jet::constant(2.0 * eps3(i, j, k), slot.order(), base);
        resid = std::max(resid, slot.sup_norm());
      }
  }
  if (resid > 1e-9 * scale)
    throw std::runtime_error("build_one_adapted: normal form residual out of tolerance");
  return cf;
}

AdaptationReport compute_torsion_P(const AdaptedCoframe& cf, const Distribution& d) {
  if (cf.level < 1) throw std::invalid_argument("compute_torsion_P: level >= 1 required");
  TorsionSolve ts = solve_torsion_jets(cf);

  AdaptationReport rep;
  Eigen::Matrix3d raw;
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < 3; ++l) raw(i, l) = ts.p.at(i, l).value();
  rep.P = 0.5 * (raw + raw.transpose());
  rep.residuals["structure"] = ts.structure_residual;
  rep.residuals["one_adapt"] = ts.one_adapt_residual;
  rep.residuals["p_symmetry"] = (raw - raw.transpose()).norm();
  rep.residuals["p_norm"] = rep.P.norm();
  rep.residuals["annihilation"] = annihilation_residual(cf, d);
  if (ts.structure_residual > 1e-6)
    throw std::runtime_error("compute_torsion_P: structure equations inconsistent (not 1-adapted)");
  return rep;
}

AdaptedCoframe reduce_to_two_adapted(const AdaptedCoframe& cf, const Distribution& d) {
  if (cf.level < 1) throw std::invalid_argument("reduce_to_two_adapted: level 1 input required");
  TorsionSolve ts = solve_torsion_jets(cf);

  const Point& base = cf.base_point();
  const int q = ts.p.at(0, 0).order();

  AdaptedCoframe out;
  out.theta = cf.theta;
  for (int i = 0; i < 3; ++i) {
    KForm w = cf.omega[i] * Jet::constant(1.0, q, base);  // truncate to the shift order
    for (int l = 0; l < 3; ++l) {
      Jet b_il = (ts.p.at(i, l) + ts.p.at(l, i)) * (-0.5 / kTorsionResponse);
      w = w + cf.theta[l] * b_il;
    }
    out.omega[i] = w;
  }
  out.level = 2;

  TorsionSolve check = solve_torsion_jets(out);
  Eigen::Matrix3d p2;
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < 3; ++l)
      p2(i, l) = 0.5 * (check.p.at(i, l).value() + check.p.at(l, i).value());
  if (p2.norm() > 1e-8 * (1.0 + ts.p.at(0, 0).sup_norm()))
    throw std::runtime_error("reduce_to_two_adapted: torsion did not vanish (response constant)");
  (void)d;
  return out;
}

AdaptedCoframe apply_group_element(const AdaptedCoframe& cf, const GroupElement& g) {
  const double det = g.A.determinant();
  if (std::abs(det) < 1e-13) throw std::invalid_argument("apply_group_element: singular A");
  const Eigen::Matrix3d ainv = g.A.inverse();
  const int n = cf.order();
  const Point& base = cf.base_point();

  AdaptedCoframe out;
  for (int i = 0; i < 3; ++i) {
    KForm t(1, n, base);
    for (int j = 0; j < 3; ++j) t = t + cf.theta[j] * (det * ainv(j, i));
    out.theta[i] = t;
  }
  for (int i = 0; i < 3; ++i) {
    KForm w(1, n, base);
    for (int j = 0; j < 3; ++j) {
      KForm inner = cf.omega[j] * Jet::constant(1.0, n, base);
      for (int k = 0; k < 3; ++k) inner = inner + cf.theta[k] * g.B[j][k].truncated(n);
      w = w + inner * g.A(i, j);
    }
    out.omega[i] = w;
  }
  out.level = (cf.level == 2 && g.b_skew_at_base()) ? 2 : 1;
  return out;
}

AdaptationReport verify_adaptation(const AdaptedCoframe& cf, const Distribution& d) {
  AdaptationReport rep;
  rep.residuals["annihilation"] = annihilation_residual(cf, d);
  rep.residuals["independence_sigma_ratio"] = sigma_ratio_at_base(cf);
  if (cf.order() >= 2) {
    TorsionSolve ts = solve_torsion_jets(cf);
    Eigen::Matrix3d raw;
    for (int i = 0; i < 3; ++i)
      for (int l = 0; l < 3; ++l) raw(i, l) = ts.p.at(i, l).value();
    rep.P = 0.5 * (raw + raw.transpose());
    rep.residuals["structure"] = ts.structure_residual;
    rep.residuals["one_adapt"] = ts.one_adapt_residual;
    rep.residuals["p_symmetry"] = (raw - raw.transpose()).norm();
    rep.residuals["p_norm"] = rep.P.norm();
  }
  return rep;
}

namespace detail {

const LeastSquares& torsion_system() { return level1_system(); }

}  // namespace detail

}  // namespace plane6
