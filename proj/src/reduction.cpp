#include "plane6/reduction.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "plane6/linsolve.hpp"

namespace plane6 {

namespace {

// Level-2 unknown layout, 72 columns.
int alpha_col(int i, int j, int m) { return (i * 3 + j) * 6 + m; }
int beta_col(int i, int m) { return 54 + i * 6 + m; }

// Unordered symmetric pair index on {0,1,2}.
int pair6(int i, int k) {
  static const int table[3][3] = {{0, 1, 2}, {1, 3, 4}, {2, 4, 5}};
  return table[i][k];
}

int theta_theta_slot(int l, int m) { return two_form_slot(l, m); }  // l < m in 0..2
int theta_omega_slot(int k, int l) { return 3 + k * 3 + l; }

Eigen::MatrixXd build_level2_op() {
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(90, 72);
  // d theta_i rows: -alpha^k_k ^ theta_i + alpha^j_i ^ theta_j.
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 3; ++a)
      for (int b = 0; b < 3; ++b)
        for (int m = 0; m < 6; ++m) {
          if (b == i) {
            auto [slot, sign] = basis_wedge(m, a);
            if (slot >= 0) op(i * 15 + slot, alpha_col(a, b, m)) += sign;
          }
          if (a == b) {
            auto [slot, sign] = basis_wedge(m, i);
            if (slot >= 0) op(i * 15 + slot, alpha_col(a, b, m)) -= sign;
          }
        }
  // d omega^i rows: -eps^{ikj} beta_k ^ theta_j - alpha^i_j ^ omega^j.
  for (int i = 0; i < 3; ++i) {
    const int row0 = (3 + i) * 15;
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j) {
        const int e = eps3(i, k, j);
        if (e == 0) continue;
        for (int m = 0; m < 6; ++m) {
          auto [slot, sign] = basis_wedge(m, j);
          if (slot >= 0) op(row0 + slot, beta_col(k, m)) -= e * sign;
        }
      }
    for (int j = 0; j < 3; ++j)
      for (int m = 0; m < 6; ++m) {
        auto [slot, sign] = basis_wedge(m, 3 + j);
        if (slot >= 0) op(row0 + slot, alpha_col(i, j, m)) -= sign;
      }
  }
  return op;
}

const LeastSquares& level2_system() {
  static const LeastSquares ls(build_level2_op());
  return ls;
}

// Normalization unknown layout, 72 columns: u (9), v (9), the symmetric
// theta-theta residue S^i_{(jk)} (18), and the pair-symmetric S^{(ik)}_{(jl)}
// block (36).
int u_col(int i, int k) { return i * 3 + k; }
int v_col(int i, int k) { return 9 + i * 3 + k; }
int s3_col(int i, int p) { return 18 + i * 6 + p; }
int s4_col(int p1, int p2) { return 36 + p1 * 6 + p2; }

Eigen::MatrixXd build_normalization_op() {
  Eigen::MatrixXd op = Eigen::MatrixXd::Zero(120, 72);
  int row = 0;
  // theta-theta match:
  //   a^i_j|(lm) = d^i_j (u^m_l - u^l_m) - d_{jm} u^i_l + d_{jl} u^i_m
  //                + 2 eps^{clm} S^i_{(jc)}.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 3; ++l)
        for (int m = l + 1; m < 3; ++m) {
          if (i == j) {
            op(row, u_col(m, l)) += 1.0;
            op(row, u_col(l, m)) -= 1.0;
          }
          if (j == m) op(row, u_col(i, l)) -= 1.0;
          if (j == l) op(row, u_col(i, m)) += 1.0;
          const int c = 3 - l - m;
          op(row, s3_col(i, pair6(j, c))) += 2.0 * eps3(c, l, m);
          ++row;
        }
  // theta-omega match: a^i_j|(kl) = -d^i_j v^k_l + d_{jk} v^i_l + S^{(ik)}_{(jl)}.
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          if (i == j) op(row, v_col(k, l)) -= 1.0;
          if (j == k) op(row, v_col(i, l)) += 1.0;
          op(row, s4_col(pair6(i, k), pair6(j, l))) += 1.0;
          ++row;
        }
  // Trace conditions S^i_{(ik)} = 0 and S^{(ik)}_{(il)} = 0.
  for (int k = 0; k < 3; ++k) {
    for (int i = 0; i < 3; ++i) op(row, s3_col(i, pair6(i, k))) += 1.0;
    ++row;
  }
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      for (int i = 0; i < 3; ++i) op(row, s4_col(pair6(i, k), pair6(i, l))) += 1.0;
      ++row;
    }
  return op;
}

const LeastSquares& normalization_ls() {
  static const LeastSquares ls(build_normalization_op());
  return ls;
}

KForm basis_form(const AdaptedCoframe& cf, int m) {
  return (m < 3) ? cf.theta[m] : cf.omega[m - 3];
}

}  // namespace

double TwoFormValueMatrix::sup_norm() const {
  double m = 0.0;
  for (const auto& entry : slots)
    for (double v : entry) m = std::max(m, std::abs(v));
  return m;
}

double TwoFormValueMatrix::omega_omega_norm() const {
  double m = 0.0;
  for (const auto& entry : slots)
    for (int s = 12; s < 15; ++s) m = std::max(m, std::abs(entry[s]));
  return m;
}

PseudoConnection solve_pseudo_connection(const AdaptedCoframe& cf) {
  if (cf.level != 2)
    throw std::invalid_argument("solve_pseudo_connection: 2-adapted coframe required");
  if (cf.order() < 3)
    throw std::invalid_argument("solve_pseudo_connection: order >= 3 required");

  const Point& base = cf.base_point();
  const auto frame = frame_fields(cf);

  std::array<std::array<Jet, 15>, 6> rhs;
  double rhs_scale = 1.0;
  for (int i = 0; i < 3; ++i) {
    auto c = expand_two_form(exterior_derivative(cf.theta[i]), frame);
    for (int j = 0; j < 3; ++j)
      for (int k = j + 1; k < 3; ++k) {
        Jet& slot = c[two_form_slot(3 + j, 3 + k)];
        slot -= Jet::constant(2.0 * eps3(i, j, k), slot.order(), base);
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

  const LeastSquares& ls = level2_system();
  PseudoConnection pc;
  pc.coframe = cf;
  pc.gauge_dimension = ls.nullity();
  if (pc.gauge_dimension != 3)
    throw std::runtime_error("solve_pseudo_connection: gauge dimension is not 3");

  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int m = 0; m < 6; ++m) pc.alpha_coef[i][j][m] = Jet(q, base);
  for (int i = 0; i < 3; ++i)
    for (int m = 0; m < 6; ++m) pc.beta_coef[i][m] = Jet(q, base);

  const int coeffs = jet_coeff_count(q);
  for (int r = 0; r < coeffs; ++r) {
    Eigen::VectorXd b(90);
    for (int blk = 0; blk < 6; ++blk)
      for (int s = 0; s < 15; ++s) b[blk * 15 + s] = rhs[blk][s].raw()[r];
    double resid = 0.0;
    Eigen::VectorXd x = ls.solve(b, &resid);
    pc.structure_residual = std::max(pc.structure_residual, resid / rhs_scale);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int m = 0; m < 6; ++m) pc.alpha_coef[i][j][m].raw()[r] = x[alpha_col(i, j, m)];
    for (int i = 0; i < 3; ++i)
      for (int m = 0; m < 6; ++m) pc.beta_coef[i][m].raw()[r] = x[beta_col(i, m)];
  }
  if (pc.structure_residual > 1e-7)
    throw std::runtime_error(
        "solve_pseudo_connection: inconsistent structure equations (input not 2-adapted)");

  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      KForm f(1, q, base);
      for (int m = 0; m < 6; ++m) f = f + basis_form(cf, m) * pc.alpha_coef[i][j][m];
      pc.alpha[i][j] = f;
    }
    KForm g(1, q, base);
    for (int m = 0; m < 6; ++m) g = g + basis_form(cf, m) * pc.beta_coef[i][m];
    pc.beta[i] = g;
  }

  // Constant-t kernel directions, one per t-axis.
  for (int c = 0; c < 3; ++c) {
    Eigen::VectorXd dir = Eigen::VectorXd::Zero(72);
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j) {
        if (i == j) dir[alpha_col(i, j, c)] += 1.0;
        if (i == c) dir[alpha_col(i, j, j)] -= 1.0;
      }
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        const int e = eps3(i, c, k);
        if (e != 0) dir[beta_col(i, 3 + k)] += e;
      }
    pc.gauge_basis.push_back(dir.normalized());
  }
  return pc;
}

PseudoConnection gauge_shift(const PseudoConnection& pc, const std::array<double, 3>& t) {
  PseudoConnection out = pc;
  const AdaptedCoframe& cf = pc.coframe;
  const int q = pc.alpha_coef[0][0][0].order();
  const Point& base = cf.base_point();

  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      if (i == j)
        for (int k = 0; k < 3; ++k) out.alpha_coef[i][j][k] += Jet::constant(t[k], q, base);
      out.alpha_coef[i][j][j] -= Jet::constant(t[i], q, base);
    }
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      double acc = 0.0;
      for (int j = 0; j < 3; ++j) acc += eps3(i, j, k) * t[j];
      if (acc != 0.0) out.beta_coef[i][3 + k] += Jet::constant(acc, q, base);
    }

  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      KForm f(1, q, base);
      for (int m = 0; m < 6; ++m) f = f + basis_form(cf, m) * out.alpha_coef[i][j][m];
      out.alpha[i][j] = f;
    }
    KForm g(1, q, base);
    for (int m = 0; m < 6; ++m) g = g + basis_form(cf, m) * out.beta_coef[i][m];
    out.beta[i] = g;
  }
  return out;
}

CurvatureTwoForms curvature_two_forms(const PseudoConnection& pc, const AdaptedCoframe& cf) {
  const int q = pc.alpha[0][0].order();
  if (q < 1) throw std::invalid_argument("curvature_two_forms: insufficient order");
  const auto frame = frame_fields(cf);

  CurvatureTwoForms out;
  double scale = 1.0;
  for (int i = 0; i < 3; ++i) {
    for (int j = 0; j < 3; ++j) {
      KForm a = exterior_derivative(pc.alpha[i][j]);
      for (int k = 0; k < 3; ++k) a = a + wedge(pc.alpha[i][k], pc.alpha[k][j]);
      a = a + wedge(cf.omega[i], pc.beta[j]) * 2.0;
      out.a2[i][j] = a;
      out.a_coef[i][j] = expand_two_form(a, frame);
      for (const auto& jet : out.a_coef[i][j]) scale = std::max(scale, jet.sup_norm());
    }
    KForm b = exterior_derivative(pc.beta[i]);
    for (int j = 0; j < 3; ++j) b = b - wedge(pc.alpha[j][i], pc.beta[j]);
    out.b2[i] = b;
    out.b_coef[i] = expand_two_form(b, frame);
  }

  double oo = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int s = 12; s < 15; ++s) oo = std::max(oo, out.a_coef[i][j][s].sup_norm());
  out.omega_omega_residual = oo / scale;
  if (out.omega_omega_residual > 1e-8)
    throw std::runtime_error("curvature_two_forms: A has a pure-omega part");
  return out;
}

std::pair<NormalizationState, FundamentalTensor> normalize_extract(const CurvatureTwoForms& ctf,
                                                                   const PseudoConnection& pc,
                                                                   const AdaptedCoframe& cf) {
  (void)pc;
  const Point& base = cf.base_point();
  const LeastSquares& ls = normalization_ls();
  if (ls.nullity() != 0)
    throw std::runtime_error("normalize_extract: normalization system is singular");

  int r_order = ctf.a_coef[0][0][0].order();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (const auto& jet : ctf.a_coef[i][j]) r_order = std::min(r_order, jet.order());

  double scale = 1.0;
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (const auto& jet : ctf.a_coef[i][j]) scale = std::max(scale, jet.sup_norm());

  NormalizationState ns;
  FundamentalTensor ft;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      ns.tau_theta[i][k] = Jet(r_order, base);
      ns.tau_omega[i][k] = Jet(r_order, base);
    }
  std::array<std::array<Jet, 6>, 3> s3_jets;
  std::array<std::array<Jet, 6>, 6> s4_jets;
  for (auto& row : s3_jets)
    for (auto& jet : row) jet = Jet(r_order, base);
  for (auto& row : s4_jets)
    for (auto& jet : row) jet = Jet(r_order, base);

  double solve_residual = 0.0;
  const int coeffs = jet_coeff_count(r_order);
  for (int r = 0; r < coeffs; ++r) {
    Eigen::VectorXd b = Eigen::VectorXd::Zero(120);
    int row = 0;
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l)
          for (int m = l + 1; m < 3; ++m)
            b[row++] = ctf.a_coef[i][j][theta_theta_slot(l, m)].raw()[r];
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 3; ++j)
        for (int k = 0; k < 3; ++k)
          for (int l = 0; l < 3; ++l) b[row++] = ctf.a_coef[i][j][theta_omega_slot(k, l)].raw()[r];
    double resid = 0.0;
    Eigen::VectorXd x = ls.solve(b, &resid);
    solve_residual = std::max(solve_residual, resid / scale);
    for (int i = 0; i < 3; ++i)
      for (int k = 0; k < 3; ++k) {
        ns.tau_theta[i][k].raw()[r] = x[u_col(i, k)];
        ns.tau_omega[i][k].raw()[r] = x[v_col(i, k)];
      }
    for (int i = 0; i < 3; ++i)
      for (int p = 0; p < 6; ++p) s3_jets[i][p].raw()[r] = x[s3_col(i, p)];
    for (int p1 = 0; p1 < 6; ++p1)
      for (int p2 = 0; p2 < 6; ++p2) s4_jets[p1][p2].raw()[r] = x[s4_col(p1, p2)];
  }
  ns.residuals["normalization"] = solve_residual;

  for (int i = 0; i < 3; ++i) {
    KForm t(1, r_order, base);
    for (int k = 0; k < 3; ++k) {
      t = t + cf.theta[k] * ns.tau_theta[i][k];
      t = t + cf.omega[k] * ns.tau_omega[i][k];
    }
    ns.tau[i] = t;
  }
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      ns.p_gauge(i, k) = 0.5 * (ns.tau_theta[i][k].value() + ns.tau_theta[k][i].value());

  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) ft.s4[i][k][j][l] = s4_jets[pair6(i, k)][pair6(j, l)].value();
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) ft.s3[i][j][k] = s3_jets[i][pair6(j, k)].value();

  // Raw (unsymmetrized) extractions for the identity audits.
  double u_val[3][3], v_val[3][3];
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k) {
      u_val[i][k] = ns.tau_theta[i][k].value();
      v_val[i][k] = ns.tau_omega[i][k].value();
    }
  double s4_raw[3][3][3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) {
          double a = ctf.a_coef[i][j][theta_omega_slot(k, l)].value();
          s4_raw[i][k][j][l] = a + (i == j ? v_val[k][l] : 0.0) - (k == j ? v_val[i][l] : 0.0);
        }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j)
      for (int l = 0; l < 3; ++l)
        for (int m = l + 1; m < 3; ++m) {
          double a = ctf.a_coef[i][j][theta_theta_slot(l, m)].value();
          if (i == j) a -= u_val[m][l] - u_val[l][m];
          if (j == m) a += u_val[i][l];
          if (j == l) a -= u_val[i][m];
          const int c = 3 - l - m;
          ns.r_tensor[i][j][c] = 0.5 * eps3(c, l, m) * a;
        }

  // Pieces the normalization killed: symmetric-pair and vector parts of the
  // theta-theta residue.
  double pair_part = 0.0, vec_part = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int l = 0; l < 3; ++l) {
      double s_il = 0.0;
      for (int j = 0; j < 3; ++j)
        for (int c = 0; c < 3; ++c)
          s_il += 0.25 * eps3(l, j, c) * (ns.r_tensor[i][j][c] - ns.r_tensor[i][c][j]);
      pair_part = std::max(pair_part, std::abs(s_il));
    }
  for (int k = 0; k < 3; ++k) {
    double t1 = 0.0, t2 = 0.0;
    for (int i = 0; i < 3; ++i) {
      t1 += ns.r_tensor[i][i][k];
      t2 += ns.r_tensor[i][k][i];
    }
    vec_part = std::max({vec_part, std::abs(t1), std::abs(t2)});
  }
  ns.s_pair_residual = pair_part;
  ns.s_vec_residual = vec_part;

  // S_{ij} from the theta-theta block of B.
  double s2_raw[3][3];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      int k = (j + 1) % 3, l = (j + 2) % 3;
      if (k > l) std::swap(k, l);
      s2_raw[i][j] = 0.5 * eps3(j, k, l) * ctf.b_coef[i][theta_theta_slot(k, l)].value();
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) ft.s2[i][j] = 0.5 * (s2_raw[i][j] + s2_raw[j][i]);

  // Residual of the full B match on its theta-omega and omega-omega parts:
  //   B_i = eps_{ijk} tau^j ^ omega^k - 2 S^j_{ik} theta_j ^ omega^k + ...
  double b_scale = 1.0, b_resid = 0.0;
  for (int i = 0; i < 3; ++i)
    for (const auto& jet : ctf.b_coef[i]) b_scale = std::max(b_scale, jet.sup_norm());
  for (int i = 0; i < 3; ++i) {
    for (int a = 0; a < 3; ++a)
      for (int w = 0; w < 3; ++w) {
        double expect = 0.0;
        for (int j = 0; j < 3; ++j) expect += eps3(i, j, w) * u_val[j][a];
        expect -= 2.0 * ft.s3[a][i][w];
        b_resid =
            std::max(b_resid, std::abs(ctf.b_coef[i][theta_omega_slot(a, w)].value() - expect));
      }
    for (int p = 0; p < 3; ++p)
      for (int w = p + 1; w < 3; ++w) {
        double expect = 0.0;
        for (int j = 0; j < 3; ++j)
          expect += eps3(i, j, w) * v_val[j][p] - eps3(i, j, p) * v_val[j][w];
        b_resid = std::max(b_resid,
                           std::abs(ctf.b_coef[i][two_form_slot(3 + p, 3 + w)].value() - expect));
      }
  }
  ns.residuals["b_match"] = b_resid / b_scale;

  // Trace audit: A^i_i = 2 tau^k ^ theta_k.
  double a_trace = 0.0;
  for (int l = 0; l < 3; ++l)
    for (int m = l + 1; m < 3; ++m) {
      double tr = 0.0;
      for (int i = 0; i < 3; ++i) tr += ctf.a_coef[i][i][theta_theta_slot(l, m)].value();
      a_trace = std::max(a_trace, std::abs(tr - 2.0 * (u_val[m][l] - u_val[l][m])));
    }
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      double tr = 0.0;
      for (int i = 0; i < 3; ++i) tr += ctf.a_coef[i][i][theta_omega_slot(k, l)].value();
      a_trace = std::max(a_trace, std::abs(tr + 2.0 * v_val[k][l]));
    }
  ns.residuals["a_trace"] = a_trace / scale;
  ns.residuals["s_pair"] = ns.s_pair_residual / scale;
  ns.residuals["s_vec"] = ns.s_vec_residual / scale;

  // Norms and the symmetry/trace relations measured on the raw data.
  double n4 = 0.0, n3 = 0.0, n2 = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) n4 += ft.s4[i][k][j][l] * ft.s4[i][k][j][l];
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) {
      n2 += ft.s2[i][j] * ft.s2[i][j];
      for (int k = 0; k < 3; ++k) n3 += ft.s3[i][j][k] * ft.s3[i][j][k];
    }
  ft.norm_s4 = std::sqrt(n4);
  ft.norm_s3 = std::sqrt(n3);
  ft.norm_s2 = std::sqrt(n2);

  double defect = 0.0;
  for (int i = 0; i < 3; ++i)
    for (int k = 0; k < 3; ++k)
      for (int j = 0; j < 3; ++j)
        for (int l = 0; l < 3; ++l) {
          defect = std::max(defect, std::abs(s4_raw[i][k][j][l] - s4_raw[k][i][j][l]));
          defect = std::max(defect, std::abs(s4_raw[i][k][j][l] - s4_raw[i][k][l][j]));
        }
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      double tr = 0.0;
      for (int i = 0; i < 3; ++i) tr += s4_raw[i][k][i][l];
      defect = std::max(defect, std::abs(tr));
    }
  for (int i = 0; i < 3; ++i)
    for (int j = 0; j < 3; ++j) defect = std::max(defect, std::abs(s2_raw[i][j] - s2_raw[j][i]));
  for (int k = 0; k < 3; ++k) {
    double tr = 0.0;
    for (int i = 0; i < 3; ++i) tr += ft.s3[i][i][k];
    defect = std::max(defect, std::abs(tr));
  }
  ft.relations_residual = defect / (std::max({ft.norm_s4, ft.norm_s3, ft.norm_s2}) + 1e-12);
  return {ns, ft};
}

bool flatness_test(const FundamentalTensor& ft, double tol) {
  const bool flat = ft.norm_s4 < tol;
  if (flat && (ft.norm_s3 >= 10.0 * tol || ft.norm_s2 >= 10.0 * tol))
    throw std::runtime_error(
        "flatness_test: S4 vanishes but the lower blocks do not (pipeline integrity)");
  return flat;
}

Eigen::MatrixXd cartan_q7() {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(7, 7);
  for (int a = 0; a < 3; ++a) {
    q(a, 4 + a) = 1.0;
    q(4 + a, a) = 1.0;
  }
  q(3, 3) = 2.0;
  return q;
}

Eigen::MatrixXd cartan_q8() {
  Eigen::MatrixXd q = Eigen::MatrixXd::Zero(8, 8);
  q(0, 7) = -1.0;
  q(7, 0) = -1.0;
  for (int a = 0; a < 3; ++a) {
    q(1 + a, 4 + a) = 1.0;
    q(4 + a, 1 + a) = 1.0;
  }
  return q;
}

CartanMatrices build_cartan_matrices(const PseudoConnection& pc, const AdaptedCoframe& cf,
                                     const NormalizationState& ns) {
  const Point& base = cf.base_point();
  int order = pc.alpha[0][0].order();
  for (int i = 0; i < 3; ++i) order = std::min(order, ns.tau[i].order());
  auto zero = [&] { return KForm(1, order, base); };

  CartanMatrices cm;
  cm.coframe = cf;
  cm.q7 = cartan_q7();
  cm.q8 = cartan_q8();

  KForm phi = zero();
  for (int i = 0; i < 3; ++i) phi = phi + pc.alpha[i][i] * 0.5;
  cm.phi = phi;

  for (auto& row : cm.gamma)
    for (auto& f : row) f = zero();
  for (auto& row : cm.gamma_hat)
    for (auto& f : row) f = zero();

  for (int a = 0; a < 3; ++a) {
    for (int b = 0; b < 3; ++b) {
      cm.gamma[a][b] = -pc.alpha[b][a];
      cm.gamma[4 + a][4 + b] = pc.alpha[a][b] * 1.0;
      KForm tcomb = zero(), thcomb = zero();
      for (int c = 0; c < 3; ++c) {
        const int e = eps3(a, b, c);
        if (e == 0) continue;
        tcomb = tcomb - ns.tau[c] * static_cast<double>(e);
        thcomb = thcomb + cf.theta[c] * static_cast<double>(e);
      }
      cm.gamma[a][4 + b] = tcomb;
      cm.gamma[4 + a][b] = thcomb;
    }
    cm.gamma[a][3] = pc.beta[a] * 2.0;
    cm.gamma[3][a] = cf.omega[a] * 1.0;
    cm.gamma[3][4 + a] = -pc.beta[a];
    cm.gamma[4 + a][3] = cf.omega[a] * -2.0;
  }

  cm.gamma_hat[0][0] = -phi;
  for (int b = 0; b < 3; ++b) {
    cm.gamma_hat[0][1 + b] = pc.beta[b] * 1.0;
    cm.gamma_hat[0][4 + b] = ns.tau[b] * 1.0;
    cm.gamma_hat[7][1 + b] = cf.theta[b] * 1.0;
    cm.gamma_hat[7][4 + b] = cf.omega[b] * 1.0;
  }
  cm.gamma_hat[7][7] = phi * 1.0;
  for (int a = 0; a < 3; ++a) {
    cm.gamma_hat[1 + a][0] = cf.omega[a] * 1.0;
    cm.gamma_hat[4 + a][0] = cf.theta[a] * 1.0;
    cm.gamma_hat[1 + a][7] = ns.tau[a] * 1.0;
    cm.gamma_hat[4 + a][7] = pc.beta[a] * 1.0;
    for (int b = 0; b < 3; ++b) {
      KForm ab = pc.alpha[a][b] * 1.0;
      if (a == b) ab = ab - phi;
      cm.gamma_hat[1 + a][1 + b] = ab;
      KForm ba = -pc.alpha[b][a];
      if (a == b) ba = ba + phi;
      cm.gamma_hat[4 + a][4 + b] = ba;
      KForm bcomb = zero(), wcomb = zero();
      for (int c = 0; c < 3; ++c) {
        const int e = eps3(a, b, c);
        if (e == 0) continue;
        bcomb = bcomb - pc.beta[c] * static_cast<double>(e);
        wcomb = wcomb + cf.omega[c] * static_cast<double>(e);
      }
      cm.gamma_hat[1 + a][4 + b] = bcomb;
      cm.gamma_hat[4 + a][1 + b] = wcomb;
    }
  }

  // Membership residuals; the entries cancel symbolically, so these come out
  // as machine zeros on any input.
  double m7 = 0.0, m8 = 0.0;
  for (int r = 0; r < 7; ++r)
    for (int c = 0; c < 7; ++c) {
      KForm acc(1, order, base);
      for (int t = 0; t < 7; ++t) {
        if (cm.q7(r, t) != 0.0) acc = acc + cm.gamma[t][c] * cm.q7(r, t);
        if (cm.q7(t, c) != 0.0) acc = acc + cm.gamma[t][r] * cm.q7(t, c);
      }
      m7 = std::max(m7, acc.sup_norm());
    }
  for (int r = 0; r < 8; ++r)
    for (int c = 0; c < 8; ++c) {
      KForm acc(1, order, base);
      for (int t = 0; t < 8; ++t) {
        if (cm.q8(r, t) != 0.0) acc = acc + cm.gamma_hat[t][c] * cm.q8(r, t);
        if (cm.q8(t, c) != 0.0) acc = acc + cm.gamma_hat[t][r] * cm.q8(t, c);
      }
      m8 = std::max(m8, acc.sup_norm());
    }
  cm.q7_membership = m7;
  cm.q8_membership = m8;
  return cm;
}

namespace {

std::array<double, 15> expand_two_form_values(const KForm& f, const Eigen::MatrixXd& frame) {
  std::array<double, 15> out{};
  const auto& pairs = combination_table(2);
  for (int a = 0; a < 6; ++a)
    for (int b = a + 1; b < 6; ++b) {
      double acc = 0.0;
      for (size_t r = 0; r < pairs.size(); ++r) {
        const int p = pairs[r][0], q = pairs[r][1];
        acc += f.comp(static_cast<int>(r)).value() *
               (frame(p, a) * frame(q, b) - frame(p, b) * frame(q, a));
      }
      out[two_form_slot(a, b)] = acc;
    }
  return out;
}

template <size_t N>
TwoFormValueMatrix matrix_curvature(const std::array<std::array<KForm, N>, N>& m,
                                    const AdaptedCoframe& cf) {
  int order = m[0][0].order();
  for (const auto& row : m)
    for (const auto& f : row) order = std::min(order, f.order());
  if (order < 1) throw std::invalid_argument("cartan_curvature: insufficient order for d");

  Eigen::MatrixXd cofr(6, 6);
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 6; ++a) {
      cofr(i, a) = cf.theta[i].comp(a).value();
      cofr(3 + i, a) = cf.omega[i].comp(a).value();
    }
  Eigen::MatrixXd frame = cofr.inverse();

  TwoFormValueMatrix out;
  out.size = static_cast<int>(N);
  out.slots.resize(N * N);
  for (size_t r = 0; r < N; ++r)
    for (size_t c = 0; c < N; ++c) {
      KForm f = exterior_derivative(m[r][c]);
      for (size_t t = 0; t < N; ++t) f = f + wedge(m[r][t], m[t][c]);
      out.slots[r * N + c] = expand_two_form_values(f, frame);
    }
  return out;
}

}  // namespace

TwoFormValueMatrix cartan_curvature(const CartanMatrices& cm) {
  return matrix_curvature<8>(cm.gamma_hat, cm.coframe);
}

TwoFormValueMatrix cartan_curvature_7(const CartanMatrices& cm) {
  return matrix_curvature<7>(cm.gamma, cm.coframe);
}

namespace detail {

const LeastSquares& pseudo_connection_system() { return level2_system(); }
const LeastSquares& normalization_system() { return normalization_ls(); }

}  // namespace detail

}  // namespace plane6
