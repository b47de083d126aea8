#pragma once

// Curvature extraction for a 2-adapted coframe.
//
// Stage 1 solves the structure equations
//
//     d theta_i = -alpha^k_k ^ theta_i + alpha^j_i ^ theta_j
//                 + eps_{ijk} omega^j ^ omega^k
//     d omega^i = -eps^{ikj} beta_k ^ theta_j - alpha^i_j ^ omega^j
//
// for pseudo-connection 1-forms (alpha, beta); in the coframe basis this is
// one constant 90x72 block per monomial whose kernel is the 3-parameter
// replacement
//
//     alpha^i_j -> alpha^i_j + d^i_j t^k theta_k - t^i theta_j,
//     beta_i    -> beta_i + eps_{ijk} t^j omega^k.
//
// Stage 2 forms A^i_j = d alpha^i_j + alpha^i_k ^ alpha^k_j + 2 omega^i ^ beta_j
// and B_i = d beta_i - alpha^j_i ^ beta_j, then fits the unique normal form
//
//     A^i_j = d^i_j tau^k ^ theta_k - tau^i ^ theta_j
//             + S^i_{jk} eps^{klm} theta_l ^ theta_m + S^{ik}_{jl} theta_k ^ omega^l
//     B_i   = eps_{ijk} tau^j ^ omega^k - 2 S^j_{ik} theta_j ^ omega^k
//             + eps^{jkl} S_{ij} theta_k ^ theta_l
//
// with S^i_{jk} = S^i_{kj}, S^i_{ik} = 0, S^{ik}_{jl} pair-symmetric and
// trace-free. The S^{ik}_{jl} block is the fundamental tensor: it vanishes
// exactly when the plane field is locally the flat model, and it is
// invariant under the t-gauge; S^i_{jk} and S_{ij} are reported relative to
// the canonical minimum-norm gauge.

#include <Eigen/Dense>
#include <array>
#include <map>
#include <string>
#include <vector>

#include "plane6/adaptation.hpp"

namespace plane6 {

struct PseudoConnection {
  std::array<std::array<KForm, 3>, 3> alpha;  // chart 1-forms alpha^i_j
  std::array<KForm, 3> beta;

  // Coframe-basis coefficient jets; alpha_coef[i][j][m], m < 3 theta-part.
  std::array<std::array<std::array<Jet, 6>, 3>, 3> alpha_coef;
  std::array<std::array<Jet, 6>, 3> beta_coef;

  AdaptedCoframe coframe;
  int gauge_dimension = 0;                 // numerical nullity of the block (= 3)
  std::vector<Eigen::VectorXd> gauge_basis;  // constant-t kernel directions
  double structure_residual = 0.0;
};

struct CurvatureTwoForms {
  std::array<std::array<KForm, 3>, 3> a2;  // A^i_j chart 2-forms
  std::array<KForm, 3> b2;                 // B_i

  // Coframe-basis expansions (15 slots each, jet coefficients).
  std::array<std::array<std::array<Jet, 15>, 3>, 3> a_coef;
  std::array<std::array<Jet, 15>, 3> b_coef;

  double omega_omega_residual = 0.0;  // A must have no pure-omega part
};

struct NormalizationState {
  std::array<KForm, 3> tau;                 // chart 1-forms
  std::array<std::array<Jet, 3>, 3> tau_theta;  // u^i_k
  std::array<std::array<Jet, 3>, 3> tau_omega;  // v^i_k

  std::array<double, 3> t_gauge = {0, 0, 0};  // extra t-shift applied (none)
  Eigen::Matrix3d p_gauge = Eigen::Matrix3d::Zero();  // symmetric theta-part of tau

  double r_tensor[3][3][3] = {};   // theta-theta residue before decomposition
  double s_pair_residual = 0.0;    // norm of the killed symmetric pair part
  double s_vec_residual = 0.0;     // norm of the killed vector part
  std::map<std::string, double> residuals;
};

struct FundamentalTensor {
  double s4[3][3][3][3] = {};  // S^{ik}_{jl} indexed [i][k][j][l]
  double s3[3][3][3] = {};     // S^i_{jk}
  double s2[3][3] = {};        // S_{ij}
  double norm_s4 = 0.0, norm_s3 = 0.0, norm_s2 = 0.0;
  double relations_residual = 0.0;  // worst symmetry/trace defect (relative)
};

struct CartanMatrices {
  std::array<std::array<KForm, 7>, 7> gamma;
  std::array<std::array<KForm, 8>, 8> gamma_hat;
  KForm phi;                       // (1/2) alpha^i_i
  Eigen::MatrixXd q7, q8;          // invariant pairings
  double q7_membership = 0.0;      // || Q7 g + g^T Q7 ||, entrywise sup
  double q8_membership = 0.0;
  AdaptedCoframe coframe;
};

// Matrix of 2-form values at the base point, expanded in the coframe 2-basis.
struct TwoFormValueMatrix {
  int size = 0;
  std::vector<std::array<double, 15>> slots;  // row-major size*size

  const std::array<double, 15>& at(int r, int c) const { return slots[r * size + c]; }
  double sup_norm() const;
  double omega_omega_norm() const;  // slots 12..14 only
};

PseudoConnection solve_pseudo_connection(const AdaptedCoframe& cf);

// Constant-t replacement; leaves the structure equations untouched.
PseudoConnection gauge_shift(const PseudoConnection& pc, const std::array<double, 3>& t);

CurvatureTwoForms curvature_two_forms(const PseudoConnection& pc, const AdaptedCoframe& cf);

std::pair<NormalizationState, FundamentalTensor> normalize_extract(const CurvatureTwoForms& ctf,
                                                                   const PseudoConnection& pc,
                                                                   const AdaptedCoframe& cf);

// Verdict: ||S^{ik}_{jl}|| < tol. Also enforces the vanishing implication on
// the two lower blocks (they must be < 10 tol whenever the verdict is flat).
bool flatness_test(const FundamentalTensor& ft, double tol);

CartanMatrices build_cartan_matrices(const PseudoConnection& pc, const AdaptedCoframe& cf,
                                     const NormalizationState& ns);

// d gamma_hat + gamma_hat ^ gamma_hat at the base point (8x8).
TwoFormValueMatrix cartan_curvature(const CartanMatrices& cm);

// Same for the 7x7 matrix.
TwoFormValueMatrix cartan_curvature_7(const CartanMatrices& cm);

// The constant frozen pairings.
Eigen::MatrixXd cartan_q7();
Eigen::MatrixXd cartan_q8();

class LeastSquares;
namespace detail {
// The 90x72 pointwise structure block (for rank/kernel tests).
const LeastSquares& pseudo_connection_system();
// The 120x72 normalization block.
const LeastSquares& normalization_system();
}  // namespace detail

}  // namespace plane6
