#include "plane6/distribution.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "plane6/jet_matrix.hpp"
#include "plane6/rng.hpp"

namespace plane6 {

namespace {

constexpr double kRankTol = 1e-8;           // sigma_min / sigma_max gate
constexpr double kAnnihilationTol = 1e-10;  // relative residual gate

// Greedy completion: pick three coordinate rows that keep the stacked
// value-level matrix well conditioned (Gram-Schmidt against accepted rows).
std::vector<int> complete_rows(const Eigen::MatrixXd& rows3) {
  std::vector<Eigen::VectorXd> basis;
  for (int r = 0; r < 3; ++r) {
    Eigen::VectorXd v = rows3.row(r).transpose();
    for (const auto& b : basis) v -= b.dot(v) * b;
    if (v.norm() < 1e-12) throw std::invalid_argument("linearly dependent input triple");
    basis.push_back(v.normalized());
  }
  std::vector<int> chosen;
  for (double threshold : {0.5, 1e-6}) {
    for (int a = 0; a < 6 && static_cast<int>(chosen.size()) < 3; ++a) {
      if (std::find(chosen.begin(), chosen.end(), a) != chosen.end()) continue;
      Eigen::VectorXd v = Eigen::VectorXd::Zero(6);
      v[a] = 1.0;
      for (const auto& b : basis) v -= b.dot(v) * b;
      if (v.norm() > threshold) {
        basis.push_back(v.normalized());
        chosen.push_back(a);
      }
    }
  }
  if (chosen.size() != 3) throw std::invalid_argument("linearly dependent input triple");
  return chosen;
}

}  // namespace

int eps3(int i, int j, int k) {
  if (i == j || j == k || i == k) return 0;
  return ((j - i + 3) % 3 == 1) ? 1 : -1;
}

int Distribution::order() const {
  int o = theta_[0].order();
  for (const auto& t : theta_) o = std::min(o, t.order());
  for (const auto& g : gens_) o = std::min(o, g.order());
  return o;
}

double Distribution::annihilation_residual() const {
  double scale = 0.0;
  double resid = 0.0;
  for (const auto& t : theta_)
    for (const auto& g : gens_) {
      scale = std::max(scale, t.sup_norm() * g.sup_norm());
      resid = std::max(resid, evaluate(t, {g}).sup_norm());
    }
  return resid / (scale + 1e-300);
}

Distribution Distribution::from_annihilators(const std::array<KForm, 3>& theta) {
  const int order = std::min({theta[0].order(), theta[1].order(), theta[2].order()});
  const Point base = theta[0].base_point();

  Eigen::MatrixXd rows(3, 6);
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 6; ++a) rows(i, a) = theta[i].comp(a).value();
  const std::vector<int> extra = complete_rows(rows);

  // Stack [theta; chosen dx rows]; kernel vectors of theta are the last
  // three columns of the inverse.
  JetMatrix m(6, 6, order, base);
  for (int i = 0; i < 3; ++i)
    for (int a = 0; a < 6; ++a) m.at(i, a) = theta[i].comp(a).truncated(order);
  for (int i = 0; i < 3; ++i) m.at(3 + i, extra[i]) = Jet::constant(1.0, order, base);
  JetMatrix inv = m.inverse();

  Distribution d;
  d.theta_ = theta;
  for (int j = 0; j < 3; ++j) {
    VectorField g(order, base);
    for (int a = 0; a < 6; ++a) g.comp(a) = inv.at(a, 3 + j);
    d.gens_[j] = g;
  }
  if (d.annihilation_residual() > kAnnihilationTol)
    throw std::runtime_error("distribution: annihilation residual out of tolerance");
  return d;
}

Distribution Distribution::from_generators(const std::array<VectorField, 3>& gens) {
  const int order = std::min({gens[0].order(), gens[1].order(), gens[2].order()});
  const Point base = gens[0].base_point();

  Eigen::MatrixXd rows(3, 6);
  for (int j = 0; j < 3; ++j)
    for (int a = 0; a < 6; ++a) rows(j, a) = gens[j].comp(a).value();
  const std::vector<int> extra = complete_rows(rows);

  // Columns: the generators, then coordinate fields; the annihilators are
  // the last three rows of the inverse.
  JetMatrix m(6, 6, order, base);
  for (int j = 0; j < 3; ++j)
    for (int a = 0; a < 6; ++a) m.at(a, j) = gens[j].comp(a).truncated(order);
  for (int j = 0; j < 3; ++j) m.at(extra[j], 3 + j) = Jet::constant(1.0, order, base);
  JetMatrix inv = m.inverse();

  Distribution d;
  d.gens_ = gens;
  for (int i = 0; i < 3; ++i) {
    KForm t(1, order, base);
    for (int a = 0; a < 6; ++a) t.comp(a) = inv.at(3 + i, a);
    d.theta_[i] = t;
  }
  if (d.annihilation_residual() > kAnnihilationTol)
    throw std::runtime_error("distribution: annihilation residual out of tolerance");
  return d;
}

Distribution flat_model(const Point& base, int order) {
  std::array<KForm, 3> theta;
  for (int i = 0; i < 3; ++i) {
    KForm t(1, order, base);
    t.comp(3 + i) = Jet::constant(1.0, order, base);  // dy_i
    for (int j = 0; j < 3; ++j)
      for (int k = 0; k < 3; ++k) {
        const int e = eps3(i, j, k);
        if (e == 0) continue;
        t.comp(k) += Jet::coordinate(j, order, base) * static_cast<double>(e);
      }
    theta[i] = t;
  }
  return Distribution::from_annihilators(theta);
}

Distribution perturbed_family(double c, std::uint64_t seed, const Point& base, int order) {
  Distribution flat = flat_model(base, order);
  if (c == 0.0) return flat;

  // Fixed global polynomials in absolute coordinates: the same seed probes
  // the same plane field at every base point.
  DeterministicRng rng(seed);
  std::array<KForm, 3> theta = flat.annihilators();
  const auto& mono = monomial_table(3);
  for (int i = 0; i < 3; ++i)
    for (int axis = 0; axis < 3; ++axis) {
      std::vector<std::pair<Exponents, double>> terms;
      terms.reserve(mono.size());
      for (const auto& mu : mono) terms.emplace_back(mu, rng.symmetric());
      theta[i].comp(axis) += polynomial_to_jet(terms, order, base) * c;
    }

  Distribution d = Distribution::from_annihilators(theta);
  if (!check_nondegenerate(d).verdict)
    throw std::invalid_argument("perturbed_family: nondegeneracy lost; reduce c");
  return d;
}

NondegeneracyCertificate check_nondegenerate(const Distribution& d) {
  if (d.order() < 1) throw std::invalid_argument("check_nondegenerate: order >= 1 required");
  const auto& g = d.generators();
  std::array<VectorField, 6> span = {g[0],
                                     g[1],
                                     g[2],
                                     lie_bracket(g[1], g[2]),
                                     lie_bracket(g[2], g[0]),
                                     lie_bracket(g[0], g[1])};
  Eigen::MatrixXd m(6, 6);
  for (int col = 0; col < 6; ++col) {
    const auto v = span[col].value();
    for (int row = 0; row < 6; ++row) m(row, col) = v[row];
  }
  NondegeneracyCertificate cert;
  cert.gram_determinant = m.determinant();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(m);
  cert.sigma_max = svd.singularValues()(0);
  cert.sigma_min = svd.singularValues()(5);
  cert.verdict = cert.sigma_max > 0.0 && cert.sigma_min > kRankTol * cert.sigma_max;
  return cert;
}

Distribution apply_diffeo(const Distribution& d, const JetMap& phi) {
  const JetMap phi_inv = invert(phi);
  std::array<KForm, 3> theta;
  for (int i = 0; i < 3; ++i) theta[i] = pullback(d.annihilators()[i], phi_inv);

  Distribution out = Distribution::from_annihilators(theta);

  // The pushed-forward generators must still be annihilated; this ties the
  // two transports together rather than trusting either alone.
  double scale = 0.0, resid = 0.0;
  for (int j = 0; j < 3; ++j) {
    VectorField g = pushforward(d.generators()[j], phi, phi_inv);
    for (int i = 0; i < 3; ++i) {
      scale = std::max(scale, theta[i].sup_norm() * g.sup_norm());
      resid = std::max(resid, evaluate(theta[i], {g}).sup_norm());
    }
  }
  if (resid > 1e-8 * (scale + 1e-300))
    throw std::runtime_error("apply_diffeo: transported pair fails annihilation check");
  return out;
}

}  // namespace plane6
