#include "plane6/exterior.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

namespace plane6 {

namespace {

std::mutex g_comb_mutex;
std::map<int, std::unique_ptr<std::vector<std::vector<int>>>> g_comb;

void gen_combos(int k, int start, std::vector<int>& cur, std::vector<std::vector<int>>& out) {
  if (static_cast<int>(cur.size()) == k) {
    out.push_back(cur);
    return;
  }
  for (int i = start; i < kChartDim; ++i) {
    cur.push_back(i);
    gen_combos(k, i + 1, cur, out);
    cur.pop_back();
  }
}

// Merge two disjoint increasing tuples; returns the permutation sign, or 0
// if they intersect. `merged` receives the sorted union.
int merge_sign(const std::vector<int>& a, const std::vector<int>& b, std::vector<int>& merged) {
  merged.clear();
  merged.reserve(a.size() + b.size());
  size_t i = 0, j = 0;
  int inversions = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] == b[j]) return 0;
    if (a[i] < b[j]) {
      merged.push_back(a[i++]);
    } else {
      // b[j] jumps over the remaining entries of a.
      inversions += static_cast<int>(a.size() - i);
      merged.push_back(b[j++]);
    }
  }
  while (i < a.size()) merged.push_back(a[i++]);
  while (j < b.size()) merged.push_back(b[j++]);
  return (inversions % 2 == 0) ? 1 : -1;
}

}  // namespace

const std::vector<std::vector<int>>& combination_table(int k) {
  if (k < 0 || k > kChartDim) throw std::invalid_argument("form degree out of range [0, 6]");
  std::lock_guard<std::mutex> lock(g_comb_mutex);
  auto it = g_comb.find(k);
  if (it != g_comb.end()) return *it->second;
  auto table = std::make_unique<std::vector<std::vector<int>>>();
  std::vector<int> cur;
  gen_combos(k, 0, cur, *table);
  const auto& ref = *table;
  g_comb.emplace(k, std::move(table));
  return ref;
}

int combination_rank(int k, const std::vector<int>& combo) {
  const auto& table = combination_table(k);
  for (size_t r = 0; r < table.size(); ++r)
    if (table[r] == combo) return static_cast<int>(r);
  throw std::invalid_argument("combination not strictly increasing");
}

VectorField::VectorField(int order, const Point& base) {
  for (int a = 0; a < kChartDim; ++a) comp_[a] = Jet(order, base);
}

VectorField VectorField::coordinate_axis(int axis, int order, const Point& base) {
  VectorField v(order, base);
  v.comp_[axis] = Jet::constant(1.0, order, base);
  return v;
}

int VectorField::order() const {
  int o = comp_[0].order();
  for (int a = 1; a < kChartDim; ++a) o = std::min(o, comp_[a].order());
  return o;
}

std::array<double, 6> VectorField::value() const {
  std::array<double, 6> v;
  for (int a = 0; a < kChartDim; ++a) v[a] = comp_[a].value();
  return v;
}

double VectorField::sup_norm() const {
  double m = 0.0;
  for (int a = 0; a < kChartDim; ++a) m = std::max(m, comp_[a].sup_norm());
  return m;
}

VectorField VectorField::operator+(const VectorField& rhs) const {
  VectorField out = *this;
  for (int a = 0; a < kChartDim; ++a) out.comp_[a] += rhs.comp_[a];
  return out;
}

VectorField VectorField::operator-(const VectorField& rhs) const {
  VectorField out = *this;
  for (int a = 0; a < kChartDim; ++a) out.comp_[a] -= rhs.comp_[a];
  return out;
}

VectorField VectorField::operator*(double s) const {
  VectorField out = *this;
  for (int a = 0; a < kChartDim; ++a) out.comp_[a] *= s;
  return out;
}

VectorField VectorField::operator*(const Jet& f) const {
  VectorField out = *this;
  for (int a = 0; a < kChartDim; ++a) out.comp_[a] = comp_[a] * f;
  return out;
}

KForm::KForm(int degree, int order, const Point& base) : degree_(degree) {
  if (degree < 0 || degree > kChartDim) throw std::invalid_argument("form degree out of range [0, 6]");
  comp_.assign(combination_table(degree).size(), Jet(order, base));
}

KForm KForm::coordinate_differential(int axis, int order, const Point& base) {
  KForm f(1, order, base);
  f.comp_[axis] = Jet::constant(1.0, order, base);
  return f;
}

KForm KForm::from_jet(const Jet& f) {
  KForm out(0, f.order(), f.base_point());
  out.comp_[0] = f;
  return out;
}

int KForm::order() const {
  int o = comp_[0].order();
  for (const Jet& j : comp_) o = std::min(o, j.order());
  return o;
}

double KForm::sup_norm() const {
  double m = 0.0;
  for (const Jet& j : comp_) m = std::max(m, j.sup_norm());
  return m;
}

KForm KForm::operator+(const KForm& rhs) const {
  if (degree_ != rhs.degree_) throw std::invalid_argument("form degree mismatch");
  KForm out = *this;
  for (size_t i = 0; i < comp_.size(); ++i) out.comp_[i] += rhs.comp_[i];
  return out;
}

KForm KForm::operator-(const KForm& rhs) const {
  if (degree_ != rhs.degree_) throw std::invalid_argument("form degree mismatch");
  KForm out = *this;
  for (size_t i = 0; i < comp_.size(); ++i) out.comp_[i] -= rhs.comp_[i];
  return out;
}

KForm KForm::operator-() const {
  KForm out = *this;
  for (Jet& j : out.comp_) j = -j;
  return out;
}

KForm KForm::operator*(double s) const {
  KForm out = *this;
  for (Jet& j : out.comp_) j *= s;
  return out;
}

KForm KForm::operator*(const Jet& f) const {
  KForm out = *this;
  for (Jet& j : out.comp_) j = j * f;
  return out;
}

KForm wedge(const KForm& a, const KForm& b) {
  const int k = a.degree() + b.degree();
  if (k > kChartDim) throw std::invalid_argument("wedge: degree overflow");
  const int order = std::min(a.order(), b.order());
  KForm out(k, order, a.base_point());
  const auto& ta = combination_table(a.degree());
  const auto& tb = combination_table(b.degree());
  std::vector<int> merged;
  for (size_t i = 0; i < ta.size(); ++i) {
    if (a.comp(static_cast<int>(i)).sup_norm() == 0.0) continue;
    for (size_t j = 0; j < tb.size(); ++j) {
      const int sign = merge_sign(ta[i], tb[j], merged);
      if (sign == 0) continue;
      Jet prod = a.comp(static_cast<int>(i)) * b.comp(static_cast<int>(j));
      if (sign < 0) prod *= -1.0;
      out.comp(merged) += prod;
    }
  }
  return out;
}

KForm exterior_derivative(const KForm& a) {
  if (a.order() < 1)
    throw std::invalid_argument("exterior derivative: coefficient order exhausted");
  const int k = a.degree();
  if (k == kChartDim) return KForm(kChartDim, a.order() - 1, a.base_point());
  KForm out(k + 1, a.order() - 1, a.base_point());
  const auto& ta = combination_table(k);
  std::vector<int> merged;
  std::vector<int> axis(1);
  for (size_t i = 0; i < ta.size(); ++i) {
    for (int ax = 0; ax < kChartDim; ++ax) {
      axis[0] = ax;
      const int sign = merge_sign(axis, ta[i], merged);
      if (sign == 0) continue;
      Jet dcoef = a.comp(static_cast<int>(i)).partial(ax);
      if (sign < 0) dcoef *= -1.0;
      out.comp(merged) += dcoef;
    }
  }
  return out;
}

KForm interior_product(const KForm& a, const VectorField& x) {
  if (a.degree() == 0)
    throw std::invalid_argument("interior product: degree-0 input");
  const int k = a.degree();
  const int order = std::min(a.order(), x.order());
  KForm out(k - 1, order, a.base_point());
  const auto& ta = combination_table(k);
  for (size_t i = 0; i < ta.size(); ++i) {
    const auto& combo = ta[i];
    for (int pos = 0; pos < k; ++pos) {
      std::vector<int> rest;
      rest.reserve(k - 1);
      for (int t = 0; t < k; ++t)
        if (t != pos) rest.push_back(combo[t]);
      Jet term = a.comp(static_cast<int>(i)) * x.comp(combo[pos]);
      if (pos % 2 == 1) term *= -1.0;
      out.comp(rest) += term;
    }
  }
  return out;
}

Jet evaluate(const KForm& a, const std::vector<VectorField>& args) {
  if (static_cast<int>(args.size()) != a.degree())
    throw std::invalid_argument("evaluate: argument count must equal form degree");
  KForm cur = a;
  // a(X_1, ..., X_k) = iota_{X_k} ... iota_{X_1} a.
  for (const VectorField& x : args) {
    if (cur.degree() == 0) break;
    cur = interior_product(cur, x);
  }
  return cur.comp(0);
}

VectorField lie_bracket(const VectorField& x, const VectorField& y) {
  if (x.order() < 1 || y.order() < 1)
    throw std::invalid_argument("lie bracket: order exhausted");
  const int order = std::min(x.order(), y.order()) - 1;
  VectorField out(order, x.base_point());
  for (int i = 0; i < kChartDim; ++i) {
    Jet acc(order, x.base_point());
    for (int j = 0; j < kChartDim; ++j) {
      acc += x.comp(j) * y.comp(i).partial(j);
      acc -= y.comp(j) * x.comp(i).partial(j);
    }
    out.comp(i) = acc;
  }
  return out;
}

KForm pullback(const KForm& a, const JetMap& phi) {
  const int k = a.degree();
  const Point p = phi.base_point();
  if (k == 0) return KForm::from_jet(compose(a.comp(0), phi));
  const int order = std::min(a.order(), phi.order() - 1);
  // dphi^i = (d phi^i / d x^a) dx^a, 1-forms at the source point.
  std::array<KForm, kChartDim> dphi;
  for (int i = 0; i < kChartDim; ++i) {
    KForm f(1, order, p);
    for (int ax = 0; ax < kChartDim; ++ax) f.comp(ax) = phi.comp[i].partial(ax).truncated(order);
    dphi[i] = f;
  }
  KForm out(k, order, p);
  const auto& ta = combination_table(k);
  for (size_t i = 0; i < ta.size(); ++i) {
    if (a.comp(static_cast<int>(i)).sup_norm() == 0.0) continue;
    KForm w = dphi[ta[i][0]];
    for (int t = 1; t < k; ++t) w = wedge(w, dphi[ta[i][t]]);
    out = out + w * compose(a.comp(static_cast<int>(i)), phi).truncated(order);
  }
  return out;
}

VectorField pushforward(const VectorField& x, const JetMap& phi, const JetMap& phi_inverse) {
  // (phi_* X)^i |_q = (dphi^i/dx^j X^j) o phi^{-1}.
  const Point q = phi.value();
  const int order = std::min({x.order(), phi.order() - 1, phi_inverse.order()});
  VectorField out(order, q);
  for (int i = 0; i < kChartDim; ++i) {
    Jet acc(std::min(phi.order() - 1, x.order()), phi.base_point());
    for (int j = 0; j < kChartDim; ++j) acc += phi.comp[i].partial(j) * x.comp(j);
    out.comp(i) = compose(acc, phi_inverse).truncated(order);
  }
  return out;
}

VectorField pushforward(const VectorField& x, const JetMap& phi) {
  return pushforward(x, phi, invert(phi));
}

}  // namespace plane6
