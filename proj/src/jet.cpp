#include "plane6/jet.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>

#include "plane6/jet_matrix.hpp"

namespace plane6 {

namespace {

constexpr int kMaxTableOrder = 8;

long long binom(int n, int k) {
  if (k < 0 || k > n) return 0;
  long long r = 1;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

// Monomials of degree exactly d in m variables.
int exact_count(int d, int m) { return static_cast<int>(binom(d + m - 1, m - 1)); }

void gen_degree(int d, int slot, Exponents& cur, std::vector<Exponents>& out) {
  if (slot == kChartDim - 1) {
    cur[slot] = static_cast<std::uint8_t>(d);
    out.push_back(cur);
    return;
  }
  for (int e = d; e >= 0; --e) {
    cur[slot] = static_cast<std::uint8_t>(e);
    gen_degree(d - e, slot + 1, cur, out);
  }
}

struct OrderCache {
  std::vector<Exponents> monomials;
  std::vector<int> degree_of_rank;
  // Flat count*count table: rank of the exponent sum, -1 when it overflows
  // the order. Row i is a prefix in j because the layout is graded.
  std::vector<std::int32_t> product_rank;
};

std::mutex g_cache_mutex;
std::map<int, std::unique_ptr<OrderCache>> g_cache;

const OrderCache& order_cache(int order) {
  std::lock_guard<std::mutex> lock(g_cache_mutex);
  auto it = g_cache.find(order);
  if (it != g_cache.end()) return *it->second;
  if (order < 0 || order > kMaxTableOrder)
    throw std::invalid_argument("jet order out of supported range [0, 8]");

  auto cache = std::make_unique<OrderCache>();
  Exponents cur{};
  for (int d = 0; d <= order; ++d) gen_degree(d, 0, cur, cache->monomials);
  const int count = static_cast<int>(cache->monomials.size());
  cache->degree_of_rank.resize(count);
  for (int i = 0; i < count; ++i)
    cache->degree_of_rank[i] = exponents_degree(cache->monomials[i]);

  cache->product_rank.assign(static_cast<size_t>(count) * count, -1);
  for (int i = 0; i < count; ++i) {
    const int di = cache->degree_of_rank[i];
    for (int j = 0; j < count; ++j) {
      if (di + cache->degree_of_rank[j] > order) break;
      Exponents s;
      for (int a = 0; a < kChartDim; ++a)
        s[a] = static_cast<std::uint8_t>(cache->monomials[i][a] + cache->monomials[j][a]);
      cache->product_rank[static_cast<size_t>(i) * count + j] = monomial_rank(s);
    }
  }
  const OrderCache& ref = *cache;
  g_cache.emplace(order, std::move(cache));
  return ref;
}

}  // namespace

int exponents_degree(const Exponents& e) {
  int d = 0;
  for (int a = 0; a < kChartDim; ++a) d += e[a];
  return d;
}

int jet_coeff_count(int order) { return static_cast<int>(binom(order + kChartDim, kChartDim)); }

const std::vector<Exponents>& monomial_table(int order) { return order_cache(order).monomials; }

int monomial_rank(const Exponents& e) {
  const int d = exponents_degree(e);
  int rank = (d == 0) ? 0 : jet_coeff_count(d - 1);
  // Within a degree block: first slot descending, recursively.
  int rem = d;
  for (int slot = 0; slot < kChartDim - 1; ++slot) {
    const int vars_left = kChartDim - 1 - slot;
    for (int t = rem; t > e[slot]; --t) rank += exact_count(rem - t, vars_left);
    rem -= e[slot];
  }
  return rank;
}

Jet::Jet(int order, const Point& base) : order_(order), base_(base) {
  if (order < 0) throw std::invalid_argument("negative jet order");
  coef_.assign(jet_coeff_count(order), 0.0);
}

Jet Jet::constant(double value, int order, const Point& base) {
  Jet j(order, base);
  j.coef_[0] = value;
  return j;
}

Jet Jet::coordinate(int axis, int order, const Point& base) {
  if (axis < 0 || axis >= kChartDim) throw std::invalid_argument("axis out of range");
  Jet j(order, base);
  j.coef_[0] = base[axis];
  if (order >= 1) {
    Exponents e{};
    e[axis] = 1;
    j.coef_[monomial_rank(e)] = 1.0;
  }
  return j;
}

double Jet::coeff(const Exponents& e) const {
  if (exponents_degree(e) > order_) return 0.0;
  return coef_[monomial_rank(e)];
}

void Jet::set_coeff(const Exponents& e, double v) {
  if (exponents_degree(e) > order_)
    throw std::invalid_argument("coefficient degree exceeds jet order");
  coef_[monomial_rank(e)] = v;
}

Jet Jet::truncated(int new_order) const {
  if (new_order >= order_) return *this;
  Jet out(new_order, base_);
  std::copy(coef_.begin(), coef_.begin() + jet_coeff_count(new_order), out.coef_.begin());
  return out;
}

double Jet::sup_norm() const {
  double m = 0.0;
  for (double c : coef_) m = std::max(m, std::abs(c));
  return m;
}

void require_compatible(const Jet& a, const Jet& b) {
  if (a.base_point() != b.base_point())
    throw std::invalid_argument("jet base point mismatch");
}

Jet Jet::operator-() const {
  Jet out = *this;
  for (double& c : out.coef_) c = -c;
  return out;
}

Jet& Jet::operator+=(const Jet& rhs) {
  require_compatible(*this, rhs);
  if (rhs.order_ < order_) *this = truncated(rhs.order_);
  for (size_t i = 0; i < coef_.size(); ++i) coef_[i] += rhs.coef_[i];
  return *this;
}

Jet& Jet::operator-=(const Jet& rhs) {
  require_compatible(*this, rhs);
  if (rhs.order_ < order_) *this = truncated(rhs.order_);
  for (size_t i = 0; i < coef_.size(); ++i) coef_[i] -= rhs.coef_[i];
  return *this;
}

Jet& Jet::operator*=(double s) {
  for (double& c : coef_) c *= s;
  return *this;
}

Jet operator+(const Jet& a, const Jet& b) {
  Jet out = a;
  out += b;
  return out;
}

Jet operator-(const Jet& a, const Jet& b) {
  Jet out = a;
  out -= b;
  return out;
}

Jet operator*(const Jet& a, double s) {
  Jet out = a;
  out *= s;
  return out;
}

Jet operator*(double s, const Jet& a) { return a * s; }

Jet operator*(const Jet& a, const Jet& b) {
  require_compatible(a, b);
  const int order = std::min(a.order(), b.order());
  Jet out(order, a.base_point());
  const OrderCache& cache = order_cache(order);
  const int count = static_cast<int>(cache.monomials.size());
  const std::int32_t* table = cache.product_rank.data();
  double* dst = out.raw().data();
  const double* bc = b.raw().data();
  for (int i = 0; i < count; ++i) {
    const double ai = a.raw()[i];
    if (ai == 0.0) continue;
    const int jmax = jet_coeff_count(order - cache.degree_of_rank[i]);
    const std::int32_t* row = table + static_cast<size_t>(i) * count;
    for (int j = 0; j < jmax; ++j) dst[row[j]] += ai * bc[j];
  }
  return out;
}

Jet Jet::partial(int axis) const {
  if (order_ < 1) throw std::invalid_argument("jet order exhausted: cannot differentiate order-0 jet");
  if (axis < 0 || axis >= kChartDim) throw std::invalid_argument("axis out of range");
  Jet out(order_ - 1, base_);
  const auto& mono = monomial_table(order_ - 1);
  for (size_t r = 0; r < mono.size(); ++r) {
    Exponents e = mono[r];
    e[axis] = static_cast<std::uint8_t>(e[axis] + 1);
    out.coef_[r] = (e[axis]) * coef_[monomial_rank(e)];
  }
  return out;
}

Jet Jet::reciprocal() const {
  const double c0 = coef_[0];
  if (c0 == 0.0) throw std::invalid_argument("jet reciprocal: zero value at base point");
  Jet y = Jet::constant(1.0 / c0, order_, base_);
  // Newton: y <- y(2 - a y); the error valuation doubles each step.
  int steps = 1;
  while ((1 << steps) <= order_) ++steps;
  for (int s = 0; s <= steps; ++s) {
    Jet ay = (*this) * y;
    Jet two_minus = Jet::constant(2.0, order_, base_) - ay;
    y = y * two_minus;
  }
  return y;
}

Jet Jet::exp() const {
  Jet n = *this;
  const double c0 = coef_[0];
  n.coef_[0] = 0.0;
  Jet sum = Jet::constant(1.0, order_, base_);
  Jet term = Jet::constant(1.0, order_, base_);
  for (int k = 1; k <= order_; ++k) {
    term = term * n;
    term *= 1.0 / k;
    sum += term;
  }
  sum *= std::exp(c0);
  return sum;
}

Jet polynomial_to_jet(const std::vector<std::pair<Exponents, double>>& terms, int order,
                      const Point& base) {
  Jet out(order, base);
  // Binomial expansion of (base + u)^mu per axis.
  for (const auto& [mu, c] : terms) {
    Exponents nu{};
    // Iterate nu <= mu componentwise.
    while (true) {
      if (exponents_degree(nu) <= order) {
        double w = c;
        for (int a = 0; a < kChartDim; ++a) {
          long long bin = 1;
          for (int t = 1; t <= nu[a]; ++t) bin = bin * (mu[a] - nu[a] + t) / t;
          w *= static_cast<double>(bin);
          for (int t = 0; t < mu[a] - nu[a]; ++t) w *= base[a];
        }
        out.raw()[monomial_rank(nu)] += w;
      }
      int a = 0;
      while (a < kChartDim && nu[a] == mu[a]) {
        nu[a] = 0;
        ++a;
      }
      if (a == kChartDim) break;
      nu[a] = static_cast<std::uint8_t>(nu[a] + 1);
    }
  }
  return out;
}

Point JetMap::value() const {
  Point q;
  for (int i = 0; i < kChartDim; ++i) q[i] = comp[i].value();
  return q;
}

JetMap JetMap::identity(int order, const Point& base) {
  JetMap m;
  for (int i = 0; i < kChartDim; ++i) m.comp[i] = Jet::coordinate(i, order, base);
  return m;
}

Jet compose(const Jet& f, const JetMap& phi) {
  const Point q = phi.value();
  if (f.base_point() != q)
    throw std::invalid_argument("compose: jet base point differs from map image point");
  const int order = std::min(f.order(), phi.order());
  const Point& p = phi.base_point();

  // Centered components w_a = phi_a - q_a, each with zero value, so the
  // product w^mu has valuation >= |mu| and the memo below is triangular.
  std::array<Jet, kChartDim> w;
  for (int a = 0; a < kChartDim; ++a) {
    w[a] = phi.comp[a].truncated(order);
    w[a].raw()[0] = 0.0;
  }

  const auto& mono = monomial_table(order);
  std::vector<Jet> prod(mono.size());
  prod[0] = Jet::constant(1.0, order, p);
  Jet out(order, p);
  out.raw()[0] = f.raw()[0];
  for (size_t r = 1; r < mono.size(); ++r) {
    const Exponents& e = mono[r];
    int last = kChartDim - 1;
    while (e[last] == 0) --last;
    Exponents pred = e;
    pred[last] = static_cast<std::uint8_t>(pred[last] - 1);
    prod[r] = prod[monomial_rank(pred)] * w[last];
    const double fr = f.raw()[r];
    if (fr != 0.0) {
      double* dst = out.raw().data();
      const double* src = prod[r].raw().data();
      for (size_t i = 0; i < out.raw().size(); ++i) dst[i] += fr * src[i];
    }
  }
  return out;
}

JetMap compose(const JetMap& phi, const JetMap& psi) {
  JetMap out;
  for (int i = 0; i < kChartDim; ++i) out.comp[i] = compose(phi.comp[i], psi);
  return out;
}

std::array<std::array<double, 6>, 6> jacobian_at_base(const JetMap& phi) {
  std::array<std::array<double, 6>, 6> jac{};
  for (int i = 0; i < kChartDim; ++i)
    for (int a = 0; a < kChartDim; ++a) {
      Exponents e{};
      e[a] = 1;
      jac[i][a] = phi.comp[i].coeff(e);
    }
  return jac;
}

JetMap invert(const JetMap& phi) {
  const int order = phi.order();
  const Point p = phi.base_point();
  const Point q = phi.value();

  const auto jac = jacobian_at_base(phi);
  // Invert the plain 6x6 of doubles.
  std::array<std::array<double, 6>, 6> inv{};
  {
    double m[6][12];
    for (int i = 0; i < 6; ++i) {
      for (int a = 0; a < 6; ++a) m[i][a] = jac[i][a];
      for (int a = 0; a < 6; ++a) m[i][6 + a] = (i == a) ? 1.0 : 0.0;
    }
    for (int col = 0; col < 6; ++col) {
      int piv = col;
      for (int r = col + 1; r < 6; ++r)
        if (std::abs(m[r][col]) > std::abs(m[piv][col])) piv = r;
      if (std::abs(m[piv][col]) < 1e-14)
        throw std::invalid_argument("invert: singular Jacobian at base point");
      if (piv != col)
        for (int a = 0; a < 12; ++a) std::swap(m[piv][a], m[col][a]);
      const double s = 1.0 / m[col][col];
      for (int a = 0; a < 12; ++a) m[col][a] *= s;
      for (int r = 0; r < 6; ++r) {
        if (r == col) continue;
        const double f = m[r][col];
        if (f == 0.0) continue;
        for (int a = 0; a < 12; ++a) m[r][a] -= f * m[col][a];
      }
    }
    for (int i = 0; i < 6; ++i)
      for (int a = 0; a < 6; ++a) inv[i][a] = m[i][6 + a];
  }

  // Initial guess: affine inverse psi(x) = p + J^{-1}(x - q), based at q.
  JetMap psi;
  for (int i = 0; i < kChartDim; ++i) {
    Jet c = Jet::constant(p[i], order, q);
    for (int a = 0; a < kChartDim; ++a) {
      if (inv[i][a] == 0.0) continue;
      c += (Jet::coordinate(a, order, q) - Jet::constant(q[a], order, q)) * inv[i][a];
    }
    psi.comp[i] = c;
  }

  // Newton on the jet ring; the residual valuation doubles each step.
  int steps = 1;
  while ((1 << steps) <= order) ++steps;
  for (int s = 0; s <= steps; ++s) {
    JetMap r = compose(phi, psi);
    double rn = 0.0;
    for (int i = 0; i < kChartDim; ++i) {
      r.comp[i] -= Jet::coordinate(i, order, q);
      rn = std::max(rn, r.comp[i].sup_norm());
    }
    if (rn == 0.0) break;
    // Solve DPhi(psi) * delta = r. The Jacobian entries are only guaranteed
    // to order-1, but r has valuation >= 2, so zero-padding them back to the
    // working order leaves delta exact through that order.
    JetMatrix dphi(6, 6, order, q);
    for (int i = 0; i < 6; ++i)
      for (int a = 0; a < 6; ++a) {
        Jet entry = compose(phi.comp[i].partial(a), psi);
        Jet padded(order, q);
        std::copy(entry.raw().begin(), entry.raw().end(), padded.raw().begin());
        dphi.at(i, a) = padded;
      }
    JetMatrix dinv = dphi.inverse();
    for (int i = 0; i < kChartDim; ++i) {
      Jet delta(order, q);
      for (int a = 0; a < kChartDim; ++a) delta += dinv.at(i, a) * r.comp[a];
      psi.comp[i] -= delta;
    }
  }
  return psi;
}

}  // namespace plane6
