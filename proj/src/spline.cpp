#include "lamiga/spline.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace lamiga {

namespace {

constexpr double kKnotTol = 1e-14;

bool same_knot(double a, double b) { return std::abs(a - b) <= kKnotTol; }

// Leibniz terms: for slot a, every slot b < a componentwise (b != a) with the
// complementary slot a-b and the multinomial coefficient prod C(a_d, b_d).
struct LeibnizTerm {
  int beta;
  int rest;
  double coeff;
};

struct LeibnizTable {
  std::array<std::vector<LeibnizTerm>, kNumSlots> terms;
  LeibnizTable() {
    auto binom = [](int n, int k) {
      int r = 1;
      for (int i = 0; i < k; ++i) r = r * (n - i) / (i + 1);
      return r;
    };
    for (int a = 0; a < kNumSlots; ++a) {
      const auto& ea = kSlots[a].e;
      for (int b = 0; b < kNumSlots; ++b) {
        if (b == a) continue;
        const auto& eb = kSlots[b].e;
        if (eb[0] > ea[0] || eb[1] > ea[1] || eb[2] > ea[2]) continue;
        const int rest = slot_of(ea[0] - eb[0], ea[1] - eb[1], ea[2] - eb[2]);
        const double c = binom(ea[0], eb[0]) * binom(ea[1], eb[1]) * binom(ea[2], eb[2]);
        terms[a].push_back({b, rest, c});
      }
    }
  }
};

const LeibnizTable& leibniz() {
  static const LeibnizTable table;
  return table;
}

// Collocation matrix of the basis of `kv` at `pts`.
Eigen::MatrixXd collocation_matrix(const KnotVector& kv, const std::vector<double>& pts) {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(pts.size()), kv.num_basis());
  for (std::size_t r = 0; r < pts.size(); ++r) {
    const BasisTable t = eval_basis_ders(kv, pts[r], 0);
    for (int j = 0; j < t.size(); ++j) m(static_cast<Eigen::Index>(r), t.first_index() + j) = t(0, j);
  }
  return m;
}

// Applies a per-direction linear map to coefficients stored in linear index
// order of a space with counts n. Returns coefficients for counts n with n[d]
// replaced by op.rows().
Eigen::MatrixXd apply_direction(const Eigen::MatrixXd& coeffs, std::array<int, 3> n, int d,
                                const Eigen::MatrixXd& op) {
  std::array<int, 3> m = n;
  m[d] = static_cast<int>(op.rows());
  Eigen::MatrixXd out = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m[0]) * m[1] * m[2], coeffs.cols());
  const auto lin = [](const std::array<int, 3>& c, int i0, int i1, int i2) { return i0 + c[0] * (i1 + c[1] * i2); };
  std::array<int, 3> idx{};
  for (idx[2] = 0; idx[2] < m[2]; ++idx[2])
    for (idx[1] = 0; idx[1] < m[1]; ++idx[1])
      for (idx[0] = 0; idx[0] < m[0]; ++idx[0]) {
        const int row = lin(m, idx[0], idx[1], idx[2]);
        std::array<int, 3> src = idx;
        for (int k = 0; k < n[d]; ++k) {
          const double c = op(idx[d], k);
          if (c == 0.0) continue;
          src[d] = k;
          out.row(row) += c * coeffs.row(lin(n, src[0], src[1], src[2]));
        }
      }
  return out;
}

}  // namespace

KnotVector::KnotVector(int degree, std::vector<double> knots) : degree_(degree), knots_(std::move(knots)) {
  if (degree_ < 0 || degree_ > kMaxDegree) throw DomainError("knot vector: degree out of range");
  const int n = static_cast<int>(knots_.size());
  if (n < 2 * (degree_ + 1)) throw DomainError("knot vector: too few knots for degree");
  for (int i = 1; i < n; ++i)
    if (knots_[i] < knots_[i - 1]) throw DomainError("knot vector: knots must be nondecreasing");
  for (int i = 0; i <= degree_; ++i)
    if (knots_[i] != knots_[0] || knots_[n - 1 - i] != knots_[n - 1])
      throw DomainError("knot vector: end knots must be repeated degree+1 times");
  if (knots_[degree_ + 1] == knots_[0] && n > 2 * (degree_ + 1))
    throw DomainError("knot vector: end multiplicity exceeds degree+1");
  if (knots_[n - 2 - degree_] == knots_[n - 1] && n > 2 * (degree_ + 1))
    throw DomainError("knot vector: end multiplicity exceeds degree+1");
  if (!(knots_.back() > knots_.front())) throw DomainError("knot vector: no nonempty span");
  for (int i = degree_ + 1; i + degree_ + 1 < n; ++i) {
    int mult = 1;
    while (i + mult < n - degree_ - 1 && knots_[i + mult] == knots_[i]) ++mult;
    if (mult > degree_ + 1) throw DomainError("knot vector: interior multiplicity exceeds degree+1");
    i += mult - 1;
  }
}

KnotVector KnotVector::open_uniform(int degree, int num_basis) {
  if (num_basis < degree + 1) throw DomainError("open_uniform: need at least degree+1 basis functions");
  const int nel = num_basis - degree;
  std::vector<double> k(degree + 1, 0.0);
  for (int i = 1; i < nel; ++i) k.push_back(static_cast<double>(i) / nel);
  k.insert(k.end(), degree + 1, 1.0);
  return KnotVector(degree, std::move(k));
}

std::vector<double> KnotVector::breakpoints() const {
  std::vector<double> b;
  for (double k : knots_)
    if (b.empty() || k != b.back()) b.push_back(k);
  return b;
}

int KnotVector::multiplicity(double value) const {
  return static_cast<int>(std::count_if(knots_.begin(), knots_.end(), [&](double k) { return same_knot(k, value); }));
}

std::vector<int> KnotVector::span_indices() const {
  std::vector<int> s;
  for (int i = degree_; i < num_basis(); ++i)
    if (knots_[i + 1] > knots_[i]) s.push_back(i);
  return s;
}

KnotVector KnotVector::with_inserted(double value, int times) const {
  if (!(value > front() && value < back())) throw DomainError("knot insertion: value must be interior");
  std::vector<double> k = knots_;
  k.insert(std::upper_bound(k.begin(), k.end(), value), times, value);
  return KnotVector(degree_, std::move(k));
}

KnotVector KnotVector::elevated(int t) const {
  if (t < 0) throw DomainError("degree elevation: negative increment");
  std::vector<double> k;
  for (double b : breakpoints()) {
    const int m = static_cast<int>(std::count(knots_.begin(), knots_.end(), b));
    k.insert(k.end(), m + t, b);
  }
  return KnotVector(degree_ + t, std::move(k));
}

bool KnotVector::contains(const KnotVector& coarse) const {
  if (coarse.degree() > degree_) return false;
  if (!same_knot(coarse.front(), front()) || !same_knot(coarse.back(), back())) return false;
  const int dp = degree_ - coarse.degree();
  for (double b : coarse.breakpoints()) {
    if (b == coarse.front() || b == coarse.back()) continue;
    // Continuity of the coarse space at b is p_c - m_c; the fine space must be
    // at most as smooth: p_f - m_f <= p_c - m_c.
    if (multiplicity(b) < coarse.multiplicity(b) + dp) return false;
  }
  return true;
}

int find_span(const KnotVector& kv, double xi) {
  const auto& k = kv.knots();
  const int p = kv.degree();
  const int n = kv.num_basis();
  if (!(xi >= k.front() && xi <= k.back())) {
    std::ostringstream os;
    os << "find_span: parameter " << xi << " outside [" << k.front() << ", " << k.back() << "]";
    throw DomainError(os.str());
  }
  if (xi >= k[n]) {
    int s = n - 1;
    while (k[s] == k[s + 1]) --s;
    return s;
  }
  const auto it = std::upper_bound(k.begin() + p, k.begin() + n + 1, xi);
  return static_cast<int>(it - k.begin()) - 1;
}

BasisTable eval_basis_ders(const KnotVector& kv, double xi, int max_order) {
  if (max_order < 0 || max_order > 3) throw DomainError("eval_basis_ders: order must be in 0..3");
  const int p = kv.degree();
  const auto& U = kv.knots();
  BasisTable t;
  t.span = find_span(kv, xi);
  t.degree = p;
  t.order = max_order;
  t.ders.assign(static_cast<std::size_t>(max_order + 1) * (p + 1), 0.0);
  const int i = t.span;

  double ndu[kMaxDegree + 1][kMaxDegree + 1];
  double left[kMaxDegree + 1], right[kMaxDegree + 1];
  ndu[0][0] = 1.0;
  for (int j = 1; j <= p; ++j) {
    left[j] = xi - U[i + 1 - j];
    right[j] = U[i + j] - xi;
    double saved = 0.0;
    for (int r = 0; r < j; ++r) {
      ndu[j][r] = right[r + 1] + left[j - r];
      const double temp = ndu[r][j - 1] / ndu[j][r];
      ndu[r][j] = saved + right[r + 1] * temp;
      saved = left[j - r] * temp;
    }
    ndu[j][j] = saved;
  }
  for (int j = 0; j <= p; ++j) t.ders[j] = ndu[j][p];

  const int n = std::min(max_order, p);
  double a[2][kMaxDegree + 1];
  for (int r = 0; r <= p; ++r) {
    int s1 = 0, s2 = 1;
    a[0][0] = 1.0;
    for (int k = 1; k <= n; ++k) {
      double d = 0.0;
      const int rk = r - k, pk = p - k;
      if (r >= k) {
        a[s2][0] = a[s1][0] / ndu[pk + 1][rk];
        d = a[s2][0] * ndu[rk][pk];
      }
      const int j1 = rk >= -1 ? 1 : -rk;
      const int j2 = (r - 1 <= pk) ? k - 1 : p - r;
      for (int j = j1; j <= j2; ++j) {
        a[s2][j] = (a[s1][j] - a[s1][j - 1]) / ndu[pk + 1][rk + j];
        d += a[s2][j] * ndu[rk + j][pk];
      }
      if (r <= pk) {
        a[s2][k] = -a[s1][k - 1] / ndu[pk + 1][r];
        d += a[s2][k] * ndu[r][pk];
      }
      t.ders[k * (p + 1) + r] = d;
      std::swap(s1, s2);
    }
  }
  double f = p;
  for (int k = 1; k <= n; ++k) {
    for (int j = 0; j <= p; ++j) t.ders[k * (p + 1) + j] *= f;
    f *= (p - k);
  }
  return t;
}

std::vector<double> greville(const KnotVector& kv) {
  const int p = kv.degree();
  const auto& k = kv.knots();
  std::vector<double> g(kv.num_basis());
  for (int i = 0; i < kv.num_basis(); ++i) {
    if (p == 0) {
      g[i] = 0.5 * (k[i] + k[i + 1]);
      continue;
    }
    double s = 0.0;
    for (int j = 1; j <= p; ++j) s += k[i + j];
    g[i] = s / p;
  }
  return g;
}

void rational_basis(const TensorSpace& space, std::span<const double> weights,
                    const std::array<BasisTable, 3>& tables, int order, RationalBasis& out) {
  const int ns = num_slots(order);
  const int n0 = tables[0].size(), n1 = tables[1].size(), n2 = tables[2].size();
  const int nf = n0 * n1 * n2;
  out.order = order;
  out.nslots = ns;
  out.indices.resize(nf);
  out.values.assign(static_cast<std::size_t>(nf) * ns, 0.0);

  double W[kNumSlots] = {};
  const auto cnt = space.counts();
  int fn = 0;
  for (int c = 0; c < n2; ++c)
    for (int b = 0; b < n1; ++b)
      for (int a = 0; a < n0; ++a, ++fn) {
        const int i0 = tables[0].first_index() + a;
        const int i1 = tables[1].first_index() + b;
        const int i2 = tables[2].first_index() + c;
        const int lin = i0 + cnt[0] * (i1 + cnt[1] * i2);
        out.indices[fn] = lin;
        const double w = weights.empty() ? 1.0 : weights[lin];
        if (!(w > 0.0)) throw GeometryError("NURBS weights must be strictly positive");
        double* v = out.values.data() + static_cast<std::size_t>(fn) * ns;
        for (int s = 0; s < ns; ++s) {
          const auto& e = kSlots[s].e;
          const double nw = w * (e[0] <= tables[0].order ? tables[0](e[0], a) : 0.0) *
                            (e[1] <= tables[1].order ? tables[1](e[1], b) : 0.0) *
                            (e[2] <= tables[2].order ? tables[2](e[2], c) : 0.0);
          v[s] = nw;
          W[s] += nw;
        }
      }
  if (!(W[0] > 0.0)) throw GeometryError("NURBS weight function vanishes");
  const auto& lt = leibniz();
  const double invW = 1.0 / W[0];
  for (int f = 0; f < nf; ++f) {
    double* v = out.values.data() + static_cast<std::size_t>(f) * ns;
    for (int s = 0; s < ns; ++s) {
      double num = v[s];
      for (const auto& term : lt.terms[s]) num -= term.coeff * v[term.beta] * W[term.rest];
      v[s] = num * invW;
    }
  }
}

RationalBasis nurbs_basis_ders(const TensorSpace& space, std::span<const double> weights,
                               const std::array<double, 3>& xi, int order) {
  if (order < 0 || order > 3) throw DomainError("nurbs_basis_ders: order must be in 0..3");
  std::array<BasisTable, 3> t;
  for (int d = 0; d < 3; ++d) t[d] = eval_basis_ders(space.dirs[d], xi[d], order);
  RationalBasis rb;
  rational_basis(space, weights, t, order, rb);
  return rb;
}

Eigen::MatrixXd transfer_matrix(const KnotVector& coarse, const KnotVector& fine) {
  if (!fine.contains(coarse)) throw DomainError("refinement target does not contain the source space");
  const std::vector<double> g = greville(fine);
  const Eigen::MatrixXd bf = collocation_matrix(fine, g);
  const Eigen::MatrixXd bc = collocation_matrix(coarse, g);
  Eigen::MatrixXd t = bf.partialPivLu().solve(bc);
  for (Eigen::Index i = 0; i < t.size(); ++i)
    if (std::abs(t.data()[i]) < 1e-15) t.data()[i] = 0.0;
  return t;
}

Eigen::MatrixXd embed(const TensorSpace& space, const Eigen::MatrixXd& coeffs, const TensorSpace& target) {
  if (coeffs.rows() != space.num_basis()) throw DomainError("embed: coefficient count does not match space");
  Eigen::MatrixXd c = coeffs;
  std::array<int, 3> n = space.counts();
  for (int d = 0; d < 3; ++d) {
    if (space.dirs[d] == target.dirs[d]) continue;
    const Eigen::MatrixXd t = transfer_matrix(space.dirs[d], target.dirs[d]);
    c = apply_direction(c, n, d, t);
    n[d] = static_cast<int>(t.rows());
  }
  return c;
}

KnotVector refined_knots(const KnotVector& kv, int count, int degree) {
  if (degree < kv.degree()) throw DomainError("refine: target degree below current degree");
  if (count < kv.num_basis()) throw DomainError("refine: target control count below current count");
  const KnotVector e = kv.elevated(degree - kv.degree());
  const double a = e.front(), len = e.back() - e.front();
  // Uniform spans merged with the existing interior knots; the number of
  // uniform spans is the one that yields `count` functions.
  for (int nel = 1; nel <= count - degree; ++nel) {
    std::vector<double> bps;
    for (int i = 1; i < nel; ++i) bps.push_back(a + len * i / nel);
    for (double b : e.breakpoints())
      if (b != e.front() && b != e.back()) bps.push_back(b);
    std::sort(bps.begin(), bps.end());
    std::vector<double> k(degree + 1, e.front());
    for (std::size_t i = 0; i < bps.size(); ++i) {
      if (i > 0 && same_knot(bps[i], bps[i - 1])) continue;
      k.insert(k.end(), std::max(1, e.multiplicity(bps[i])), bps[i]);
    }
    k.insert(k.end(), degree + 1, e.back());
    const int nb = static_cast<int>(k.size()) - degree - 1;
    if (nb == count) return KnotVector(degree, std::move(k));
    if (nb > count) break;
  }
  throw DomainError("refine: existing interior knots are incompatible with the requested uniform count");
}

RefinedCoefficients refine(const TensorSpace& space, const Eigen::MatrixXd& coeffs,
                           const std::array<int, 3>& counts, const std::array<int, 3>& degrees) {
  TensorSpace target;
  for (int d = 0; d < 3; ++d) target.dirs[d] = refined_knots(space.dirs[d], counts[d], degrees[d]);
  return {target, embed(space, coeffs, target)};
}

Eigen::MatrixXd interpolate_at_greville(const TensorSpace& space, const Eigen::MatrixXd& values) {
  if (values.rows() != space.num_basis()) throw DomainError("interpolate: value count does not match space");
  Eigen::MatrixXd c = values;
  const std::array<int, 3> n = space.counts();
  for (int d = 0; d < 3; ++d) {
    const Eigen::MatrixXd b = collocation_matrix(space.dirs[d], greville(space.dirs[d]));
    c = apply_direction(c, n, d, b.inverse());
  }
  return c;
}

}  // namespace lamiga
