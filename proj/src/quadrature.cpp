#include "lamiga/quadrature.hpp"

#include <cmath>
#include <numbers>

namespace lamiga {

GaussRule gauss_legendre(int n) {
  if (n < 1) throw DomainError("gauss_legendre: need at least one point");
  GaussRule g;
  g.x.resize(n);
  g.w.resize(n);
  // Legendre P_n and its derivative by the three-term recurrence.
  auto legendre = [n](double x, double& dp) {
    double p0 = 1.0, p1 = x;
    for (int k = 2; k <= n; ++k) {
      const double p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
      p0 = p1;
      p1 = p2;
    }
    if (n == 1) p0 = 1.0;
    dp = n * (x * p1 - p0) / (x * x - 1.0);
    return p1;
  };
  for (int i = 0; i < (n + 1) / 2; ++i) {
    double x = std::cos(std::numbers::pi * (i + 0.75) / (n + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      const double dx = legendre(x, dp) / dp;
      x -= dx;
      if (std::abs(dx) < 1e-16) break;
    }
    legendre(x, dp);
    const double w = 2.0 / ((1.0 - x * x) * dp * dp);
    g.x[i] = -x;
    g.x[n - 1 - i] = x;
    g.w[i] = g.w[n - 1 - i] = w;
  }
  if (n % 2 == 1) g.x[n / 2] = 0.0;
  return g;
}

namespace {

void append_interval(LineRule& out, const GaussRule& g, double a, double b, int span, int ply) {
  const double half = 0.5 * (b - a), mid = 0.5 * (a + b);
  for (std::size_t i = 0; i < g.x.size(); ++i) out.push_back({mid + half * g.x[i], half * g.w[i], span, ply});
}

}  // namespace

LineRule span_rule(const KnotVector& kv, int n) {
  const GaussRule g = gauss_legendre(n);
  LineRule out;
  for (int s : kv.span_indices()) append_interval(out, g, kv.knots()[s], kv.knots()[s + 1], s, 0);
  return out;
}

LineRule ply_rule(const KnotVector& kv, const std::vector<double>& boundaries, int n) {
  const GaussRule g = gauss_legendre(n);
  LineRule out;
  const double tol = 1e-13;
  for (int s : kv.span_indices()) {
    const double a = kv.knots()[s], b = kv.knots()[s + 1];
    std::vector<double> cuts{a};
    for (double c : boundaries)
      if (c > a + tol && c < b - tol) cuts.push_back(c);
    cuts.push_back(b);
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
      const double mid = 0.5 * (cuts[i] + cuts[i + 1]);
      int ply = 0;
      for (std::size_t k = 1; k + 1 < boundaries.size(); ++k)
        if (mid > boundaries[k]) ply = static_cast<int>(k);
      append_interval(out, g, cuts[i], cuts[i + 1], s, ply);
    }
  }
  return out;
}

double QuadratureRule::total_weight() const {
  double w[3] = {0, 0, 0};
  for (int d = 0; d < 3; ++d)
    for (const auto& p : lines[d]) w[d] += p.weight;
  return w[0] * w[1] * w[2];
}

QuadratureRule layerwise_rule(const TensorSpace& space, const Layup& layup, int n_inplane) {
  if (space.dirs[2].num_spans() != 1)
    throw UnsupportedError("layerwise rule requires a single element through the thickness");
  return ply_split_rule(space, layup, n_inplane, 0);
}

QuadratureRule ply_split_rule(const TensorSpace& space, const Layup& layup, int n_inplane, int n_thickness) {
  layup.validate();
  QuadratureRule q;
  for (int d = 0; d < 2; ++d)
    q.lines[d] = span_rule(space.dirs[d], n_inplane > 0 ? n_inplane : space.dirs[d].degree() + 1);
  q.lines[2] = ply_rule(space.dirs[2], layup.boundaries(), n_thickness > 0 ? n_thickness : space.dirs[2].degree() + 1);
  return q;
}

QuadratureRule homogeneous_rule(const TensorSpace& space, int extra) {
  QuadratureRule q;
  for (int d = 0; d < 3; ++d) q.lines[d] = span_rule(space.dirs[d], space.dirs[d].degree() + 1 + extra);
  return q;
}

}  // namespace lamiga
