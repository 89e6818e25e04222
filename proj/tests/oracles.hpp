#pragma once

// Reference computations for the tests. These avoid the library's own
// machinery: norms from their textbook formulas, derivatives by finite
// differences, orthogonality by direct 1-D minimization, and polyhedral dual
// norms by brute force over unit-ball vertices.

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace oracle {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;
using NormFn = std::function<double(const Vec&)>;

inline double lp(const Vec& x, double p) {
  if (std::isinf(p)) return x.cwiseAbs().maxCoeff();
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += std::pow(std::abs(x[i]), p);
  return std::pow(s, 1.0 / p);
}

inline double weighted_lp(const Vec& x, double p, const std::vector<double>& w) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (Eigen::Index i = 0; i < x.size(); ++i) m = std::max(m, w[static_cast<std::size_t>(i)] * std::abs(x[i]));
    return m;
  }
  double s = 0.0;
  for (Eigen::Index i = 0; i < x.size(); ++i) s += w[static_cast<std::size_t>(i)] * std::pow(std::abs(x[i]), p);
  return std::pow(s, 1.0 / p);
}

inline double polyhedral(const Vec& x, const Mat& rows) { return (rows * x).cwiseAbs().maxCoeff(); }

/// One-sided derivative of t -> N(u + t x) at 0+, by Richardson extrapolation.
inline double one_sided_derivative(const NormFn& N, const Vec& u, const Vec& x) {
  const double base = N(u);
  auto q = [&](double h) { return (N(u + h * x) - base) / h; };
  const double h = 1e-5;
  return 2.0 * q(h / 2) - q(h);
}

/// Golden-section minimum of a convex function on [lo, hi].
inline double golden_min(const std::function<double(double)>& g, double lo, double hi, int iterations = 200) {
  const double r = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo, b = hi;
  double c = b - r * (b - a), d = a + r * (b - a);
  double gc = g(c), gd = g(d);
  for (int k = 0; k < iterations && b - a > 1e-15 * (1.0 + std::abs(a)); ++k) {
    if (gc <= gd) {
      b = d;
      d = c;
      gd = gc;
      c = b - r * (b - a);
      gc = g(c);
    } else {
      a = c;
      c = d;
      gc = gd;
      d = a + r * (b - a);
      gd = g(d);
    }
  }
  return std::min({gc, gd, g(0.0)});
}

/// min_t N(x + t y) - N(x); >= 0 exactly when x is Birkhoff orthogonal to y.
inline double birkhoff_gap(const NormFn& N, const Vec& x, const Vec& y) {
  const double nx = N(x);
  const double ny = N(y);
  if (nx == 0.0 || ny == 0.0) return 0.0;
  const double R = 3.0 * nx / ny;
  return golden_min([&](double t) { return N(x + t * y); }, -R, R) - nx;
}

/// Vertices of the unit ball {v : |a_i . v| <= 1}: solutions of n active
/// constraints with signs, kept when feasible.
inline std::vector<Vec> polyhedral_vertices(const Mat& rows) {
  const int m = static_cast<int>(rows.rows());
  const int n = static_cast<int>(rows.cols());
  std::vector<Vec> out;
  std::vector<int> pick(static_cast<std::size_t>(n));
  std::function<void(int, int)> rec = [&](int start, int depth) {
    if (depth == n) {
      Mat A(n, n);
      for (int k = 0; k < n; ++k) A.row(k) = rows.row(pick[static_cast<std::size_t>(k)]);
      Eigen::FullPivLU<Mat> lu(A);
      if (!lu.isInvertible()) return;
      for (int mask = 0; mask < (1 << n); ++mask) {
        Vec rhs(n);
        for (int k = 0; k < n; ++k) rhs[k] = (mask >> k) & 1 ? -1.0 : 1.0;
        const Vec v = lu.solve(rhs);
        if ((rows * v).cwiseAbs().maxCoeff() <= 1.0 + 1e-12) out.push_back(v);
      }
      return;
    }
    for (int i = start; i < m; ++i) {
      pick[static_cast<std::size_t>(depth)] = i;
      rec(i + 1, depth + 1);
    }
  };
  rec(0, 0);
  return out;
}

inline double polyhedral_dual(const Vec& f, const Mat& rows) {
  double best = 0.0;
  for (const Vec& v : polyhedral_vertices(rows)) best = std::max(best, std::abs(f.dot(v)));
  return best;
}

/// Gradient of the lp norm at x (1 < p < inf), from the closed form.
inline Vec lp_gradient(const Vec& x, double p) {
  const double n = lp(x, p);
  Vec g(x.size());
  for (Eigen::Index i = 0; i < x.size(); ++i)
    g[i] = (x[i] > 0 ? 1.0 : (x[i] < 0 ? -1.0 : 0.0)) * std::pow(std::abs(x[i]) / n, p - 1.0);
  return g;
}

/// Multiset comparison of {a, b} and {c, d}.
inline double multiset_gap(double a, double b, double c, double d) {
  if (a > b) std::swap(a, b);
  if (c > d) std::swap(c, d);
  return std::max(std::abs(a - c), std::abs(b - d));
}

}  // namespace oracle
