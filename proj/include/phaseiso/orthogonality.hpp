#pragma once

#include <phaseiso/space.hpp>

#include <Eigen/LU>

#include <algorithm>
#include <cmath>

namespace phaseiso {

struct OrthogonalityVerdict {
  bool orthogonal = true;
  /// Set when the exact criterion failed by less than the margin and the pair
  /// was resolved as orthogonal anyway.
  bool near_tie = false;
  /// M_xhat(y) and -M_xhat(-y); orthogonal iff lower <= 0 <= upper.
  double upper = 0.0;
  double lower = 0.0;
  /// Supporting functional at x vanishing on y when orthogonal; otherwise the
  /// supporting functional whose value on y is closest to zero.
  Functional witness;
};

/// Birkhoff orthogonality ||x + t y|| >= ||x|| for all real t, decided by the
/// James criterion -M_xhat(-y) <= 0 <= M_xhat(y). Orthogonality against 0 holds.
inline OrthogonalityVerdict is_birkhoff_orthogonal(const NormSpec& space, const Vec& x, const Vec& y,
                                                   const Tolerances& tol = {}) {
  space.require_dim(x, "x");
  space.require_dim(y, "y");
  OrthogonalityVerdict v;
  v.witness = Functional{Vec::Zero(space.dim())};
  if (x.isZero(0.0) || y.isZero(0.0)) {
    if (!x.isZero(0.0)) v.witness = support_set(space, x, tol).witness;
    return v;
  }

  const Vec xhat = x / norm(space, x);
  const Functional hi = max_supporting_functional(space, xhat, y, tol);
  // Maximizing on -y is minimizing on y over D(xhat).
  const Functional lo_member = max_supporting_functional(space, xhat, -y, tol);
  v.upper = hi(y);
  v.lower = lo_member(y);

  const double margin = tol.slack(norm(space, y));
  if (v.upper < -margin || v.lower > margin) {
    v.orthogonal = false;
    v.witness = v.upper < 0 ? hi : lo_member;
    return v;
  }
  v.near_tie = v.upper < 0 || v.lower > 0;
  if (v.upper <= 0) {
    v.witness = hi;
  } else if (v.lower >= 0) {
    v.witness = lo_member;
  } else {
    const double lambda = v.upper / (v.upper - v.lower);
    v.witness = Functional{(1.0 - lambda) * hi.coords + lambda * lo_member.coords};
  }
  return v;
}

/// Z = {x : normal(x) = 0}.
struct Hyperplane {
  Functional normal;

  bool contains(const Vec& z, const Tolerances& tol = {}) const {
    return std::abs(normal(z)) <= tol.slack(z.cwiseAbs().maxCoeff()) * (1.0 + normal.coords.cwiseAbs().maxCoeff());
  }
  /// Columns span Z.
  Mat basis() const {
    Eigen::FullPivLU<Mat> lu(normal.coords.transpose());
    return lu.kernel();
  }
};

/// Hyperplane through 0 built from a supporting functional at x; x is Birkhoff
/// orthogonal to every element of it.
inline Hyperplane orthogonal_hyperplane(const NormSpec& space, const Vec& x, const Tolerances& tol = {}) {
  if (x.isZero(0.0)) throw InvalidArgument("orthogonal_hyperplane needs x != 0");
  return Hyperplane{support_set(space, x, tol).witness};
}

struct L1OrthogonalityTriple {
  bool disjoint_support = false;
  bool birkhoff = false;
  bool norm_identity = false;

  bool agree() const { return disjoint_support == birkhoff && birkhoff == norm_identity; }
};

/// In l1: x _|_ y  <=>  supports are disjoint  <=>  ||x+y|| = ||x-y|| = ||x|| + ||y||.
/// Each predicate is evaluated on its own.
inline L1OrthogonalityTriple l1_orthogonality_triple(const NormSpec& space, const Vec& x, const Vec& y,
                                                     const Tolerances& tol = {}) {
  if (!space.is_plain_lp() || !space.p().is_one())
    throw InvalidSpace("l1_orthogonality_triple needs an l1 space, got " + space.describe());
  space.require_dim(x, "x");
  space.require_dim(y, "y");
  L1OrthogonalityTriple out;
  out.disjoint_support = ((x.array() != 0.0) && (y.array() != 0.0)).count() == 0;
  out.birkhoff = is_birkhoff_orthogonal(space, x, y, tol).orthogonal;
  const double nx = norm(space, x);
  const double ny = norm(space, y);
  const double slack = tol.slack(nx + ny);
  out.norm_identity =
      std::abs(norm(space, x + y) - (nx + ny)) <= slack && std::abs(norm(space, x - y) - (nx + ny)) <= slack;
  return out;
}

}  // namespace phaseiso
