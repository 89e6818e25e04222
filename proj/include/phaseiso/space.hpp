#pragma once

// Finite-dimensional real normed spaces: lp, weighted lp and polyhedral norms,
// their duals, one-sided directional derivatives and supporting functionals.

#include <phaseiso/error.hpp>
#include <phaseiso/settings.hpp>

#include <Eigen/Core>
#include <Eigen/LU>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace phaseiso {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Exponent of an lp norm; p = infinity is a distinct state, not a large double.
class Exponent {
 public:
  constexpr Exponent() = default;
  explicit Exponent(double p) : value_(p) {
    if (std::isinf(p) && p > 0) {
      infinite_ = true;
      value_ = 0.0;
    } else if (!(p >= 1.0) || !std::isfinite(p)) {
      throw InvalidSpace("lp exponent must satisfy p >= 1, got " + std::to_string(p));
    }
  }
  static Exponent infinity() {
    Exponent e;
    e.infinite_ = true;
    e.value_ = 0.0;
    return e;
  }

  bool is_infinite() const { return infinite_; }
  bool is_one() const { return !infinite_ && value_ == 1.0; }
  /// Finite value; meaningless when is_infinite().
  double value() const { return value_; }

  /// Hoelder conjugate.
  Exponent conjugate() const {
    if (infinite_) return Exponent(1.0);
    if (value_ == 1.0) return infinity();
    return Exponent(value_ / (value_ - 1.0));
  }

  std::string to_string() const {
    if (infinite_) return "inf";
    std::ostringstream out;
    out << std::setprecision(17) << value_;
    return out.str();
  }

  friend bool operator==(const Exponent& a, const Exponent& b) {
    return a.infinite_ == b.infinite_ && a.value_ == b.value_;
  }

 private:
  bool infinite_ = false;
  double value_ = 2.0;
};

enum class NormKind { lp, weighted_lp, polyhedral };

inline const char* to_string(NormKind kind) {
  switch (kind) {
    case NormKind::lp: return "lp";
    case NormKind::weighted_lp: return "weighted_lp";
    case NormKind::polyhedral: return "polyhedral";
  }
  return "?";
}

/// Declarative description of a norm on R^n. Immutable after construction.
///
/// weighted_lp uses ||x|| = ||s o x||_p with s_i = w_i^(1/p) for finite p and
/// s_i = w_i for p = inf, so the weights enter as sum w_i |x_i|^p and max w_i |x_i|.
/// polyhedral uses ||x|| = max_i |<a_i, x>| over the rows a_i of `functionals`.
class NormSpec {
 public:
  static NormSpec lp(int dim, Exponent p) {
    if (dim < 1) throw InvalidSpace("dim must be >= 1");
    NormSpec s;
    s.kind_ = NormKind::lp;
    s.dim_ = dim;
    s.p_ = p;
    s.scale_ = Vec::Ones(dim);
    return s;
  }

  static NormSpec weighted_lp(Exponent p, const std::vector<double>& weights) {
    if (weights.empty()) throw InvalidSpace("weighted_lp needs at least one weight");
    NormSpec s;
    s.kind_ = NormKind::weighted_lp;
    s.dim_ = static_cast<int>(weights.size());
    s.p_ = p;
    s.weights_ = weights;
    s.scale_.resize(s.dim_);
    for (int i = 0; i < s.dim_; ++i) {
      const double w = weights[static_cast<std::size_t>(i)];
      if (!(w > 0.0) || !std::isfinite(w)) throw InvalidSpace("weights must be positive and finite");
      s.scale_[i] = p.is_infinite() ? w : std::pow(w, 1.0 / p.value());
    }
    return s;
  }

  /// Rows are the functionals a_i; they must span the dual space.
  static NormSpec polyhedral(const Mat& functionals) {
    if (functionals.rows() < 1 || functionals.cols() < 1)
      throw InvalidSpace("polyhedral norm needs at least one functional");
    if (!functionals.allFinite()) throw InvalidSpace("polyhedral functionals must be finite");
    Eigen::FullPivLU<Mat> lu(functionals);
    if (lu.rank() < functionals.cols())
      throw InvalidSpace("polyhedral functionals do not span the dual space (norm would vanish on a nonzero vector)");
    NormSpec s;
    s.kind_ = NormKind::polyhedral;
    s.dim_ = static_cast<int>(functionals.cols());
    s.functionals_ = functionals;
    return s;
  }

  NormKind kind() const { return kind_; }
  int dim() const { return dim_; }
  const Exponent& p() const { return p_; }
  const std::vector<double>& weights() const { return weights_; }
  const Mat& functionals() const { return functionals_; }
  /// Coordinate scaling s with ||x|| = ||s o x||_p (lp kinds only).
  const Vec& scale() const { return scale_; }

  bool is_lp_kind() const { return kind_ != NormKind::polyhedral; }
  bool is_plain_lp() const { return kind_ == NormKind::lp; }
  bool is_euclidean() const { return kind_ == NormKind::lp && !p_.is_infinite() && p_.value() == 2.0; }
  /// Every nonzero point is smooth.
  bool is_smooth_space() const {
    if (dim_ == 1) return true;
    return is_lp_kind() && !p_.is_infinite() && p_.value() > 1.0;
  }

  void require_dim(const Vec& x, const char* what = "vector") const {
    if (x.size() != dim_)
      throw DimensionMismatch(std::string(what) + " has dimension " + std::to_string(x.size()) +
                              ", space has dimension " + std::to_string(dim_));
  }

  std::string describe() const {
    switch (kind_) {
      case NormKind::lp: return "l" + p_.to_string() + "_" + std::to_string(dim_);
      case NormKind::weighted_lp: return "weighted l" + p_.to_string() + "_" + std::to_string(dim_);
      case NormKind::polyhedral:
        return "polyhedral(" + std::to_string(functionals_.rows()) + " functionals)_" + std::to_string(dim_);
    }
    return "?";
  }

 private:
  NormSpec() = default;

  NormKind kind_ = NormKind::lp;
  int dim_ = 0;
  Exponent p_;
  std::vector<double> weights_;
  Vec scale_;
  Mat functionals_;
};

/// Element of the dual space, acting by the dot product.
struct Functional {
  Vec coords;

  double operator()(const Vec& x) const { return coords.dot(x); }
  Functional operator-() const { return Functional{-coords}; }
};

namespace detail {

inline double lp_norm(const Vec& y, const Exponent& p) {
  if (y.size() == 0) return 0.0;
  const double m = y.cwiseAbs().maxCoeff();
  if (p.is_infinite() || m == 0.0) return m;
  if (p.is_one()) return y.cwiseAbs().sum();
  if (p.value() == 2.0) return m * (y / m).norm();
  double acc = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) acc += std::pow(std::abs(y[i]) / m, p.value());
  return m * std::pow(acc, 1.0 / p.value());
}

inline double sign(double v) { return v > 0 ? 1.0 : (v < 0 ? -1.0 : 0.0); }

/// Indices whose value is within a relative `rel` of the maximum of |values|.
inline std::vector<Eigen::Index> active_set(const Vec& values, double rel) {
  std::vector<Eigen::Index> active;
  const double m = values.cwiseAbs().maxCoeff();
  for (Eigen::Index i = 0; i < values.size(); ++i)
    if (std::abs(values[i]) >= m * (1.0 - rel)) active.push_back(i);
  return active;
}

/// Iterates all k-subsets of {0..n-1} in lexicographic order.
template <class Fn>
void for_each_subset(int n, int k, Fn&& fn) {
  if (k > n || k < 0) return;
  std::vector<int> idx(static_cast<std::size_t>(k));
  for (int i = 0; i < k; ++i) idx[static_cast<std::size_t>(i)] = i;
  while (true) {
    fn(idx);
    int i = k - 1;
    while (i >= 0 && idx[static_cast<std::size_t>(i)] == n - k + i) --i;
    if (i < 0) return;
    ++idx[static_cast<std::size_t>(i)];
    for (int j = i + 1; j < k; ++j) idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
  }
}

inline double binomial(int n, int k) {
  double r = 1.0;
  for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
  return r;
}

inline void require_enumerable(const NormSpec& space) {
  const double work = binomial(static_cast<int>(space.functionals().rows()), space.dim()) * std::ldexp(1.0, space.dim());
  if (work > 4e6)
    throw InvalidSpace("polyhedral norm too large for basis enumeration: " + space.describe());
}

}  // namespace detail

inline double norm(const NormSpec& space, const Vec& x) {
  space.require_dim(x);
  if (space.kind() == NormKind::polyhedral) return (space.functionals() * x).cwiseAbs().maxCoeff();
  return detail::lp_norm(space.scale().cwiseProduct(x), space.p());
}

inline bool in_unit_ball(const NormSpec& space, const Vec& x, const Tolerances& tol = {}) {
  return norm(space, x) <= 1.0 + tol.rel;
}

inline bool on_unit_sphere(const NormSpec& space, const Vec& x, const Tolerances& tol = {}) {
  return std::abs(norm(space, x) - 1.0) <= tol.rel;
}

/// Dual norm sup{f(x) : ||x|| <= 1}.
///
/// For polyhedral norms the dual ball is conv{+-a_i}, so the dual norm is
/// min{ sum|lambda_i| : A^T lambda = f }; the minimum sits on a basic solution,
/// found by enumerating nonsingular n-subsets of the functionals.
inline double dual_norm(const NormSpec& space, const Functional& f) {
  space.require_dim(f.coords, "functional");
  if (space.is_lp_kind()) return detail::lp_norm(f.coords.cwiseQuotient(space.scale()), space.p().conjugate());

  detail::require_enumerable(space);
  const Mat& a = space.functionals();
  const int n = space.dim();
  double best = std::numeric_limits<double>::infinity();
  detail::for_each_subset(static_cast<int>(a.rows()), n, [&](const std::vector<int>& rows) {
    Mat basis(n, n);
    for (int i = 0; i < n; ++i) basis.row(i) = a.row(rows[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Mat> lu(basis.transpose());
    if (lu.rank() < n) return;
    const Vec lambda = lu.solve(f.coords);
    best = std::min(best, lambda.cwiseAbs().sum());
  });
  return best;
}

/// Vertices of the polyhedral unit ball {x : |<a_i,x>| <= 1}.
inline std::vector<Vec> unit_ball_vertices(const NormSpec& space, const Tolerances& tol = {}) {
  if (space.kind() != NormKind::polyhedral) throw InvalidSpace("unit_ball_vertices needs a polyhedral norm");
  detail::require_enumerable(space);
  const Mat& a = space.functionals();
  const int n = space.dim();
  std::vector<Vec> vertices;
  detail::for_each_subset(static_cast<int>(a.rows()), n, [&](const std::vector<int>& rows) {
    Mat basis(n, n);
    for (int i = 0; i < n; ++i) basis.row(i) = a.row(rows[static_cast<std::size_t>(i)]);
    Eigen::FullPivLU<Mat> lu(basis);
    if (lu.rank() < n) return;
    for (long mask = 0; mask < (1L << n); ++mask) {
      Vec rhs(n);
      for (int i = 0; i < n; ++i) rhs[i] = (mask >> i) & 1 ? -1.0 : 1.0;
      const Vec v = lu.solve(rhs);
      if ((a * v).cwiseAbs().maxCoeff() > 1.0 + tol.rel) continue;
      const bool seen = std::any_of(vertices.begin(), vertices.end(), [&](const Vec& w) {
        return (w - v).cwiseAbs().maxCoeff() <= tol.rel * (1.0 + v.cwiseAbs().maxCoeff());
      });
      if (!seen) vertices.push_back(v);
    }
  });
  return vertices;
}

/// The member of D(u) (supporting functionals at u, normalized to dual norm one)
/// that maximizes its value on `direction`. u must be nonzero.
inline Functional max_supporting_functional(const NormSpec& space, const Vec& u, const Vec& direction,
                                            const Tolerances& tol = {}) {
  space.require_dim(u);
  space.require_dim(direction, "direction");
  if (u.isZero(0.0)) throw InvalidArgument("supporting functionals are undefined at 0");
  const int n = space.dim();
  Vec g = Vec::Zero(n);

  if (space.kind() == NormKind::polyhedral) {
    const Mat& a = space.functionals();
    const Vec values = a * u;
    double best = -std::numeric_limits<double>::infinity();
    for (Eigen::Index i : detail::active_set(values, tol.zero)) {
      const Vec candidate = detail::sign(values[i]) * a.row(i).transpose();
      const double score = candidate.dot(direction);
      if (score > best) {
        best = score;
        g = candidate;
      }
    }
    return Functional{g};
  }

  const Vec& s = space.scale();
  const Vec y = s.cwiseProduct(u);
  const Exponent& p = space.p();
  if (p.is_infinite()) {
    double best = -std::numeric_limits<double>::infinity();
    Eigen::Index arg = 0;
    for (Eigen::Index i : detail::active_set(y, tol.zero)) {
      const double score = s[i] * detail::sign(y[i]) * direction[i];
      if (score > best) {
        best = score;
        arg = i;
      }
    }
    g[arg] = s[arg] * detail::sign(y[arg]);
  } else if (p.is_one()) {
    const double m = y.cwiseAbs().maxCoeff();
    for (int i = 0; i < n; ++i) {
      if (std::abs(y[i]) > tol.zero * m)
        g[i] = s[i] * detail::sign(y[i]);
      else
        g[i] = s[i] * detail::sign(direction[i]);
    }
  } else {
    const double total = detail::lp_norm(y, p);
    for (int i = 0; i < n; ++i)
      g[i] = s[i] * detail::sign(y[i]) * std::pow(std::abs(y[i]) / total, p.value() - 1.0);
  }
  return Functional{g};
}

/// One-sided derivative M_u(x) of the norm at the unit vector u in direction x.
/// Closed forms: gradient for 1<p<inf, active-set maximum otherwise.
inline double directional_derivative(const NormSpec& space, const Vec& u, const Vec& x, const Tolerances& tol = {}) {
  space.require_dim(x);
  if (std::abs(norm(space, u) - 1.0) > tol.rel)
    throw InvalidArgument("directional_derivative needs a unit vector u");
  return max_supporting_functional(space, u, x, tol)(x);
}

/// Generic fallback: (||u+tx|| - ||u||)/t on t = 2^-k, k = 10..40, stopping when two
/// successive quotients agree. Convexity makes the quotient monotone in t.
inline double finite_difference_derivative(const NormSpec& space, const Vec& u, const Vec& x,
                                           const Tolerances& tol = {}) {
  const double base = norm(space, u);
  double previous = std::numeric_limits<double>::quiet_NaN();
  double estimate = 0.0;
  for (int k = 10; k <= 40; ++k) {
    const double t = std::ldexp(1.0, -k);
    estimate = (norm(space, u + t * x) - base) / t;
    if (std::abs(estimate - previous) <= tol.finite_difference) return estimate;
    previous = estimate;
  }
  return estimate;
}

struct SupportDescription {
  enum class Kind { singleton, face };

  Vec point;
  Kind kind = Kind::singleton;
  /// A member of D(point / ||point||).
  Functional witness;
  bool is_smooth = true;
};

/// Distinct signed functionals active at x (polyhedral kind only).
inline std::vector<Vec> active_signed_functionals(const NormSpec& space, const Vec& x, const Tolerances& tol = {}) {
  const Mat& a = space.functionals();
  const Vec values = a * x;
  std::vector<Vec> distinct;
  for (Eigen::Index i : detail::active_set(values, tol.zero)) {
    const Vec candidate = detail::sign(values[i]) * a.row(i).transpose();
    const bool seen = std::any_of(distinct.begin(), distinct.end(), [&](const Vec& w) {
      return (w - candidate).cwiseAbs().maxCoeff() <= tol.rel * (1.0 + w.cwiseAbs().maxCoeff());
    });
    if (!seen) distinct.push_back(candidate);
  }
  return distinct;
}

inline bool is_smooth_point(const NormSpec& space, const Vec& x, const Tolerances& tol = {}) {
  space.require_dim(x);
  if (x.isZero(0.0)) throw InvalidArgument("smoothness is undefined at 0");
  if (space.dim() == 1 || space.is_smooth_space()) return true;
  if (space.kind() == NormKind::polyhedral) return active_signed_functionals(space, x, tol).size() == 1;
  const Vec y = space.scale().cwiseProduct(x);
  if (space.p().is_infinite()) return detail::active_set(y, tol.zero).size() == 1;
  const double m = y.cwiseAbs().maxCoeff();
  return (y.cwiseAbs().array() > tol.zero * m).all();
}

inline SupportDescription support_set(const NormSpec& space, const Vec& x, const Tolerances& tol = {}) {
  space.require_dim(x);
  if (x.isZero(0.0)) throw InvalidArgument("support_set is undefined at x = 0");
  SupportDescription d;
  d.point = x;
  d.witness = max_supporting_functional(space, x, Vec::Zero(space.dim()), tol);
  d.is_smooth = is_smooth_point(space, x, tol);
  d.kind = d.is_smooth ? SupportDescription::Kind::singleton : SupportDescription::Kind::face;
  return d;
}

struct Exposure {
  bool exposed = false;
  /// Smooth unit vector whose only supporting functional is the queried one.
  Vec exposing_point;
  std::string diagnosis;
};

/// Decides whether a unit functional is a w*-exposed point of the dual ball, i.e.
/// the unique supporting functional at some smooth unit vector.
inline Exposure is_w_star_exposed(const NormSpec& space, const Functional& f, const Tolerances& tol = {}) {
  space.require_dim(f.coords, "functional");
  const double dn = dual_norm(space, f);
  if (std::abs(dn - 1.0) > tol.slack(1.0))
    throw InvalidArgument("is_w_star_exposed needs a unit functional, dual norm is " + std::to_string(dn));
  const int n = space.dim();
  Exposure out;

  auto accept = [&](Vec x, const std::string& why) {
    x /= norm(space, x);
    const SupportDescription d = support_set(space, x, tol);
    const double gap = dual_norm(space, Functional{d.witness.coords - f.coords});
    if (d.is_smooth && gap <= tol.slack(1.0)) {
      out.exposed = true;
      out.exposing_point = x;
      out.diagnosis = why;
    } else {
      out.diagnosis = d.is_smooth ? "candidate point is normed by a different functional"
                                  : "every norming point is a non-smooth point";
    }
    return out;
  };

  if (n == 1) return accept(Vec::Constant(1, detail::sign(f.coords[0])), "one-dimensional space");

  if (space.kind() == NormKind::polyhedral) {
    Vec centroid = Vec::Zero(n);
    int count = 0;
    for (const Vec& v : unit_ball_vertices(space, tol)) {
      if (f(v) >= 1.0 - tol.slack(1.0)) {
        centroid += v;
        ++count;
      }
    }
    if (count == 0) {
      out.diagnosis = "no vertex of the unit ball attains the functional";
      return out;
    }
    return accept(centroid / count, "relative interior of the normed face");
  }

  const Vec& s = space.scale();
  const Vec z = f.coords.cwiseQuotient(s);
  const Exponent& p = space.p();
  if (p.is_one()) {
    if ((z.cwiseAbs().array() - 1.0).abs().maxCoeff() > tol.slack(1.0)) {
      out.diagnosis = "a norming point must vanish where |x*_i| < w_i, and such points are not smooth in l1";
      return out;
    }
    Vec x(n);
    for (int i = 0; i < n; ++i) x[i] = detail::sign(z[i]) / s[i];
    return accept(x, "full-support sign pattern");
  }
  if (p.is_infinite()) {
    Eigen::Index arg = 0;
    z.cwiseAbs().maxCoeff(&arg);
    if (std::abs(std::abs(z[arg]) - 1.0) > tol.slack(1.0)) {
      out.diagnosis = "only signed coordinate functionals are exposed in linf";
      return out;
    }
    Vec x = Vec::Zero(n);
    x[arg] = detail::sign(z[arg]) / s[arg];
    return accept(x, "signed basis vector");
  }
  const double q = p.conjugate().value();
  Vec x(n);
  for (int i = 0; i < n; ++i) x[i] = detail::sign(z[i]) * std::pow(std::abs(z[i]), q - 1.0) / s[i];
  return accept(x, "conjugate gradient point of a smooth norm");
}

/// Gamma_x: indices of the nonzero coordinates.
inline std::vector<int> coordinate_support(const Vec& x) {
  std::vector<int> support;
  for (Eigen::Index i = 0; i < x.size(); ++i)
    if (x[i] != 0.0) support.push_back(static_cast<int>(i));
  return support;
}

}  // namespace phaseiso
