#pragma once

// Building blocks of the decomposition: sign pinning, homogenization, the
// two-dimensional normalization, projective linear recovery, and recovery of
// a norm-one functional phi with x*(x) = +-phi(f(x)).

#include <phaseiso/phase_map.hpp>
#include <phaseiso/rng.hpp>
#include <phaseiso/space.hpp>

#include <Eigen/QR>
#include <Eigen/SVD>

#include <array>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace phaseiso {

namespace detail {

/// Relative Euclidean distance of w from the column span of `basis`.
inline double span_residual(const Mat& basis, const Vec& w) {
  const double scale = w.norm();
  if (scale == 0.0) return 0.0;
  const Vec coeffs = basis.colPivHouseholderQr().solve(w);
  return (w - basis * coeffs).norm() / scale;
}

/// Sine of the angle between two nonzero vectors (Euclidean coordinates).
inline double sine_between(const Vec& a, const Vec& b) {
  const double na = a.norm();
  const double nb = b.norm();
  if (na == 0.0 || nb == 0.0) return (na == nb) ? 0.0 : 1.0;
  const Vec residual = b - (a.dot(b) / (na * na)) * a;
  return residual.norm() / nb;
}

inline Vec basis_vector(int n, int i) {
  Vec e = Vec::Zero(n);
  e[i] = 1.0;
  return e;
}

inline std::string format_point(const Vec& x) {
  std::ostringstream out;
  out.precision(12);
  out << '[';
  for (Eigen::Index i = 0; i < x.size(); ++i) out << (i ? "," : "") << x[i];
  out << ']';
  return out.str();
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Sign pinning

struct SignPinning {
  int alpha = 1;
  int beta = 1;
  double residual = 0.0;
  /// Several sign choices fit within tolerance; (+1,+1) was preferred.
  bool tie = false;
};

/// Finds alpha, beta in {+-1} with f(x+y) = alpha f(x) + beta f(y).
/// Throws NotDecomposable(witness = {x, y}) when no choice fits.
inline SignPinning pin_signs(const PhaseMapOracle& f, const Vec& x, const Vec& y, const Tolerances& tol = {}) {
  Mat pair(x.size(), 2);
  pair << x, y;
  if (Eigen::FullPivLU<Mat>(pair).rank() < 2)
    throw InvalidArgument("pin_signs needs linearly independent x and y; dependent pairs belong to the 1-D path");
  const NormSpec& Y = f.codomain();
  const Vec fx = f(x);
  const Vec fy = f(y);
  const Vec fs = f(Vec(x + y));
  const double slack = tol.slack(norm(Y, fx) + norm(Y, fy));

  constexpr std::array<std::array<int, 2>, 4> choices{{{1, 1}, {-1, 1}, {1, -1}, {-1, -1}}};
  SignPinning best;
  best.residual = std::numeric_limits<double>::infinity();
  int fitting = 0;
  for (const auto& [a, b] : choices) {
    const double r = norm(Y, fs - a * fx - b * fy);
    if (r <= slack) ++fitting;
    if (r < best.residual) {
      best.alpha = a;
      best.beta = b;
      best.residual = r;
    }
  }
  if (best.residual > slack)
    throw NotDecomposable("f(x+y) is none of +-f(x) +- f(y) for x = " + detail::format_point(x) +
                              ", y = " + detail::format_point(y),
                          {x, y});
  if (fitting > 1) {
    best.tie = true;
    const double r = norm(Y, fs - fx - fy);
    if (r <= slack) {
      best.alpha = 1;
      best.beta = 1;
      best.residual = r;
    }
  }
  return best;
}

// ---------------------------------------------------------------------------
// Homogenization

/// f0(s r) = s f(r) for the canonical ray representative r of each line.
/// Under f(tx) = +-t f(x), f0 is homogeneous and phase equivalent to f.
inline PhaseMapOracle homogenize(const PhaseMapOracle& f) {
  const NormSpec X = f.domain();
  return PhaseMapOracle(
      f.domain(), f.codomain(),
      [f, X](const Vec& x) -> Vec {
        if (x.isZero(0.0)) return Vec::Zero(f.codomain().dim());
        const Vec rep = canonical_ray(X, x);
        const double scale = (canonical_sign(x) == x ? 1.0 : -1.0) * norm(X, x);
        return scale * f(rep);
      },
      "homogenized " + f.name());
}

// ---------------------------------------------------------------------------
// Two-dimensional normalization

struct TwoDimNormalization {
  /// Unit basis of the plane and a biorthogonal pair of functionals.
  Vec x;
  Vec y;
  Functional x_star;
  Functional y_star;
  std::vector<double> grid;
  /// alpha(a) beta(a) for each grid value.
  std::vector<int> products;
  /// alpha(1) beta(1).
  int base_product = 1;
  /// g(x) = base_product f(x) and g(y) = f(y); g(ax+by) = a g(x) + b g(y).
  Vec gx;
  Vec gy;
  /// The derived oracle g on the plane.
  std::optional<PhaseMapOracle> g;

  /// Matrix of the linear map g on the plane, in ambient coordinates
  /// (zero on the complement picked by the biorthogonal functionals).
  Mat matrix() const {
    Mat m(gx.size(), x.size());
    m = gx * x_star.coords.transpose() + gy * y_star.coords.transpose();
    return m;
  }
};

/// a in {+-2^-k, +-1, +-2^k : k = 1..6}, by increasing |a|, positive first.
inline std::vector<double> two_dim_grid() {
  std::vector<double> grid;
  for (int k = 1; k <= 6; ++k) {
    for (double sign : {1.0, -1.0}) {
      grid.push_back(sign * std::ldexp(1.0, -k));
      grid.push_back(sign * std::ldexp(1.0, k));
    }
  }
  grid.push_back(1.0);
  grid.push_back(-1.0);
  std::sort(grid.begin(), grid.end(), [](double a, double b) {
    return std::abs(a) != std::abs(b) ? std::abs(a) < std::abs(b) : a > b;
  });
  return grid;
}

/// Normalizes a homogeneous oracle on the plane spanned by x, y.
///
/// alpha(a), beta(a) come from f(ax + y) = alpha(a) f(ax) + beta(a) f(y).
/// The derived map g(ax + by) = alpha(a/b) beta(a/b) f(ax) + f(by) is linear
/// exactly when alpha(a) beta(a) = alpha(1) beta(1); that identity and the three
/// norm identities
///   {||g(ax+y) +- g(ax-y)||}  = {|2a|, 2}
///   {||g(ax+y) +- g(x+y)||}   = {||(a+1)x+2y||, |a-1|}
///   {||g(ax+ay) +- g(ax+y)||} = {||2ax+(a+1)y||, |a-1|}
/// are certified on the grid. Throws NotDecomposable naming the failing a.
inline TwoDimNormalization normalize_two_dim(const PhaseMapOracle& f, const Vec& x_in, const Vec& y_in,
                                             const Tolerances& tol = {}) {
  const NormSpec& X = f.domain();
  const NormSpec& Y = f.codomain();
  X.require_dim(x_in, "x");
  X.require_dim(y_in, "y");
  TwoDimNormalization out;
  out.x = x_in / norm(X, x_in);
  out.y = y_in / norm(X, y_in);

  Mat plane(X.dim(), 2);
  plane << out.x, out.y;
  if (Eigen::FullPivLU<Mat>(plane).rank() < 2) throw InvalidArgument("normalize_two_dim needs independent x, y");
  const Mat dual = plane.completeOrthogonalDecomposition().pseudoInverse();
  out.x_star = Functional{dual.row(0).transpose()};
  out.y_star = Functional{dual.row(1).transpose()};

  const Vec& x = out.x;
  const Vec& y = out.y;
  std::map<double, int> product_at;
  auto product = [&](double a) {
    if (auto it = product_at.find(a); it != product_at.end()) return it->second;
    const SignPinning pin = pin_signs(f, Vec(a * x), y, tol);
    return product_at[a] = pin.alpha * pin.beta;
  };

  out.base_product = product(1.0);
  out.gx = out.base_product * f(x);
  out.gy = f(y);

  // g evaluated through its defining formula, not through gx, gy.
  auto g = [&](double a, double b) -> Vec {
    if (b == 0.0) return a == 0.0 ? Vec(Vec::Zero(Y.dim())) : Vec(product(a) * f(Vec(a * x)));
    return product(a / b) * f(Vec(a * x)) + f(Vec(b * y));
  };

  out.grid = two_dim_grid();
  for (double a : out.grid) {
    std::vector<std::string> failed;
    auto check = [&](const char* name, const Vec& u, const Vec& v, double c, double d) {
      const PairVerdict verdict = compare_multisets(norm(Y, u + v), norm(Y, u - v), c, d, tol);
      if (!verdict.pass) failed.push_back(name);
    };
    check("(a1)", g(a, 1.0), g(a, -1.0), std::abs(2.0 * a), 2.0);
    check("(a2)", g(a, 1.0), g(1.0, 1.0), norm(X, Vec((a + 1.0) * x + 2.0 * y)), std::abs(a - 1.0));
    check("(a3)", g(a, a), g(a, 1.0), norm(X, Vec(2.0 * a * x + (a + 1.0) * y)), std::abs(a - 1.0));
    const int p = product(a);
    if (p != out.base_product) failed.push_back("alpha(a)beta(a) = alpha(1)beta(1)");
    out.products.push_back(p);
    if (!failed.empty()) {
      std::string names;
      for (const auto& n : failed) names += (names.empty() ? "" : ", ") + n;
      std::ostringstream msg;
      msg << "two-dimensional normalization fails at a = " << a << ": " << names;
      throw NotDecomposable(msg.str(), {Vec(a * x), y});
    }
  }

  const Vec gx = out.gx;
  const Vec gy = out.gy;
  const Functional xs = out.x_star;
  const Functional ys = out.y_star;
  out.g = PhaseMapOracle(
      X, Y, [gx, gy, xs, ys](const Vec& v) -> Vec { return xs(v) * gx + ys(v) * gy; }, "normalized plane map");
  return out;
}

// ---------------------------------------------------------------------------
// Projective linear recovery

struct ProjectiveRecovery {
  LinearMap A;
  /// Frame scalars: A e_i = c_i f(e_i).
  Vec frame;
  double max_collinearity_residual = 0.0;
  int probes_checked = 0;
};

/// Builds an injective linear A with [A x] = [f x] from a line-preserving
/// homogeneous oracle (dim >= 3): A e_i = c_i f(e_i), with c chosen so that
/// f(e_1 + ... + e_n) = sum_i c_i f(e_i).
inline ProjectiveRecovery recover_projective_linear(const PhaseMapOracle& f, Rng& rng, int probe_count = 100,
                                                    const Tolerances& tol = {}) {
  const NormSpec& X = f.domain();
  const int n = X.dim();
  if (n < 3)
    throw RouteError("projective recovery needs dim >= 3; use the one-dimensional path or normalize_two_dim");
  const int m = f.codomain().dim();

  Mat images(m, n);
  for (int i = 0; i < n; ++i) images.col(i) = f(detail::basis_vector(n, i));

  // Line preservation on the probe set: e_i + e_j lies on [e_i, e_j].
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      const Vec z = detail::basis_vector(n, i) + detail::basis_vector(n, j);
      Mat plane(m, 2);
      plane << images.col(i), images.col(j);
      if (detail::span_residual(plane, f(z)) > tol.collinearity)
        throw CollinearityViolation("f(e_i + e_j) leaves span{f(e_i), f(e_j)} for i = " + std::to_string(i) +
                                        ", j = " + std::to_string(j),
                                    {detail::basis_vector(n, i), detail::basis_vector(n, j), z});
    }
  }

  const Vec ones = Vec::Ones(n);
  const Vec f_ones = f(ones);
  Mat probe_images(m, n + 1);
  probe_images << images, f_ones;
  const double top = probe_images.jacobiSvd().singularValues()[0];
  Eigen::FullPivLU<Mat> lu(probe_images);
  lu.setThreshold(tol.collinearity * std::max(1.0, top));
  const auto rank = lu.rank();
  if (rank <= 2)
    throw RangeDegenerate("images of the probe set span at most two dimensions", {ones});
  if (rank < n) throw NotDecomposable("images of the basis are linearly dependent", {ones});

  const Vec frame = images.colPivHouseholderQr().solve(f_ones);
  if (detail::span_residual(images, f_ones) > tol.collinearity)
    throw CollinearityViolation("f(e_1 + ... + e_n) leaves the span of the basis images", {ones});
  for (int i = 0; i < n; ++i)
    if (std::abs(frame[i]) <= tol.collinearity)
      throw CollinearityViolation("f(e_1 + ... + e_n) misses the direction of f(e_i)", {ones, detail::basis_vector(n, i)});

  ProjectiveRecovery out{LinearMap{images * frame.asDiagonal(), X, f.codomain(), false, {}}, frame};
  for (int k = 0; k < probe_count; ++k) {
    const Vec x = rng.gaussian_vector(n);
    const double r = detail::sine_between(out.A(x), f(x));
    out.max_collinearity_residual = std::max(out.max_collinearity_residual, r);
    if (r > tol.collinearity) throw CollinearityViolation("[A x] differs from [f x]", {x});
    ++out.probes_checked;
  }
  return out;
}

// ---------------------------------------------------------------------------
// Functional recovery

struct FunctionalRecovery {
  /// Norm-one functional on the codomain.
  Functional phi;
  Functional x_star;
  /// Smooth unit vector exposing x_star.
  Vec exposing_point;
  /// Values of t tried, in order; the last one is where phi stabilized.
  std::vector<double> schedule;
  double stabilized_at = 0.0;
  std::vector<Vec> samples;
  /// x*(x) = sign * phi(f(x)) per sample.
  std::vector<int> signs;
  double max_defect = 0.0;
};

struct RecoveryOptions {
  /// Skip the exposure search and use this smooth point.
  std::optional<Vec> exposing_point;
  /// Verification points; when empty, `random_samples` Gaussian vectors are drawn.
  std::vector<Vec> samples;
  int random_samples = 100;
  std::uint64_t seed = 0;
  /// Demand a unique supporting functional at f(t u). When false, a fixed member
  /// of the supporting set is used; valid when samples lie in a subspace where
  /// u is smooth.
  bool require_smooth_image = true;
  int max_power = 20;
};

/// Finds phi of norm one with x*(x) = +-phi(f(x)). phi is the supporting
/// functional of the codomain at f(t u), t = 2^k, oriented so phi(f(u)) > 0,
/// taken once two successive estimates agree.
inline FunctionalRecovery recover_functional(const PhaseMapOracle& f, const Functional& x_star,
                                             const RecoveryOptions& options = {}, const Tolerances& tol = {}) {
  const NormSpec& X = f.domain();
  const NormSpec& Y = f.codomain();
  X.require_dim(x_star.coords, "functional");
  FunctionalRecovery out;
  out.x_star = x_star;
  if (options.exposing_point) {
    out.exposing_point = *options.exposing_point;
  } else {
    const Exposure e = is_w_star_exposed(X, x_star, tol);
    if (!e.exposed) throw NotExposed("functional is not w*-exposed: " + e.diagnosis);
    out.exposing_point = e.exposing_point;
  }
  const Vec& u = out.exposing_point;
  const Vec fu = f(u);

  std::optional<Functional> previous;
  for (int k = 0; k <= options.max_power; ++k) {
    const double t = std::ldexp(1.0, k);
    out.schedule.push_back(t);
    const Vec w = f(Vec(t * u));
    if (w.isZero(0.0)) throw NotDecomposable("f(t u) vanishes", {Vec(t * u)});
    if (options.require_smooth_image && !is_smooth_point(Y, w, tol))
      throw SmoothnessFailure("f(t u) is not a smooth point of the codomain at t = " + std::to_string(t), t);
    Functional phi = max_supporting_functional(Y, w, Vec::Zero(Y.dim()), tol);
    const double orientation = phi(fu);
    if (std::abs(orientation) <= tol.slack(1.0))
      throw NotDecomposable("recovered functional vanishes on f(u)", {u});
    if (orientation < 0) phi = -phi;
    if (previous && dual_norm(Y, Functional{phi.coords - previous->coords}) < tol.rel) {
      out.phi = phi;
      out.stabilized_at = t;
      break;
    }
    previous = phi;
  }
  if (out.stabilized_at == 0.0)
    throw NoStabilization("supporting functionals at f(2^k u) did not stabilize for k <= " +
                          std::to_string(options.max_power));

  std::vector<Vec> samples = options.samples;
  if (samples.empty()) {
    Rng rng(derive_seed(options.seed, 0x3f1));
    for (int k = 0; k < options.random_samples; ++k) samples.push_back(rng.gaussian_vector(X.dim()));
  }
  for (const Vec& x : samples) {
    const double a = x_star(x);
    const double b = out.phi(f(x));
    const double defect = std::abs(std::abs(a) - std::abs(b));
    out.max_defect = std::max(out.max_defect, defect);
    if (defect > tol.recovery * (1.0 + norm(X, x)))
      throw NotDecomposable("|x*(x)| != |phi(f(x))| at x = " + detail::format_point(x), {x});
    out.samples.push_back(x);
    out.signs.push_back(a * b < 0 ? -1 : 1);
  }
  return out;
}

}  // namespace phaseiso
