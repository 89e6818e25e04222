#pragma once

// Factorization of a declared-surjective phase-isometry f into eps * T along
// the one-dimensional, smooth, linf, l1 and generic routes. Each route checks
// the identities its argument relies on, assembles T, and finishes by replaying
// every logged query against eps * T.

#include <phaseiso/orthogonality.hpp>
#include <phaseiso/phase_map.hpp>
#include <phaseiso/recovery.hpp>
#include <phaseiso/rng.hpp>

#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

namespace phaseiso {

enum class Route { automatic, one_dim, smooth, linf, l1, generic };

inline const char* to_string(Route route) {
  switch (route) {
    case Route::automatic: return "auto";
    case Route::one_dim: return "one_dim";
    case Route::smooth: return "smooth";
    case Route::linf: return "linf";
    case Route::l1: return "l1";
    case Route::generic: return "generic";
  }
  return "?";
}

inline Route parse_route(const std::string& name) {
  for (Route r : {Route::automatic, Route::one_dim, Route::smooth, Route::linf, Route::l1, Route::generic})
    if (name == to_string(r)) return r;
  throw InvalidArgument("unknown route: " + name);
}

/// Route picked by `auto` for a domain space.
inline Route select_route(const NormSpec& X) {
  if (X.dim() == 1) return Route::one_dim;
  if (X.is_smooth_space()) return Route::smooth;
  if (X.is_plain_lp() && X.p().is_infinite()) return Route::linf;
  if (X.is_plain_lp() && X.p().is_one()) return Route::l1;
  return Route::generic;
}

struct DecomposeOptions {
  Route route = Route::automatic;
  /// Surjectivity cannot be observed from queries; the caller declares it.
  bool declared_surjective = false;
  /// Run an explicitly chosen route without the declaration.
  bool force = false;
  std::uint64_t seed = 0;
  int verification_pairs = 64;
  Tolerances tol;
};

struct DecompositionCertificate {
  Route route = Route::automatic;
  Mat T;
  SignAssignment sign_table;
  /// min(||f(x) - Tx||, ||f(x) + Tx||) per logged query, in log order.
  std::vector<Sample> queries;
  std::vector<double> residuals;
  double residual_max = 0.0;
  int verified_pairs = 0;
  double max_equation_discrepancy = 0.0;
  bool declared_surjective = false;
  Tolerances tol;
  std::vector<std::string> transcript;

  Vec apply(const Vec& x) const { return T * x; }
};

/// Fixed part of the probe set: e_i, e_i + e_j (i < j), the all-ones vector,
/// then 3n Gaussian vectors drawn from the seed.
inline std::vector<Vec> probe_set(int n, std::uint64_t seed) {
  std::vector<Vec> probes;
  for (int i = 0; i < n; ++i) probes.push_back(detail::basis_vector(n, i));
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) probes.push_back(detail::basis_vector(n, i) + detail::basis_vector(n, j));
  if (n > 1) probes.push_back(Vec::Ones(n));
  Rng rng(derive_seed(seed, 0x9b0));
  for (int k = 0; k < 3 * n; ++k) probes.push_back(rng.gaussian_vector(n));
  return probes;
}

/// Probes a table oracle must contain before a decomposition starts.
inline std::vector<Vec> missing_probes(const PhaseMapOracle& f, std::uint64_t seed) {
  std::vector<Vec> missing;
  for (const Vec& p : probe_set(f.domain().dim(), seed))
    if (!f.has(p)) missing.push_back(p);
  return missing;
}

namespace detail {

class RouteRun {
 public:
  RouteRun(const PhaseMapOracle& f, const DecomposeOptions& options, Route route)
      : f_(f), options_(options), tol_(options.tol), route_(route), X_(f.domain()), Y_(f.codomain()),
        n_(f.domain().dim()) {}

  DecompositionCertificate run() {
    probes_ = probe_set(n_, options_.seed);
    for (const Vec& p : probes_) f_(p);
    note("queried " + std::to_string(probes_.size()) + " probes");
    Mat t;
    switch (route_) {
      case Route::one_dim: t = one_dim(); break;
      case Route::smooth: t = smooth(); break;
      case Route::linf: t = linf(); break;
      case Route::l1: t = l1(); break;
      case Route::generic: t = generic(); break;
      case Route::automatic: throw RouteError("route must be resolved before running");
    }
    return finalize(std::move(t));
  }

 private:
  void note(std::string line) { transcript_.push_back(std::string(to_string(route_)) + ": " + std::move(line)); }

  Rng rng(std::uint64_t stream) const { return Rng(derive_seed(options_.seed, stream)); }

  bool is_plus_minus(const Vec& a, const Vec& b, double magnitude) const {
    const double s = tol_.slack(magnitude);
    return norm(Y_, a - b) <= s || norm(Y_, a + b) <= s;
  }

  /// Condition (a): f(t x) = +-t f(x) on the unit-normalized probes.
  void check_homogeneity_on_probes() {
    int checked = 0;
    for (const Vec& p : probes_) {
      const Vec x = p / norm(X_, p);
      const Vec fx = f_(x);
      for (double t : {2.0, 0.5, 3.25, -1.5}) {
        if (!is_plus_minus(f_(Vec(t * x)), t * fx, std::abs(t)))
          throw NotDecomposable("f(t x) != +-t f(x) at t = " + std::to_string(t) + ", x = " + format_point(x),
                                {x, Vec(t * x)});
        ++checked;
      }
    }
    note("condition (a) f(tx) = +-t f(x) holds on " + std::to_string(checked) + " probe scalings");
  }

  /// Frame assembly through x0 = e_1 and z = e_j in the hyperplane {z_1 = 0}:
  /// f(z + x0) = alpha f(z) + beta f(x0) gives column j = alpha beta f(e_j).
  Mat assemble_from_frame() {
    Mat t(Y_.dim(), n_);
    const Vec x0 = basis_vector(n_, 0);
    t.col(0) = f_(x0);
    for (int j = 1; j < n_; ++j) {
      const Vec z = basis_vector(n_, j);
      const SignPinning pin = pin_signs(f_, z, x0, tol_);
      t.col(j) = (pin.alpha * pin.beta) * f_(z);
    }
    note("assembled T from basis images with pinned relative signs");
    return t;
  }

  /// Condition (b) of the hyperplane route: f(z + e_1) = alpha f(z) + beta f(e_1)
  /// for z in Z = {z : z_1 = 0}, after checking e_1 _|_ Z and Z _|_ e_1.
  void check_hyperplane_condition() {
    const Vec x0 = basis_vector(n_, 0);
    const Hyperplane Z{Functional{x0}};
    auto sampler = rng(0x2b1);
    std::vector<Vec> zs;
    for (int j = 1; j < n_; ++j) zs.push_back(basis_vector(n_, j));
    for (int k = 0; k < 2 * n_; ++k) {
      Vec z = sampler.gaussian_vector(n_);
      z[0] = 0.0;
      zs.push_back(z);
    }
    for (const Vec& z : zs) {
      if (!is_birkhoff_orthogonal(X_, x0, z, tol_).orthogonal || !is_birkhoff_orthogonal(X_, z, x0, tol_).orthogonal)
        throw RouteUnsupported("coordinate hyperplane is not mutually orthogonal to e_1 in " + X_.describe());
      pin_signs(f_, z, x0, tol_);
    }
    note("condition (b): f(z + e_1) = +-f(z) +- f(e_1) on " + std::to_string(zs.size()) + " points of Z");
  }

  /// Pins signs on probe pairs (e_i, e_j) and consecutive random probes.
  void check_pair_condition() {
    int pinned = 0;
    for (int i = 0; i < n_; ++i)
      for (int j = i + 1; j < n_; ++j, ++pinned) pin_signs(f_, basis_vector(n_, i), basis_vector(n_, j), tol_);
    const std::size_t first_random = probes_.size() - static_cast<std::size_t>(3 * n_);
    for (std::size_t k = first_random; k + 1 < probes_.size(); k += 2, ++pinned)
      pin_signs(f_, probes_[k], probes_[k + 1], tol_);
    note("condition (b): f(x+y) = +-f(x) +- f(y) on " + std::to_string(pinned) + " independent pairs");
  }

  /// Linear recovery from a homogenized oracle: 2-D normalization or projective frame.
  Mat linear_from_homogeneous() {
    const PhaseMapOracle f0 = homogenize(f_);
    if (n_ == 2) {
      const TwoDimNormalization norm2 = normalize_two_dim(f0, basis_vector(2, 0), basis_vector(2, 1), tol_);
      note("two-dimensional normalization certified alpha(a)beta(a) = " + std::to_string(norm2.base_product) +
           " on " + std::to_string(norm2.grid.size()) + " grid points");
      return norm2.matrix();
    }
    auto probe_rng = rng(0x4c7);
    const ProjectiveRecovery rec = recover_projective_linear(f0, probe_rng, 100, tol_);
    note("projective recovery: collinearity residual " + std::to_string(rec.max_collinearity_residual) + " on " +
         std::to_string(rec.probes_checked) + " probes");
    // Norm preservation fixes the scale.
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (const Vec& p : probes_) {
      const double ratio = norm(X_, p) / norm(Y_, rec.A(p));
      lo = std::min(lo, ratio);
      hi = std::max(hi, ratio);
    }
    if (hi - lo > tol_.slack(hi)) throw NotDecomposable("recovered linear map is not a multiple of an isometry", {});
    note("rescaled by lambda = " + std::to_string(hi));
    return hi * rec.A.matrix;
  }

  Mat one_dim() {
    if (n_ != 1) throw RouteUnsupported("one_dim route needs a one-dimensional domain, got " + X_.describe());
    const Vec x0 = Vec::Ones(1) / norm(X_, Vec::Ones(1));
    const Vec fx0 = f_(x0);
    Mat t = fx0 / x0[0];
    auto sampler = rng(0x1d1);
    std::vector<double> ts;
    for (int k = -6; k <= 6; ++k) {
      ts.push_back(std::ldexp(1.0, k));
      ts.push_back(-std::ldexp(1.0, k));
    }
    for (int k = 0; k < 32; ++k) ts.push_back(sampler.uniform(-10.0, 10.0));
    for (double s : ts) {
      const Vec x = s * x0;
      if (!is_plus_minus(f_(x), s * fx0, std::abs(s))) {
        std::ostringstream msg;
        msg << "f(t x0) is not +-t f(x0) at t = " << s;
        throw NotDecomposable(msg.str(), {x});
      }
    }
    note("f(t x0) = +-t f(x0) on " + std::to_string(ts.size()) + " scalars");
    return t;
  }

  /// Line-preservation consequence: z outside [x, y] maps outside [f(x), f(y)].
  void check_line_preservation() {
    if (n_ < 3) return;
    auto sampler = rng(0x7a3);
    for (int k = 0; k < n_; ++k) {
      const Vec x = sampler.gaussian_vector(n_);
      const Vec y = sampler.gaussian_vector(n_);
      const Vec z = sampler.gaussian_vector(n_);
      Mat image_plane(Y_.dim(), 2);
      image_plane << f_(x), f_(y);
      if (detail::span_residual(image_plane, f_(z)) <= tol_.collinearity)
        throw CollinearityViolation("f(z) lies on [f(x), f(y)] although z is off [x, y]", {x, y, z});
      const double a = sampler.gaussian();
      const double b = sampler.gaussian();
      const Vec w = a * x + b * y;
      if (detail::span_residual(image_plane, f_(w)) > tol_.collinearity)
        throw CollinearityViolation("f(ax + by) leaves [f(x), f(y)]", {x, y, w});
    }
    note("line preservation holds on " + std::to_string(n_) + " probe triples");
  }

  Mat smooth() {
    if (!X_.is_smooth_space() || n_ < 2)
      throw RouteUnsupported("smooth route needs a smooth domain of dimension >= 2, got " + X_.describe());
    check_line_preservation();
    for (int i = 0; i < n_; ++i) {
      const Vec e = basis_vector(n_, i) / norm(X_, basis_vector(n_, i));
      const Functional x_star = support_set(X_, e, tol_).witness;
      RecoveryOptions ro;
      ro.exposing_point = e;
      ro.samples = probes_;
      const FunctionalRecovery rec = recover_functional(f_, x_star, ro, tol_);
      (void)rec;
    }
    note("recovered phi_i with |x_i*(v)| = |phi_i(f(v))| on all probes for every basis direction");
    check_homogeneity_on_probes();
    check_pair_condition();
    return linear_from_homogeneous();
  }

  static Vec theta(const Vec& c, double zero) {
    Vec s(c.size());
    for (Eigen::Index i = 0; i < c.size(); ++i) s[i] = std::abs(c[i]) <= zero ? 0.0 : (c[i] > 0 ? 1.0 : -1.0);
    return s;
  }

  Mat linf() {
    if (!X_.is_plain_lp() || !X_.p().is_infinite())
      throw RouteUnsupported("linf route needs an linf domain, got " + X_.describe());

    // Step 1: coordinate functionals phi_i with e_i*(x) = +-phi_i(f(x)),
    // aligned so phi_i(f(e_i)) = 1 and phi_i(f(e_j)) = 0.
    Mat phi(n_, Y_.dim());
    for (int i = 0; i < n_; ++i) {
      const Vec e = basis_vector(n_, i);
      RecoveryOptions ro;
      ro.exposing_point = e;
      ro.samples = probes_;
      Functional p = recover_functional(f_, Functional{e}, ro, tol_).phi;
      if (p(f_(e)) < 0) p = -p;
      phi.row(i) = p.coords.transpose();
    }
    for (int i = 0; i < n_; ++i) {
      for (int j = 0; j < n_; ++j) {
        const double v = phi.row(i).dot(f_(basis_vector(n_, j)));
        if (std::abs(v - (i == j ? 1.0 : 0.0)) > tol_.slack(1.0))
          throw NotDecomposable("coordinate functionals cannot be aligned with the basis images",
                                {basis_vector(n_, i), basis_vector(n_, j)});
      }
    }
    auto coords = [&](const Vec& w) -> Vec { return phi * w; };
    for (const Vec& p : probes_) {
      if ((coords(f_(p)).cwiseAbs() - p.cwiseAbs()).cwiseAbs().maxCoeff() > tol_.slack(norm(X_, p)))
        throw NotDecomposable("|f(x)(i)| != |x_i| in the aligned coordinates", {p});
    }
    note("step 1: aligned coordinate functionals, |f(x)(i)| = |x_i| on all probes");

    // Step 2: theta(f(x)) = +-f(theta(x)) and the two multiset identities.
    const double zero = tol_.slack(1.0);
    for (const Vec& x : probes_) {
      const double nx = norm(X_, x);
      const Vec tx = theta(x, 0.0);
      const Vec f_tx = f_(tx);
      const Vec f_ntx = f_(Vec(nx * tx));
      const Vec fx = f_(x);
      const PairVerdict first =
          compare_multisets(norm(Y_, f_tx + f_ntx), norm(Y_, f_tx - f_ntx), 1.0 + nx, std::abs(1.0 - nx), tol_);
      double min_support = std::numeric_limits<double>::infinity();
      for (int i : coordinate_support(x)) min_support = std::min(min_support, std::abs(x[i]));
      const PairVerdict second =
          compare_multisets(norm(Y_, f_ntx + fx), norm(Y_, f_ntx - fx), 2.0 * nx, nx - min_support, tol_);
      if (!first.pass || !second.pass) throw NotDecomposable("theta identities fail", {x});
      const Vec lhs = theta(coords(fx), zero);
      const Vec rhs = coords(f_tx);
      if ((lhs - rhs).cwiseAbs().maxCoeff() > zero && (lhs + rhs).cwiseAbs().maxCoeff() > zero)
        throw NotDecomposable("theta(f(x)) != +-f(theta(x))", {x});
    }
    note("step 2: theta(f(x)) = +-f(theta(x)) on all probes");

    // Step 3: conditions (a) and (b) of the hyperplane route, then assembly.
    for (const Vec& p : probes_) {
      const Vec x = p / norm(X_, p);
      const Vec base = theta(coords(f_(x)), zero);
      for (double t : {0.5, 2.0, 3.25}) {
        const Vec scaled = theta(coords(f_(Vec(t * x))), zero);
        if ((scaled - base).cwiseAbs().maxCoeff() > 0 && (scaled + base).cwiseAbs().maxCoeff() > 0)
          throw NotDecomposable("theta(f(tx)) != +-theta(f(x))", {x, Vec(t * x)});
      }
    }
    note("step 3: theta(f(tx)) = +-theta(f(x)) on all probes");
    check_homogeneity_on_probes();
    check_hyperplane_condition();
    return assemble_from_frame();
  }

  Mat l1() {
    if (!X_.is_plain_lp() || !X_.p().is_one())
      throw RouteUnsupported("l1 route needs an l1 domain, got " + X_.describe());

    // Step 1: f(t e_g) = +-t f(e_g), and t f(e_g0) is orthogonal to f(e_g)
    // in the norm-identity sense for g != g0.
    Mat basis_images(Y_.dim(), n_);
    for (int i = 0; i < n_; ++i) basis_images.col(i) = f_(basis_vector(n_, i));
    for (int i = 0; i < n_; ++i) {
      const Vec e = basis_vector(n_, i);
      for (double t : {2.0, -0.5, 3.25}) {
        const Vec fte = f_(Vec(t * e));
        if (!is_plus_minus(fte, t * basis_images.col(i), std::abs(t)))
          throw NotDecomposable("f(t e_i) != +-t f(e_i)", {e, Vec(t * e)});
        for (int j = 0; j < n_; ++j) {
          if (j == i) continue;
          const double target = std::abs(t) + 1.0;
          const double plus = norm(Y_, fte + basis_images.col(j));
          const double minus = norm(Y_, fte - basis_images.col(j));
          if (std::abs(plus - target) > tol_.slack(target) || std::abs(minus - target) > tol_.slack(target))
            throw NotDecomposable("t e_i is not orthogonal to e_j through f", {Vec(t * e), basis_vector(n_, j)});
        }
      }
    }
    note("step 1: f(t e_i) = +-t f(e_i) and orthogonality to the other e_j");

    // Steps 2-3: f(x) = sum b_i f(e_i) with |b_i| = |x_i|.
    for (const Vec& x : probes_) {
      const Vec fx = f_(x);
      if (detail::span_residual(basis_images, fx) > tol_.collinearity)
        throw NotDecomposable("f(x) leaves the span of the basis images", {x});
      const Vec b = basis_images.colPivHouseholderQr().solve(fx);
      const double nx = norm(X_, x);
      if ((b.cwiseAbs() - x.cwiseAbs()).cwiseAbs().maxCoeff() > tol_.slack(nx))
        throw NotDecomposable("expansion coefficients differ from |x_i|", {x});
      for (int m = 0; m < n_; ++m) {
        const Vec fe = b[m] * basis_images.col(m);
        const double lhs = norm(Y_, fx + fe) + norm(Y_, fx - fe);
        const double rhs = 2.0 * nx - 2.0 * std::abs(x[m]) + 2.0 * std::max(std::abs(x[m]), std::abs(b[m]));
        if (std::abs(lhs - rhs) > tol_.slack(rhs)) throw NotDecomposable("norm bookkeeping fails", {x});
      }
    }
    note("steps 2-3: f(x) = sum b_i f(e_i) with |b_i| = |x_i| on all probes");

    // Step 4: signs through the exposed functional sum sign(x_g) e_g* on l1(Gamma_x).
    auto sampler = rng(0x5e4);
    int expanded = 0;
    for (const Vec& x : probes_) {
      const std::vector<int> support = coordinate_support(x);
      if (support.size() < 2) continue;
      Vec x_star = Vec::Zero(n_);
      for (int g : support) x_star[g] = x[g] > 0 ? 1.0 : -1.0;
      RecoveryOptions ro;
      ro.exposing_point = x_star / static_cast<double>(support.size());
      ro.require_smooth_image = false;
      ro.samples.push_back(x);
      for (int g : support) ro.samples.push_back(basis_vector(n_, g));
      for (int k = 0; k < 2; ++k) {
        Vec v = Vec::Zero(n_);
        for (int g : support) v[g] = sampler.gaussian();
        ro.samples.push_back(v);
      }
      const FunctionalRecovery rec = recover_functional(f_, Functional{x_star}, ro, tol_);
      Vec w = Vec::Zero(Y_.dim());
      for (int g : support) w += rec.phi(basis_images.col(g)) * std::abs(x[g]) * basis_images.col(g);
      if (!is_plus_minus(f_(x), w, norm(X_, x)))
        throw NotDecomposable("f(x) != +-sum phi(f(e_g)) |x_g| f(e_g)", {x});
      ++expanded;
    }
    note("step 4: sign expansion through exposed functionals on " + std::to_string(expanded) + " probes");

    // Step 5: conditions (a), (b), assembly.
    check_homogeneity_on_probes();
    check_hyperplane_condition();
    return assemble_from_frame();
  }

  Mat generic() {
    if (n_ < 2) throw RouteUnsupported("generic route needs dimension >= 2; use one_dim");
    check_homogeneity_on_probes();
    check_pair_condition();
    return linear_from_homogeneous();
  }

  DecompositionCertificate finalize(Mat t) {
    // Global sign: first nonzero entry of the first column is positive.
    for (Eigen::Index i = 0; i < t.rows(); ++i) {
      if (std::abs(t(i, 0)) > tol_.zero) {
        if (t(i, 0) < 0) t = -t;
        break;
      }
    }
    DecompositionCertificate cert;
    cert.route = route_;
    cert.T = t;
    cert.declared_surjective = options_.declared_surjective;
    cert.tol = tol_;

    auto sampler = rng(0xf2e);
    std::vector<PointPair> pairs;
    for (int k = 0; k < options_.verification_pairs; ++k)
      pairs.emplace_back(sampler.gaussian_vector(n_), sampler.gaussian_vector(n_));
    const EquationReport eq = check_phase_equation(f_, pairs, tol_);
    cert.verified_pairs = static_cast<int>(pairs.size());
    cert.max_equation_discrepancy = eq.max_discrepancy;
    if (!eq.all_pass()) {
      const PointPair& bad = pairs[*eq.first_failure];
      throw NotDecomposable("phase equation fails on a verification pair", {bad.first, bad.second});
    }

    cert.queries = f_.query_log();
    for (const Sample& s : cert.queries) {
      const Vec tx = t * s.x;
      const double plus = norm(Y_, s.fx - tx);
      const double minus = norm(Y_, s.fx + tx);
      const double r = std::min(plus, minus);
      if (r > tol_.slack(norm(X_, s.x)))
        throw NotDecomposable("f(x) != +-T x at x = " + format_point(s.x), {s.x});
      cert.residuals.push_back(r);
      cert.residual_max = std::max(cert.residual_max, r);
      cert.sign_table.set(s.x, plus <= minus ? 1 : -1);
    }
    LinearMap lin{t, X_, Y_, false, {}};
    auto check_rng = rng(0x150);
    if (isometry_defect(lin, check_rng) > tol_.rel) throw NotDecomposable("recovered T is not an isometry", {});
    note("replayed " + std::to_string(cert.queries.size()) + " queries against eps*T, residual max " +
         std::to_string(cert.residual_max));
    note("phase equation verified on " + std::to_string(cert.verified_pairs) + " fresh pairs");
    cert.transcript = transcript_;
    return cert;
  }

  PhaseMapOracle f_;
  DecomposeOptions options_;
  Tolerances tol_;
  Route route_;
  NormSpec X_;
  NormSpec Y_;
  int n_;
  std::vector<Vec> probes_;
  std::vector<std::string> transcript_;
};

}  // namespace detail

/// Factors f into eps * T. Surjective routes refuse to run unless surjectivity
/// is declared, or the route is explicit and forced.
inline DecompositionCertificate decompose(const PhaseMapOracle& f, const DecomposeOptions& options = {}) {
  Route route = options.route;
  if (!options.declared_surjective) {
    if (!options.force || route == Route::automatic)
      throw RouteError("surjectivity is not declared; decomposition needs --declare-surjective or a forced route");
  }
  if (route == Route::automatic) route = select_route(f.domain());
  if (f.is_table()) {
    const std::vector<Vec> missing = missing_probes(f, options.seed);
    if (!missing.empty())
      throw MissingSample("sample table lacks " + std::to_string(missing.size()) + " required probes", missing);
  }
  return detail::RouteRun(f, options, route).run();
}

}  // namespace phaseiso
