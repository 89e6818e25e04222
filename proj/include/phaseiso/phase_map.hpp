#pragma once

// The map under study: oracles, the defining functional equations, and
// ground-truth generators of maps of the form x -> eps(x) T x.

#include <phaseiso/rng.hpp>
#include <phaseiso/space.hpp>

#include <Eigen/QR>

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

namespace phaseiso {

// ---------------------------------------------------------------------------
// Point keys and canonical representatives

/// Coordinates rounded to 12 decimal digits; used for table lookups and sign tables.
using PointKey = std::vector<std::int64_t>;

inline constexpr double kKeyScale = 1e12;
inline constexpr double kKeyLimit = 9.0e6;

inline PointKey point_key(const Vec& x) {
  PointKey key(static_cast<std::size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (!std::isfinite(x[i]) || std::abs(x[i]) >= kKeyLimit)
      throw InvalidArgument("coordinate out of keyable range: " + std::to_string(x[i]));
    key[static_cast<std::size_t>(i)] = std::llround(x[i] * kKeyScale);
  }
  return key;
}

inline Vec key_point(const PointKey& key) {
  Vec x(static_cast<Eigen::Index>(key.size()));
  for (std::size_t i = 0; i < key.size(); ++i) x[static_cast<Eigen::Index>(i)] = static_cast<double>(key[i]) / kKeyScale;
  return x;
}

/// "[c0,c1,...]" with the rounded coordinates; stable across runs.
inline std::string key_string(const PointKey& key) {
  std::ostringstream out;
  out.precision(15);
  out << '[';
  for (std::size_t i = 0; i < key.size(); ++i) {
    if (i) out << ',';
    out << static_cast<double>(key[i]) / kKeyScale;
  }
  out << ']';
  return out.str();
}

/// x or -x, whichever has a positive first nonzero coordinate.
inline Vec canonical_sign(const Vec& x) {
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if (x[i] > 0) return x;
    if (x[i] < 0) return -x;
  }
  return x;
}

/// Representative of the line through x: x/||x|| with positive first nonzero coordinate.
inline Vec canonical_ray(const NormSpec& space, const Vec& x) {
  if (x.isZero(0.0)) throw InvalidArgument("the zero vector spans no line");
  return canonical_sign(x) / norm(space, x);
}

// ---------------------------------------------------------------------------
// Domain types

/// Phase function eps with values in {-1,+1}, recorded per point key; eps(0) = +1.
class SignAssignment {
 public:
  void set(const Vec& x, int value) {
    if (value != 1 && value != -1) throw InvalidArgument("sign values must be +-1");
    if (x.isZero(0.0)) return;
    table_[point_key(x)] = value;
  }
  int at(const Vec& x) const {
    if (x.isZero(0.0)) return 1;
    auto it = table_.find(point_key(x));
    if (it == table_.end()) throw InvalidArgument("no sign recorded for point");
    return it->second;
  }
  bool contains(const Vec& x) const { return x.isZero(0.0) || table_.count(point_key(x)) > 0; }
  void flip_all() {
    for (auto& [key, value] : table_) value = -value;
  }
  std::size_t size() const { return table_.size(); }
  const std::map<PointKey, int>& table() const { return table_; }

 private:
  std::map<PointKey, int> table_;
};

struct LinearMap {
  /// codomain dim x domain dim.
  Mat matrix;
  NormSpec domain;
  NormSpec codomain;
  bool isometric = false;
  /// Non-empty when the generator fell back to a placeholder.
  std::string warning;

  Vec operator()(const Vec& x) const { return matrix * x; }
};

/// Largest relative norm defect | ||Tx|| - ||x|| | / (1 + ||x||) over `count` random x.
inline double isometry_defect(const LinearMap& t, Rng& rng, int count = 100) {
  double worst = 0.0;
  for (int k = 0; k < count; ++k) {
    const Vec x = rng.gaussian_vector(t.domain.dim());
    const double nx = norm(t.domain, x);
    worst = std::max(worst, std::abs(norm(t.codomain, t(x)) - nx) / (1.0 + nx));
  }
  return worst;
}

struct Sample {
  Vec x;
  Vec fx;
};

/// Query interface to the map f : X -> Y under study.
///
/// Wraps a callable or a finite sample table. Every answered query is logged;
/// repeated queries (same point key) return the logged vector, so the oracle is
/// deterministic even if the callable is not. Copies share the log.
class PhaseMapOracle {
 public:
  using Fn = std::function<Vec(const Vec&)>;

  PhaseMapOracle(NormSpec domain, NormSpec codomain, Fn fn, std::string name = "callable")
      : state_(std::make_shared<State>(std::move(domain), std::move(codomain))) {
    state_->fn = std::move(fn);
    state_->name = std::move(name);
  }

  static PhaseMapOracle from_table(NormSpec domain, NormSpec codomain, const std::vector<Sample>& samples) {
    PhaseMapOracle oracle(std::move(domain), std::move(codomain), Fn{}, "table");
    State& s = *oracle.state_;
    s.is_table = true;
    for (const Sample& sample : samples) {
      s.domain.require_dim(sample.x, "sample x");
      s.codomain.require_dim(sample.fx, "sample fx");
      s.table[point_key(sample.x)] = sample.fx;
    }
    return oracle;
  }

  Vec operator()(const Vec& x) const {
    State& s = *state_;
    s.domain.require_dim(x, "query");
    PointKey key = point_key(x);
    std::lock_guard<std::mutex> lock(s.mutex);
    if (auto it = s.logged.find(key); it != s.logged.end()) return s.log[it->second].fx;
    Vec fx;
    if (s.is_table) {
      auto it = s.table.find(key);
      if (it == s.table.end()) throw MissingSample("sample table has no entry for " + key_string(key), {x});
      fx = it->second;
    } else {
      fx = s.fn(x);
      s.codomain.require_dim(fx, "oracle value");
    }
    if (!fx.allFinite()) throw Error("oracle returned a non-finite value at " + key_string(key));
    s.logged.emplace(std::move(key), s.log.size());
    s.log.push_back(Sample{x, fx});
    return fx;
  }

  const NormSpec& domain() const { return state_->domain; }
  const NormSpec& codomain() const { return state_->codomain; }
  const std::string& name() const { return state_->name; }
  bool is_table() const { return state_->is_table; }

  /// True when a query at x can be answered.
  bool has(const Vec& x) const {
    if (!state_->is_table) return true;
    return state_->table.count(point_key(x)) > 0;
  }

  /// Stored table points, in key order (empty for callables).
  std::vector<Vec> table_points() const {
    std::vector<Vec> points;
    for (const auto& entry : state_->table) points.push_back(key_point(entry.first));
    return points;
  }

  std::vector<Sample> query_log() const {
    std::lock_guard<std::mutex> lock(state_->mutex);
    return state_->log;
  }
  std::size_t query_count() const {
    std::lock_guard<std::mutex> lock(state_->mutex);
    return state_->log.size();
  }

 private:
  struct State {
    State(NormSpec d, NormSpec c) : domain(std::move(d)), codomain(std::move(c)) {}
    NormSpec domain;
    NormSpec codomain;
    Fn fn;
    std::string name;
    bool is_table = false;
    std::map<PointKey, Vec> table;
    std::mutex mutex;
    std::map<PointKey, std::size_t> logged;
    std::vector<Sample> log;
  };
  std::shared_ptr<State> state_;
};

// ---------------------------------------------------------------------------
// Functional equation checks

struct PairVerdict {
  bool pass = true;
  double discrepancy = 0.0;
};

struct EquationReport {
  std::vector<PairVerdict> pairs;
  double max_discrepancy = 0.0;
  /// Index of the first failing pair.
  std::optional<std::size_t> first_failure;

  bool all_pass() const { return !first_failure.has_value(); }
};

/// Compares {a,b} and {c,d} as multisets: sort each, compare componentwise with
/// absolute tolerance rel*(1 + magnitude). Returns (pass, discrepancy).
inline PairVerdict compare_multisets(double a, double b, double c, double d, const Tolerances& tol) {
  if (a > b) std::swap(a, b);
  if (c > d) std::swap(c, d);
  PairVerdict v;
  v.discrepancy = std::max(std::abs(a - c), std::abs(b - d));
  v.pass = std::abs(a - c) <= tol.slack(std::max(a, c)) && std::abs(b - d) <= tol.slack(std::max(b, d));
  return v;
}

using PointPair = std::pair<Vec, Vec>;

namespace detail {

inline void record(EquationReport& report, const PairVerdict& v) {
  if (!v.pass && !report.first_failure) report.first_failure = report.pairs.size();
  report.max_discrepancy = std::max(report.max_discrepancy, v.discrepancy);
  report.pairs.push_back(v);
}

}  // namespace detail

/// {||f(x)+f(y)||, ||f(x)-f(y)||} = {||x+y||, ||x-y||} on every pair.
inline EquationReport check_phase_equation(const PhaseMapOracle& f, const std::vector<PointPair>& pairs,
                                           const Tolerances& tol = {}) {
  EquationReport report;
  const NormSpec& X = f.domain();
  const NormSpec& Y = f.codomain();
  for (const auto& [x, y] : pairs) {
    const Vec fx = f(x);
    const Vec fy = f(y);
    detail::record(report, compare_multisets(norm(Y, fx + fy), norm(Y, fx - fy), norm(X, x + y), norm(X, x - y), tol));
  }
  return report;
}

/// |<f(x), f(y)>| = |<x, y>| on every pair; both spaces must be Euclidean.
inline EquationReport check_wigner_equation(const PhaseMapOracle& f, const std::vector<PointPair>& pairs,
                                            const Tolerances& tol = {}) {
  if (!f.domain().is_euclidean() || !f.codomain().is_euclidean())
    throw InvalidSpace("the Wigner equation needs Euclidean domain and codomain");
  EquationReport report;
  for (const auto& [x, y] : pairs) {
    const double lhs = std::abs(f(x).dot(f(y)));
    const double rhs = std::abs(x.dot(y));
    PairVerdict v;
    v.discrepancy = std::abs(lhs - rhs);
    v.pass = v.discrepancy <= tol.slack(std::max(lhs, rhs));
    detail::record(report, v);
  }
  return report;
}

struct InvariantReport {
  bool surjective_mode = false;
  bool norm_preserving = true;
  bool sign_symmetric = true;  // f(-x) = +-f(x)
  bool odd = true;             // f(-x) = -f(x), surjective mode only
  bool injective = true;       // on the sample, surjective mode only
  std::optional<Vec> norm_witness;
  std::optional<Vec> sign_witness;
  std::optional<Vec> odd_witness;
  std::optional<PointPair> injectivity_witness;

  bool all_pass() const { return norm_preserving && sign_symmetric && odd && injective; }
};

/// Consequences every phase-isometry satisfies: ||f(x)|| = ||x|| and
/// f(-x) = +-f(x); for surjective maps also f(-x) = -f(x) and injectivity.
inline InvariantReport phase_invariants(const PhaseMapOracle& f, const std::vector<Vec>& xs, bool surjective_mode,
                                        const Tolerances& tol = {}) {
  InvariantReport r;
  r.surjective_mode = surjective_mode;
  const NormSpec& X = f.domain();
  const NormSpec& Y = f.codomain();
  std::vector<Vec> images;
  images.reserve(xs.size());
  for (const Vec& x : xs) {
    const Vec fx = f(x);
    const Vec fmx = f(Vec(-x));
    images.push_back(fx);
    const double nx = norm(X, x);
    if (std::abs(norm(Y, fx) - nx) > tol.slack(nx) && r.norm_preserving) {
      r.norm_preserving = false;
      r.norm_witness = x;
    }
    const bool same = norm(Y, fmx - fx) <= tol.slack(nx);
    const bool opposite = norm(Y, fmx + fx) <= tol.slack(nx);
    if (!same && !opposite && r.sign_symmetric) {
      r.sign_symmetric = false;
      r.sign_witness = x;
    }
    if (surjective_mode && !opposite && r.odd) {
      r.odd = false;
      r.odd_witness = x;
    }
  }
  if (surjective_mode) {
    for (std::size_t i = 0; i < xs.size() && r.injective; ++i) {
      for (std::size_t j = i + 1; j < xs.size(); ++j) {
        if (point_key(xs[i]) == point_key(xs[j])) continue;
        const double scale = norm(X, xs[i]) + norm(X, xs[j]);
        if (norm(Y, images[i] - images[j]) <= tol.slack(scale)) {
          r.injective = false;
          r.injectivity_witness = PointPair{xs[i], xs[j]};
          break;
        }
      }
    }
  }
  return r;
}

// ---------------------------------------------------------------------------
// Generators

/// Random linear isometry of `space` onto itself: orthogonal for Euclidean
/// norms, signed permutation for other lp norms, conjugated by the weight
/// scaling for weighted kinds. Polyhedral norms get the identity and a warning.
inline LinearMap generate_isometry(const NormSpec& space, std::uint64_t seed) {
  Rng rng(derive_seed(seed, 0x150));
  const int n = space.dim();
  LinearMap t{Mat::Identity(n, n), space, space, false, {}};

  if (space.kind() == NormKind::polyhedral) {
    t.warning = "isometry generation is not supported for polyhedral norms; identity returned";
  } else {
    Mat core(n, n);
    if (!space.p().is_infinite() && space.p().value() == 2.0) {
      Mat g(n, n);
      for (int j = 0; j < n; ++j) g.col(j) = rng.gaussian_vector(n);
      Eigen::HouseholderQR<Mat> qr(g);
      core = qr.householderQ() * Mat::Identity(n, n);
      // Fix column signs with the R diagonal so the distribution is Haar.
      const Mat r = qr.matrixQR().triangularView<Eigen::Upper>();
      for (int j = 0; j < n; ++j)
        if (r(j, j) < 0) core.col(j) = -core.col(j);
    } else {
      core.setZero();
      const std::vector<int> perm = rng.permutation(n);
      for (int j = 0; j < n; ++j) core(perm[static_cast<std::size_t>(j)], j) = rng.sign();
    }
    const Vec& s = space.scale();
    t.matrix = s.cwiseInverse().asDiagonal() * core * s.asDiagonal();
  }
  Rng check(derive_seed(seed, 0x151));
  t.isometric = isometry_defect(t, check) <= 1e-9;
  return t;
}

/// How the hidden phase function of a generated map is drawn.
struct SignPolicy {
  /// eps(-x) = eps(x), which makes x -> eps(x) T x odd and surjective.
  bool even = true;
  /// Use this value everywhere instead of random signs.
  std::optional<int> constant;
  /// Point-specific values, applied before everything else.
  std::vector<std::pair<Vec, int>> overrides;
};

struct GeneratedPhaseIsometry {
  PhaseMapOracle oracle;
  LinearMap T;
  /// The hidden phase function, kept for scoring.
  std::function<int(const Vec&)> epsilon;
};

/// Random sign per point: hash of the seed and the point key of x (or of its
/// canonical sign representative when even), so eps varies along every line.
inline std::function<int(const Vec&)> random_phase_function(std::uint64_t seed, const SignPolicy& policy) {
  std::map<PointKey, int> overrides;
  for (const auto& [x, value] : policy.overrides) {
    if (value != 1 && value != -1) throw InvalidArgument("sign override must be +-1");
    overrides[point_key(x)] = value;
  }
  const std::uint64_t salt = derive_seed(seed, 0xe95);
  return [overrides = std::move(overrides), salt, policy_even = policy.even,
          constant = policy.constant](const Vec& x) -> int {
    if (x.isZero(0.0)) return 1;
    if (auto it = overrides.find(point_key(x)); it != overrides.end()) return it->second;
    if (constant) return *constant;
    std::uint64_t h = salt;
    for (std::int64_t c : point_key(policy_even ? canonical_sign(x) : x))
      h = splitmix64(h ^ static_cast<std::uint64_t>(c));
    return (h >> 63) ? -1 : 1;
  };
}

inline GeneratedPhaseIsometry generate_phase_isometry(const LinearMap& t, std::uint64_t seed,
                                                      const SignPolicy& policy) {
  auto eps = random_phase_function(seed, policy);
  PhaseMapOracle oracle(
      t.domain, t.codomain,
      [matrix = t.matrix, eps](const Vec& x) -> Vec {
        const Vec image = matrix * x;
        return eps(x) == 1 ? image : Vec(-image);
      },
      "generated phase-isometry");
  return GeneratedPhaseIsometry{oracle, t, eps};
}

inline GeneratedPhaseIsometry generate_phase_isometry(const LinearMap& t, std::uint64_t seed, bool even = true) {
  SignPolicy policy;
  policy.even = even;
  return generate_phase_isometry(t, seed, policy);
}

namespace fixtures {

inline PhaseMapOracle identity_map(const NormSpec& space) {
  return PhaseMapOracle(space, space, [](const Vec& x) { return x; }, "identity");
}

/// x -> x + c.
inline PhaseMapOracle shift_map(const NormSpec& space, const Vec& c) {
  space.require_dim(c, "shift");
  return PhaseMapOracle(space, space, [c](const Vec& x) -> Vec { return x + c; }, "shift");
}

/// Coordinatewise absolute value.
inline PhaseMapOracle abs_map(const NormSpec& space) {
  return PhaseMapOracle(space, space, [](const Vec& x) -> Vec { return x.cwiseAbs(); }, "abs");
}

/// t -> (t, sin t) from R into linf_2: an isometry into, not onto, and not linear.
inline PhaseMapOracle sine_curve_map() {
  return PhaseMapOracle(NormSpec::lp(1, Exponent(2.0)), NormSpec::lp(2, Exponent::infinity()),
                        [](const Vec& t) -> Vec { return Vec{{t[0], std::sin(t[0])}}; }, "sine curve");
}

/// f(x0) = -x0, f(-x0) = x0, identity elsewhere: a surjective phase-isometry
/// that is not an isometry.
inline PhaseMapOracle sign_flip_map(const NormSpec& space, const Vec& x0) {
  space.require_dim(x0, "x0");
  if (x0.isZero(0.0)) throw InvalidArgument("sign_flip_map needs x0 != 0");
  return PhaseMapOracle(
      space, space,
      [plus = point_key(x0), minus = point_key(-x0)](const Vec& x) -> Vec {
        const PointKey key = point_key(x);
        return key == plus || key == minus ? Vec(-x) : x;
      },
      "sign flip");
}

}  // namespace fixtures

}  // namespace phaseiso
