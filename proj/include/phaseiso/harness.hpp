#pragma once

// Command implementations behind the phaseiso CLI. Each command returns a JSON
// report and an exit code; exceptions are mapped to exit codes by run_guarded.

#include <phaseiso/io.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <functional>
#include <iostream>
#include <set>
#include <thread>

namespace phaseiso {

namespace exit_code {
inline constexpr int ok = 0;
inline constexpr int check_failed = 1;
inline constexpr int not_decomposable = 2;
inline constexpr int route_error = 3;
inline constexpr int not_exposed = 4;
inline constexpr int malformed = 64;
inline constexpr int dimension = 65;
inline constexpr int internal = 70;
}  // namespace exit_code

struct CommandOutput {
  int exit_code = exit_code::ok;
  json report;
  /// One human-readable line for stderr.
  std::string summary;
};

inline json points_to_json(const std::vector<Vec>& points) {
  json out = json::array();
  for (const Vec& p : points) out.push_back(io::to_json(p));
  return out;
}

/// Maps an exception to (exit code, JSON error report).
inline CommandOutput error_output(const std::exception& e) {
  CommandOutput out;
  out.report["message"] = e.what();
  auto set = [&](int code, const char* kind) {
    out.exit_code = code;
    out.report["error"] = kind;
  };
  if (const auto* nd = dynamic_cast<const NotDecomposable*>(&e)) {
    if (dynamic_cast<const CollinearityViolation*>(&e)) set(exit_code::not_decomposable, "CollinearityViolation");
    else if (dynamic_cast<const RangeDegenerate*>(&e)) set(exit_code::not_decomposable, "RangeDegenerate");
    else set(exit_code::not_decomposable, "NotDecomposable");
    out.report["witness"] = points_to_json(nd->witness());
  } else if (const auto* ms = dynamic_cast<const MissingSample*>(&e)) {
    set(exit_code::route_error, "MissingSample");
    out.report["missing"] = points_to_json(ms->missing());
  } else if (const auto* sf = dynamic_cast<const SmoothnessFailure*>(&e)) {
    set(exit_code::route_error, "SmoothnessFailure");
    out.report["t"] = sf->t();
  } else if (dynamic_cast<const RouteUnsupported*>(&e)) {
    set(exit_code::route_error, "RouteUnsupported");
  } else if (dynamic_cast<const NoStabilization*>(&e)) {
    set(exit_code::route_error, "NoStabilization");
  } else if (dynamic_cast<const RouteError*>(&e)) {
    set(exit_code::route_error, "RouteError");
  } else if (dynamic_cast<const NotExposed*>(&e)) {
    set(exit_code::not_exposed, "NotExposed");
  } else if (dynamic_cast<const MalformedInput*>(&e)) {
    set(exit_code::malformed, "MalformedInput");
  } else if (dynamic_cast<const DimensionMismatch*>(&e)) {
    set(exit_code::dimension, "DimensionMismatch");
  } else if (dynamic_cast<const InvalidArgument*>(&e) || dynamic_cast<const InvalidSpace*>(&e) ||
             dynamic_cast<const std::invalid_argument*>(&e)) {
    set(exit_code::malformed, "InvalidArgument");
  } else {
    set(exit_code::internal, "Error");
  }
  out.summary = out.report["error"].get<std::string>() + ": " + e.what();
  return out;
}

inline CommandOutput run_guarded(const std::function<CommandOutput()>& command) {
  try {
    return command();
  } catch (const std::exception& e) {
    return error_output(e);
  }
}

// ---------------------------------------------------------------------------
// check

inline constexpr std::size_t kMaxPoolPairs = 10000;

/// Unordered index pairs (i < j) of a pool of `count` samples; when there are
/// more than `cap`, a seeded subsample of `cap` distinct pairs in sorted order.
inline std::vector<std::pair<std::size_t, std::size_t>> pool_pairs(std::size_t count, std::uint64_t seed,
                                                                   std::size_t cap = kMaxPoolPairs) {
  std::vector<std::pair<std::size_t, std::size_t>> out;
  const std::size_t total = count < 2 ? 0 : count * (count - 1) / 2;
  if (total <= cap) {
    for (std::size_t i = 0; i < count; ++i)
      for (std::size_t j = i + 1; j < count; ++j) out.emplace_back(i, j);
    return out;
  }
  Rng rng(derive_seed(seed, 0xc4ec));
  std::set<std::pair<std::size_t, std::size_t>> chosen;
  const int last = static_cast<int>(count - 1);
  while (chosen.size() < cap) {
    auto i = static_cast<std::size_t>(rng.integer(0, last));
    auto j = static_cast<std::size_t>(rng.integer(0, last));
    if (i == j) continue;
    chosen.emplace(std::min(i, j), std::max(i, j));
  }
  return {chosen.begin(), chosen.end()};
}

inline CommandOutput cmd_check(const io::SpacePair& spaces, const std::vector<io::SampleRecord>& records,
                               const Tolerances& tol, std::uint64_t seed) {
  std::vector<Sample> table;
  std::vector<PointPair> pairs;
  const bool explicit_pairs = std::any_of(records.begin(), records.end(), [](const auto& r) { return r.second; });
  for (const auto& r : records) {
    table.push_back(r.first);
    if (r.second) {
      table.push_back(*r.second);
      pairs.emplace_back(r.first.x, r.second->x);
    }
  }
  if (!explicit_pairs)
    for (const auto& [i, j] : pool_pairs(records.size(), seed)) pairs.emplace_back(records[i].first.x, records[j].first.x);
  // Conflicting values at the same point cannot come from a function.
  std::map<PointKey, Vec> seen;
  for (const Sample& s : table) {
    auto [it, fresh] = seen.emplace(point_key(s.x), s.fx);
    if (!fresh && (it->second - s.fx).cwiseAbs().maxCoeff() > 0.0)
      throw InvalidArgument("samples give two values at " + key_string(point_key(s.x)));
  }
  const PhaseMapOracle f = PhaseMapOracle::from_table(spaces.domain, spaces.codomain, table);
  const EquationReport report = check_phase_equation(f, pairs, tol);

  CommandOutput out;
  out.report = io::to_json(report, pairs, true);
  out.report["mode"] = explicit_pairs ? "pairs" : "pool";
  out.report["samples"] = table.size();
  out.report["tolerances"] = io::tolerances_to_json(tol);
  out.exit_code = report.all_pass() ? exit_code::ok : exit_code::check_failed;
  std::ostringstream line;
  line << (report.all_pass() ? "PASS" : "FAIL") << " " << pairs.size() << " pairs, max discrepancy "
       << report.max_discrepancy;
  out.summary = line.str();
  return out;
}

// ---------------------------------------------------------------------------
// oracle sources

struct OracleSource {
  PhaseMapOracle oracle;
  /// Present for generated oracles; used to score round trips.
  std::optional<GeneratedPhaseIsometry> truth;
};

inline GeneratedPhaseIsometry generated_oracle(const NormSpec& space, std::uint64_t seed, bool even = true) {
  const LinearMap T = generate_isometry(space, derive_seed(seed, 1));
  if (!T.warning.empty()) std::cerr << "warning: " << T.warning << "\n";
  return generate_phase_isometry(T, derive_seed(seed, 2), even);
}

inline const std::vector<std::string>& builtin_names() {
  static const std::vector<std::string> names{"generated", "identity", "shift", "abs", "sine", "sign_flip"};
  return names;
}

/// Built-in oracles. `generated` is a hidden eps*T drawn from the seed; `shift`
/// adds the all-ones vector; `sign_flip` flips e_1; `sine` ignores the space.
inline OracleSource builtin_oracle(const std::string& name, const io::SpacePair& spaces, std::uint64_t seed,
                                   bool even = true) {
  const auto same = [&] {
    if (spaces.domain.dim() != spaces.codomain.dim())
      throw DimensionMismatch("builtin '" + name + "' needs equal domain and codomain dimensions");
  };
  if (name == "generated") {
    if (!(spaces.domain.describe() == spaces.codomain.describe()))
      throw InvalidArgument("generated oracles map a space onto itself; give a single space");
    GeneratedPhaseIsometry g = generated_oracle(spaces.domain, seed, even);
    return OracleSource{g.oracle, g};
  }
  if (name == "identity") {
    same();
    return OracleSource{fixtures::identity_map(spaces.domain), std::nullopt};
  }
  if (name == "shift") {
    same();
    return OracleSource{fixtures::shift_map(spaces.domain, Vec::Ones(spaces.domain.dim())), std::nullopt};
  }
  if (name == "abs") {
    same();
    return OracleSource{fixtures::abs_map(spaces.domain), std::nullopt};
  }
  if (name == "sine") return OracleSource{fixtures::sine_curve_map(), std::nullopt};
  if (name == "sign_flip") {
    same();
    return OracleSource{fixtures::sign_flip_map(spaces.domain, detail::basis_vector(spaces.domain.dim(), 0)),
                        std::nullopt};
  }
  throw InvalidArgument("unknown builtin oracle '" + name + "'");
}

// ---------------------------------------------------------------------------
// decompose

struct RoundTripScore {
  /// Global sign s with cert.T ~ s * T.
  int global_sign = 1;
  double t_error = 0.0;
  std::size_t points_checked = 0;
  std::size_t sign_mismatches = 0;
  std::optional<Vec> first_mismatch;

  bool pass(double t_tolerance = 1e-9) const { return t_error <= t_tolerance && sign_mismatches == 0; }
};

/// Compares a certificate against the hidden eps*T: T up to global sign
/// (entrywise) and eps on every queried point, exactly.
inline RoundTripScore score_round_trip(const DecompositionCertificate& cert, const GeneratedPhaseIsometry& truth) {
  RoundTripScore score;
  const double plus = (cert.T - truth.T.matrix).cwiseAbs().maxCoeff();
  const double minus = (cert.T + truth.T.matrix).cwiseAbs().maxCoeff();
  score.global_sign = plus <= minus ? 1 : -1;
  score.t_error = std::min(plus, minus);
  for (const Sample& q : cert.queries) {
    if (q.x.isZero(0.0)) continue;
    ++score.points_checked;
    if (cert.sign_table.at(q.x) != score.global_sign * truth.epsilon(q.x)) {
      ++score.sign_mismatches;
      if (!score.first_mismatch) score.first_mismatch = q.x;
    }
  }
  return score;
}

inline json to_json(const RoundTripScore& score) {
  json out{{"global_sign", score.global_sign},
           {"t_error", score.t_error},
           {"points_checked", score.points_checked},
           {"sign_mismatches", score.sign_mismatches},
           {"pass", score.pass()}};
  if (score.first_mismatch) out["first_mismatch"] = io::to_json(*score.first_mismatch);
  return out;
}

inline CommandOutput cmd_decompose(const OracleSource& source, const DecomposeOptions& options) {
  const DecompositionCertificate cert = decompose(source.oracle, options);
  CommandOutput out;
  out.report = io::to_json(cert);
  out.report["seed"] = options.seed;
  if (source.truth) out.report["score"] = to_json(score_round_trip(cert, *source.truth));
  std::ostringstream line;
  line << "route " << to_string(cert.route) << ", residual_max " << cert.residual_max << ", verified_pairs "
       << cert.verified_pairs;
  out.summary = line.str();
  return out;
}

// ---------------------------------------------------------------------------
// ortho

inline json to_json(const OrthogonalityVerdict& v) {
  return {{"orthogonal", v.orthogonal},
          {"near_tie", v.near_tie},
          {"upper", v.upper},
          {"lower", v.lower},
          {"witness", io::to_json(v.witness.coords)}};
}

inline CommandOutput cmd_ortho(const NormSpec& space, const Vec& x, const Vec& y, const Tolerances& tol) {
  space.require_dim(x, "--x");
  space.require_dim(y, "--y");
  const OrthogonalityVerdict xy = is_birkhoff_orthogonal(space, x, y, tol);
  const OrthogonalityVerdict yx = is_birkhoff_orthogonal(space, y, x, tol);
  CommandOutput out;
  out.report = {{"space", io::to_json(space)}, {"x", io::to_json(x)},         {"y", io::to_json(y)},
                {"x_perp_y", to_json(xy)},     {"y_perp_x", to_json(yx)}, {"tolerances", io::tolerances_to_json(tol)}};
  if (space.is_plain_lp() && space.p().is_one()) {
    const L1OrthogonalityTriple t = l1_orthogonality_triple(space, x, y, tol);
    out.report["l1_triple"] = {{"disjoint_support", t.disjoint_support},
                               {"birkhoff", t.birkhoff},
                               {"norm_identity", t.norm_identity},
                               {"agree", t.agree()}};
  }
  out.summary = std::string("x _|_ y: ") + (xy.orthogonal ? "true" : "false") +
                ", y _|_ x: " + (yx.orthogonal ? "true" : "false");
  return out;
}

// ---------------------------------------------------------------------------
// lemma

inline CommandOutput cmd_lemma(const OracleSource& source, const Vec& x_star, RecoveryOptions options,
                               const Tolerances& tol) {
  source.oracle.domain().require_dim(x_star, "--functional");
  if (options.samples.empty() && source.oracle.is_table()) options.samples = source.oracle.table_points();
  const FunctionalRecovery rec = recover_functional(source.oracle, Functional{x_star}, options, tol);
  CommandOutput out;
  out.report = io::to_json(rec);
  out.report["dual_norm"] = dual_norm(source.oracle.codomain(), rec.phi);
  out.report["tolerances"] = io::tolerances_to_json(tol);
  std::ostringstream line;
  line << "phi stabilized at t = " << rec.stabilized_at << ", max defect " << rec.max_defect << " on "
       << rec.samples.size() << " samples";
  out.summary = line.str();
  return out;
}

// ---------------------------------------------------------------------------
// gen

struct GeneratedData {
  std::vector<Sample> samples;
  json truth;
};

/// Samples of a generated eps*T: every point the decomposition with this seed
/// queries, then `extra` Gaussian points. Replaying them in table mode with the
/// same seed reproduces the decomposition.
inline GeneratedData cmd_gen(const NormSpec& space, std::uint64_t seed, bool even, int extra, Route route,
                             const Tolerances& tol) {
  if (extra < 0) throw InvalidArgument("--count must be non-negative");
  GeneratedPhaseIsometry g = generated_oracle(space, seed, even);
  DecomposeOptions options;
  options.route = route;
  options.declared_surjective = true;
  options.seed = seed;
  options.tol = tol;
  std::string note = "decomposition transcript included";
  try {
    decompose(g.oracle, options);
  } catch (const Error& e) {
    // Uneven sign functions may break the route; the samples are still valid.
    note = std::string("decomposition stopped early: ") + e.what();
  }
  Rng rng(derive_seed(seed, 0x6e9));
  for (int k = 0; k < extra; ++k) g.oracle(rng.gaussian_vector(space.dim()));

  GeneratedData out;
  out.samples = g.oracle.query_log();
  SignAssignment signs;
  for (const Sample& s : out.samples) signs.set(s.x, g.epsilon(s.x));
  out.truth = {{"space", io::to_json(space)},
               {"seed", seed},
               {"generator", kGeneratorName},
               {"even", even},
               {"T", io::to_json(g.T.matrix)},
               {"epsilon", io::to_json(signs)},
               {"note", note}};
  if (!g.T.warning.empty()) out.truth["warning"] = g.T.warning;
  return out;
}

// ---------------------------------------------------------------------------
// fuzz

struct CampaignConfig {
  explicit CampaignConfig(NormSpec s) : space(std::move(s)) {}

  NormSpec space;
  int trials = 1;
  std::uint64_t seed = 0;
  Route route = Route::automatic;
  Tolerances tol;
  /// Worker threads; 0 picks the hardware concurrency.
  int jobs = 1;

  void validate() const {
    if (trials < 1) throw InvalidArgument("trials must be >= 1, got " + std::to_string(trials));
    if (jobs < 0) throw InvalidArgument("jobs must be >= 0");
    if (route != Route::automatic) {
      const Route natural = select_route(space);
      const bool fits = route == natural || route == Route::generic ||
                        (route == Route::smooth && space.is_smooth_space() && space.dim() >= 2);
      if (!fits)
        throw RouteUnsupported(std::string("route ") + to_string(route) + " does not apply to " + space.describe());
    }
  }
};

enum class Outcome { success, not_decomposable, error };

inline const char* to_string(Outcome o) {
  switch (o) {
    case Outcome::success: return "success";
    case Outcome::not_decomposable: return "not_decomposable";
    case Outcome::error: return "error";
  }
  return "?";
}

struct TrialResult {
  int index = 0;
  std::uint64_t seed = 0;
  Outcome outcome = Outcome::success;
  std::string route;
  double residual_max = 0.0;
  double t_error = 0.0;
  std::size_t queries = 0;
  std::string message;
};

/// One generate -> decompose -> score trial; fully determined by its seed.
inline TrialResult run_trial(const NormSpec& space, std::uint64_t trial_seed, Route route, const Tolerances& tol) {
  TrialResult r;
  r.seed = trial_seed;
  try {
    const GeneratedPhaseIsometry g = generated_oracle(space, trial_seed);
    DecomposeOptions options;
    options.route = route;
    options.declared_surjective = true;
    options.seed = trial_seed;
    options.tol = tol;
    const DecompositionCertificate cert = decompose(g.oracle, options);
    const RoundTripScore score = score_round_trip(cert, g);
    r.route = to_string(cert.route);
    r.residual_max = cert.residual_max;
    r.t_error = score.t_error;
    r.queries = cert.queries.size();
    if (!score.pass()) {
      r.outcome = Outcome::error;
      std::ostringstream msg;
      msg << "round trip mismatch: t_error " << score.t_error << ", " << score.sign_mismatches << " sign mismatches";
      r.message = msg.str();
    }
  } catch (const NotDecomposable& e) {
    r.outcome = Outcome::not_decomposable;
    r.message = e.what();
  } catch (const std::exception& e) {
    r.outcome = Outcome::error;
    r.message = e.what();
  }
  return r;
}

inline std::uint64_t trial_seed(std::uint64_t campaign_seed, int index) {
  return derive_seed(campaign_seed, 0x7000 + static_cast<std::uint64_t>(index));
}

struct CampaignReport {
  CampaignConfig config;
  std::vector<TrialResult> trials;
  double wall_seconds = 0.0;

  std::size_t count(Outcome o) const {
    return static_cast<std::size_t>(
        std::count_if(trials.begin(), trials.end(), [o](const TrialResult& t) { return t.outcome == o; }));
  }
  bool all_success() const { return count(Outcome::success) == trials.size(); }
};

inline CampaignReport run_campaign(const CampaignConfig& config) {
  config.validate();
  CampaignReport report{config, std::vector<TrialResult>(static_cast<std::size_t>(config.trials)), 0.0};
  const auto start = std::chrono::steady_clock::now();
  std::atomic<int> next{0};
  auto worker = [&] {
    for (int i = next++; i < config.trials; i = next++) {
      TrialResult r = run_trial(config.space, trial_seed(config.seed, i), config.route, config.tol);
      r.index = i;
      report.trials[static_cast<std::size_t>(i)] = std::move(r);
    }
  };
  int jobs = config.jobs == 0 ? static_cast<int>(std::max(1u, std::thread::hardware_concurrency())) : config.jobs;
  jobs = std::min(jobs, config.trials);
  if (jobs <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < jobs; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  report.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return report;
}

/// Report JSON; everything except "timing" is a function of the config.
inline json to_json(const CampaignReport& report) {
  json trials = json::array();
  json failing = json::array();
  double residual_max = 0.0;
  double residual_sum = 0.0;
  double t_error_max = 0.0;
  for (const TrialResult& t : report.trials) {
    json entry{{"index", t.index}, {"seed", t.seed}, {"outcome", to_string(t.outcome)}};
    if (t.outcome == Outcome::success) {
      entry["route"] = t.route;
      entry["residual_max"] = t.residual_max;
      entry["t_error"] = t.t_error;
      entry["queries"] = t.queries;
      residual_max = std::max(residual_max, t.residual_max);
      residual_sum += t.residual_max;
      t_error_max = std::max(t_error_max, t.t_error);
    } else {
      entry["message"] = t.message;
      failing.push_back(t.seed);
    }
    trials.push_back(entry);
  }
  const std::size_t successes = report.count(Outcome::success);
  return {{"space", io::to_json(report.config.space)},
          {"seed", report.config.seed},
          {"generator", kGeneratorName},
          {"route", to_string(report.config.route)},
          {"trials", report.config.trials},
          {"tolerances", io::tolerances_to_json(report.config.tol)},
          {"counts",
           {{"success", successes},
            {"not_decomposable", report.count(Outcome::not_decomposable)},
            {"error", report.count(Outcome::error)}}},
          {"residual",
           {{"max", residual_max}, {"mean", successes == 0 ? 0.0 : residual_sum / static_cast<double>(successes)}}},
          {"t_error_max", t_error_max},
          {"failing_seeds", failing},
          {"outcomes", trials},
          {"timing", {{"wall_seconds", report.wall_seconds}}}};
}

inline CommandOutput cmd_fuzz(const CampaignConfig& config) {
  const CampaignReport report = run_campaign(config);
  CommandOutput out;
  out.report = to_json(report);
  out.exit_code = report.all_success() ? exit_code::ok : exit_code::check_failed;
  std::ostringstream line;
  line << report.count(Outcome::success) << "/" << report.trials.size() << " trials succeeded on "
       << config.space.describe() << " in " << report.wall_seconds << " s";
  out.summary = line.str();
  return out;
}

}  // namespace phaseiso
