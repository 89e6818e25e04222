// phaseiso: check, decompose and fuzz phase-isometries between finite-dimensional
// normed spaces. Reports go to stdout (or --out) as JSON, logs to stderr.

#include <phaseiso.hpp>

#include <CLI11.hpp>

#include <fstream>
#include <iostream>

using namespace phaseiso;

namespace {

struct Common {
  std::string space;
  std::optional<double> tol;
  std::uint64_t seed = 0;
  std::string out;
  std::string route = "auto";
  bool declare_surjective = false;
};

void add_common(CLI::App* cmd, Common& c, bool with_route) {
  cmd->add_option("--space", c.space, "space JSON file")->required()->check(CLI::ExistingFile);
  cmd->add_option("--tol", c.tol, "relative tolerance (overrides PHASE_TOL)");
  cmd->add_option("--seed", c.seed, "64-bit seed");
  cmd->add_option("--out", c.out, "write the report here instead of stdout");
  if (with_route) {
    cmd->add_option("--route", c.route, "auto, one_dim, smooth, linf, l1 or generic")
        ->check(CLI::IsMember({"auto", "one_dim", "smooth", "linf", "l1", "generic"}));
    cmd->add_flag("--declare-surjective", c.declare_surjective, "assert that the map is onto");
  }
}

Tolerances tolerances(const Common& c) {
  Tolerances tol = default_tolerances();
  if (c.tol) {
    if (!(*c.tol > 0.0)) throw InvalidArgument("--tol must be positive");
    tol.rel = *c.tol;
  }
  return tol;
}

/// Accepts "[1, 2, 3]" or "1,2,3".
Vec parse_vector(const std::string& text, const char* what) {
  const std::string doc = text.find('[') == std::string::npos ? "[" + text + "]" : text;
  try {
    return io::vec_from_json(json::parse(doc), what);
  } catch (const json::exception& e) {
    throw MalformedInput(std::string(what) + ": " + e.what());
  }
}

void emit(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text << "\n";
    return;
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw InvalidArgument("cannot write " + path);
  out << text << "\n";
}

int finish(const CommandOutput& result, const std::string& out_path) {
  try {
    emit(result.exit_code == exit_code::ok || result.exit_code == exit_code::check_failed ? out_path : "",
         result.report.dump(2));
  } catch (const std::exception& e) {
    std::cerr << "phaseiso: " << e.what() << "\n";
    return exit_code::malformed;
  }
  if (!result.summary.empty()) std::cerr << result.summary << "\n";
  return result.exit_code;
}

OracleSource load_source(const io::SpacePair& spaces, const std::string& samples, const std::string& builtin,
                         std::uint64_t seed) {
  if (!samples.empty() && !builtin.empty()) throw InvalidArgument("give either --samples or --builtin, not both");
  if (!samples.empty()) {
    std::vector<Sample> table;
    for (const auto& r : io::load_samples(samples, spaces.domain, spaces.codomain)) {
      table.push_back(r.first);
      if (r.second) table.push_back(*r.second);
    }
    return OracleSource{PhaseMapOracle::from_table(spaces.domain, spaces.codomain, table), std::nullopt};
  }
  return builtin_oracle(builtin.empty() ? "generated" : builtin, spaces, seed);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Phase-isometry checker, decomposer and fuzzer"};
  app.require_subcommand(1);

  Common check_opts, dec_opts, ortho_opts, lemma_opts, gen_opts, fuzz_opts;
  std::string check_samples, dec_samples, dec_builtin = "", lemma_samples, lemma_builtin, truth_path;
  std::string x_text, y_text, functional_text;
  bool force = false;
  bool uneven = false;
  int gen_count = 100;
  int lemma_random = 100;
  int trials = 1;
  int jobs = 1;
  std::optional<std::uint64_t> replay;

  auto* check = app.add_subcommand("check", "check the phase equation on sampled pairs");
  add_common(check, check_opts, false);
  check->add_option("--samples", check_samples, "JSONL samples {x, fx} (pool) or {x, fx, y, fy} (pairs)")
      ->required()
      ->check(CLI::ExistingFile);

  auto* dec = app.add_subcommand("decompose", "factor f = eps * T and write a certificate");
  add_common(dec, dec_opts, true);
  dec->add_option("--samples", dec_samples, "JSONL sample table (table mode)")->check(CLI::ExistingFile);
  dec->add_option("--builtin", dec_builtin, "built-in oracle")->check(CLI::IsMember(builtin_names()));
  dec->add_flag("--force", force, "run an explicit route without --declare-surjective");

  auto* ortho = app.add_subcommand("ortho", "Birkhoff orthogonality of x and y");
  add_common(ortho, ortho_opts, false);
  ortho->add_option("--x", x_text, "vector, e.g. [1,0]")->required();
  ortho->add_option("--y", y_text, "vector")->required();

  auto* lemma = app.add_subcommand("lemma", "recover phi with |x*(x)| = |phi(f(x))|");
  add_common(lemma, lemma_opts, false);
  lemma->add_option("--functional", functional_text, "unit functional x*")->required();
  lemma->add_option("--samples", lemma_samples, "JSONL sample table")->check(CLI::ExistingFile);
  lemma->add_option("--builtin", lemma_builtin, "built-in oracle")->check(CLI::IsMember(builtin_names()));
  lemma->add_option("--random-samples", lemma_random, "verification points when no table is given");

  auto* gen = app.add_subcommand("gen", "write samples of a hidden eps * T");
  add_common(gen, gen_opts, true);
  gen->add_option("--count", gen_count, "extra random samples beyond the decomposition transcript");
  gen->add_option("--truth", truth_path, "write T and eps here");
  gen->add_flag("--uneven", uneven, "eps(-x) independent of eps(x)");

  auto* fuzz = app.add_subcommand("fuzz", "seeded generate/decompose/score campaign");
  add_common(fuzz, fuzz_opts, true);
  fuzz->add_option("--trials", trials, "number of trials");
  fuzz->add_option("--jobs", jobs, "worker threads, 0 for all cores");
  fuzz->add_option("--replay", replay, "rerun the single trial with this trial seed");

  CLI11_PARSE(app, argc, argv);

  if (*check) {
    const auto result = run_guarded([&] {
      const io::SpacePair spaces = io::load_spaces(check_opts.space);
      return cmd_check(spaces, io::load_samples(check_samples, spaces.domain, spaces.codomain),
                       tolerances(check_opts), check_opts.seed);
    });
    return finish(result, check_opts.out);
  }
  if (*dec) {
    const auto result = run_guarded([&] {
      const io::SpacePair spaces = io::load_spaces(dec_opts.space);
      DecomposeOptions options;
      options.route = parse_route(dec_opts.route);
      options.declared_surjective = dec_opts.declare_surjective;
      options.force = force;
      options.seed = dec_opts.seed;
      options.tol = tolerances(dec_opts);
      return cmd_decompose(load_source(spaces, dec_samples, dec_builtin, dec_opts.seed), options);
    });
    return finish(result, dec_opts.out);
  }
  if (*ortho) {
    const auto result = run_guarded([&] {
      const io::SpacePair spaces = io::load_spaces(ortho_opts.space);
      return cmd_ortho(spaces.domain, parse_vector(x_text, "--x"), parse_vector(y_text, "--y"),
                       tolerances(ortho_opts));
    });
    return finish(result, ortho_opts.out);
  }
  if (*lemma) {
    const auto result = run_guarded([&] {
      const io::SpacePair spaces = io::load_spaces(lemma_opts.space);
      RecoveryOptions options;
      options.random_samples = lemma_random;
      options.seed = lemma_opts.seed;
      return cmd_lemma(load_source(spaces, lemma_samples, lemma_builtin, lemma_opts.seed),
                       parse_vector(functional_text, "--functional"), options, tolerances(lemma_opts));
    });
    return finish(result, lemma_opts.out);
  }
  if (*gen) {
    const auto result = run_guarded([&] {
      const io::SpacePair spaces = io::load_spaces(gen_opts.space);
      if (spaces.domain.describe() != spaces.codomain.describe())
        throw InvalidArgument("gen maps a space onto itself; give a single space");
      const GeneratedData data = cmd_gen(spaces.domain, gen_opts.seed, !uneven, gen_count,
                                         parse_route(gen_opts.route), tolerances(gen_opts));
      std::string lines;
      for (const Sample& s : data.samples) lines += io::sample_line(s) + "\n";
      if (!lines.empty()) lines.pop_back();
      emit(gen_opts.out, lines);
      if (!truth_path.empty()) emit(truth_path, data.truth.dump(2));
      CommandOutput out;
      out.summary = "wrote " + std::to_string(data.samples.size()) + " samples";
      return out;
    });
    if (result.exit_code != exit_code::ok) return finish(result, "");
    std::cerr << result.summary << "\n";
    return exit_code::ok;
  }
  if (*fuzz) {
    const auto result = run_guarded([&] {
      const io::SpacePair spaces = io::load_spaces(fuzz_opts.space);
      CampaignConfig config{spaces.domain};
      config.trials = trials;
      config.seed = fuzz_opts.seed;
      config.route = parse_route(fuzz_opts.route);
      config.tol = tolerances(fuzz_opts);
      config.jobs = jobs;
      if (replay) {
        config.validate();
        TrialResult r = run_trial(config.space, *replay, config.route, config.tol);
        CommandOutput out;
        out.report = {{"seed", r.seed},
                      {"outcome", to_string(r.outcome)},
                      {"route", r.route},
                      {"residual_max", r.residual_max},
                      {"t_error", r.t_error},
                      {"message", r.message}};
        out.exit_code = r.outcome == Outcome::success ? exit_code::ok : exit_code::check_failed;
        out.summary = std::string("replayed trial: ") + to_string(r.outcome);
        return out;
      }
      return cmd_fuzz(config);
    });
    return finish(result, fuzz_opts.out);
  }
  return exit_code::ok;
}
