#pragma once

// JSON encodings of spaces, samples, certificates and recovery results.

#include <phaseiso/decomposition.hpp>

#include <json.hpp>

#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace phaseiso {

using json = nlohmann::json;

/// Unparseable or structurally wrong input; `line` is 0 when not line-based.
class MalformedInput : public Error {
 public:
  MalformedInput(const std::string& what, std::size_t line = 0)
      : Error(line == 0 ? what : "line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

namespace io {

inline json to_json(const Vec& v) {
  json out = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(v[i]);
  return out;
}

inline json to_json(const Mat& m) {
  json out = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(to_json(Vec(m.row(i).transpose())));
  return out;
}

inline Vec vec_from_json(const json& j, const char* what = "vector") {
  if (!j.is_array()) throw MalformedInput(std::string(what) + " must be an array of numbers");
  Vec v(static_cast<Eigen::Index>(j.size()));
  for (std::size_t i = 0; i < j.size(); ++i) {
    if (!j[i].is_number()) throw MalformedInput(std::string(what) + " must be an array of numbers");
    v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
  }
  return v;
}

inline Mat mat_from_json(const json& j, const char* what = "matrix") {
  if (!j.is_array() || j.empty()) throw MalformedInput(std::string(what) + " must be a non-empty array of rows");
  const Vec first = vec_from_json(j[0], what);
  Mat m(static_cast<Eigen::Index>(j.size()), first.size());
  for (std::size_t i = 0; i < j.size(); ++i) {
    const Vec row = vec_from_json(j[i], what);
    if (row.size() != first.size()) throw MalformedInput(std::string(what) + " rows have different lengths");
    m.row(static_cast<Eigen::Index>(i)) = row.transpose();
  }
  return m;
}

inline json exponent_to_json(const Exponent& p) {
  if (p.is_infinite()) return "inf";
  return p.value();
}

inline Exponent exponent_from_json(const json& j) {
  if (j.is_string()) {
    const auto s = j.get<std::string>();
    if (s == "inf" || s == "infinity") return Exponent::infinity();
    throw MalformedInput("exponent string must be \"inf\", got \"" + s + "\"");
  }
  if (!j.is_number()) throw MalformedInput("exponent must be a number or \"inf\"");
  return Exponent(j.get<double>());
}

inline json to_json(const NormSpec& space) {
  json out;
  out["kind"] = to_string(space.kind());
  out["dim"] = space.dim();
  switch (space.kind()) {
    case NormKind::lp: out["p"] = exponent_to_json(space.p()); break;
    case NormKind::weighted_lp:
      out["p"] = exponent_to_json(space.p());
      out["weights"] = space.weights();
      break;
    case NormKind::polyhedral: out["functionals"] = to_json(space.functionals()); break;
  }
  return out;
}

inline NormSpec space_from_json(const json& j) {
  if (!j.is_object() || !j.contains("kind")) throw MalformedInput("space must be an object with a \"kind\" field");
  const std::string kind = j.at("kind").get<std::string>();
  if (kind == "lp") {
    if (!j.contains("dim") || !j.contains("p")) throw MalformedInput("lp space needs \"dim\" and \"p\"");
    return NormSpec::lp(j.at("dim").get<int>(), exponent_from_json(j.at("p")));
  }
  if (kind == "weighted_lp") {
    if (!j.contains("weights") || !j.contains("p")) throw MalformedInput("weighted_lp space needs \"weights\" and \"p\"");
    NormSpec s = NormSpec::weighted_lp(exponent_from_json(j.at("p")), j.at("weights").get<std::vector<double>>());
    if (j.contains("dim") && j.at("dim").get<int>() != s.dim())
      throw DimensionMismatch("\"dim\" disagrees with the number of weights");
    return s;
  }
  if (kind == "polyhedral") {
    if (!j.contains("functionals")) throw MalformedInput("polyhedral space needs \"functionals\"");
    NormSpec s = NormSpec::polyhedral(mat_from_json(j.at("functionals"), "functionals"));
    if (j.contains("dim") && j.at("dim").get<int>() != s.dim())
      throw DimensionMismatch("\"dim\" disagrees with the functional length");
    return s;
  }
  throw MalformedInput("unknown space kind \"" + kind + "\"");
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InvalidArgument("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

inline std::size_t line_of_offset(const std::string& text, std::size_t offset) {
  std::size_t line = 1;
  for (std::size_t i = 0; i < offset && i < text.size(); ++i)
    if (text[i] == '\n') ++line;
  return line;
}

inline json parse_text(const std::string& text, const std::string& name) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw MalformedInput(name + ": " + e.what(), line_of_offset(text, e.byte == 0 ? 0 : e.byte - 1));
  }
}

inline NormSpec load_space(const std::string& path) {
  try {
    return space_from_json(parse_text(read_file(path), path));
  } catch (const json::exception& e) {
    throw MalformedInput(path + ": " + e.what());
  }
}

struct SpacePair {
  NormSpec domain;
  NormSpec codomain;
};

/// A space file holds one space (used as domain and codomain) or an object
/// {"domain": ..., "codomain": ...}.
inline SpacePair load_spaces(const std::string& path) {
  try {
    const json j = parse_text(read_file(path), path);
    if (j.is_object() && j.contains("domain")) {
      if (!j.contains("codomain")) throw MalformedInput(path + ": \"domain\" given without \"codomain\"");
      return SpacePair{space_from_json(j.at("domain")), space_from_json(j.at("codomain"))};
    }
    NormSpec s = space_from_json(j);
    return SpacePair{s, s};
  } catch (const json::exception& e) {
    throw MalformedInput(path + ": " + e.what());
  }
}

/// One JSONL record: {"x": [...], "fx": [...]}, optionally with "y"/"fy" for
/// an explicit pair.
struct SampleRecord {
  Sample first;
  std::optional<Sample> second;
};

/// Reads JSONL samples; blank lines are skipped, errors carry the line number.
inline std::vector<SampleRecord> parse_samples(const std::string& text, const NormSpec& domain,
                                               const NormSpec& codomain) {
  std::vector<SampleRecord> out;
  std::istringstream in(text);
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw MalformedInput(e.what(), number);
    }
    try {
      if (!j.is_object() || !j.contains("x") || !j.contains("fx"))
        throw MalformedInput("sample needs \"x\" and \"fx\"", number);
      SampleRecord rec{Sample{vec_from_json(j.at("x"), "x"), vec_from_json(j.at("fx"), "fx")}, std::nullopt};
      if (j.contains("y") != j.contains("fy")) throw MalformedInput("pair needs both \"y\" and \"fy\"", number);
      if (j.contains("y")) rec.second = Sample{vec_from_json(j.at("y"), "y"), vec_from_json(j.at("fy"), "fy")};
      for (const Sample* s : {&rec.first, rec.second ? &*rec.second : nullptr}) {
        if (s == nullptr) continue;
        if (s->x.size() != domain.dim() || s->fx.size() != codomain.dim())
          throw DimensionMismatch("line " + std::to_string(number) + ": sample dimensions (" +
                                  std::to_string(s->x.size()) + ", " + std::to_string(s->fx.size()) +
                                  ") do not match the spaces (" + std::to_string(domain.dim()) + ", " +
                                  std::to_string(codomain.dim()) + ")");
      }
      out.push_back(std::move(rec));
    } catch (const MalformedInput& e) {
      if (e.line() != 0) throw;
      throw MalformedInput(e.what(), number);
    }
  }
  return out;
}

inline std::vector<SampleRecord> load_samples(const std::string& path, const NormSpec& domain,
                                              const NormSpec& codomain) {
  return parse_samples(read_file(path), domain, codomain);
}

inline std::string sample_line(const Sample& s) {
  json j;
  j["x"] = to_json(s.x);
  j["fx"] = to_json(s.fx);
  return j.dump();
}

inline json to_json(const SignAssignment& signs) {
  json out = json::array();
  for (const auto& [key, value] : signs.table()) out.push_back({{"x", to_json(key_point(key))}, {"sign", value}});
  return out;
}

inline json tolerances_to_json(const Tolerances& tol) {
  return {{"rel", tol.rel},
          {"finite_difference", tol.finite_difference},
          {"zero", tol.zero},
          {"collinearity", tol.collinearity},
          {"recovery", tol.recovery}};
}

inline json to_json(const DecompositionCertificate& cert) {
  json out;
  out["route"] = to_string(cert.route);
  out["T"] = to_json(cert.T);
  out["sign_table"] = to_json(cert.sign_table);
  out["residual_max"] = cert.residual_max;
  out["verified_pairs"] = cert.verified_pairs;
  out["max_equation_discrepancy"] = cert.max_equation_discrepancy;
  out["queries"] = cert.queries.size();
  out["surjectivity"] = cert.declared_surjective ? "declared" : "forced";
  out["tolerances"] = tolerances_to_json(cert.tol);
  out["transcript"] = cert.transcript;
  return out;
}

inline json to_json(const FunctionalRecovery& rec) {
  json out;
  out["phi"] = to_json(rec.phi.coords);
  out["x_star"] = to_json(rec.x_star.coords);
  out["exposing_point"] = to_json(rec.exposing_point);
  out["schedule"] = rec.schedule;
  out["stabilized_at"] = rec.stabilized_at;
  out["signs"] = rec.signs;
  out["max_defect"] = rec.max_defect;
  json samples = json::array();
  for (const Vec& x : rec.samples) samples.push_back(to_json(x));
  out["samples"] = samples;
  return out;
}

inline json to_json(const EquationReport& report, const std::vector<PointPair>& pairs, bool failures_only) {
  json out;
  out["pairs"] = report.pairs.size();
  out["max_discrepancy"] = report.max_discrepancy;
  out["all_pass"] = report.all_pass();
  json verdicts = json::array();
  for (std::size_t i = 0; i < report.pairs.size(); ++i) {
    const PairVerdict& v = report.pairs[i];
    if (failures_only && v.pass) continue;
    verdicts.push_back({{"x", to_json(pairs[i].first)},
                        {"y", to_json(pairs[i].second)},
                        {"pass", v.pass},
                        {"discrepancy", v.discrepancy}});
  }
  out[failures_only ? "failures" : "verdicts"] = verdicts;
  return out;
}

}  // namespace io
}  // namespace phaseiso
