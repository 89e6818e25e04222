#include "oracles.hpp"

#include <phaseiso/phase_map.hpp>

#include <gtest/gtest.h>

#include <thread>

using namespace phaseiso;

namespace {

NormSpec l(int n, double p) { return NormSpec::lp(n, Exponent(p)); }
NormSpec linf(int n) { return NormSpec::lp(n, Exponent::infinity()); }

std::vector<PointPair> random_pairs(int n, int count, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<PointPair> pairs;
  for (int k = 0; k < count; ++k) pairs.emplace_back(rng.gaussian_vector(n), rng.gaussian_vector(n));
  return pairs;
}

bool is_signed_permutation(const Mat& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    int nonzero = 0;
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      if (m(i, j) == 0.0) continue;
      if (std::abs(m(i, j)) != 1.0) return false;
      ++nonzero;
    }
    if (nonzero != 1) return false;
  }
  return (m.cwiseAbs().colwise().sum().array() == 1.0).all() && (m.cwiseAbs().rowwise().sum().array() == 1.0).all();
}

}  // namespace

TEST(PointKey, RoundTripAndLimits) {
  const Vec x{{0.25, -3.5, 1e-13}};
  const PointKey k = point_key(x);
  EXPECT_EQ(k, point_key(Vec{{0.25, -3.5, 0.0}}));
  EXPECT_NEAR((key_point(k) - Vec{{0.25, -3.5, 0.0}}).norm(), 0.0, 1e-15);
  EXPECT_THROW(point_key(Vec{{1e7}}), InvalidArgument);
  EXPECT_EQ(key_string(point_key(Vec{{1, -2}})), "[1,-2]");
}

TEST(CanonicalSign, FirstNonzeroPositive) {
  EXPECT_EQ(canonical_sign(Vec{{0, -2, 1}}), (Vec{{0, 2, -1}}));
  EXPECT_EQ(canonical_sign(Vec{{0, 2, -1}}), (Vec{{0, 2, -1}}));
}

TEST(Oracle, LogsAndMemoizes) {
  int calls = 0;
  PhaseMapOracle f(l(2, 2.0), l(2, 2.0), [&calls](const Vec& x) -> Vec {
    ++calls;
    return 2 * x;
  });
  f(Vec{{1, 2}});
  f(Vec{{1, 2}});
  f(Vec{{3, 4}});
  EXPECT_EQ(calls, 2);
  EXPECT_EQ(f.query_count(), 2u);
  EXPECT_THROW(f(Vec::Ones(3)), DimensionMismatch);
}

TEST(Oracle, TableModeReportsMissingPoints) {
  const PhaseMapOracle f = PhaseMapOracle::from_table(l(2, 1.0), l(2, 1.0), {Sample{Vec{{1, 0}}, Vec{{0, 1}}}});
  EXPECT_TRUE(f.is_table());
  EXPECT_EQ(f(Vec{{1, 0}}), (Vec{{0, 1}}));
  try {
    f(Vec{{0, 1}});
    FAIL() << "expected MissingSample";
  } catch (const MissingSample& e) {
    ASSERT_EQ(e.missing().size(), 1u);
    EXPECT_EQ(e.missing()[0], (Vec{{0, 1}}));
  }
}

TEST(Oracle, ConcurrentQueriesAreSafe) {
  const auto g = generate_phase_isometry(generate_isometry(l(4, 2.0), 3), 4);
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t) {
    threads.emplace_back([&, t] {
      Rng rng(static_cast<std::uint64_t>(t));
      for (int k = 0; k < 200; ++k) g.oracle(rng.lattice_vector(4, 3));
    });
  }
  for (auto& th : threads) th.join();
  for (const Sample& s : g.oracle.query_log()) EXPECT_EQ(g.oracle(s.x), s.fx);
}

TEST(PhaseEquation, IdentityPassesExactly) {
  const auto report = check_phase_equation(fixtures::identity_map(l(2, 2.0)), random_pairs(2, 100, 1));
  EXPECT_TRUE(report.all_pass());
  EXPECT_EQ(report.max_discrepancy, 0.0);
}

TEST(PhaseEquation, SineCurvePasses) {
  const PhaseMapOracle f = fixtures::sine_curve_map();
  const auto report = check_phase_equation(f, random_pairs(1, 500, 2));
  EXPECT_TRUE(report.all_pass());
  EXPECT_LE(report.max_discrepancy, 1e-10);
}

TEST(PhaseEquation, ShiftFailsOnZeroPair) {
  const auto report =
      check_phase_equation(fixtures::shift_map(l(2, 2.0), Vec{{1, 0}}), {PointPair{Vec::Zero(2), Vec::Zero(2)}});
  ASSERT_FALSE(report.all_pass());
  EXPECT_EQ(*report.first_failure, 0u);
  EXPECT_NEAR(report.max_discrepancy, 2.0, 1e-15);
}

TEST(PhaseEquation, GeneratedOraclesMatchReferenceNorms) {
  for (const NormSpec& s : {l(3, 1.0), l(4, 2.0), linf(3), l(3, 3.0)}) {
    const auto g = generate_phase_isometry(generate_isometry(s, 10), 11);
    const auto pairs = random_pairs(s.dim(), 300, 12);
    const auto report = check_phase_equation(g.oracle, pairs);
    EXPECT_TRUE(report.all_pass()) << s.describe();
    EXPECT_LE(report.max_discrepancy, 1e-10);
    // Independent evaluation with textbook norms.
    const double p = s.p().is_infinite() ? std::numeric_limits<double>::infinity() : s.p().value();
    for (const auto& [x, y] : pairs) {
      const Vec fx = g.oracle(x), fy = g.oracle(y);
      EXPECT_LE(oracle::multiset_gap(oracle::lp(fx + fy, p), oracle::lp(fx - fy, p), oracle::lp(x + y, p),
                                     oracle::lp(x - y, p)),
                1e-10);
    }
  }
}

TEST(WignerEquation, Examples) {
  const auto g = generate_phase_isometry(generate_isometry(l(3, 2.0), 5), 6);
  EXPECT_TRUE(check_wigner_equation(g.oracle, random_pairs(3, 200, 7)).all_pass());

  const PhaseMapOracle twice(l(2, 2.0), l(2, 2.0), [](const Vec& x) -> Vec { return 2 * x; });
  const Vec e1 = Vec::Unit(2, 0);
  EXPECT_FALSE(check_wigner_equation(twice, {PointPair{e1, e1}}).all_pass());

  const auto abs_report = check_wigner_equation(fixtures::abs_map(l(2, 2.0)), {PointPair{Vec{{1, 1}}, Vec{{1, -1}}}});
  EXPECT_FALSE(abs_report.all_pass());
  EXPECT_NEAR(abs_report.max_discrepancy, 2.0, 1e-15);

  EXPECT_THROW(check_wigner_equation(fixtures::identity_map(l(2, 1.0)), {}), InvalidSpace);
}

TEST(WignerEquation, EquivalentToPhaseEquationInEuclideanSpace) {
  const auto g = generate_phase_isometry(generate_isometry(l(4, 2.0), 21), 22);
  const auto pairs = random_pairs(4, 200, 23);
  EXPECT_EQ(check_wigner_equation(g.oracle, pairs).all_pass(), check_phase_equation(g.oracle, pairs).all_pass());
}

TEST(PhaseInvariants, EvenGeneratedOraclesPass) {
  Rng rng(40);
  for (const NormSpec& s : {l(3, 1.0), l(3, 2.0), linf(4)}) {
    const auto g = generate_phase_isometry(generate_isometry(s, 41), 42, true);
    std::vector<Vec> xs;
    for (int k = 0; k < 100; ++k) xs.push_back(rng.gaussian_vector(s.dim()));
    EXPECT_TRUE(phase_invariants(g.oracle, xs, true).all_pass()) << s.describe();
  }
}

TEST(PhaseInvariants, UnevenSignFailsOddnessAtWitness) {
  const NormSpec s = l(3, 2.0);
  const Vec x0{{0.5, -1.0, 2.0}};
  SignPolicy policy;
  policy.even = false;
  policy.overrides = {{x0, -1}, {Vec(-x0), 1}};
  const auto g = generate_phase_isometry(generate_isometry(s, 1), 2, policy);
  const InvariantReport r = phase_invariants(g.oracle, {x0}, true);
  EXPECT_TRUE(r.norm_preserving);
  EXPECT_TRUE(r.sign_symmetric);
  EXPECT_FALSE(r.odd);
  ASSERT_TRUE(r.odd_witness);
  EXPECT_EQ(*r.odd_witness, x0);
}

TEST(PhaseInvariants, SignFlipIsPhaseIsometryButNotIsometry) {
  const NormSpec s = l(2, 2.0);
  const Vec x0{{1, 0}};
  const PhaseMapOracle f = fixtures::sign_flip_map(s, x0);
  Rng rng(50);
  std::vector<Vec> xs{x0, Vec(-x0)};
  for (int k = 0; k < 50; ++k) xs.push_back(rng.gaussian_vector(2));
  EXPECT_TRUE(phase_invariants(f, xs, true).all_pass());
  std::vector<PointPair> pairs;
  for (const Vec& x : xs)
    for (const Vec& y : xs) pairs.emplace_back(x, y);
  EXPECT_TRUE(check_phase_equation(f, pairs).all_pass());
  // Not an isometry: the distance from x0 to 2 x0 triples.
  const Vec y{{2, 0}};
  EXPECT_NEAR(norm(s, f(x0) - f(y)), 3.0, 1e-15);
  EXPECT_NEAR(norm(s, x0 - y), 1.0, 1e-15);
}

TEST(Generator, IsometryShapes) {
  const LinearMap t1 = generate_isometry(l(3, 1.0), 7);
  EXPECT_TRUE(is_signed_permutation(t1.matrix));
  EXPECT_TRUE(t1.isometric);
  Rng rng(1);
  for (int k = 0; k < 100; ++k) {
    const Vec x = rng.gaussian_vector(3);
    EXPECT_NEAR(oracle::lp(t1(x), 1.0), oracle::lp(x, 1.0), 1e-12);
  }
  const LinearMap t2 = generate_isometry(l(2, 2.0), 7);
  EXPECT_LE((t2.matrix.transpose() * t2.matrix - Mat::Identity(2, 2)).cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_TRUE(is_signed_permutation(generate_isometry(linf(4), 9).matrix));

  const NormSpec weighted = NormSpec::weighted_lp(Exponent(3.0), {1.0, 2.0, 5.0});
  const LinearMap tw = generate_isometry(weighted, 11);
  EXPECT_TRUE(tw.isometric);
  for (int k = 0; k < 100; ++k) {
    const Vec x = rng.gaussian_vector(3);
    EXPECT_NEAR(oracle::weighted_lp(tw(x), 3.0, {1.0, 2.0, 5.0}), oracle::weighted_lp(x, 3.0, {1.0, 2.0, 5.0}),
                1e-12);
  }
}

TEST(Generator, ConstantSignEqualsT) {
  SignPolicy policy;
  policy.constant = 1;
  const auto g = generate_phase_isometry(generate_isometry(l(3, 2.0), 3), 4, policy);
  Rng rng(5);
  for (int k = 0; k < 20; ++k) {
    const Vec x = rng.gaussian_vector(3);
    EXPECT_EQ(g.oracle(x), g.T(x));
  }
}

TEST(Generator, SignsVaryAlongRaysAndAreEven) {
  const auto g = generate_phase_isometry(generate_isometry(l(3, 2.0), 3), 4, true);
  const Vec x{{0.3, -1.2, 0.7}};
  int plus = 0;
  for (int k = 1; k <= 40; ++k) {
    const Vec tx = (0.25 * k) * x;
    EXPECT_EQ(g.epsilon(tx), g.epsilon(Vec(-tx)));
    plus += g.epsilon(tx) == 1;
  }
  EXPECT_GT(plus, 5);
  EXPECT_LT(plus, 35);
}

TEST(Generator, Deterministic) {
  const auto a = generate_phase_isometry(generate_isometry(l(4, 1.0), 99), 100);
  const auto b = generate_phase_isometry(generate_isometry(l(4, 1.0), 99), 100);
  EXPECT_EQ(a.T.matrix, b.T.matrix);
  Rng rng(1);
  for (int k = 0; k < 50; ++k) {
    const Vec x = rng.gaussian_vector(4);
    EXPECT_EQ(a.epsilon(x), b.epsilon(x));
  }
}

TEST(Generator, PolyhedralFallsBackWithWarning) {
  Mat rows(2, 2);
  rows << 1, 1, 1, -1;
  const LinearMap t = generate_isometry(NormSpec::polyhedral(rows), 1);
  EXPECT_FALSE(t.warning.empty());
  EXPECT_EQ(t.matrix, Mat::Identity(2, 2));
}
