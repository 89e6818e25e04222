#include "oracles.hpp"

#include <phaseiso/rng.hpp>
#include <phaseiso/space.hpp>

#include <gtest/gtest.h>

using namespace phaseiso;

namespace {

NormSpec l(int n, double p) { return NormSpec::lp(n, Exponent(p)); }
NormSpec linf(int n) { return NormSpec::lp(n, Exponent::infinity()); }

Mat diamond_rows() {
  Mat a(2, 2);
  a << 1, 1, 1, -1;
  return a;
}

Mat hexagon_rows() {
  Mat a(3, 2);
  a << 1, 0, 0.5, 0.8, -0.5, 0.8;
  return a;
}

std::vector<NormSpec> sample_spaces() {
  return {l(3, 1.0),
          l(3, 2.0),
          l(4, 1.5),
          l(3, 3.0),
          linf(3),
          NormSpec::weighted_lp(Exponent(2.0), {1.0, 4.0, 0.25}),
          NormSpec::weighted_lp(Exponent(1.0), {2.0, 0.5, 1.0}),
          NormSpec::weighted_lp(Exponent::infinity(), {1.0, 3.0}),
          NormSpec::polyhedral(hexagon_rows())};
}

oracle::NormFn reference_norm(const NormSpec& s) {
  switch (s.kind()) {
    case NormKind::lp: {
      const double p = s.p().is_infinite() ? std::numeric_limits<double>::infinity() : s.p().value();
      return [p](const Vec& x) { return oracle::lp(x, p); };
    }
    case NormKind::weighted_lp: {
      const double p = s.p().is_infinite() ? std::numeric_limits<double>::infinity() : s.p().value();
      return [p, w = s.weights()](const Vec& x) { return oracle::weighted_lp(x, p, w); };
    }
    case NormKind::polyhedral:
      return [a = s.functionals()](const Vec& x) { return oracle::polyhedral(x, a); };
  }
  return {};
}

/// Plain lp with 1 < p < 2 is C^1 but not C^2 where a coordinate vanishes, so
/// difference quotients converge like h^(p-1) there. Those cases use the gradient.
bool rough_lp(const NormSpec& s) {
  return s.kind() == NormKind::lp && !s.p().is_infinite() && s.p().value() > 1.0 && s.p().value() < 2.0;
}

}  // namespace

TEST(Norm, ClosedFormValues) {
  EXPECT_DOUBLE_EQ(norm(l(2, 1.0), Vec{{3, -4}}), 7.0);
  EXPECT_DOUBLE_EQ(norm(linf(2), Vec{{3, -4}}), 4.0);
  EXPECT_DOUBLE_EQ(norm(NormSpec::polyhedral(diamond_rows()), Vec{{1, 0}}), 1.0);
  EXPECT_DOUBLE_EQ(norm(l(2, 2.0), Vec{{3, -4}}), 5.0);
}

TEST(Norm, RejectsBadInput) {
  EXPECT_THROW(NormSpec::lp(3, Exponent(0.5)), InvalidSpace);
  EXPECT_THROW(NormSpec::lp(0, Exponent(2.0)), InvalidSpace);
  EXPECT_THROW(NormSpec::weighted_lp(Exponent(2.0), {1.0, -1.0}), InvalidSpace);
  Mat degenerate(2, 2);
  degenerate << 1, 0, 2, 0;
  EXPECT_THROW(NormSpec::polyhedral(degenerate), InvalidSpace);
  EXPECT_THROW(norm(l(3, 2.0), Vec::Ones(2)), DimensionMismatch);
}

TEST(Norm, MatchesReferenceAndNormAxioms) {
  Rng rng(101);
  for (const NormSpec& s : sample_spaces()) {
    const auto ref = reference_norm(s);
    for (int k = 0; k < 200; ++k) {
      const Vec x = rng.gaussian_vector(s.dim());
      const Vec y = rng.gaussian_vector(s.dim());
      const double a = rng.uniform(-3.0, 3.0);
      EXPECT_NEAR(norm(s, x), ref(x), 1e-12 * (1 + ref(x))) << s.describe();
      EXPECT_NEAR(norm(s, Vec(a * x)), std::abs(a) * norm(s, x), 1e-12 * (1 + norm(s, x)));
      EXPECT_LE(norm(s, x + y), norm(s, x) + norm(s, y) + 1e-12);
      EXPECT_GT(norm(s, x), 0.0);
    }
  }
}

TEST(DualNorm, LpUsesConjugateExponent) {
  EXPECT_NEAR(dual_norm(l(3, 1.0), Functional{Vec{{0.5, -1, 0.25}}}), 1.0, 1e-15);
  EXPECT_NEAR(dual_norm(linf(3), Functional{Vec{{0.5, -1, 0.25}}}), 1.75, 1e-15);
  EXPECT_NEAR(dual_norm(l(2, 2.0), Functional{Vec{{3, 4}}}), 5.0, 1e-12);
}

TEST(DualNorm, PolyhedralMatchesVertexMaximum) {
  Rng rng(7);
  for (const Mat& rows : {diamond_rows(), hexagon_rows()}) {
    const NormSpec s = NormSpec::polyhedral(rows);
    for (int k = 0; k < 100; ++k) {
      const Vec f = rng.gaussian_vector(2);
      EXPECT_NEAR(dual_norm(s, Functional{f}), oracle::polyhedral_dual(f, rows), 1e-10);
    }
  }
}

TEST(DualNorm, FunctionalBoundHolds) {
  Rng rng(8);
  for (const NormSpec& s : sample_spaces()) {
    for (int k = 0; k < 100; ++k) {
      const Functional f{rng.gaussian_vector(s.dim())};
      const Vec x = rng.gaussian_vector(s.dim());
      EXPECT_LE(std::abs(f(x)), dual_norm(s, f) * norm(s, x) + 1e-10) << s.describe();
    }
  }
}

TEST(DirectionalDerivative, ClosedFormExamples) {
  EXPECT_NEAR(directional_derivative(l(2, 2.0), Vec{{1, 0}}, Vec{{0, 1}}), 0.0, 1e-15);
  EXPECT_NEAR(directional_derivative(l(2, 2.0), Vec{{1, 0}}, Vec{{1, 1}}), 1.0, 1e-15);
  EXPECT_NEAR(directional_derivative(l(2, 1.0), Vec{{1, 0}}, Vec{{0, 1}}), 1.0, 1e-15);
  EXPECT_NEAR(directional_derivative(l(2, 1.0), Vec{{1, 0}}, Vec{{0, -1}}), 1.0, 1e-15);
  EXPECT_THROW(directional_derivative(l(2, 1.0), Vec{{2, 0}}, Vec{{0, 1}}), InvalidArgument);
}

TEST(DirectionalDerivative, AgreesWithFiniteDifferenceOracle) {
  Rng rng(31);
  for (const NormSpec& s : sample_spaces()) {
    const auto ref = reference_norm(s);
    for (int k = 0; k < 100; ++k) {
      // Lattice points make non-smooth points common in the polyhedral kinds.
      Vec u = k % 2 == 0 ? rng.gaussian_vector(s.dim()) : Vec(rng.lattice_vector(s.dim(), 2));
      if (u.isZero()) u[0] = 1.0;
      u /= norm(s, u);
      const Vec x = rng.gaussian_vector(s.dim());
      const double exact = directional_derivative(s, u, x);
      if (rough_lp(s)) {
        EXPECT_NEAR(exact, oracle::lp_gradient(u, s.p().value()).dot(x), 1e-12) << s.describe();
        EXPECT_NEAR(exact, finite_difference_derivative(s, u, x), 5e-3) << s.describe();
      } else {
        EXPECT_NEAR(exact, oracle::one_sided_derivative(ref, u, x), 1e-6) << s.describe();
        EXPECT_NEAR(exact, finite_difference_derivative(s, u, x), 1e-6) << s.describe();
      }
      // M_u is sublinear and bounded by the norm.
      EXPECT_LE(std::abs(exact), norm(s, x) + 1e-12);
      EXPECT_NEAR(directional_derivative(s, u, u), 1.0, 1e-12);
    }
  }
}

TEST(SupportSet, Examples) {
  const NormSpec l1 = l(2, 1.0);
  const SupportDescription full = support_set(l1, Vec{{1, 1}});
  EXPECT_TRUE(full.is_smooth);
  EXPECT_EQ(full.kind, SupportDescription::Kind::singleton);
  EXPECT_NEAR((full.witness.coords - Vec{{1, 1}}).norm(), 0.0, 1e-15);

  const SupportDescription edge = support_set(l1, Vec{{1, 0}});
  EXPECT_FALSE(edge.is_smooth);
  EXPECT_EQ(edge.kind, SupportDescription::Kind::face);
  EXPECT_NEAR(edge.witness.coords[0], 1.0, 1e-15);
  EXPECT_LE(std::abs(edge.witness.coords[1]), 1.0);

  const SupportDescription smooth = support_set(l(3, 3.0), Vec{{1, 1, 1}});
  EXPECT_TRUE(smooth.is_smooth);
  EXPECT_NEAR((smooth.witness.coords - oracle::lp_gradient(Vec{{1, 1, 1}}, 3.0)).norm(), 0.0, 1e-12);

  EXPECT_THROW(support_set(l1, Vec::Zero(2)), InvalidArgument);
}

TEST(SupportSet, WitnessNormsThePoint) {
  Rng rng(5);
  for (const NormSpec& s : sample_spaces()) {
    for (int k = 0; k < 100; ++k) {
      Vec x = k % 2 == 0 ? rng.gaussian_vector(s.dim()) : Vec(rng.lattice_vector(s.dim(), 2));
      if (x.isZero()) continue;
      const SupportDescription d = support_set(s, x);
      EXPECT_NEAR(dual_norm(s, d.witness), 1.0, 1e-10) << s.describe();
      EXPECT_NEAR(d.witness(x), norm(s, x), 1e-10 * (1 + norm(s, x))) << s.describe();
      EXPECT_EQ(d.is_smooth, is_smooth_point(s, x));
    }
  }
}

TEST(SupportSet, SmoothnessMatchesTwoSidedDerivatives) {
  // Smooth iff M_u(y) = -M_u(-y) for every y; probe with the coordinate axes.
  Rng rng(6);
  for (const NormSpec& s : sample_spaces()) {
    const auto ref = reference_norm(s);
    for (int k = 0; k < 60; ++k) {
      Vec x = rng.lattice_vector(s.dim(), 2);
      if (x.isZero()) continue;
      x /= norm(s, x);
      // Every lp norm with 1 < p < infinity is smooth away from 0.
      bool two_sided = true;
      if (rough_lp(s)) {
        EXPECT_TRUE(is_smooth_point(s, x)) << s.describe();
        continue;
      }
      for (int i = 0; i < s.dim(); ++i) {
        Vec e = Vec::Zero(s.dim());
        e[i] = 1.0;
        const double right = oracle::one_sided_derivative(ref, x, e);
        const double left = -oracle::one_sided_derivative(ref, x, Vec(-e));
        if (right - left > 1e-5) two_sided = false;
      }
      EXPECT_EQ(is_smooth_point(s, x), two_sided) << s.describe() << " at " << x.transpose();
    }
  }
}

TEST(Exposure, L1Examples) {
  const NormSpec l1 = l(3, 1.0);
  const Exposure yes = is_w_star_exposed(l1, Functional{Vec{{1, 1, -1}}});
  ASSERT_TRUE(yes.exposed);
  EXPECT_NEAR((yes.exposing_point - Vec{{1, 1, -1}} / 3.0).norm(), 0.0, 1e-15);
  const Exposure no = is_w_star_exposed(l1, Functional{Vec{{1, 1, 0}}});
  EXPECT_FALSE(no.exposed);
  EXPECT_FALSE(no.diagnosis.empty());
}

TEST(Exposure, EuclideanUnitFunctionalsAreExposed) {
  Rng rng(12);
  for (int n : {1, 2, 5}) {
    for (int k = 0; k < 50; ++k) {
      Vec f = rng.gaussian_vector(n);
      f.normalize();
      const Exposure e = is_w_star_exposed(l(n, 2.0), Functional{f});
      ASSERT_TRUE(e.exposed);
      EXPECT_NEAR((e.exposing_point - f).norm(), 0.0, 1e-12);
    }
  }
}

TEST(Exposure, LinfOnlySignedCoordinates) {
  EXPECT_TRUE(is_w_star_exposed(linf(3), Functional{Vec{{0, -1, 0}}}).exposed);
  EXPECT_FALSE(is_w_star_exposed(linf(3), Functional{Vec{{0.5, 0.5, 0}}}).exposed);
}

TEST(Exposure, PolyhedralVerticesOfDualBall) {
  // The dual ball of the diamond norm has vertices +-(1,1), +-(1,-1).
  const NormSpec s = NormSpec::polyhedral(diamond_rows());
  EXPECT_TRUE(is_w_star_exposed(s, Functional{Vec{{1, 1}}}).exposed);
  EXPECT_FALSE(is_w_star_exposed(s, Functional{Vec{{1, 0}}}).exposed);
  EXPECT_THROW(is_w_star_exposed(s, Functional{Vec{{2, 0}}}), InvalidArgument);
}

TEST(Exposure, ExposingPointIsSmoothAndNormed) {
  Rng rng(13);
  for (const NormSpec& s : sample_spaces()) {
    if (!s.is_smooth_space()) continue;
    for (int k = 0; k < 30; ++k) {
      Vec f = rng.gaussian_vector(s.dim());
      f /= dual_norm(s, Functional{f});
      const Exposure e = is_w_star_exposed(s, Functional{f});
      ASSERT_TRUE(e.exposed) << s.describe();
      EXPECT_NEAR(norm(s, e.exposing_point), 1.0, 1e-12);
      EXPECT_NEAR(f.dot(e.exposing_point), 1.0, 1e-10);
      EXPECT_TRUE(is_smooth_point(s, e.exposing_point));
    }
  }
}
