#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "ervcg/scoring.hpp"

#include <cmath>

using namespace ervcg;

namespace {

VectorXd belief1(double p)
{
  VectorXd v(1);
  v[0] = p;
  return v;
}

}  // namespace

TEST_CASE("standard rule scores")
{
  const ScoringRule quad = make_standard_rule(RuleKind::Quadratic, 1);
  CHECK(quad.score(1, belief1(0.5)) == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(quad.score(0, belief1(0.5)) == doctest::Approx(1.5).epsilon(1e-12));

  const ScoringRule sph = make_standard_rule(RuleKind::Spherical, 1);
  CHECK(sph.score(1, belief1(0.5)) == doctest::Approx(0.7071067811865476).epsilon(1e-12));

  const ScoringRule log_rule = make_standard_rule(RuleKind::Logarithmic, 1);
  CHECK_FALSE(log_rule.bounded);

  CHECK_THROWS_AS(make_standard_rule(RuleKind::Quadratic, 0), DomainError);
}

TEST_CASE("expected score")
{
  const ScoringRule quad = make_standard_rule(RuleKind::Quadratic, 1);
  CHECK(score_utility(quad, belief1(0.7), belief1(0.7)) == doctest::Approx(1.58).epsilon(1e-12));
  CHECK(score_utility(quad, belief1(0.7), belief1(0.5)) == doctest::Approx(1.50).epsilon(1e-12));

  VectorXd bad(1);
  bad[0] = 1.2;
  CHECK_THROWS_AS(score_utility(quad, bad, belief1(0.5)), DomainError);
  bad[0] = -0.1;
  CHECK_THROWS_AS(score_utility(quad, belief1(0.5), bad), DomainError);
}

TEST_CASE("properness: truthful report maximizes the expected score")
{
  for (RuleKind kind : {RuleKind::Quadratic, RuleKind::Spherical}) {
    const ScoringRule rule = make_standard_rule(kind, 1);
    const auto grid = simplex_grid(1, 0.05);
    for (size_t b = 0; b < grid.size(); ++b) {
      size_t best = 0;
      double best_u = -kInfinity;
      for (size_t r = 0; r < grid.size(); ++r) {
        const double u = score_utility(rule, grid[b], grid[r]);
        if (u > best_u) {
          best_u = u;
          best = r;
        }
      }
      CHECK(best == b);
    }
  }
}

TEST_CASE("bounding constants of the standard rules")
{
  const auto quad = bounding_constants(make_standard_rule(RuleKind::Quadratic, 1), 0.05);
  CHECK(quad.c0 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(quad.c == doctest::Approx(4.0).epsilon(1e-12));

  const auto sph = bounding_constants(make_standard_rule(RuleKind::Spherical, 1), 0.05);
  CHECK(sph.c0 == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(sph.c == doctest::Approx(2.0).epsilon(1e-12));

  CHECK_THROWS_AS(bounding_constants(make_standard_rule(RuleKind::Logarithmic, 1), 0.05),
                  UnboundedScore);

  // two events: C0 = 2 at the corners, C = max 6 - 6 p0 = 6
  const auto quad2 = bounding_constants(make_standard_rule(RuleKind::Quadratic, 2), 0.1);
  CHECK(quad2.c0 == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(quad2.c == doctest::Approx(6.0).epsilon(1e-12));
}

TEST_CASE("divergence heuristic catches a pole that is finite on the closed simplex")
{
  // 1/p0 away from the boundary, patched to 0 on it: every closed grid sees
  // finite values but the maxima double under refinement.
  const ScoringRule pole = make_custom_rule(1, true, [](int i, const VectorXd& free) {
    if (i == 0) return 0.0;
    const double p0 = 1.0 - free.sum();
    return p0 > 0.0 ? 1.0 / p0 : 0.0;
  });
  CHECK_THROWS_AS(bounding_constants(pole, 0.1), UnboundedScore);
}

TEST_CASE("mechanism to rule preserves utilities")
{
  const AlternativeMechanism lin = single_to_alternative(make_linear_mechanism(0.0, 1.0));
  const ScoringRule rule = mechanism_to_rule(lin);

  CHECK(rule.score(1, belief1(0.5)) == doctest::Approx(0.375).epsilon(1e-12));
  CHECK(rule.score(0, belief1(0.5)) == doctest::Approx(-0.125).epsilon(1e-12));
  CHECK(score_utility(rule, belief1(0.5), belief1(0.5)) == doctest::Approx(0.125).epsilon(1e-12));

  const auto grid = simplex_grid(1, 0.05);
  for (const VectorXd& p : grid) {
    for (const VectorXd& pt : grid) {
      CHECK(score_utility(rule, p, pt) ==
            doctest::Approx(alternative_utility(lin, p, pt)).epsilon(1e-14));
    }
  }

  // all-zero mechanism maps to the all-zero rule
  AlternativeMechanism null_mech;
  null_mech.n = 1;
  null_mech.alloc = [](int, const VectorXd&) { return 0.0; };
  null_mech.payment = [](const VectorXd&) { return 0.0; };
  const ScoringRule null_rule = mechanism_to_rule(null_mech);
  CHECK(null_rule.score(0, belief1(0.3)) == 0.0);
  CHECK(null_rule.score(1, belief1(0.3)) == 0.0);
}

TEST_CASE("rule to mechanism: quadratic gives the linear mechanism")
{
  const AlternativeMechanism m =
      rule_to_mechanism(make_standard_rule(RuleKind::Quadratic, 1), 0.01);
  const auto grid = simplex_grid(1, 0.01);
  for (const VectorXd& x : grid) {
    CHECK(m.alloc(1, x) == doctest::Approx(x[0]).epsilon(1e-12));
    CHECK(m.payment(x) == doctest::Approx(0.5 * x[0] * x[0]).epsilon(1e-12));
  }

  // truthfulness on the report grid
  for (const VectorXd& x : grid) {
    double best_u = -kInfinity;
    VectorXd best;
    for (const VectorXd& r : grid) {
      const double u = alternative_utility(m, x, r);
      if (u > best_u) {
        best_u = u;
        best = r;
      }
    }
    CHECK(best[0] == doctest::Approx(x[0]).epsilon(1e-12));
  }

  const Mechanism single = alternative_to_single(m);
  CHECK(strong_truth_modulus(single, 0.01).m == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(check_monotone(single, 0.01).monotone);
}

TEST_CASE("rule to mechanism: spherical closed form")
{
  const AlternativeMechanism m =
      rule_to_mechanism(make_standard_rule(RuleKind::Spherical, 1), 0.01);
  const auto grid = simplex_grid(1, 0.01);
  for (const VectorXd& x : grid) {
    const double v = x[0];
    const double expected = 0.5 + (2.0 * v - 1.0) / (2.0 * std::hypot(v, 1.0 - v));
    CHECK(m.alloc(1, x) == doctest::Approx(expected).epsilon(1e-9));
  }
}

TEST_CASE("rule to mechanism error paths")
{
  CHECK_THROWS_AS(rule_to_mechanism(make_standard_rule(RuleKind::Logarithmic, 1), 0.05),
                  UnboundedScore);
  const ScoringRule constant =
      make_custom_rule(1, true, [](int, const VectorXd&) { return 0.0; });
  CHECK_THROWS_AS(rule_to_mechanism(constant, 0.05), TrivialRule);
}

TEST_CASE("allocation feasibility of converted rules")
{
  for (int n : {1, 2}) {
    for (RuleKind kind : {RuleKind::Quadratic, RuleKind::Spherical}) {
      const AlternativeMechanism m = rule_to_mechanism(make_standard_rule(kind, n), 0.05);
      for (const VectorXd& x : simplex_grid(n, 0.05)) {
        double sum = 0.0;
        for (int i = 1; i <= n; ++i) {
          const double a = m.alloc(i, x);
          CHECK(a >= -1e-12);
          CHECK(a <= 1.0 + 1e-12);
          sum += a;
        }
        CHECK(sum <= 1.0 + 1e-12);
      }
    }
  }
}

TEST_CASE("strong properness modulus")
{
  const auto quad = strong_properness_modulus(make_standard_rule(RuleKind::Quadratic, 1), 0.01);
  CHECK(quad.summary == doctest::Approx(4.0).epsilon(1e-9));

  // spherical gap at (p, pt) = (0.5, 0.6), hand-computed from the norms
  const ScoringRule sph = make_standard_rule(RuleKind::Spherical, 1);
  const double gap =
      score_utility(sph, belief1(0.5), belief1(0.5)) - score_utility(sph, belief1(0.5), belief1(0.6));
  CHECK(gap == doctest::Approx(0.0137315359).epsilon(1e-7));

  const ScoringRule constant =
      make_custom_rule(1, true, [](int, const VectorXd&) { return 0.0; });
  CHECK(strong_properness_modulus(constant, 0.05).summary == doctest::Approx(0.0));

  CHECK_THROWS_AS(strong_properness_modulus(make_standard_rule(RuleKind::Logarithmic, 1), 0.05),
                  UnboundedScore);
}

TEST_CASE("modulus transport through the translation")
{
  // quadratic: 4 / C = 1 exactly
  const auto quad_rule = make_standard_rule(RuleKind::Quadratic, 1);
  const auto quad_mech = rule_to_mechanism(quad_rule, 0.01);
  const double m_rule = strong_properness_modulus(quad_rule, 0.01).summary;
  const double m_mech = strong_truth_modulus(alternative_to_single(quad_mech), 0.01).m;
  CHECK(m_mech == doctest::Approx(m_rule / 4.0).epsilon(1e-9));

  // spherical: only the ratio is pinned (modulus is half the rule's)
  const auto sph_rule = make_standard_rule(RuleKind::Spherical, 1);
  const auto sph_mech = rule_to_mechanism(sph_rule, 0.01);
  const double s_rule = strong_properness_modulus(sph_rule, 0.01).summary;
  const double s_mech = strong_truth_modulus(alternative_to_single(sph_mech), 0.01).m;
  CHECK(s_rule > 0.0);
  CHECK(s_mech == doctest::Approx(s_rule / 2.0).epsilon(1e-6));
}

TEST_CASE("round trip scales utility differences by C")
{
  for (RuleKind kind : {RuleKind::Quadratic, RuleKind::Spherical}) {
    const ScoringRule rule = make_standard_rule(kind, 1);
    const double c = bounding_constants(rule, 0.05).c;
    const ScoringRule back = mechanism_to_rule(rule_to_mechanism(rule, 0.05));
    const auto grid = simplex_grid(1, 0.05);
    for (const VectorXd& p : grid) {
      const double truth_orig = score_utility(rule, p, p);
      const double truth_back = score_utility(back, p, p);
      for (const VectorXd& pt : grid) {
        const double d_orig = truth_orig - score_utility(rule, p, pt);
        const double d_back = truth_back - score_utility(back, p, pt);
        CHECK(d_back == doctest::Approx(d_orig / c).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("simplex grid")
{
  CHECK(simplex_grid(1, 0.25).size() == 5);
  const auto g2 = simplex_grid(2, 0.5);
  CHECK(g2.size() == 6);  // (0,0) (0,.5) (0,1) (.5,0) (.5,.5) (1,0)
  for (const VectorXd& p : g2) CHECK(valid_belief(p));
  // inset grid stays away from every face
  for (const VectorXd& p : simplex_grid(2, 0.25, 0.25)) {
    CHECK(p.minCoeff() >= 0.25 - 1e-12);
    CHECK(1.0 - p.sum() >= 0.25 - 1e-12);
  }
}
