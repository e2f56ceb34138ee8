#include "ervcg/scoring.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ervcg {

namespace {

constexpr double kSimplexTol = 1e-9;

// Full (n+1)-vector including p_0 at the front.
VectorXd with_complement(const VectorXd& free)
{
  VectorXd full(free.size() + 1);
  full[0] = 1.0 - free.sum();
  full.tail(free.size()) = free;
  return full;
}

void append_simplex_points(int coord, double remaining, double step, double inset, VectorXd& work,
                           std::vector<VectorXd>& out)
{
  if (coord == work.size()) {
    out.push_back(work);
    return;
  }
  if (remaining < inset - kSimplexTol) return;
  const auto count = static_cast<Eigen::Index>(
      std::floor((remaining - inset) / step * (1.0 + 1e-12) + kSimplexTol));
  for (Eigen::Index k = 0; k <= count; ++k) {
    work[coord] = std::min(inset + static_cast<double>(k) * step, remaining);
    append_simplex_points(coord + 1, remaining - work[coord], step, inset, work, out);
  }
}

}  // namespace

const char* to_string(RuleKind kind)
{
  switch (kind) {
    case RuleKind::Quadratic: return "quadratic";
    case RuleKind::Spherical: return "spherical";
    case RuleKind::Logarithmic: return "logarithmic";
    case RuleKind::FromMechanism: return "from_mechanism";
    case RuleKind::Custom: return "custom";
  }
  return "unknown";
}

bool valid_belief(const VectorXd& p, double tol)
{
  if (p.size() < 1) return false;
  double sum = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (!std::isfinite(p[i]) || p[i] < -tol) return false;
    sum += p[i];
  }
  return sum <= 1.0 + tol;
}

ScoringRule make_standard_rule(RuleKind kind, int n)
{
  if (n < 1) throw DomainError("scoring rule needs n >= 1 events");
  ScoringRule rule;
  rule.kind = kind;
  rule.n = n;
  switch (kind) {
    case RuleKind::Quadratic:
      rule.score = [](int i, const VectorXd& free) {
        const VectorXd full = with_complement(free);
        return 1.0 + 2.0 * full[i] - full.squaredNorm();
      };
      break;
    case RuleKind::Spherical:
      rule.score = [](int i, const VectorXd& free) {
        const VectorXd full = with_complement(free);
        return full[i] / full.norm();
      };
      break;
    case RuleKind::Logarithmic:
      rule.bounded = false;
      rule.score = [](int i, const VectorXd& free) {
        const VectorXd full = with_complement(free);
        return std::log(full[i]);
      };
      break;
    default:
      throw DomainError("make_standard_rule covers quadratic, spherical, logarithmic");
  }
  return rule;
}

ScoringRule make_custom_rule(int n, bool bounded, ScoreFn score)
{
  if (n < 1) throw DomainError("scoring rule needs n >= 1 events");
  ScoringRule rule;
  rule.kind = RuleKind::Custom;
  rule.n = n;
  rule.bounded = bounded;
  rule.score = std::move(score);
  return rule;
}

double score_utility(const ScoringRule& rule, const VectorXd& belief, const VectorXd& report)
{
  if (belief.size() != rule.n || !valid_belief(belief)) {
    throw DomainError("belief is not a valid point of the n-simplex");
  }
  if (report.size() != rule.n || !valid_belief(report)) {
    throw DomainError("report is not a valid point of the n-simplex");
  }
  double u = (1.0 - belief.sum()) * rule.score(0, report);
  for (int i = 1; i <= rule.n; ++i) u += belief[i - 1] * rule.score(i, report);
  return u;
}

std::vector<VectorXd> simplex_grid(int n, double step, double inset)
{
  if (!(step > 0.0)) throw DomainError("grid step must be positive");
  std::vector<VectorXd> out;
  VectorXd work(n);
  append_simplex_points(0, 1.0 - inset, step, inset, work, out);
  return out;
}

BoundingConstants bounding_constants(const ScoringRule& rule, double grid_step)
{
  auto maxima = [&rule](const std::vector<VectorXd>& grid) {
    BoundingConstants b;
    for (const VectorXd& p : grid) {
      const double s0 = rule.score(0, p);
      for (int i = 1; i <= rule.n; ++i) {
        const double d = rule.score(i, p) - s0;
        if (!std::isfinite(d)) throw UnboundedScore("score difference diverges on the simplex");
        b.c0 = std::max(b.c0, std::abs(d));
      }
    }
    for (const VectorXd& p : grid) {
      const double s0 = rule.score(0, p);
      double row = 0.0;
      for (int i = 1; i <= rule.n; ++i) row += rule.score(i, p) - s0 + b.c0;
      b.c = std::max(b.c, row);
    }
    return b;
  };

  if (!rule.bounded) {
    // Probe inset grids for the error report; the flag alone already rules
    // the translation out.
    std::ostringstream msg;
    msg << "rule is flagged unbounded; boundary-inset probe of C0:";
    for (double s = grid_step; s >= grid_step / 4.0 - kSimplexTol; s /= 2.0) {
      msg << " " << maxima(simplex_grid(rule.n, s, s)).c0;
    }
    throw UnboundedScore(msg.str());
  }

  BoundingConstants coarse = maxima(simplex_grid(rule.n, grid_step));
  BoundingConstants mid = maxima(simplex_grid(rule.n, grid_step / 2.0));
  BoundingConstants fine = maxima(simplex_grid(rule.n, grid_step / 4.0));
  const bool c0_doubles = mid.c0 >= 2.0 * coarse.c0 && fine.c0 >= 2.0 * mid.c0;
  const bool c_doubles = mid.c >= 2.0 * coarse.c && fine.c >= 2.0 * mid.c;
  if ((c0_doubles && coarse.c0 > 0.0) || (c_doubles && coarse.c > 0.0)) {
    throw UnboundedScore("grid maxima double under refinement; scores diverge");
  }
  return fine;
}

double alternative_utility(const AlternativeMechanism& mech, const VectorXd& values,
                           const VectorXd& report)
{
  double u = -mech.payment(report);
  for (int i = 1; i <= mech.n; ++i) u += values[i - 1] * mech.alloc(i, report);
  return u;
}

AlternativeMechanism single_to_alternative(const Mechanism& mech)
{
  AlternativeMechanism am;
  am.n = 1;
  am.alloc = [mech](int, const VectorXd& x) { return mech.allocation(x[0]); };
  am.payment = [mech](const VectorXd& x) { return mech.payment(x[0]); };
  return am;
}

Mechanism alternative_to_single(const AlternativeMechanism& mech)
{
  if (mech.n != 1) throw DomainError("only single-alternative mechanisms map to [0,1] mechanisms");
  auto alloc = mech.alloc;
  auto payment = mech.payment;
  return make_rule_backed_mechanism(
      [alloc](double v) {
        VectorXd x(1);
        x[0] = v;
        return alloc(1, x);
      },
      [payment](double v) {
        VectorXd x(1);
        x[0] = v;
        return payment(x);
      },
      0.0, 1.0);
}

ScoringRule mechanism_to_rule(const AlternativeMechanism& mech)
{
  ScoringRule rule;
  rule.kind = RuleKind::FromMechanism;
  rule.n = mech.n;
  rule.bounded = true;
  auto alloc = mech.alloc;
  auto payment = mech.payment;
  rule.score = [alloc, payment](int i, const VectorXd& p) {
    const double pay = payment(p);
    return i == 0 ? -pay : alloc(i, p) - pay;
  };
  return rule;
}

AlternativeMechanism rule_to_mechanism(const ScoringRule& rule, double grid_step)
{
  const BoundingConstants bounds = bounding_constants(rule, grid_step);
  if (!(bounds.c > 0.0)) throw TrivialRule("constant scores: C = 0");

  AlternativeMechanism am;
  am.n = rule.n;
  const auto score = rule.score;
  const double c0 = bounds.c0;
  const double c = bounds.c;
  am.alloc = [score, c0, c](int i, const VectorXd& x) {
    return (score(i, x) - score(0, x) + c0) / c;
  };
  const double s0_origin = rule.score(0, VectorXd::Zero(rule.n));
  am.payment = [score, s0_origin, c](const VectorXd& x) { return (s0_origin - score(0, x)) / c; };
  return am;
}

PropernessModulus strong_properness_modulus(const ScoringRule& rule, double grid_step)
{
  if (!rule.bounded) throw UnboundedScore("modulus scan needs a bounded rule");
  PropernessModulus result;
  result.grid = simplex_grid(rule.n, grid_step);
  result.local.assign(result.grid.size(), kInfinity);
  result.summary = kInfinity;

  const size_t g = result.grid.size();
  std::vector<double> truthful(g);
  for (size_t i = 0; i < g; ++i) truthful[i] = score_utility(rule, result.grid[i], result.grid[i]);

  for (size_t r = 0; r < g; ++r) {
    const VectorXd& report = result.grid[r];
    for (size_t b = 0; b < g; ++b) {
      if (b == r) continue;
      const VectorXd& belief = result.grid[b];
      const double d2 = (belief - report).squaredNorm();
      if (d2 == 0.0) continue;
      const double gap = truthful[b] - score_utility(rule, belief, report);
      const double ratio = 2.0 * gap / d2;
      if (ratio < result.local[r]) result.local[r] = ratio;
      if (ratio < result.summary) {
        result.summary = ratio;
        result.witness_belief = belief;
        result.witness_report = report;
      }
    }
    result.local[r] = std::max(result.local[r], 0.0);
  }
  result.summary = std::max(result.summary, 0.0);
  return result;
}

}  // namespace ervcg
