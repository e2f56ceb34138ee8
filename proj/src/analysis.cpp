#include "ervcg/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ervcg {

namespace {

// Opponent profiles in lexicographic order: the lowest opponent index is the
// most significant position.
class OpponentOdometer {
 public:
  OpponentOdometer(int n, int skip, Eigen::Index grid_size)
      : grid_size_(grid_size)
  {
    for (int j = 0; j < n; ++j) {
      if (j != skip) opponents_.push_back(j);
    }
    indices_.assign(opponents_.size(), 0);
  }

  const std::vector<int>& opponents() const { return opponents_; }

  void write(const ArrayXd& grid, VectorXd& out) const
  {
    for (std::size_t k = 0; k < opponents_.size(); ++k) {
      out[opponents_[k]] = grid[indices_[k]];
    }
  }

  bool advance()
  {
    for (std::size_t k = indices_.size(); k-- > 0;) {
      if (++indices_[k] < static_cast<std::size_t>(grid_size_)) return true;
      indices_[k] = 0;
    }
    return false;
  }

  std::uint64_t count() const
  {
    std::uint64_t c = 1;
    for (std::size_t k = 0; k < indices_.size(); ++k) c *= static_cast<std::uint64_t>(grid_size_);
    return c;
  }

 private:
  Eigen::Index grid_size_;
  std::vector<int> opponents_;
  std::vector<std::size_t> indices_;
};

// Truth-vs-deviation margin for one opponent bid profile, as an affine
// function of the opponent values:
//   margin(v_-i) = base + sum_j coef_j v_j.
// Opponent values enter only through u_j^VCG = v_j x_j - p_j, so
// coef_j = (1-delta) gamma_ij (x_j(truth) - x_j(deviation)).
struct AffineMargin {
  double base = 0.0;
  VectorXd coef;

  double corner_min() const
  {
    double m = base;
    for (Eigen::Index j = 0; j < coef.size(); ++j) m += std::min(0.0, coef[j]);
    return m;
  }

  double corner_max() const
  {
    double m = base;
    for (Eigen::Index j = 0; j < coef.size(); ++j) m += std::max(0.0, coef[j]);
    return m;
  }
};

AffineMargin affine_margin(const Scenario& sc, int agent, const VcgResult& truth,
                           const VcgResult& deviated, double te_diff)
{
  const int n = sc.setting.n_agents;
  AffineMargin m;
  m.coef = VectorXd::Zero(n);
  double gamma_pay = 0.0;
  for (int j = 0; j < n; ++j) {
    if (j == agent) continue;
    const double g = sc.gamma(agent, j);
    gamma_pay += g * (truth.payments[j] - deviated.payments[j]);
    m.coef[j] = (1.0 - sc.delta) * g * (truth.served[j] - deviated.served[j]);
  }
  const double own_diff = truth.utilities[agent] - deviated.utilities[agent];
  m.base = (1.0 - sc.delta) * (own_diff - gamma_pay) + sc.delta / n * te_diff;
  return m;
}

// Lexicographically smallest opponent-value grid profile with
// margin(v) <= target; existence must be guaranteed by corner_min.
VectorXd smallest_witness_values(const Scenario& sc, const AffineMargin& margin,
                                 const ArrayXd& grid, const std::vector<int>& opponents,
                                 double target)
{
  VectorXd values = sc.values;
  double partial = margin.base;
  double rest_min = 0.0;
  for (int j : opponents) rest_min += std::min(0.0, margin.coef[j]);
  for (int j : opponents) {
    rest_min -= std::min(0.0, margin.coef[j]);
    double chosen = grid[grid.size() - 1];
    for (Eigen::Index k = 0; k < grid.size(); ++k) {
      if (partial + margin.coef[j] * grid[k] + rest_min <= target) {
        chosen = grid[k];
        break;
      }
    }
    values[j] = chosen;
    partial += margin.coef[j] * chosen;
  }
  return values;
}

class EvaluationMeter {
 public:
  explicit EvaluationMeter(double budget) : budget_(budget) {}

  void charge(double evals)
  {
    used_ += evals;
    if (used_ > budget_) {
      std::ostringstream msg;
      msg << "evaluation budget exceeded: " << used_ << " > " << budget_;
      throw BudgetError(msg.str());
    }
  }

  void require_estimate(double estimate) const
  {
    if (estimate > budget_) {
      std::ostringstream msg;
      msg << "enumeration needs about " << estimate << " utility evaluations, budget is "
          << budget_;
      throw BudgetError(msg.str());
    }
  }

  double used() const { return used_; }

 private:
  double budget_;
  double used_ = 0.0;
};

double domination_scan_estimate(const Scenario& sc)
{
  const double g = static_cast<double>(bid_grid(sc).size());
  return 2.0 * std::pow(g, sc.setting.n_agents - 1) * (1.0 + g);
}

// Shared scan: flags every grid bid of `agent` that acquires a witness
// (strict mode: margin <= tol somewhere; weak mode: margin < -tol
// somewhere), and tracks whether some combination strictly prefers truth.
struct ScanResult {
  std::vector<bool> witnessed;
  std::vector<bool> any_strict;  // weak mode: a strictly better combination exists
};

ScanResult scan_domination(const Scenario& sc, int agent, const ArrayXd& grid,
                           EvaluationMeter& meter)
{
  const double tol = sc.tolerance;
  const Eigen::Index g = grid.size();
  ScanResult result;
  result.witnessed.assign(static_cast<std::size_t>(g), false);
  result.any_strict.assign(static_cast<std::size_t>(g), false);

  const double te_truth = misreport_utility(sc.te, sc.values[agent], sc.values[agent]);
  std::vector<double> te_dev(static_cast<std::size_t>(g));
  for (Eigen::Index b = 0; b < g; ++b) {
    te_dev[static_cast<std::size_t>(b)] =
        te_truth - misreport_utility(sc.te, sc.values[agent], grid[b]);
  }

  VectorXd bids(sc.setting.n_agents);
  OpponentOdometer odo(sc.setting.n_agents, agent, g);
  do {
    odo.write(grid, bids);
    bids[agent] = sc.values[agent];
    const VcgResult truth = run_vcg(sc.setting, bids, sc.values);
    meter.charge(1.0);
    for (Eigen::Index b = 0; b < g; ++b) {
      const auto bi = static_cast<std::size_t>(b);
      if (result.witnessed[bi] && (!sc.weak_dominance || result.any_strict[bi])) continue;
      bids[agent] = grid[b];
      const VcgResult dev = run_vcg(sc.setting, bids, sc.values);
      meter.charge(1.0);
      bids[agent] = sc.values[agent];
      const AffineMargin m = affine_margin(sc, agent, truth, dev, te_dev[bi]);
      if (sc.weak_dominance) {
        if (m.corner_min() < -tol) result.witnessed[bi] = true;
        if (m.corner_max() > tol) result.any_strict[bi] = true;
      } else if (m.corner_min() <= tol) {
        result.witnessed[bi] = true;
      }
    }
  } while (odo.advance());
  return result;
}

}  // namespace

double eta_bound(int n, double delta, double gamma)
{
  if (n < 1) throw DomainError("eta bound needs n >= 1");
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("eta bound needs delta in (0,1]");
  if (gamma < 0.0) throw DomainError("eta bound takes the externality magnitude, gamma >= 0");
  return 4.0 * (1.0 - delta) * n * n * gamma / delta;
}

double gamma_threshold(int n, double delta, double epsilon)
{
  if (n < 1) throw DomainError("gamma threshold needs n >= 1");
  if (!(delta > 0.0 && delta < 1.0)) throw DomainError("gamma threshold needs delta in (0,1)");
  if (epsilon < 0.0) throw DomainError("gamma threshold needs epsilon >= 0");
  const double one_minus = 1.0 - delta;
  return epsilon * delta / (8.0 * one_minus * one_minus * n * n * n);
}

double gamma_magnitude(const MatrixXd& gamma)
{
  return gamma.size() == 0 ? 0.0 : gamma.cwiseAbs().maxCoeff();
}

double tie_flip_radius(int n, double delta, double gamma, double pivot)
{
  if (!(delta > 0.0 && delta <= 1.0)) throw DomainError("tie flip radius needs delta in (0,1]");
  return std::sqrt(std::max(0.0, 2.0 * n * (1.0 - delta) * gamma * pivot / delta));
}

ArrayXd bid_grid(const Scenario& scenario)
{
  return value_grid(0.0, 1.0, scenario.grid_step);
}

DominationVerdict is_dominated_by_truth(const Scenario& scenario, int agent, double bid)
{
  if (agent < 0 || agent >= scenario.setting.n_agents) throw DomainError("agent out of range");
  if (!(bid >= 0.0 && bid <= 1.0)) throw DomainError("bid must lie in [0,1]");
  const ArrayXd grid = bid_grid(scenario);
  EvaluationMeter meter(scenario.budget);
  meter.require_estimate(2.0 * std::pow(static_cast<double>(grid.size()),
                                        scenario.setting.n_agents - 1));

  DominationVerdict verdict;
  verdict.agent = agent;
  verdict.bid = bid;

  const double tol = scenario.tolerance;
  const double te_diff = misreport_utility(scenario.te, scenario.values[agent],
                                           scenario.values[agent]) -
                         misreport_utility(scenario.te, scenario.values[agent], bid);

  VectorXd bids(scenario.setting.n_agents);
  OpponentOdometer odo(scenario.setting.n_agents, agent, grid.size());
  bool any_strict = false;
  do {
    odo.write(grid, bids);
    bids[agent] = scenario.values[agent];
    const VcgResult truth = run_vcg(scenario.setting, bids, scenario.values);
    bids[agent] = bid;
    const VcgResult dev = run_vcg(scenario.setting, bids, scenario.values);
    meter.charge(2.0);
    const AffineMargin m = affine_margin(scenario, agent, truth, dev, te_diff);

    const double witness_target = scenario.weak_dominance ? -tol : tol;
    const bool witness_here = scenario.weak_dominance ? m.corner_min() < witness_target
                                                      : m.corner_min() <= witness_target;
    if (witness_here) {
      verdict.dominated_by_truth = false;
      verdict.has_witness = true;
      verdict.witness_bids = bids;
      verdict.witness_values = smallest_witness_values(
          scenario, m, grid, odo.opponents(),
          scenario.weak_dominance ? std::nexttoward(witness_target, -kInfinity)
                                  : witness_target);
      verdict.witness_bids[agent] = bid;
      return verdict;
    }
    any_strict = any_strict || m.corner_max() > tol;
  } while (odo.advance());

  verdict.dominated_by_truth = scenario.weak_dominance ? any_strict : true;
  return verdict;
}

std::vector<double> undominated_candidates(const Scenario& scenario, int agent)
{
  if (agent < 0 || agent >= scenario.setting.n_agents) throw DomainError("agent out of range");
  const ArrayXd grid = bid_grid(scenario);
  EvaluationMeter meter(scenario.budget);
  meter.require_estimate(domination_scan_estimate(scenario));

  const ScanResult scan = scan_domination(scenario, agent, grid, meter);
  std::vector<double> candidates;
  for (Eigen::Index b = 0; b < grid.size(); ++b) {
    const auto bi = static_cast<std::size_t>(b);
    const bool dominated = scenario.weak_dominance
                               ? !scan.witnessed[bi] && scan.any_strict[bi]
                               : !scan.witnessed[bi];
    if (!dominated) candidates.push_back(grid[b]);
  }
  return candidates;
}

PredicateReport verify_predicate(const Scenario& scenario)
{
  const int n = scenario.setting.n_agents;
  const ArrayXd grid = bid_grid(scenario);

  PredicateReport report;
  report.gamma_mag = gamma_magnitude(scenario.gamma);
  report.threshold = gamma_threshold(n, scenario.delta, scenario.epsilon);
  report.hypothesis_ok = report.gamma_mag < report.threshold;
  report.eta_bound = eta_bound(n, scenario.delta, report.gamma_mag);

  EvaluationMeter meter(scenario.budget);
  meter.require_estimate(static_cast<double>(n) * domination_scan_estimate(scenario));

  const VcgResult vcg_truth = run_vcg(scenario.setting, scenario.values, scenario.values);
  const double msw_truth = max_social_welfare(scenario.setting, scenario.values).value;

  // candidate bids (not dominated by truth) per agent, plus TE utilities
  std::vector<std::vector<double>> candidates(static_cast<std::size_t>(n));
  std::vector<std::vector<double>> te_util(static_cast<std::size_t>(n));
  report.agents.resize(static_cast<std::size_t>(n));
  report.eta_observed = 0.0;
  for (int i = 0; i < n; ++i) {
    const auto ai = static_cast<std::size_t>(i);
    const ScanResult scan = scan_domination(scenario, i, grid, meter);
    auto& cand = candidates[ai];
    for (Eigen::Index b = 0; b < grid.size(); ++b) {
      const auto bi = static_cast<std::size_t>(b);
      const bool dominated = scenario.weak_dominance
                                 ? !scan.witnessed[bi] && scan.any_strict[bi]
                                 : !scan.witnessed[bi];
      if (!dominated) cand.push_back(grid[b]);
    }
    te_util[ai].reserve(cand.size());
    for (double b : cand) {
      te_util[ai].push_back(misreport_utility(scenario.te, scenario.values[i], b));
    }

    AgentPredicateResult& agent = report.agents[ai];
    agent.eta_bound = report.eta_bound;
    agent.candidates = cand;
    agent.candidate_count = cand.size();
    agent.candidate_lo = cand.front();
    agent.candidate_hi = cand.back();
    agent.benchmark = (1.0 - scenario.delta) * vcg_truth.utilities[i] - scenario.epsilon;
    agent.worst_case_utility = kInfinity;
    for (double b : cand) {
      report.eta_observed = std::max(report.eta_observed, std::abs(b - scenario.values[i]));
    }
  }

  double product = 1.0;
  for (const auto& cand : candidates) product *= static_cast<double>(cand.size());
  meter.require_estimate(meter.used() + product * (n + 1));

  report.welfare_gap = kInfinity;
  report.revenue_gap = kInfinity;

  VectorXd bids(n);
  std::vector<std::size_t> idx(static_cast<std::size_t>(n), 0);
  for (;;) {
    for (int i = 0; i < n; ++i) bids[i] = candidates[static_cast<std::size_t>(i)][idx[static_cast<std::size_t>(i)]];
    const VcgResult vcg = run_vcg(scenario.setting, bids, scenario.values);
    meter.charge(static_cast<double>(n) + 1.0);
    ++report.profiles_checked;

    for (int i = 0; i < n; ++i) {
      const auto ai = static_cast<std::size_t>(i);
      const double expected = (1.0 - scenario.delta) * vcg.utilities[i] +
                              scenario.delta / n * te_util[ai][idx[ai]];
      report.agents[ai].worst_case_utility =
          std::min(report.agents[ai].worst_case_utility, expected);
    }
    report.welfare_gap = std::min(
        report.welfare_gap, vcg.value_welfare - (msw_truth - n * report.eta_observed));
    report.revenue_gap = std::min(
        report.revenue_gap, vcg.revenue - (vcg_truth.revenue - 2.0 * n * report.eta_observed));

    int j = n - 1;
    while (j >= 0 && ++idx[static_cast<std::size_t>(j)] == candidates[static_cast<std::size_t>(j)].size()) {
      idx[static_cast<std::size_t>(j--)] = 0;
    }
    if (j < 0) break;
  }

  report.pass = true;
  for (auto& agent : report.agents) {
    agent.margin = agent.worst_case_utility - agent.benchmark;
    report.pass = report.pass && agent.margin >= -scenario.tolerance;
  }
  report.evaluations = meter.used();
  return report;
}

BestResponse best_response(const Scenario& scenario, int agent, const VectorXd& opponent_bids)
{
  if (agent < 0 || agent >= scenario.setting.n_agents) throw DomainError("agent out of range");
  const ArrayXd grid = bid_grid(scenario);

  VectorXd bids = opponent_bids;
  if (bids.size() != scenario.setting.n_agents) {
    throw DomainError("opponent bid vector must have one entry per agent");
  }

  BestResponse best;
  best.ext_utility = -kInfinity;
  const double v = scenario.values[agent];
  for (Eigen::Index b = 0; b < grid.size(); ++b) {
    bids[agent] = grid[b];
    const ErvcgExpectation e =
        ervcg_expected(scenario.setting, bids, scenario.values, scenario.delta, scenario.te);
    const double u = ext_modified_utility(e.expected_base_utility, scenario.gamma, agent);
    const bool better =
        u > best.ext_utility ||
        (u == best.ext_utility && (std::abs(grid[b] - v) < std::abs(best.bid - v) ||
                                   (std::abs(grid[b] - v) == std::abs(best.bid - v) &&
                                    grid[b] < best.bid)));
    if (better || b == 0) {
      best.bid = grid[b];
      best.ext_utility = u;
    }
  }
  return best;
}

}  // namespace ervcg
