#include "ervcg/auction.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace ervcg {

namespace {

void require_bid_vector(const VectorXd& bids, int n, const char* what)
{
  if (bids.size() != n) throw DomainError(std::string(what) + ": expected one entry per agent");
  for (Eigen::Index i = 0; i < bids.size(); ++i) {
    if (!std::isfinite(bids[i]) || bids[i] < 0.0) {
      throw DomainError(std::string(what) + " must be finite and nonnegative");
    }
  }
}

}  // namespace

const char* to_string(SettingKind kind)
{
  switch (kind) {
    case SettingKind::SingleItem: return "single-item";
    case SettingKind::KWinners: return "k-winners";
    case SettingKind::Custom: return "custom";
  }
  return "unknown";
}

Setting make_setting(SettingKind kind, int n, int k)
{
  if (n < 1) throw DomainError("setting needs at least one agent");
  Setting s;
  s.kind = kind;
  s.n_agents = n;
  s.k = k;
  switch (kind) {
    case SettingKind::SingleItem:
      s.outcomes = MatrixXd::Identity(n, n);
      break;
    case SettingKind::KWinners: {
      if (k < 1 || k >= n) throw DomainError("k-winners needs 1 <= k < n");
      std::vector<VectorXd> rows;
      std::vector<int> combo(static_cast<size_t>(k));
      for (int i = 0; i < k; ++i) combo[static_cast<size_t>(i)] = i;
      for (;;) {
        VectorXd row = VectorXd::Zero(n);
        for (int idx : combo) row[idx] = 1.0;
        rows.push_back(row);
        int pos = k - 1;
        while (pos >= 0 && combo[static_cast<size_t>(pos)] == n - k + pos) --pos;
        if (pos < 0) break;
        ++combo[static_cast<size_t>(pos)];
        for (int i = pos + 1; i < k; ++i) {
          combo[static_cast<size_t>(i)] = combo[static_cast<size_t>(i - 1)] + 1;
        }
      }
      s.outcomes.resize(static_cast<Eigen::Index>(rows.size()) + n, n);
      for (size_t r = 0; r < rows.size(); ++r) s.outcomes.row(static_cast<Eigen::Index>(r)) = rows[r];
      s.outcomes.bottomRows(n) = MatrixXd::Identity(n, n);
      break;
    }
    case SettingKind::Custom:
      throw DomainError("custom settings are built with make_custom_setting");
  }
  return s;
}

Setting make_custom_setting(const MatrixXd& outcomes)
{
  if (outcomes.rows() < 1 || outcomes.cols() < 1) {
    throw FeasibilityError("custom setting needs a nonempty outcome list");
  }
  const auto n = outcomes.cols();
  for (Eigen::Index r = 0; r < outcomes.rows(); ++r) {
    for (Eigen::Index c = 0; c < n; ++c) {
      if (outcomes(r, c) != 0.0 && outcomes(r, c) != 1.0) {
        throw FeasibilityError("service indicators must be 0 or 1");
      }
    }
  }
  // serving exactly agent i alone must be feasible for every i
  for (Eigen::Index agent = 0; agent < n; ++agent) {
    bool found = false;
    for (Eigen::Index r = 0; r < outcomes.rows() && !found; ++r) {
      found = outcomes(r, agent) == 1.0 && outcomes.row(r).sum() == 1.0;
    }
    if (!found) {
      throw FeasibilityError("no outcome serves agent " + std::to_string(agent + 1) + " alone");
    }
  }
  Setting s;
  s.kind = SettingKind::Custom;
  s.n_agents = static_cast<int>(n);
  s.outcomes = outcomes;
  return s;
}

WelfareResult max_social_welfare(const Setting& setting, const VectorXd& bids)
{
  require_bid_vector(bids, setting.n_agents, "bids");
  const VectorXd welfare = setting.outcomes * bids;
  WelfareResult best;
  best.value = welfare[0];
  for (Eigen::Index r = 1; r < welfare.size(); ++r) {
    if (welfare[r] > best.value) {
      best.value = welfare[r];
      best.outcome = r;
    }
  }
  return best;
}

double experienced_msw(const Setting& setting, int agent, double value, const VectorXd& bids)
{
  const WelfareResult under_bids = max_social_welfare(setting, bids);
  const auto row = setting.outcomes.row(under_bids.outcome);
  double welfare = value * row[agent];
  for (Eigen::Index j = 0; j < bids.size(); ++j) {
    if (j != agent) welfare += bids[j] * row[j];
  }
  return welfare;
}

VcgResult run_vcg(const Setting& setting, const VectorXd& bids, const VectorXd& values)
{
  require_bid_vector(bids, setting.n_agents, "bids");
  require_bid_vector(values, setting.n_agents, "values");

  VcgResult result;
  const WelfareResult best = max_social_welfare(setting, bids);
  result.outcome_index = best.outcome;
  result.bid_welfare = best.value;
  result.served = setting.outcomes.row(best.outcome);
  result.payments.resize(setting.n_agents);
  result.utilities.resize(setting.n_agents);

  VectorXd without_i = bids;
  for (int i = 0; i < setting.n_agents; ++i) {
    without_i[i] = 0.0;
    const double others_best = max_social_welfare(setting, without_i).value;
    const double others_at_star = result.served.dot(without_i);
    without_i[i] = bids[i];
    result.payments[i] = others_best - others_at_star;
    result.utilities[i] = values[i] * result.served[i] - result.payments[i];
  }
  result.value_welfare = result.served.dot(values);
  result.revenue = result.payments.sum();
  return result;
}

TeResult run_te(const Mechanism& te, double bid, double value)
{
  te.require_in_domain(bid, "TE bid");
  te.require_in_domain(value, "TE value");
  TeResult r;
  r.alloc = te.allocation(bid);
  r.payment = te.payment(bid);
  r.base_utility = value * r.alloc - r.payment;
  return r;
}

ErvcgExpectation ervcg_expected(const Setting& setting, const VectorXd& bids,
                                const VectorXd& values, double delta, const Mechanism& te)
{
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("delta must lie in [0,1]");
  const int n = setting.n_agents;

  ErvcgExpectation e;
  e.delta = delta;
  e.vcg = run_vcg(setting, bids, values);
  e.te.reserve(static_cast<size_t>(n));
  for (int i = 0; i < n; ++i) e.te.push_back(run_te(te, bids[i], values[i]));

  const double p_single = delta / n;
  e.expected_alloc.resize(n);
  e.expected_payment.resize(n);
  e.expected_base_utility.resize(n);
  for (int i = 0; i < n; ++i) {
    e.expected_alloc[i] = (1.0 - delta) * e.vcg.served[i] + p_single * e.te[static_cast<size_t>(i)].alloc;
    e.expected_payment[i] =
        (1.0 - delta) * e.vcg.payments[i] + p_single * e.te[static_cast<size_t>(i)].payment;
    e.expected_base_utility[i] =
        (1.0 - delta) * e.vcg.utilities[i] + p_single * e.te[static_cast<size_t>(i)].base_utility;
  }
  return e;
}

ErvcgSample ervcg_sample(const Setting& setting, const VectorXd& bids, const VectorXd& values,
                         double delta, const Mechanism& te, uint64_t seed)
{
  if (!(delta >= 0.0 && delta <= 1.0)) throw DomainError("delta must lie in [0,1]");
  const int n = setting.n_agents;

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  const double draw = unif(rng);

  ErvcgSample sample;
  sample.alloc = VectorXd::Zero(n);
  sample.payments = VectorXd::Zero(n);
  sample.base_utilities = VectorXd::Zero(n);

  if (draw < 1.0 - delta || delta == 0.0) {
    const VcgResult vcg = run_vcg(setting, bids, values);
    sample.alloc = vcg.served;
    sample.payments = vcg.payments;
    sample.base_utilities = vcg.utilities;
    return sample;
  }

  sample.vcg_branch = false;
  const int agent =
      std::min(n - 1, static_cast<int>((draw - (1.0 - delta)) / (delta / n)));
  sample.te_agent = agent;
  const TeResult te_result = run_te(te, bids[agent], values[agent]);
  sample.alloc[agent] = te_result.alloc;
  sample.payments[agent] = te_result.payment;
  sample.base_utilities[agent] = te_result.base_utility;
  return sample;
}

VectorXd ext_modified_utilities(const VectorXd& base, const MatrixXd& gamma)
{
  if (gamma.rows() != base.size() || gamma.cols() != base.size()) {
    throw DomainError("gamma matrix must be n x n");
  }
  return base + gamma * base;
}

double ext_modified_utility(const VectorXd& base, const MatrixXd& gamma, int agent)
{
  return base[agent] + gamma.row(agent).dot(base);
}

}  // namespace ervcg
