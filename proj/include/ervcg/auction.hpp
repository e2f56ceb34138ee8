#pragma once

#include "ervcg/errors.hpp"
#include "ervcg/mechanism.hpp"
#include "ervcg/types.hpp"

#include <cstdint>
#include <vector>

namespace ervcg {

// Single-parameter allocation settings and the externality-resistant VCG
// lottery: with probability 1-delta run VCG with Clarke pivot payments, with
// probability delta/n single out agent i and run the truth-extraction (TE)
// mechanism on that agent alone.

enum class SettingKind { SingleItem, KWinners, Custom };

struct Setting {
  SettingKind kind = SettingKind::SingleItem;
  int n_agents = 1;
  int k = 1;           // winners per outcome for KWinners
  MatrixXd outcomes;   // one row per outcome: binary service indicators
};

const char* to_string(SettingKind kind);

// SingleItem: one outcome per agent. KWinners: all C(n,k) subsets plus all
// singletons (every setting must allow serving a single arbitrary agent).
Setting make_setting(SettingKind kind, int n, int k = 1);
Setting make_custom_setting(const MatrixXd& outcomes);

struct WelfareResult {
  double value = 0.0;
  Eigen::Index outcome = 0;
};

// max over outcomes of sum_j b_j x_j(a); ties go to the lowest outcome index.
WelfareResult max_social_welfare(const Setting& setting, const VectorXd& bids);

// Welfare experienced by `agent`: own true value plus the other agents' bids
// at the outcome selected under the bids.
double experienced_msw(const Setting& setting, int agent, double value, const VectorXd& bids);

struct VcgResult {
  Eigen::Index outcome_index = 0;
  VectorXd served;        // x(a*)
  VectorXd payments;      // Clarke pivots
  VectorXd utilities;     // v_i x_i(a*) - p_i
  double bid_welfare = 0.0;
  double value_welfare = 0.0;
  double revenue = 0.0;
};

VcgResult run_vcg(const Setting& setting, const VectorXd& bids, const VectorXd& values);

struct TeResult {
  Probability alloc = 0.0;
  Money payment = 0.0;
  Money base_utility = 0.0;
};

TeResult run_te(const Mechanism& te, double bid, double value);

struct ErvcgExpectation {
  double delta = 0.0;
  VectorXd expected_alloc;
  VectorXd expected_payment;
  VectorXd expected_base_utility;  // (1-delta) u^VCG + (delta/n) u^TE
  VcgResult vcg;                   // the VCG branch
  std::vector<TeResult> te;        // the TE branch per singled-out agent
};

ErvcgExpectation ervcg_expected(const Setting& setting, const VectorXd& bids,
                                const VectorXd& values, double delta, const Mechanism& te);

struct ErvcgSample {
  bool vcg_branch = true;
  int te_agent = -1;
  VectorXd alloc;
  VectorXd payments;
  VectorXd base_utilities;
};

// One draw of the branch lottery from a seeded generator; means over many
// seeds converge to ervcg_expected.
ErvcgSample ervcg_sample(const Setting& setting, const VectorXd& bids, const VectorXd& values,
                         double delta, const Mechanism& te, uint64_t seed);

// Externality-modified utilities: u_i + sum_{j != i} gamma_ij u_j. The gamma
// matrix has a zero diagonal; only row i of gamma enters agent i's value.
VectorXd ext_modified_utilities(const VectorXd& base, const MatrixXd& gamma);
double ext_modified_utility(const VectorXd& base, const MatrixXd& gamma, int agent);

}  // namespace ervcg
