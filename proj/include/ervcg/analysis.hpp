#pragma once

#include "ervcg/auction.hpp"
#include "ervcg/errors.hpp"
#include "ervcg/mechanism.hpp"
#include "ervcg/types.hpp"

#include <cstdint>
#include <vector>

namespace ervcg {

// Brute-force verification of the ER-VCG guarantees on desk-scale instances:
// which bids are dominated by truth-telling, whether every profile of
// not-dominated bids meets the base-utility floor, and the welfare/revenue
// corollaries on the checked profiles.

struct Scenario {
  Setting setting;
  VectorXd values;                 // true values, in [0,1]
  MatrixXd gamma;                  // externality weights, zero diagonal
  double delta = 0.5;              // TE branch probability
  Mechanism te = make_linear_mechanism(0.0, 1.0);
  double epsilon = 0.05;           // predicate slack
  double grid_step = 0.005;
  double tolerance = 1e-9;
  double budget = 1e8;             // cap on utility evaluations
  uint64_t seed = 0;
  bool weak_dominance = false;     // compare against the weak-dominance variant
};

// eta bound 4 (1-delta) n^2 gamma / delta: lying further than this is
// dominated by truth-telling.
double eta_bound(int n, double delta, double gamma);

// Theorem hypothesis threshold epsilon delta / (8 (1-delta)^2 n^3).
double gamma_threshold(int n, double delta, double epsilon);

// max_ij |gamma_ij|; spite and altruism count alike, since either one lets
// the VCG branch reward a deviation.
double gamma_magnitude(const MatrixXd& gamma);

// Overbids can escape domination-by-truth well past eta_bound through a
// tie flip: when an opponent bids exactly v_i (with a value far from that
// bid), truth loses the tie-break while any overbid takes the item at price
// v_i. The deviator's own VCG loss is zero, the flip moves the opponent's
// base utility by up to `pivot` regardless of the overbid size, and only the
// TE penalty (delta/2n) eta^2 pushes back. The escape therefore reaches
//   eta = sqrt(2 n (1-delta) gamma pivot / delta),
// which beats the linear eta_bound for small gamma. (Such overbids are still
// dominated by smaller overbids, just not by truth-telling itself.)
double tie_flip_radius(int n, double delta, double gamma, double pivot);

ArrayXd bid_grid(const Scenario& scenario);

struct DominationVerdict {
  int agent = 0;
  double bid = 0.0;
  bool dominated_by_truth = false;
  bool has_witness = false;
  VectorXd witness_bids;    // full profile; the agent's own slot holds `bid`
  VectorXd witness_values;  // full profile; the agent's own slot holds v_i
};

// Quantifies over every opponent bid profile and opponent value profile on
// the grid: dominated means truth-telling is strictly better everywhere.
// When a witness combination exists, the lexicographically smallest one
// (opponent bids first, then opponent values) is reported.
DominationVerdict is_dominated_by_truth(const Scenario& scenario, int agent, double bid);

// Grid bids not dominated by truth: a sound superset of the undominated set.
std::vector<double> undominated_candidates(const Scenario& scenario, int agent);

struct AgentPredicateResult {
  double eta_bound = 0.0;
  std::vector<double> candidates;   // bids not dominated by truth
  double candidate_lo = 0.0;
  double candidate_hi = 0.0;
  std::size_t candidate_count = 0;
  double worst_case_utility = 0.0;  // min expected base utility over profiles
  double benchmark = 0.0;           // (1-delta) u^VCG(v) - epsilon
  double margin = 0.0;
};

struct PredicateReport {
  bool pass = false;
  bool hypothesis_ok = false;
  double gamma_mag = 0.0;
  double threshold = 0.0;
  double eta_bound = 0.0;
  double eta_observed = 0.0;
  std::vector<AgentPredicateResult> agents;
  double welfare_gap = 0.0;   // min value-welfare slack vs MSW(v) - n eta_obs
  double revenue_gap = 0.0;   // min revenue slack vs truthful revenue - 2n eta_obs
  std::uint64_t profiles_checked = 0;
  double evaluations = 0.0;   // utility evaluations spent
};

PredicateReport verify_predicate(const Scenario& scenario);

struct BestResponse {
  double bid = 0.0;
  double ext_utility = 0.0;
};

// Grid argmax of the agent's externality-modified ER-VCG utility against
// fixed opponent bids; ties break toward the bid closest to v_i, then lower.
BestResponse best_response(const Scenario& scenario, int agent, const VectorXd& opponent_bids);

}  // namespace ervcg
