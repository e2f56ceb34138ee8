#pragma once

#include "ervcg/errors.hpp"
#include "ervcg/mechanism.hpp"
#include "ervcg/types.hpp"

#include <functional>
#include <utility>
#include <vector>

namespace ervcg {

// Proper scoring rules over n+1 events (event 0 is the complement) and the
// bidirectional transformations between scoring rules and mechanisms for n
// alternatives. Beliefs are passed as the n free coordinates p_1..p_n with
// p_0 = 1 - sum implied.

enum class RuleKind { Quadratic, Spherical, Logarithmic, FromMechanism, Custom };

using ScoreFn = std::function<double(int, const VectorXd&)>;

struct ScoringRule {
  RuleKind kind = RuleKind::Custom;
  int n = 1;
  bool bounded = true;
  ScoreFn score;  // s_i(report), i in 0..n
};

const char* to_string(RuleKind kind);

bool valid_belief(const VectorXd& p, double tol = 1e-9);

ScoringRule make_standard_rule(RuleKind kind, int n);
ScoringRule make_custom_rule(int n, bool bounded, ScoreFn score);

// Expected score sum_i p_i s_i(report) under true belief p.
double score_utility(const ScoringRule& rule, const VectorXd& belief, const VectorXd& report);

// All free-coordinate belief vectors with entries on a uniform grid and
// sum <= 1. `inset` shrinks away from the simplex boundary by that distance
// (used when probing rules that diverge there).
std::vector<VectorXd> simplex_grid(int n, double step, double inset = 0.0);

struct BoundingConstants {
  double c0 = 0.0;  // max_i max_p |s_i(p) - s_0(p)|
  double c = 0.0;   // max_p sum_i (s_i(p) - s_0(p) + c0)
};

// Grid maxima with a divergence heuristic: the maxima are recomputed at
// step/2 and step/4, and doubling twice means UnboundedScore.
BoundingConstants bounding_constants(const ScoringRule& rule, double grid_step);

// Mechanism over n alternatives: reports x with x_i >= 0, sum x_i <= 1.
struct AlternativeMechanism {
  int n = 1;
  std::function<double(int, const VectorXd&)> alloc;  // a_i(x), i in 1..n
  std::function<double(const VectorXd&)> payment;     // P(x)
};

double alternative_utility(const AlternativeMechanism& mech, const VectorXd& values,
                           const VectorXd& report);

// Bridges for the single-alternative case.
AlternativeMechanism single_to_alternative(const Mechanism& mech);
Mechanism alternative_to_single(const AlternativeMechanism& mech);

// s_i = a_i - P, s_0 = -P: expected score equals the mechanism utility
// identically, so properness and strong moduli carry over unchanged.
ScoringRule mechanism_to_rule(const AlternativeMechanism& mech);

// a_i = (s_i - s_0 + C0)/C with payment P(x) = (s_0(0) - s_0(x))/C, which
// preserves incentives exactly (utility differences divide by C) and keeps
// P(0) = 0.
AlternativeMechanism rule_to_mechanism(const ScoringRule& rule, double grid_step);

struct PropernessModulus {
  double summary = 0.0;
  VectorXd witness_belief, witness_report;
  std::vector<VectorXd> grid;       // report grid
  std::vector<double> local;        // m(report) per grid entry
};

// m(pt) = inf over beliefs p of 2 (u(p,p) - u(p,pt)) / ||p - pt||^2 with the
// norm over the n free coordinates; summary is the global infimum.
//
// The same scan measures an alternative mechanism's strong truthfulness:
// apply it to mechanism_to_rule(mech), which preserves utilities exactly.
PropernessModulus strong_properness_modulus(const ScoringRule& rule, double grid_step);

}  // namespace ervcg
