#pragma once

#include "ervcg/errors.hpp"
#include "ervcg/types.hpp"

#include <functional>
#include <string>

namespace ervcg {

// Single-agent direct-revelation mechanisms on a valuation interval [L,H].
//
// A mechanism is an allocation probability a(v) together with the payment
// p(v) pinned down by the Myerson characterization
//
//   p(v) = v*a(v) - integral_L^v a(x) dx + p(L),
//
// so truthful utility u(v) = v*a(v) - p(v) is convex with u'(v) = a(v).
// Constructed kinds keep p(L) = 0 except the log family, which ships the
// closed-form payment p(v) = v / ln^k(v) (so p(L) = L / ln^k(L)).

enum class MechanismKind { Linear, LogFamily, FromScoringRule, Tabulated };

struct MechanismPoint {
  Probability alloc = 0.0;
  Money payment = 0.0;
  Money utility = 0.0;
};

class Mechanism {
 public:
  MechanismKind kind() const { return kind_; }
  double low() const { return low_; }
  double high() const { return high_; }
  bool bounded() const { return std::isfinite(high_); }
  int log_order() const { return log_k_; }

  // Top of the grid used for validation and scans; equals high() on bounded
  // domains and a fixed multiplicative window above low() otherwise.
  double scan_high() const;

  Probability allocation(double v) const;
  Money payment(double v) const;
  Money utility(double v) const { return v * allocation(v) - payment(v); }
  Money payment_at_low() const;

  bool in_domain(double v) const { return v >= low_ - kDomainSlack && v <= high_ + kDomainSlack; }
  void require_in_domain(double v, const char* what) const;

  // Tabulated columns (empty for closed-form kinds).
  const ArrayXd& grid_values() const { return tab_v_; }
  const ArrayXd& grid_alloc() const { return tab_a_; }
  const ArrayXd& grid_payments() const { return tab_p_; }

  static constexpr double kDomainSlack = 1e-12;

 private:
  friend Mechanism make_linear_mechanism(double, double);
  friend Mechanism make_log_mechanism(int, double, double);
  friend Mechanism make_tabulated_mechanism(const ArrayXd&, const ArrayXd&);
  friend Mechanism make_tabulated_mechanism(const ArrayXd&, const ArrayXd&, const ArrayXd&);
  friend Mechanism make_rule_backed_mechanism(std::function<double(double)>,
                                              std::function<double(double)>, double, double);

  MechanismKind kind_ = MechanismKind::Linear;
  double low_ = 0.0;
  double high_ = 1.0;
  int log_k_ = 0;
  ArrayXd tab_v_, tab_a_, tab_p_;
  std::function<double(double)> alloc_fn_, pay_fn_;
};

const char* to_string(MechanismKind kind);

// Linear mechanism on [L,H]: a(v) = (v-L)/(H-L), p(v) = (v^2-L^2)/(2(H-L)).
Mechanism make_linear_mechanism(double low, double high);

// Log-family mechanism of order k >= 2 on [L,H] (H may be infinite):
//   a(v) = 1 - 1/((k-1) ln^(k-1) v) + 1/ln^k v,   p(v) = v / ln^k v.
// The constructor validates a in [0,1] and monotone on a grid over
// [L, scan_high] and throws DomainError otherwise (for k = 2 this admits
// exactly L >= e^2).
Mechanism make_log_mechanism(int k, double low, double high = kInfinity);

// Tabulated mechanism: piecewise-linear allocation through the given nodes.
// The two-column form derives payments by exact integration with p(L) = 0;
// the three-column form trusts the caller's payment column.
Mechanism make_tabulated_mechanism(const ArrayXd& values, const ArrayXd& alloc);
Mechanism make_tabulated_mechanism(const ArrayXd& values, const ArrayXd& alloc,
                                   const ArrayXd& payments);

// Mechanism backed by score-function closures (used by the scoring module).
Mechanism make_rule_backed_mechanism(std::function<double(double)> alloc,
                                     std::function<double(double)> payment, double low,
                                     double high);

// Allocation, payment and truthful utility at v. Throws DomainError outside [L,H].
MechanismPoint evaluate_mechanism(const Mechanism& mech, double v);

// Utility of reporting `report` when the true value is `value`:
//   u_value(report) = value * a(report) - p(report).
Money misreport_utility(const Mechanism& mech, double value, double report);

// Myerson payment v*a(v) - integral_low^v a(x) dx for a raw allocation rule,
// by composite trapezoid with the given step. Throws DomainError when the
// rule is decreasing on the integration grid.
Money myerson_payment(const std::function<double(double)>& alloc, double low, double v,
                      double step);

// Max over a grid of |p(v) - (v a(v) - integral a + p(L))|, trapezoid integral.
double myerson_consistency_error(const Mechanism& mech, double grid_step);

struct MonotoneReport {
  bool monotone = true;
  double violation_lo = 0.0;  // first adjacent grid pair with a(lo) > a(hi)
  double violation_hi = 0.0;
};

MonotoneReport check_monotone(const Mechanism& mech, double grid_step);

// Strong-truthfulness modulus: the largest m with
//   u_v(v) - u_v(vt) >= m/2 * (vt - v)^2   for all v, vt,
// estimated as the infimum of 2*gap/(vt-v)^2 over all grid pairs.
struct Modulus {
  double m = 0.0;
  double witness_value = 0.0;
  double witness_report = 0.0;
};

Modulus strong_truth_modulus(const Mechanism& mech, double grid_step);

// One linear mechanism per item, additive across items.
struct AdditiveMultiMechanism {
  Mechanism item;
  int n_items = 1;
};

AdditiveMultiMechanism make_additive_multi(double low, double high, int n_items);

Money additive_misreport_utility(const AdditiveMultiMechanism& mech, const VectorXd& values,
                                 const VectorXd& reports);

// Joint modulus over vector reports. Deviations are measured in the 1-norm,
// under which the measured modulus of n additive linear items is exactly
// 1/(n(H-L)).
struct AdditiveModulus {
  double m = 0.0;
  VectorXd witness_values;
  VectorXd witness_reports;
};

AdditiveModulus additive_modulus(const AdditiveMultiMechanism& mech, double grid_step);

// Relative truthfulness profile: the guaranteed fractional utility loss for
// any report outside [v(1-alpha), v(1+alpha)],
//   f(v, alpha) = min over excluded reports of (u_v(v) - u_v(vt)) / u_v(v).
// The minimum over each side sits at the interval endpoint (the misreport
// utility is unimodal with peak at v); a bounded window scan beyond both
// endpoints is kept as the authoritative computation.
struct RelativeGapProfile {
  double value = 0.0;
  double alpha = 0.0;
  double gap_fraction = 0.0;
  double worst_report = 0.0;
};

RelativeGapProfile relative_gap_profile(const Mechanism& mech, double value, double alpha,
                                        double grid_step);

}  // namespace ervcg
