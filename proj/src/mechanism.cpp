#include "ervcg/mechanism.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

namespace ervcg {

namespace {

constexpr double kMonotoneTol = 1e-12;

double require_finite(double x, const char* what)
{
  if (!std::isfinite(x)) throw DomainError(std::string(what) + " must be finite");
  return x;
}

// ln^k(v) with the sign conventions of the log family (v > 1 always).
double log_pow(double v, int k)
{
  return std::pow(std::log(v), k);
}

double log_family_alloc(double v, int k)
{
  const double lv = std::log(v);
  return 1.0 - 1.0 / ((k - 1) * std::pow(lv, k - 1)) + 1.0 / std::pow(lv, k);
}

// Exact integral of the piecewise-linear interpolant of (v[i], a[i]) from
// v[0] to x.
double piecewise_linear_integral(const ArrayXd& v, const ArrayXd& a, double x)
{
  double acc = 0.0;
  for (Eigen::Index i = 0; i + 1 < v.size(); ++i) {
    if (x <= v[i]) break;
    const double hi = std::min(x, v[i + 1]);
    const double w = hi - v[i];
    if (w <= 0.0) continue;
    const double a_hi = v[i + 1] > v[i]
                            ? a[i] + (a[i + 1] - a[i]) * (hi - v[i]) / (v[i + 1] - v[i])
                            : a[i + 1];
    acc += 0.5 * (a[i] + a_hi) * w;
  }
  return acc;
}

double interp(const ArrayXd& v, const ArrayXd& y, double x)
{
  if (x <= v[0]) return y[0];
  const Eigen::Index last = v.size() - 1;
  if (x >= v[last]) return y[last];
  // binary search for the segment containing x
  Eigen::Index lo = 0, hi = last;
  while (hi - lo > 1) {
    const Eigen::Index mid = (lo + hi) / 2;
    (v[mid] <= x ? lo : hi) = mid;
  }
  if (v[hi] == v[lo]) return y[hi];
  const double t = (x - v[lo]) / (v[hi] - v[lo]);
  return y[lo] + t * (y[hi] - y[lo]);
}

}  // namespace

const char* to_string(MechanismKind kind)
{
  switch (kind) {
    case MechanismKind::Linear: return "linear";
    case MechanismKind::LogFamily: return "log";
    case MechanismKind::FromScoringRule: return "from_rule";
    case MechanismKind::Tabulated: return "tabulated";
  }
  return "unknown";
}

double Mechanism::scan_high() const
{
  if (bounded()) return high_;
  return 64.0 * std::max(low_, 1.0);
}

void Mechanism::require_in_domain(double v, const char* what) const
{
  if (!std::isfinite(v) || !in_domain(v)) {
    throw DomainError(std::string(what) + " outside mechanism domain [" + std::to_string(low_) +
                      ", " + std::to_string(high_) + "]");
  }
}

Probability Mechanism::allocation(double v) const
{
  switch (kind_) {
    case MechanismKind::Linear: return (v - low_) / (high_ - low_);
    case MechanismKind::LogFamily: return log_family_alloc(v, log_k_);
    case MechanismKind::FromScoringRule: return alloc_fn_(v);
    case MechanismKind::Tabulated: return interp(tab_v_, tab_a_, v);
  }
  return 0.0;
}

Money Mechanism::payment(double v) const
{
  switch (kind_) {
    case MechanismKind::Linear: return (v * v - low_ * low_) / (2.0 * (high_ - low_));
    case MechanismKind::LogFamily: return v / log_pow(v, log_k_);
    case MechanismKind::FromScoringRule: return pay_fn_(v);
    case MechanismKind::Tabulated:
      // Myerson reconstruction from the piecewise-linear allocation; the
      // payment column itself is serialization metadata.
      return v * interp(tab_v_, tab_a_, v) - low_ * tab_a_[0] -
             piecewise_linear_integral(tab_v_, tab_a_, v) + tab_p_[0];
  }
  return 0.0;
}

Money Mechanism::payment_at_low() const
{
  return payment(low_);
}

Mechanism make_linear_mechanism(double low, double high)
{
  require_finite(low, "linear mechanism L");
  require_finite(high, "linear mechanism H");
  if (low >= high) throw DomainError("linear mechanism requires L < H");
  Mechanism m;
  m.kind_ = MechanismKind::Linear;
  m.low_ = low;
  m.high_ = high;
  return m;
}

Mechanism make_log_mechanism(int k, double low, double high)
{
  if (k < 2) throw DomainError("log mechanism requires k >= 2");
  require_finite(low, "log mechanism L");
  if (low <= 1.0) throw DomainError("log mechanism requires L > 1");
  if (high <= low) throw DomainError("log mechanism requires H > L");
  Mechanism m;
  m.kind_ = MechanismKind::LogFamily;
  m.low_ = low;
  m.high_ = high;
  m.log_k_ = k;

  // Validate range and monotonicity on a construction grid over the scan
  // window; a'(v) changes sign at ln v = k, so too small an L fails here.
  const ArrayXd grid = value_grid(low, m.scan_high(), (m.scan_high() - low) / 4096.0);
  double prev = m.allocation(grid[0]);
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    const double a = m.allocation(grid[i]);
    if (a < -kMonotoneTol || a > 1.0 + kMonotoneTol) {
      throw DomainError("log mechanism allocation leaves [0,1] at v = " +
                        std::to_string(grid[i]) + "; raise L (need ln L >= k)");
    }
    if (a < prev - kMonotoneTol) {
      throw DomainError("log mechanism allocation decreasing at v = " + std::to_string(grid[i]) +
                        "; raise L (need ln L >= k)");
    }
    prev = a;
  }
  return m;
}

Mechanism make_tabulated_mechanism(const ArrayXd& values, const ArrayXd& alloc)
{
  if (values.size() < 2 || values.size() != alloc.size()) {
    throw DomainError("tabulated mechanism needs matching value/alloc columns, >= 2 rows");
  }
  ArrayXd payments(values.size());
  double integral = 0.0;
  payments[0] = 0.0;
  for (Eigen::Index i = 1; i < values.size(); ++i) {
    if (values[i] <= values[i - 1]) throw DomainError("tabulated values must be increasing");
    integral += 0.5 * (alloc[i] + alloc[i - 1]) * (values[i] - values[i - 1]);
    payments[i] = values[i] * alloc[i] - values[0] * alloc[0] - integral;
  }
  return make_tabulated_mechanism(values, alloc, payments);
}

Mechanism make_tabulated_mechanism(const ArrayXd& values, const ArrayXd& alloc,
                                   const ArrayXd& payments)
{
  if (values.size() < 2 || values.size() != alloc.size() || values.size() != payments.size()) {
    throw DomainError("tabulated mechanism needs matching columns, >= 2 rows");
  }
  Mechanism m;
  m.kind_ = MechanismKind::Tabulated;
  m.low_ = values[0];
  m.high_ = values[values.size() - 1];
  m.tab_v_ = values;
  m.tab_a_ = alloc;
  m.tab_p_ = payments;
  // The payment column must agree with the Myerson reconstruction at the nodes.
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    if (std::abs(m.payment(values[i]) - payments[i]) > 1e-9 * (1.0 + std::abs(payments[i]))) {
      throw DomainError("tabulated payment column inconsistent with the allocation at v = " +
                        std::to_string(values[i]));
    }
  }
  return m;
}

Mechanism make_rule_backed_mechanism(std::function<double(double)> alloc,
                                     std::function<double(double)> payment, double low,
                                     double high)
{
  Mechanism m;
  m.kind_ = MechanismKind::FromScoringRule;
  m.low_ = low;
  m.high_ = high;
  m.alloc_fn_ = std::move(alloc);
  m.pay_fn_ = std::move(payment);
  return m;
}

MechanismPoint evaluate_mechanism(const Mechanism& mech, double v)
{
  mech.require_in_domain(v, "valuation");
  MechanismPoint pt;
  pt.alloc = mech.allocation(v);
  pt.payment = mech.payment(v);
  pt.utility = v * pt.alloc - pt.payment;
  return pt;
}

Money misreport_utility(const Mechanism& mech, double value, double report)
{
  mech.require_in_domain(value, "true value");
  mech.require_in_domain(report, "report");
  return value * mech.allocation(report) - mech.payment(report);
}

Money myerson_payment(const std::function<double(double)>& alloc, double low, double v,
                      double step)
{
  if (!(step > 0.0)) throw DomainError("integration step must be positive");
  if (v < low) throw DomainError("valuation below the domain's lower endpoint");
  const ArrayXd grid = value_grid(low, v, step);
  double integral = 0.0;
  double prev = alloc(grid[0]);
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    const double cur = alloc(grid[i]);
    if (cur < prev - kMonotoneTol) {
      throw DomainError("allocation rule decreasing at v = " + std::to_string(grid[i]));
    }
    integral += 0.5 * (cur + prev) * (grid[i] - grid[i - 1]);
    prev = cur;
  }
  return v * alloc(v) - integral;
}

double myerson_consistency_error(const Mechanism& mech, double grid_step)
{
  // Checks p(v) - p(L) = v a(v) - L a(L) - integral_L^v a, the payment form
  // of the envelope condition on [L,H]. (With L = 0 or a(L) = 0 this is the
  // familiar p(v) = v a(v) - integral a + p(L).)
  const ArrayXd grid = value_grid(mech.low(), mech.scan_high(), grid_step);
  const double p_low = mech.payment_at_low();
  const double anchor = mech.low() * mech.allocation(mech.low());
  double integral = 0.0;
  double prev = mech.allocation(grid[0]);
  double worst = 0.0;
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    const double cur = mech.allocation(grid[i]);
    integral += 0.5 * (cur + prev) * (grid[i] - grid[i - 1]);
    const double reconstructed = grid[i] * cur - anchor - integral + p_low;
    worst = std::max(worst, std::abs(mech.payment(grid[i]) - reconstructed));
    prev = cur;
  }
  return worst;
}

MonotoneReport check_monotone(const Mechanism& mech, double grid_step)
{
  if (!(grid_step > 0.0)) throw DomainError("grid step must be positive");
  const ArrayXd grid = value_grid(mech.low(), mech.scan_high(), grid_step);
  MonotoneReport report;
  double prev = mech.allocation(grid[0]);
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    const double cur = mech.allocation(grid[i]);
    if (prev > cur + kMonotoneTol) {
      report.monotone = false;
      report.violation_lo = grid[i - 1];
      report.violation_hi = grid[i];
      return report;
    }
    prev = cur;
  }
  return report;
}

Modulus strong_truth_modulus(const Mechanism& mech, double grid_step)
{
  if (!mech.bounded()) throw UnboundedDomain("strong-truth modulus needs a bounded domain");
  if (!(grid_step > 0.0)) throw DomainError("grid step must be positive");
  const ArrayXd grid = value_grid(mech.low(), mech.high(), grid_step);
  const Eigen::Index g = grid.size();

  ArrayXd alloc(g), pay(g);
  for (Eigen::Index i = 0; i < g; ++i) {
    alloc[i] = mech.allocation(grid[i]);
    pay[i] = mech.payment(grid[i]);
  }

  Modulus result;
  result.m = kInfinity;
  for (Eigen::Index i = 0; i < g; ++i) {
    const double truthful = grid[i] * alloc[i] - pay[i];
    for (Eigen::Index j = 0; j < g; ++j) {
      if (i == j) continue;
      const double gap = truthful - (grid[i] * alloc[j] - pay[j]);
      const double d = grid[j] - grid[i];
      const double ratio = 2.0 * gap / (d * d);
      if (ratio < result.m) {
        result.m = ratio;
        result.witness_value = grid[i];
        result.witness_report = grid[j];
      }
    }
  }
  result.m = std::max(result.m, 0.0);
  return result;
}

AdditiveMultiMechanism make_additive_multi(double low, double high, int n_items)
{
  if (n_items < 1) throw DomainError("additive mechanism needs n_items >= 1");
  return AdditiveMultiMechanism{make_linear_mechanism(low, high), n_items};
}

Money additive_misreport_utility(const AdditiveMultiMechanism& mech, const VectorXd& values,
                                 const VectorXd& reports)
{
  if (values.size() != mech.n_items || reports.size() != mech.n_items) {
    throw DomainError("value/report vectors must have n_items entries");
  }
  Money total = 0.0;
  for (Eigen::Index j = 0; j < values.size(); ++j) {
    total += misreport_utility(mech.item, values[j], reports[j]);
  }
  return total;
}

AdditiveModulus additive_modulus(const AdditiveMultiMechanism& mech, double grid_step)
{
  const ArrayXd axis = value_grid(mech.item.low(), mech.item.high(), grid_step);
  const Eigen::Index g = axis.size();
  const int n = mech.n_items;

  std::vector<Eigen::Index> idx(static_cast<size_t>(n), 0);
  std::vector<VectorXd> points;
  VectorXd point(n);
  for (;;) {
    for (int j = 0; j < n; ++j) point[j] = axis[idx[static_cast<size_t>(j)]];
    points.push_back(point);
    int j = n - 1;
    while (j >= 0 && ++idx[static_cast<size_t>(j)] == g) idx[static_cast<size_t>(j--)] = 0;
    if (j < 0) break;
  }

  AdditiveModulus result;
  result.m = kInfinity;
  for (const VectorXd& v : points) {
    const double truthful = additive_misreport_utility(mech, v, v);
    for (const VectorXd& r : points) {
      const double l1 = (r - v).lpNorm<1>();
      if (l1 == 0.0) continue;
      const double gap = truthful - additive_misreport_utility(mech, v, r);
      const double ratio = 2.0 * gap / (l1 * l1);
      if (ratio < result.m) {
        result.m = ratio;
        result.witness_values = v;
        result.witness_reports = r;
      }
    }
  }
  result.m = std::max(result.m, 0.0);
  return result;
}

RelativeGapProfile relative_gap_profile(const Mechanism& mech, double value, double alpha,
                                        double grid_step)
{
  mech.require_in_domain(value, "value");
  if (alpha < 0.0) throw DomainError("alpha must be nonnegative");
  if (!mech.in_domain(value * (1.0 + alpha))) {
    throw DomainError("v(1+alpha) outside mechanism domain");
  }
  const double truthful = mech.utility(value);
  if (truthful <= 0.0) throw DomainError("relative gap undefined: truthful utility <= 0");

  RelativeGapProfile profile;
  profile.value = value;
  profile.alpha = alpha;
  profile.gap_fraction = kInfinity;

  auto consider = [&](double report) {
    if (!mech.in_domain(report)) return;
    const double frac = (truthful - misreport_utility(mech, value, report)) / truthful;
    if (frac < profile.gap_fraction) {
      profile.gap_fraction = frac;
      profile.worst_report = report;
    }
  };

  const double lo_end = value * (1.0 - alpha);
  const double hi_end = value * (1.0 + alpha);
  consider(std::max(lo_end, mech.low()));
  consider(hi_end);

  // Window scan one alpha-width beyond each endpoint; the endpoint should
  // always win since u_v is unimodal in the report.
  const double width = std::max(value * alpha, grid_step);
  const ArrayXd below = value_grid(std::max(mech.low(), lo_end - width), std::max(lo_end, mech.low()),
                                   grid_step);
  for (Eigen::Index i = 0; i < below.size(); ++i) consider(below[i]);
  const double hi_cap = mech.bounded() ? std::min(mech.high(), hi_end + width) : hi_end + width;
  const ArrayXd above = value_grid(hi_end, hi_cap, grid_step);
  for (Eigen::Index i = 0; i < above.size(); ++i) consider(above[i]);

  profile.gap_fraction = std::max(profile.gap_fraction, 0.0);
  return profile;
}

}  // namespace ervcg
