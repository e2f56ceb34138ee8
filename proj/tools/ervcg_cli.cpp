// Batch front-end: analyze single-agent mechanisms, convert scoring rules,
// evaluate ER-VCG scenarios, verify the base-utility predicate, and sweep a
// scenario parameter to CSV. Reports are JSON documents with a deterministic
// body; exit codes are 0 = ok/pass, 1 = predicate fail, 2 = validation
// error, 3 = budget error.

#include "ervcg/analysis.hpp"
#include "ervcg/scenario_io.hpp"
#include "ervcg/scoring.hpp"

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

namespace {

using namespace ervcg;
using Clock = std::chrono::steady_clock;

constexpr int kExitOk = 0;
constexpr int kExitPredicateFail = 1;
constexpr int kExitValidation = 2;
constexpr int kExitBudget = 3;

double elapsed_ms(Clock::time_point start)
{
  return std::chrono::duration<double, std::milli>(Clock::now() - start).count();
}

void write_output(const std::string& text, const std::string& out_path)
{
  const char* tail = text.empty() || text.back() != '\n' ? "\n" : "";
  if (out_path.empty()) {
    std::cout << text << tail;
    return;
  }
  std::ofstream out(out_path);
  if (!out) throw ValidationError("cannot write output file: " + out_path);
  out << text << tail;
}

void emit_report(const Json& report, const std::string& out_path)
{
  write_output(report.dump(2), out_path);
}

Json agent_array(const VectorXd& v)
{
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v[i]);
  return arr;
}

// ---------------------------------------------------------------- analyze

struct AnalyzeArgs {
  std::string kind = "linear";
  int k = 2;
  double low = 0.0;
  double high = 1.0;
  bool unbounded = false;
  double grid_step = 0.005;
  std::string mech_file;
  std::string out;
};

Mechanism build_mechanism(const AnalyzeArgs& args)
{
  if (!args.mech_file.empty()) {
    std::ifstream in(args.mech_file);
    if (!in) throw ValidationError("cannot open mechanism descriptor: " + args.mech_file);
    return mechanism_from_json(Json::parse(in, nullptr, true, true), "mechanism");
  }
  if (args.kind == "linear") return make_linear_mechanism(args.low, args.high);
  if (args.kind == "log") {
    return make_log_mechanism(args.k, args.low, args.unbounded ? kInfinity : args.high);
  }
  throw ValidationError("mechanism.kind: expected linear or log (or use --mech FILE)");
}

int cmd_analyze_mech(const AnalyzeArgs& args)
{
  const auto start = Clock::now();
  const Mechanism mech = build_mechanism(args);

  Json results;
  results["command"] = "analyze-mech";

  const MonotoneReport mono = check_monotone(mech, args.grid_step);
  results["monotone"] = mono.monotone;
  if (!mono.monotone) {
    results["monotone_violation"] = Json{{"lo", mono.violation_lo}, {"hi", mono.violation_hi}};
  }

  // envelope condition |u'(v) - a(v)| by central differences
  const double h = 1e-4;
  const ArrayXd inner =
      value_grid(mech.low() + 2.0 * h, mech.scan_high() - 2.0 * h,
                 (mech.scan_high() - mech.low()) / 128.0);
  double envelope = 0.0;
  for (Eigen::Index i = 0; i < inner.size(); ++i) {
    const double du = (mech.utility(inner[i] + h) - mech.utility(inner[i] - h)) / (2.0 * h);
    envelope = std::max(envelope, std::abs(du - mech.allocation(inner[i])));
  }
  results["envelope_error"] = envelope;
  results["envelope_pass"] = envelope <= 1e-4;
  results["myerson_error"] = myerson_consistency_error(mech, args.grid_step);

  if (mech.bounded()) {
    const Modulus mod = strong_truth_modulus(mech, args.grid_step);
    results["modulus"] = Json{{"m", mod.m},
                              {"witness_value", mod.witness_value},
                              {"witness_report", mod.witness_report}};
    const double optimum = 1.0 / (mech.high() - mech.low());
    results["linear_optimum"] = optimum;
    results["modulus_over_optimum"] = mod.m / optimum;
  }

  if (mech.kind() == MechanismKind::LogFamily) {
    Json table = Json::array();
    const double alpha = 0.5;
    const double top = mech.bounded() ? mech.high() / (1.0 + alpha) : mech.scan_high() / (1.0 + alpha);
    double v = mech.low() * 1.25;
    while (v < top) {
      const RelativeGapProfile prof = relative_gap_profile(mech, v, alpha, v * 0.005);
      table.push_back(Json{{"v", v}, {"alpha", alpha}, {"f", prof.gap_fraction},
                           {"worst_report", prof.worst_report}});
      v *= 1.6;
    }
    results["relative_gaps"] = table;
  }

  Json report = report_envelope("mechanism", mechanism_to_json(mech), results, elapsed_ms(start));
  emit_report(report, args.out);
  return kExitOk;
}

// ---------------------------------------------------------------- convert

int cmd_convert(const std::string& kind, int n, double grid_step, const std::string& out)
{
  const auto start = Clock::now();
  RuleKind rule_kind;
  if (kind == "quadratic") rule_kind = RuleKind::Quadratic;
  else if (kind == "spherical") rule_kind = RuleKind::Spherical;
  else if (kind == "logarithmic") rule_kind = RuleKind::Logarithmic;
  else throw ValidationError("rule.kind: expected quadratic, spherical or logarithmic");

  const ScoringRule rule = make_standard_rule(rule_kind, n);
  const Json descriptor{{"kind", to_string(rule_kind)}, {"n", n}};

  const BoundingConstants bounds = bounding_constants(rule, grid_step);
  const AlternativeMechanism mech = rule_to_mechanism(rule, grid_step);

  Json results;
  results["command"] = "convert";
  results["c0"] = bounds.c0;
  results["c"] = bounds.c;

  const PropernessModulus rule_mod = strong_properness_modulus(rule, grid_step);
  results["rule_modulus"] = rule_mod.summary;
  results["mechanism_modulus_expected"] = rule_mod.summary / bounds.c;
  // measured on the converted mechanism through the utility-preserving
  // reverse translation (works for any n)
  const PropernessModulus mech_mod = strong_properness_modulus(mechanism_to_rule(mech), grid_step);
  results["mechanism_modulus_measured"] = mech_mod.summary;

  // tabulated allocation and payment, one row per (alternative, grid point)
  std::ostringstream csv;
  csv.precision(17);
  csv << "alt";
  for (int c = 1; c <= n; ++c) csv << ",x" << c;
  csv << ",a,p\n";
  for (const VectorXd& x : simplex_grid(n, grid_step)) {
    for (int alt = 1; alt <= n; ++alt) {
      csv << alt;
      for (int c = 0; c < n; ++c) csv << "," << x[c];
      csv << "," << mech.alloc(alt, x) << "," << mech.payment(x) << "\n";
    }
  }
  results["mechanism_csv"] = csv.str();

  emit_report(report_envelope("rule", descriptor, results, elapsed_ms(start)), out);
  return kExitOk;
}

// ---------------------------------------------------------------- run

int cmd_run(const std::string& scenario_path, const std::string& mode, int samples,
            std::optional<uint64_t> seed_override, const std::string& out)
{
  const auto start = Clock::now();
  Scenario sc = load_scenario(scenario_path);
  if (seed_override) sc.seed = *seed_override;
  if (mode != "expected" && mode != "sample") {
    throw ValidationError("mode: expected 'expected' or 'sample'");
  }

  // truthful play: the scenario's agents bid their values
  const VectorXd bids = sc.values;

  Json results;
  results["command"] = "run";
  results["mode"] = mode;
  results["delta"] = sc.delta;

  if (mode == "expected") {
    const ErvcgExpectation e = ervcg_expected(sc.setting, bids, sc.values, sc.delta, sc.te);
    results["expected_alloc"] = agent_array(e.expected_alloc);
    results["expected_payment"] = agent_array(e.expected_payment);
    results["expected_base_utility"] = agent_array(e.expected_base_utility);
    results["vcg_branch"] = Json{{"outcome", e.vcg.outcome_index},
                                 {"payments", agent_array(e.vcg.payments)},
                                 {"utilities", agent_array(e.vcg.utilities)},
                                 {"revenue", e.vcg.revenue},
                                 {"value_welfare", e.vcg.value_welfare}};
    Json te = Json::array();
    for (const TeResult& t : e.te) {
      te.push_back(Json{{"alloc", t.alloc}, {"payment", t.payment}, {"base_utility", t.base_utility}});
    }
    results["te_branch"] = te;
  } else {
    if (samples < 1) throw ValidationError("samples: required in sample mode");
    const int n = sc.setting.n_agents;
    VectorXd sum = VectorXd::Zero(n), sum_sq = VectorXd::Zero(n);
    int vcg_count = 0;
    std::vector<int> te_count(static_cast<std::size_t>(n), 0);
    for (int s = 0; s < samples; ++s) {
      const ErvcgSample draw =
          ervcg_sample(sc.setting, bids, sc.values, sc.delta, sc.te, sc.seed + static_cast<uint64_t>(s));
      sum += draw.base_utilities;
      sum_sq += draw.base_utilities.cwiseProduct(draw.base_utilities);
      if (draw.vcg_branch) ++vcg_count;
      else ++te_count[static_cast<std::size_t>(draw.te_agent)];
    }
    results["samples"] = samples;
    results["seed"] = sc.seed;
    Json agents = Json::array();
    for (int i = 0; i < n; ++i) {
      const double mean = sum[i] / samples;
      const double var = std::max(0.0, (sum_sq[i] - samples * mean * mean) / (samples - 1));
      agents.push_back(Json{{"mean_base_utility", mean},
                            {"std_error", std::sqrt(var / samples)}});
    }
    results["agents"] = agents;
    Json branches;
    branches["vcg"] = vcg_count;
    branches["te"] = te_count;
    results["branch_counts"] = branches;
  }

  emit_report(report_envelope(scenario_to_json(sc), results, elapsed_ms(start)), out);
  return kExitOk;
}

// ---------------------------------------------------------------- verify

Json predicate_results(const Scenario& sc, const PredicateReport& report)
{
  Json results;
  results["command"] = "verify";
  results["pass"] = report.pass;
  results["hypothesis_ok"] = report.hypothesis_ok;
  results["gamma_max"] = report.gamma_mag;
  results["gamma_threshold"] = report.threshold;
  results["eta_bound"] = report.eta_bound;
  results["eta_observed"] = report.eta_observed;
  results["welfare_gap"] = report.welfare_gap;
  results["revenue_gap"] = report.revenue_gap;
  results["profiles_checked"] = report.profiles_checked;
  results["evaluations"] = report.evaluations;
  Json agents = Json::array();
  for (std::size_t i = 0; i < report.agents.size(); ++i) {
    const AgentPredicateResult& a = report.agents[i];
    agents.push_back(Json{{"value", sc.values[static_cast<Eigen::Index>(i)]},
                          {"candidates", Json{{"lo", a.candidate_lo},
                                              {"hi", a.candidate_hi},
                                              {"count", a.candidate_count},
                                              {"bids", a.candidates}}},
                          {"worst_case_utility", a.worst_case_utility},
                          {"benchmark", a.benchmark},
                          {"margin", a.margin}});
  }
  results["agents"] = agents;
  return results;
}

int cmd_verify(const std::string& scenario_path, std::optional<double> grid_step,
               std::optional<double> budget, const std::string& out)
{
  const auto start = Clock::now();
  Scenario sc = load_scenario(scenario_path);
  if (grid_step) sc.grid_step = *grid_step;
  if (budget) sc.budget = *budget;

  const PredicateReport report = verify_predicate(sc);
  emit_report(report_envelope(scenario_to_json(sc), predicate_results(sc, report), elapsed_ms(start)),
              out);
  return report.pass || !report.hypothesis_ok ? kExitOk : kExitPredicateFail;
}

// ---------------------------------------------------------------- sweep

int cmd_sweep(const std::string& scenario_path, const std::string& param, const std::string& range,
              int steps, const std::string& out)
{
  const Scenario base = load_scenario(scenario_path);

  const auto colon = range.find(':');
  if (colon == std::string::npos) throw ValidationError("range: expected the form a:b");
  double lo = 0.0, hi = 0.0;
  try {
    lo = std::stod(range.substr(0, colon));
    hi = std::stod(range.substr(colon + 1));
  } catch (const std::exception&) {
    throw ValidationError("range: expected numbers a:b");
  }
  if (steps < 1) throw ValidationError("steps: must be >= 1");

  std::ostringstream csv;
  csv.precision(12);
  csv << "param,value,pass,hypothesis_ok,margin,eta_bound,welfare_gap,revenue_gap\n";
  for (int s = 0; s < steps; ++s) {
    const double value = steps == 1 ? lo : lo + (hi - lo) * s / (steps - 1);
    Scenario sc = base;
    if (param == "delta") {
      sc.delta = value;
    } else if (param == "gamma") {
      // uniform externality at the swept magnitude
      const int n = sc.setting.n_agents;
      sc.gamma = MatrixXd::Constant(n, n, value);
      sc.gamma.diagonal().setZero();
    } else if (param == "epsilon") {
      sc.epsilon = value;
    } else if (param == "n") {
      const int n = std::max(1, static_cast<int>(std::lround(value)));
      if (sc.setting.kind != SettingKind::SingleItem) {
        throw ValidationError("param: n sweeps support single-item settings only");
      }
      sc.setting = make_setting(SettingKind::SingleItem, n);
      VectorXd values(n);
      for (int i = 0; i < n; ++i) values[i] = base.values[i % base.values.size()];
      sc.values = values;
      const double g = gamma_magnitude(base.gamma);
      sc.gamma = MatrixXd::Constant(n, n, g);
      sc.gamma.diagonal().setZero();
    } else {
      throw ValidationError("param: expected delta, gamma, epsilon or n");
    }

    const PredicateReport report = verify_predicate(sc);
    double min_margin = kInfinity;
    for (const auto& agent : report.agents) min_margin = std::min(min_margin, agent.margin);
    csv << param << "," << value << "," << (report.pass ? 1 : 0) << ","
        << (report.hypothesis_ok ? 1 : 0) << "," << min_margin << "," << report.eta_bound << ","
        << report.welfare_gap << "," << report.revenue_gap << "\n";
  }

  write_output(csv.str(), out);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"strongly truthful mechanisms, scoring-rule translations and "
               "externality-resistant VCG analysis"};
  app.require_subcommand(1);

  AnalyzeArgs analyze;
  CLI::App* cmd_analyze = app.add_subcommand("analyze-mech", "analyze a single-agent mechanism");
  cmd_analyze->add_option("--kind", analyze.kind, "linear | log");
  cmd_analyze->add_option("--k", analyze.k, "log-family order (k >= 2)");
  cmd_analyze->add_option("--low", analyze.low, "domain lower endpoint L");
  cmd_analyze->add_option("--high", analyze.high, "domain upper endpoint H");
  cmd_analyze->add_flag("--unbounded", analyze.unbounded, "log family on [L, infinity)");
  cmd_analyze->add_option("--grid-step", analyze.grid_step, "scan grid step");
  cmd_analyze->add_option("--mech", analyze.mech_file, "JSON mechanism descriptor file");
  cmd_analyze->add_option("--out", analyze.out, "write the report here instead of stdout");

  std::string rule_kind = "quadratic";
  int rule_n = 1;
  double convert_step = 0.01;
  std::string convert_out;
  CLI::App* cmd_conv = app.add_subcommand("convert", "translate a scoring rule into a mechanism");
  cmd_conv->add_option("--rule", rule_kind, "quadratic | spherical | logarithmic");
  cmd_conv->add_option("--n", rule_n, "number of non-null events");
  cmd_conv->add_option("--grid-step", convert_step, "simplex grid step");
  cmd_conv->add_option("--out", convert_out, "write the report here instead of stdout");

  std::string run_scenario, run_mode = "expected", run_out;
  int run_samples = 0;
  std::optional<uint64_t> run_seed;
  CLI::App* cmd_run_app = app.add_subcommand("run", "evaluate ER-VCG on a truthful scenario");
  cmd_run_app->add_option("--scenario", run_scenario, "scenario JSON file")->required();
  cmd_run_app->add_option("--mode", run_mode, "expected | sample");
  cmd_run_app->add_option("--samples", run_samples, "number of seeded draws (sample mode)");
  cmd_run_app->add_option("--seed", run_seed, "override the scenario seed");
  cmd_run_app->add_option("--out", run_out, "write the report here instead of stdout");

  std::string verify_scenario, verify_out;
  std::optional<double> verify_step, verify_budget;
  CLI::App* cmd_ver = app.add_subcommand("verify", "check the base-utility predicate");
  cmd_ver->add_option("--scenario", verify_scenario, "scenario JSON file")->required();
  cmd_ver->add_option("--grid-step", verify_step, "override the scenario grid step");
  cmd_ver->add_option("--budget", verify_budget, "override the evaluation budget");
  cmd_ver->add_option("--out", verify_out, "write the report here instead of stdout");

  std::string sweep_scenario, sweep_param, sweep_range, sweep_out;
  int sweep_steps = 5;
  CLI::App* cmd_sw = app.add_subcommand("sweep", "verify across a parameter range, emit CSV");
  cmd_sw->add_option("--scenario", sweep_scenario, "scenario JSON file")->required();
  cmd_sw->add_option("--param", sweep_param, "delta | gamma | epsilon | n")->required();
  cmd_sw->add_option("--range", sweep_range, "a:b inclusive")->required();
  cmd_sw->add_option("--steps", sweep_steps, "number of sweep points");
  cmd_sw->add_option("--out", sweep_out, "write the CSV here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (cmd_analyze->parsed()) return cmd_analyze_mech(analyze);
    if (cmd_conv->parsed()) return cmd_convert(rule_kind, rule_n, convert_step, convert_out);
    if (cmd_run_app->parsed()) {
      return cmd_run(run_scenario, run_mode, run_samples, run_seed, run_out);
    }
    if (cmd_ver->parsed()) return cmd_verify(verify_scenario, verify_step, verify_budget, verify_out);
    if (cmd_sw->parsed()) return cmd_sweep(sweep_scenario, sweep_param, sweep_range, sweep_steps, sweep_out);
  } catch (const BudgetError& e) {
    std::cout << error_record("BudgetError", e.what()).dump(2) << "\n";
    return kExitBudget;
  } catch (const UnboundedScore& e) {
    std::cout << error_record("UnboundedScore", e.what()).dump(2) << "\n";
    return kExitValidation;
  } catch (const TrivialRule& e) {
    std::cout << error_record("TrivialRule", e.what()).dump(2) << "\n";
    return kExitValidation;
  } catch (const Error& e) {
    std::cout << error_record("ValidationError", e.what()).dump(2) << "\n";
    return kExitValidation;
  } catch (const Json::exception& e) {
    std::cout << error_record("ValidationError", e.what()).dump(2) << "\n";
    return kExitValidation;
  }
  return kExitOk;
}
