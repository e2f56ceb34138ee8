#include "ervcg/scenario_io.hpp"

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#ifndef ERVCG_VERSION
#define ERVCG_VERSION "0.0.0"
#endif

namespace ervcg {

namespace {

[[noreturn]] void fail(const std::string& path, const std::string& what)
{
  throw ValidationError(path + ": " + what);
}

void require_object(const Json& doc, const std::string& path)
{
  if (!doc.is_object()) fail(path, "expected an object");
}

void check_keys(const Json& doc, const std::string& path, const std::set<std::string>& required,
                const std::set<std::string>& optional)
{
  require_object(doc, path);
  for (const auto& item : doc.items()) {
    if (!required.count(item.key()) && !optional.count(item.key())) {
      fail(path + "." + item.key(), "unknown field");
    }
  }
  for (const auto& key : required) {
    if (!doc.contains(key)) fail(path + "." + key, "missing required field");
  }
}

double get_number(const Json& doc, const std::string& path, const std::string& key)
{
  if (!doc.at(key).is_number()) fail(path + "." + key, "expected a number");
  return doc.at(key).get<double>();
}

double get_number_or(const Json& doc, const std::string& path, const std::string& key,
                     double fallback)
{
  if (!doc.contains(key)) return fallback;
  return get_number(doc, path, key);
}

int get_int(const Json& doc, const std::string& path, const std::string& key)
{
  if (!doc.at(key).is_number_integer()) fail(path + "." + key, "expected an integer");
  return doc.at(key).get<int>();
}

std::string get_string(const Json& doc, const std::string& path, const std::string& key)
{
  if (!doc.at(key).is_string()) fail(path + "." + key, "expected a string");
  return doc.at(key).get<std::string>();
}

template <typename Derived>
Json grid_to_json(const Eigen::DenseBase<Derived>& v)
{
  Json arr = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) arr.push_back(v(i));
  return arr;
}

ArrayXd csv_column_parse(const std::string& csv, ArrayXd& alloc, ArrayXd& pay,
                         const std::string& path)
{
  std::istringstream in(csv);
  std::string line;
  if (!std::getline(in, line) || line != "v,a,p") fail(path, "grid CSV must start with 'v,a,p'");
  std::vector<double> vs, as, ps;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty()) continue;
    std::istringstream row(line);
    double v = 0.0, a = 0.0, p = 0.0;
    char c1 = 0, c2 = 0;
    if (!(row >> v >> c1 >> a >> c2 >> p) || c1 != ',' || c2 != ',') {
      fail(path, "bad CSV row " + std::to_string(line_no));
    }
    vs.push_back(v);
    as.push_back(a);
    ps.push_back(p);
  }
  ArrayXd values(static_cast<Eigen::Index>(vs.size()));
  alloc.resize(values.size());
  pay.resize(values.size());
  for (Eigen::Index i = 0; i < values.size(); ++i) {
    values[i] = vs[static_cast<std::size_t>(i)];
    alloc[i] = as[static_cast<std::size_t>(i)];
    pay[i] = ps[static_cast<std::size_t>(i)];
  }
  return values;
}

Setting setting_from_json(const Json& doc, int* k_out)
{
  const std::string path = "scenario.setting";
  check_keys(doc, path, {"kind", "n"}, {"k", "outcomes"});
  const std::string kind = get_string(doc, path, "kind");
  const int n = get_int(doc, path, "n");
  if (n < 1) fail(path + ".n", "need at least one agent");
  try {
    if (kind == "single-item") {
      return make_setting(SettingKind::SingleItem, n);
    }
    if (kind == "k-winners") {
      if (!doc.contains("k")) fail(path + ".k", "missing required field");
      const int k = get_int(doc, path, "k");
      if (k_out != nullptr) *k_out = k;
      return make_setting(SettingKind::KWinners, n, k);
    }
    if (kind == "custom") {
      if (!doc.contains("outcomes")) fail(path + ".outcomes", "missing required field");
      const Json& rows = doc.at("outcomes");
      if (!rows.is_array() || rows.empty()) fail(path + ".outcomes", "expected outcome rows");
      MatrixXd outcomes(static_cast<Eigen::Index>(rows.size()), n);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        if (!rows[r].is_array() || rows[r].size() != static_cast<std::size_t>(n)) {
          fail(path + ".outcomes[" + std::to_string(r) + "]", "expected n indicators");
        }
        for (int c = 0; c < n; ++c) {
          outcomes(static_cast<Eigen::Index>(r), c) = rows[r][static_cast<std::size_t>(c)].get<double>();
        }
      }
      return make_custom_setting(outcomes);
    }
  } catch (const Error& e) {
    fail(path, e.what());
  }
  fail(path + ".kind", "expected single-item, k-winners or custom");
}

}  // namespace

Json mechanism_to_json(const Mechanism& mech)
{
  Json doc;
  switch (mech.kind()) {
    case MechanismKind::Linear:
      doc["kind"] = "linear";
      doc["L"] = mech.low();
      doc["H"] = mech.high();
      break;
    case MechanismKind::LogFamily:
      doc["kind"] = "log";
      doc["k"] = mech.log_order();
      doc["L"] = mech.low();
      if (mech.bounded()) doc["H"] = mech.high();
      break;
    case MechanismKind::FromScoringRule:
    case MechanismKind::Tabulated:
      doc["kind"] = "tabulated";
      doc["L"] = mech.low();
      doc["H"] = mech.high();
      doc["grid"] = tabulated_csv(mech);
      break;
  }
  return doc;
}

std::string tabulated_csv(const Mechanism& mech)
{
  std::ostringstream out;
  out.precision(17);
  out << "v,a,p\n";
  if (mech.kind() == MechanismKind::Tabulated) {
    const ArrayXd& v = mech.grid_values();
    for (Eigen::Index i = 0; i < v.size(); ++i) {
      out << v[i] << "," << mech.grid_alloc()[i] << "," << mech.grid_payments()[i] << "\n";
    }
  } else {
    const ArrayXd grid = value_grid(mech.low(), mech.scan_high(), (mech.scan_high() - mech.low()) / 200.0);
    for (Eigen::Index i = 0; i < grid.size(); ++i) {
      out << grid[i] << "," << mech.allocation(grid[i]) << "," << mech.payment(grid[i]) << "\n";
    }
  }
  return out.str();
}

Mechanism mechanism_from_json(const Json& doc, const std::string& path)
{
  check_keys(doc, path, {"kind"}, {"k", "L", "H", "grid"});
  const std::string kind = get_string(doc, path, "kind");
  try {
    if (kind == "linear") {
      return make_linear_mechanism(get_number(doc, path, "L"), get_number(doc, path, "H"));
    }
    if (kind == "log") {
      const int k = doc.contains("k") ? get_int(doc, path, "k") : 2;
      const double high = get_number_or(doc, path, "H", kInfinity);
      return make_log_mechanism(k, get_number(doc, path, "L"), high);
    }
    if (kind == "tabulated") {
      if (!doc.contains("grid")) fail(path + ".grid", "missing required field");
      ArrayXd alloc, pay;
      const ArrayXd values = csv_column_parse(get_string(doc, path, "grid"), alloc, pay, path + ".grid");
      return make_tabulated_mechanism(values, alloc, pay);
    }
  } catch (const ValidationError&) {
    throw;
  } catch (const Error& e) {
    fail(path, e.what());
  }
  fail(path + ".kind", "expected linear, log or tabulated");
}

Scenario scenario_from_json(const Json& doc)
{
  const std::string root = "scenario";
  check_keys(doc, root, {"setting", "agents"}, {"ervcg", "analysis", "seed"});

  Scenario sc;
  sc.setting = setting_from_json(doc.at("setting"), nullptr);
  const int n = sc.setting.n_agents;

  const Json& agents = doc.at("agents");
  if (!agents.is_array()) fail(root + ".agents", "expected an array");
  if (agents.size() != static_cast<std::size_t>(n)) {
    fail(root + ".agents", "expected " + std::to_string(n) + " agents, got " +
                               std::to_string(agents.size()));
  }
  sc.values.resize(n);
  sc.gamma = MatrixXd::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    const std::string path = root + ".agents[" + std::to_string(i) + "]";
    const Json& agent = agents[static_cast<std::size_t>(i)];
    check_keys(agent, path, {"value", "gamma"}, {});
    sc.values[i] = get_number(agent, path, "value");
    if (sc.values[i] < 0.0 || sc.values[i] > 1.0) fail(path + ".value", "must lie in [0,1]");
    const Json& gamma = agent.at("gamma");
    if (!gamma.is_array() || gamma.size() != static_cast<std::size_t>(n)) {
      fail(path + ".gamma", "expected length " + std::to_string(n));
    }
    for (int j = 0; j < n; ++j) {
      const Json& g = gamma[static_cast<std::size_t>(j)];
      if (!g.is_number()) fail(path + ".gamma[" + std::to_string(j) + "]", "expected a number");
      sc.gamma(i, j) = g.get<double>();
    }
    if (sc.gamma(i, i) != 0.0) fail(path + ".gamma[" + std::to_string(i) + "]", "own entry must be 0");
  }

  if (doc.contains("ervcg")) {
    const std::string path = root + ".ervcg";
    const Json& ervcg = doc.at("ervcg");
    check_keys(ervcg, path, {"delta"}, {"te"});
    sc.delta = get_number(ervcg, path, "delta");
    if (sc.delta < 0.0 || sc.delta > 1.0) fail(path + ".delta", "must lie in [0,1]");
    if (ervcg.contains("te")) {
      sc.te = mechanism_from_json(ervcg.at("te"), path + ".te");
      if (sc.te.low() > 0.0 || !sc.te.bounded() || sc.te.high() < 1.0) {
        fail(path + ".te", "TE domain must cover the bid range [0,1]");
      }
    }
  }

  if (doc.contains("analysis")) {
    const std::string path = root + ".analysis";
    const Json& analysis = doc.at("analysis");
    check_keys(analysis, path, {"epsilon"}, {"grid_step", "tolerance", "budget", "weak_dominance"});
    sc.epsilon = get_number(analysis, path, "epsilon");
    if (sc.epsilon < 0.0) fail(path + ".epsilon", "must be nonnegative");
    sc.grid_step = get_number_or(analysis, path, "grid_step", sc.grid_step);
    if (!(sc.grid_step > 0.0) || sc.grid_step > 1.0) fail(path + ".grid_step", "must lie in (0,1]");
    sc.tolerance = get_number_or(analysis, path, "tolerance", sc.tolerance);
    if (sc.tolerance < 0.0) fail(path + ".tolerance", "must be nonnegative");
    sc.budget = get_number_or(analysis, path, "budget", sc.budget);
    if (!(sc.budget > 0.0)) fail(path + ".budget", "must be positive");
    if (analysis.contains("weak_dominance")) {
      if (!analysis.at("weak_dominance").is_boolean()) {
        fail(path + ".weak_dominance", "expected a boolean");
      }
      sc.weak_dominance = analysis.at("weak_dominance").get<bool>();
    }
  }

  if (doc.contains("seed")) {
    if (!doc.at("seed").is_number_unsigned() && !doc.at("seed").is_number_integer()) {
      fail(root + ".seed", "expected an integer");
    }
    const auto seed = doc.at("seed").get<long long>();
    if (seed < 0) fail(root + ".seed", "must be nonnegative");
    sc.seed = static_cast<uint64_t>(seed);
  }
  return sc;
}

Json scenario_to_json(const Scenario& scenario)
{
  Json doc;
  Json setting;
  setting["kind"] = to_string(scenario.setting.kind);
  setting["n"] = scenario.setting.n_agents;
  if (scenario.setting.kind == SettingKind::KWinners) setting["k"] = scenario.setting.k;
  if (scenario.setting.kind == SettingKind::Custom) {
    Json rows = Json::array();
    for (Eigen::Index r = 0; r < scenario.setting.outcomes.rows(); ++r) {
      rows.push_back(grid_to_json(scenario.setting.outcomes.row(r)));
    }
    setting["outcomes"] = rows;
  }
  doc["setting"] = setting;

  Json agents = Json::array();
  for (int i = 0; i < scenario.setting.n_agents; ++i) {
    Json agent;
    agent["value"] = scenario.values[i];
    agent["gamma"] = grid_to_json(scenario.gamma.row(i));
    agents.push_back(agent);
  }
  doc["agents"] = agents;

  doc["ervcg"] = Json{{"delta", scenario.delta}, {"te", mechanism_to_json(scenario.te)}};
  Json analysis{{"epsilon", scenario.epsilon},
                {"grid_step", scenario.grid_step},
                {"tolerance", scenario.tolerance},
                {"budget", scenario.budget}};
  if (scenario.weak_dominance) analysis["weak_dominance"] = true;
  doc["analysis"] = analysis;
  doc["seed"] = scenario.seed;
  return doc;
}

Scenario load_scenario(const std::string& file_path)
{
  std::ifstream in(file_path);
  if (!in) throw ValidationError("cannot open scenario file: " + file_path);
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw ValidationError(std::string("scenario is not valid JSON: ") + e.what());
  }
  return scenario_from_json(doc);
}

std::string scenario_hash(const Json& scenario_doc)
{
  const std::string canonical = scenario_doc.dump();
  uint64_t hash = 1469598103934665603ULL;
  for (unsigned char c : canonical) {
    hash ^= c;
    hash *= 1099511628211ULL;
  }
  std::ostringstream out;
  out << std::hex << hash;
  return out.str();
}

Json report_envelope(const std::string& slot, const Json& echo, const Json& results,
                     double elapsed_ms)
{
  Json meta{{"tool", "ervcg"}, {"version", ERVCG_VERSION}, {"elapsed_ms", elapsed_ms}};
  meta[slot == "scenario" ? "scenario_hash" : "input_hash"] = scenario_hash(echo);
  Json report;
  report["meta"] = meta;
  report[slot] = echo;
  report["results"] = results;
  return report;
}

Json report_envelope(const Json& scenario_doc, const Json& results, double elapsed_ms)
{
  return report_envelope("scenario", scenario_doc, results, elapsed_ms);
}

Json error_record(const std::string& type, const std::string& message)
{
  return Json{{"error", Json{{"type", type}, {"message", message}}}};
}

}  // namespace ervcg
