#include "ehcoop/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <set>
#include <sstream>

#include "ehcoop/errors.hpp"

namespace ehcoop::io {

namespace {

const std::set<std::string> kSolverKeys = {"step0",     "max_outer_iters", "max_inner_iters",
                                           "primal_tol", "feas_tol",        "level_cap",
                                           "inner_method", "record_trace"};

// NaN and infinities have no JSON spelling; they become null.
Json number(double x) { return std::isfinite(x) ? Json(x) : Json(nullptr); }

Json numbers(std::span<const double> v) {
  Json a = Json::array();
  for (double x : v) a.push_back(number(x));
  return a;
}

template <typename T>
T get(const Json& doc, const std::string& key) {
  try {
    return doc.at(key).get<T>();
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config key '" + key + "': " + e.what());
  }
}

std::vector<double> vector_at(const Json& obj, const std::string& key) {
  if (!obj.contains(key)) throw ConfigError("missing instance vector '" + key + "'");
  return get<std::vector<double>>(obj, key);
}

void apply_solver_key(SolverSettings& s, const std::string& key, const Json& doc) {
  if (key == "step0") s.step0 = get<double>(doc, key);
  else if (key == "max_outer_iters") s.max_outer_iters = get<std::size_t>(doc, key);
  else if (key == "max_inner_iters") s.max_inner_iters = get<std::size_t>(doc, key);
  else if (key == "primal_tol") s.primal_tol = get<double>(doc, key);
  else if (key == "feas_tol") s.feas_tol = get<double>(doc, key);
  else if (key == "level_cap") s.level_cap = get<double>(doc, key);
  else if (key == "record_trace") s.record_trace = get<bool>(doc, key);
  else if (key == "inner_method") {
    const auto m = get<std::string>(doc, key);
    if (m == "water_filling") s.inner_method = InnerMethod::kWaterFilling;
    else if (m == "dual_gradient") s.inner_method = InnerMethod::kDualGradient;
    else throw ConfigError("inner_method must be water_filling or dual_gradient, got " + m);
  }
}

const char* inner_method_name(InnerMethod m) {
  return m == InnerMethod::kWaterFilling ? "water_filling" : "dual_gradient";
}

}  // namespace

ConfigDocument parse_config(const Json& doc) {
  if (!doc.is_object()) throw ConfigError("config document must be a JSON object");
  ConfigDocument out;
  ScenarioConfig& c = out.config;
  for (const auto& [key, value] : doc.items()) {
    if (key == "n_slots") c.n_slots = get<std::size_t>(doc, key);
    else if (key == "theta_p") c.theta_p = get<double>(doc, key);
    else if (key == "theta_s") c.theta_s = get<double>(doc, key);
    else if (key == "e_p_amount") c.e_p_amount = get<double>(doc, key);
    else if (key == "e_s_amount") c.e_s_amount = get<double>(doc, key);
    else if (key == "b_max") c.b_max = get<double>(doc, key);
    else if (key == "alpha") c.alpha = get<double>(doc, key);
    else if (key == "noise_power_dbm") c.noise_power = dbm_to_watts(get<double>(doc, key));
    else if (key == "d_pp") c.d_pp = get<double>(doc, key);
    else if (key == "d_sp") c.d_sp = get<double>(doc, key);
    else if (key == "d_ss") c.d_ss = get<double>(doc, key);
    else if (key == "d_ps") c.d_ps = get<double>(doc, key);
    else if (key == "rho") c.rho = get<double>(doc, key);
    else if (key == "rs_bar") c.rs_bar = get<double>(doc, key);
    else if (kSolverKeys.count(key)) apply_solver_key(c.solver, key, doc);
    else if (key == "solver") {
      if (!value.is_object()) throw ConfigError("'solver' must be an object");
      for (const auto& [skey, svalue] : value.items()) {
        if (!kSolverKeys.count(skey)) throw ConfigError("unknown solver key '" + skey + "'");
        apply_solver_key(c.solver, skey, value);
      }
    } else if (key == "channels" || key == "harvests") {
      continue;
    } else {
      throw ConfigError("unknown config key '" + key + "'");
    }
  }
  c.validate();

  const bool has_channels = doc.contains("channels"), has_harvests = doc.contains("harvests");
  if (has_channels != has_harvests) {
    throw ConfigError("an instance needs both 'channels' and 'harvests'");
  }
  if (has_channels) {
    Instance inst;
    const Json& ch = doc.at("channels");
    const Json& hv = doc.at("harvests");
    inst.channels.h_p = vector_at(ch, "h_p");
    inst.channels.h_sp = vector_at(ch, "h_sp");
    inst.channels.h_ss = vector_at(ch, "h_ss");
    inst.harvests.e_p = vector_at(hv, "e_p");
    inst.harvests.e_s = vector_at(hv, "e_s");
    inst.channels.validate(c.n_slots);
    inst.harvests.validate(c.n_slots);
    out.instance = std::move(inst);
  }
  return out;
}

ConfigDocument load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  Json doc;
  try {
    doc = Json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(doc);
}

Json to_json(const ScenarioConfig& c) {
  Json s;
  s["step0"] = c.solver.step0;
  s["max_outer_iters"] = c.solver.max_outer_iters;
  s["max_inner_iters"] = c.solver.max_inner_iters;
  s["primal_tol"] = c.solver.primal_tol;
  s["feas_tol"] = c.solver.feas_tol;
  s["level_cap"] = c.solver.level_cap;
  s["inner_method"] = inner_method_name(c.solver.inner_method);
  s["record_trace"] = c.solver.record_trace;
  Json j;
  j["n_slots"] = c.n_slots;
  j["theta_p"] = c.theta_p;
  j["theta_s"] = c.theta_s;
  j["e_p_amount"] = c.e_p_amount;
  j["e_s_amount"] = c.e_s_amount;
  j["b_max"] = c.b_max;
  j["alpha"] = c.alpha;
  j["noise_power_dbm"] = watts_to_dbm(c.noise_power);
  j["d_pp"] = c.d_pp;
  j["d_sp"] = c.d_sp;
  j["d_ss"] = c.d_ss;
  j["d_ps"] = c.d_ps;
  j["rho"] = c.rho;
  j["rs_bar"] = c.rs_bar;
  j["solver"] = s;
  return j;
}

Json to_json(const Instance& inst) {
  Json j;
  j["channels"] = {{"h_p", numbers(inst.channels.h_p)},
                   {"h_sp", numbers(inst.channels.h_sp)},
                   {"h_ss", numbers(inst.channels.h_ss)}};
  j["harvests"] = {{"e_p", numbers(inst.harvests.e_p)}, {"e_s", numbers(inst.harvests.e_s)}};
  return j;
}

Json instance_document(const ScenarioConfig& cfg, const Instance& inst) {
  Json j = to_json(cfg);
  const Json parts = to_json(inst);
  j["channels"] = parts["channels"];
  j["harvests"] = parts["harvests"];
  return j;
}

Json to_json(const PowerPolicy& p) {
  return {{"p_d", numbers(p.p_d)},
          {"delta_r", numbers(p.delta_r)},
          {"p_sp", numbers(p.p_sp)},
          {"p_ss", numbers(p.p_ss)}};
}

Json to_json(const SolveReport& r) {
  Json j;
  j["status"] = to_string(r.status);
  j["mode"] = to_string(r.mode);
  j["converged"] = r.converged;
  j["iterations"] = r.iterations;
  j["cooperation_successful"] = r.cooperation_successful;
  j["objective"] = number(r.objective);
  j["effective_rate"] = number(r.effective_rate);
  j["policy"] = to_json(r.policy);
  j["duals"] = {{"lambda", number(r.duals.lambda)},
                {"mu", numbers(r.duals.mu)},
                {"gamma", numbers(r.duals.gamma)},
                {"gamma_prime", numbers(r.duals.gamma_prime)}};
  j["rates"] = {{"r_pc_slots", numbers(r.rates.r_pc_slots)},
                {"r_s_slots", numbers(r.rates.r_s_slots)},
                {"r_pc_avg", number(r.rates.r_pc_avg)},
                {"r_s_avg", number(r.rates.r_s_avg)},
                {"r_p_bar", number(r.rates.r_p_bar)}};
  j["residuals"] = {{"coop_rate", number(r.residuals.coop_rate)},
                    {"sec_rate", number(r.residuals.sec_rate)},
                    {"pt_energy", numbers(r.residuals.pt_energy)},
                    {"st_energy", numbers(r.residuals.st_energy)},
                    {"battery", numbers(r.residuals.battery)},
                    {"battery_level", numbers(r.residuals.battery_level)}};
  j["baseline"] = {{"p_d_prime", numbers(r.baseline.p_d_prime)},
                   {"water_levels", numbers(r.baseline.water_levels)},
                   {"r_p_bar", number(r.baseline.r_p_bar)}};
  return j;
}

Json to_json(const PropositionAudit& a) {
  return {{"applicable", a.applicable},
          {"passed", a.passed()},
          {"tol", a.tol},
          {"prop1_gap", number(a.prop1_gap)},
          {"prop2_gap", number(a.prop2_gap)},
          {"prop3_gap", number(a.prop3_gap)},
          {"prop4_violations", a.prop4_violations},
          {"prop5_violations", a.prop5_violations}};
}

Json to_json(const KktAudit& a) {
  return {{"applicable", a.applicable},
          {"stationarity", number(a.stationarity)},
          {"clamp", number(a.clamp)},
          {"complementarity", number(a.complementarity)}};
}

Json to_json(const OracleResult& r) {
  return {{"feasible", r.feasible},
          {"objective", number(r.objective)},
          {"grid_step", number(r.grid_step)},
          {"points_evaluated", r.points_evaluated},
          {"policy", to_json(r.policy)}};
}

std::string format_number(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.6g", x);
  return buf;
}

void write_region_csv(std::ostream& out, std::span<const RegionPoint> points) {
  out << "rs_bar,rp_joint,rp_info,rp_nocoop\n";
  for (const auto& p : points) {
    out << format_number(p.rs_bar) << ',' << format_number(p.rp_joint) << ','
        << format_number(p.rp_info) << ',' << format_number(p.rp_nocoop) << '\n';
  }
}

void write_coopprob_csv(std::ostream& out, const SweepResult& sweep) {
  out << "rs_bar,p_joint,p_info,realizations\n";
  for (const auto& p : sweep.points) {
    out << format_number(p.parameter) << ',' << format_number(p.p_joint) << ','
        << format_number(p.p_info) << ',' << sweep.realizations << '\n';
  }
}

void write_bsweep_csv(std::ostream& out, const SweepResult& sweep) {
  out << "b_max,rp_joint,rp_info,realizations\n";
  for (const auto& p : sweep.points) {
    out << format_number(p.parameter) << ',' << format_number(p.rate_joint) << ','
        << format_number(p.rate_info) << ',' << sweep.realizations << '\n';
  }
}

void write_trace_csv(std::ostream& out, std::span<const TraceEntry> trace) {
  out << "iteration,objective,best_objective,max_residual\n";
  for (const auto& t : trace) {
    out << t.iteration << ',' << format_number(t.objective) << ','
        << format_number(t.best_objective) << ',' << format_number(t.max_residual) << '\n';
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << text;
}

}  // namespace ehcoop::io
