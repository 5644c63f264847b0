#include "ehcoop/cli.hpp"

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "ehcoop/analysis.hpp"
#include "ehcoop/baseline.hpp"
#include "ehcoop/errors.hpp"
#include "ehcoop/io.hpp"
#include "ehcoop/optimizer.hpp"
#include "ehcoop/oracle.hpp"
#include "ehcoop/reference.hpp"

#ifndef EHCOOP_VERSION
#define EHCOOP_VERSION "unknown"
#endif

namespace ehcoop::cli {

namespace {

namespace fs = std::filesystem;
using io::Json;

struct Options {
  std::string config_path;
  std::uint64_t seed = 1;
  std::uint64_t index = 0;
  std::string mode = "joint";
  std::string out_dir;
  std::size_t workers = 0;
  double rs_from = 0.0;
  double rs_to = 3.0;
  double bmax_from = 0.0;
  double bmax_to = 5.0;
  std::size_t steps = 31;
  std::size_t realizations = 200;
  double grid_step = 0.0;
  bool trace = false;
};

std::size_t resolve_workers(std::size_t workers) {
  if (workers > 0) return workers;
  return std::max<std::size_t>(1, std::thread::hardware_concurrency());
}

std::vector<double> linspace(double from, double to, std::size_t steps) {
  if (steps == 0) throw ConfigError("--steps must be at least 1");
  if (steps == 1) return {from};
  std::vector<double> v(steps);
  for (std::size_t i = 0; i < steps; ++i) {
    v[i] = from + (to - from) * static_cast<double>(i) / static_cast<double>(steps - 1);
  }
  return v;
}

CooperationMode parse_mode(const std::string& mode) {
  if (mode == "joint") return CooperationMode::kJoint;
  if (mode == "info") return CooperationMode::kInfoOnly;
  throw ConfigError("--mode must be joint or info, got " + mode);
}

std::string fixed(double x, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, x);
  return buf;
}

// Writes outputs under --out, or sends the primary text to stdout.
class Sink {
 public:
  Sink(std::string command, const Options& opt, std::ostream& out)
      : command_(std::move(command)), opt_(opt), out_(out),
        start_(std::chrono::steady_clock::now()) {}

  bool to_dir() const { return !opt_.out_dir.empty(); }

  // `primary` files are echoed to stdout when no directory is given.
  void emit(const std::string& name, const std::string& text, bool primary) {
    if (to_dir()) {
      const fs::path p = fs::path(opt_.out_dir) / name;
      io::write_text(p, text);
      outputs_.push_back(p.string());
    } else if (primary) {
      out_ << text;
    }
  }

  void finish(const std::vector<std::string>& argv, const ScenarioConfig* cfg) {
    if (!to_dir()) return;
    const double secs =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    Json m;
    m["command"] = command_;
    m["argv"] = argv;
    m["version"] = EHCOOP_VERSION;
    m["master_seed"] = opt_.seed;
    m["config"] = cfg ? io::to_json(*cfg) : Json(nullptr);
    m["outputs"] = outputs_;
    m["wall_seconds"] = secs;
    const fs::path p = fs::path(opt_.out_dir) / "manifest.json";
    io::write_text(p, m.dump(2) + "\n");
  }

 private:
  std::string command_;
  const Options& opt_;
  std::ostream& out_;
  std::chrono::steady_clock::time_point start_;
  std::vector<std::string> outputs_;
};

io::ConfigDocument load(const Options& opt) {
  if (opt.config_path.empty()) return {ScenarioConfig{}, std::nullopt};
  return io::load_config(opt.config_path);
}

Instance instance_for(const io::ConfigDocument& doc, const Options& opt) {
  if (doc.instance) return *doc.instance;
  return sample_realization(doc.config, opt.seed, opt.index);
}

std::string policy_table(const PowerPolicy& p) {
  std::ostringstream s;
  s << "slot       P_d   delta_r      P_sp      P_ss\n";
  double td = 0, tr = 0, tsp = 0, tss = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    char line[128];
    std::snprintf(line, sizeof line, "%4zu %9.4f %9.4f %9.4f %9.4f\n", i + 1, p.p_d[i],
                  p.delta_r[i], p.p_sp[i], p.p_ss[i]);
    s << line;
    td += p.p_d[i];
    tr += p.delta_r[i];
    tsp += p.p_sp[i];
    tss += p.p_ss[i];
  }
  char line[128];
  std::snprintf(line, sizeof line, " sum %9.4f %9.4f %9.4f %9.4f\n", td, tr, tsp, tss);
  s << line;
  return s.str();
}

std::string audit_summary(const PropositionAudit& a) {
  std::ostringstream s;
  s << "proposition audit (tol " << io::format_number(a.tol) << "): "
    << (a.passed() ? "passed" : "FAILED") << "\n"
    << "  rate floor gap      " << io::format_number(a.prop1_gap) << "\n"
    << "  PT energy gap       " << io::format_number(a.prop2_gap) << "\n"
    << "  ST energy gap       " << io::format_number(a.prop3_gap) << "\n"
    << "  relay/transfer overlaps " << a.prop4_violations.size() << "\n"
    << "  unused transfer slots   " << a.prop5_violations.size() << "\n";
  return s.str();
}

int cmd_example(std::ostream& out) {
  const ScenarioConfig cfg = worked_example_config();
  const Instance inst = worked_example_instance();
  const PowerPolicy reference = worked_example_policy();
  const auto& ch = inst.channels;
  const auto& hv = inst.harvests;

  double pt = 0, st = 0;
  for (std::size_t i = 0; i < reference.size(); ++i) {
    pt += reference.p_d[i] + reference.delta_r[i];
    st += reference.p_sp[i] + reference.p_ss[i];
  }
  const auto base = solve_no_coop(ch.h_p, hv.e_p);
  out << "reference policy\n" << policy_table(reference);
  out << "sum(P_d + delta_r) = " << fixed(pt, 1) << "\n";
  out << "sum(P_sp + P_ss)   = " << fixed(st, 4) << "\n";
  out << "no-cooperation rate R_p = " << fixed(base.r_p_bar, 4) << "\n";
  out << audit_summary(audit_policy(reference, cfg, ch, hv, 1e-3));

  const auto rep = solve(cfg, ch, hv, CooperationMode::kJoint);
  out << "\noptimized policy (" << to_string(rep.status) << ", " << rep.iterations
      << " iterations)\n"
      << policy_table(rep.policy);
  out << "primary sum rate = " << fixed(rep.objective, 4) << "\n";
  out << "cooperation successful = " << (rep.cooperation_successful ? "yes" : "no") << "\n";
  out << audit_summary(check_propositions(rep, cfg, ch, hv, 1e-3));
  const auto kkt = check_kkt(rep, cfg, ch, hv);
  out << "KKT audit: " << (kkt.passed(cfg.solver.feas_tol) ? "passed" : "FAILED") << "\n";
  return 0;
}

int cmd_generate(const Options& opt, Sink& sink, const std::vector<std::string>& argv) {
  const auto doc = load(opt);
  const Instance inst = sample_realization(doc.config, opt.seed, opt.index);
  sink.emit("instance.json", io::instance_document(doc.config, inst).dump(2) + "\n", true);
  sink.finish(argv, &doc.config);
  return 0;
}

int cmd_solve(const Options& opt, Sink& sink, const std::vector<std::string>& argv,
              std::ostream& out) {
  auto doc = load(opt);
  if (opt.trace) doc.config.solver.record_trace = true;
  const Instance inst = instance_for(doc, opt);
  const auto& ch = inst.channels;
  const auto& hv = inst.harvests;
  const auto rep = solve(doc.config, ch, hv, parse_mode(opt.mode));
  const auto props = check_propositions(rep, doc.config, ch, hv, 1e-3);
  const auto kkt = check_kkt(rep, doc.config, ch, hv);

  Json audit;
  audit["propositions"] = io::to_json(props);
  audit["kkt"] = io::to_json(kkt);
  audit["kkt"]["passed"] = kkt.passed(doc.config.solver.feas_tol);

  if (sink.to_dir()) {
    sink.emit("instance.json", io::instance_document(doc.config, inst).dump(2) + "\n", false);
    sink.emit("report.json", io::to_json(rep).dump(2) + "\n", false);
    sink.emit("audit.json", audit.dump(2) + "\n", false);
    if (opt.trace) {
      std::ostringstream t;
      io::write_trace_csv(t, rep.trace);
      sink.emit("trace.csv", t.str(), false);
    }
  }
  out << "status " << to_string(rep.status) << " after " << rep.iterations << " iterations\n"
      << policy_table(rep.policy) << "primary sum rate " << io::format_number(rep.objective)
      << "\nno-cooperation rate " << io::format_number(rep.baseline.r_p_bar)
      << "\neffective rate " << io::format_number(rep.effective_rate)
      << "\ncooperation successful " << (rep.cooperation_successful ? "yes" : "no") << "\n"
      << audit_summary(props);
  if (!sink.to_dir() && opt.trace) io::write_trace_csv(out, rep.trace);
  sink.finish(argv, &doc.config);
  return 0;
}

int cmd_region(const Options& opt, Sink& sink, const std::vector<std::string>& argv) {
  const auto doc = load(opt);
  const bool joint = opt.mode == "joint" || opt.mode == "both";
  const bool info = opt.mode == "info" || opt.mode == "both";
  if (!joint && !info) throw ConfigError("--mode must be joint, info or both");
  const Instance inst = instance_for(doc, opt);
  const auto grid = linspace(opt.rs_from, opt.rs_to, opt.steps);
  const auto points = rate_region(doc.config, inst, grid, joint, info, resolve_workers(opt.workers));
  std::ostringstream csv;
  io::write_region_csv(csv, points);
  sink.emit("region.csv", csv.str(), true);
  sink.finish(argv, &doc.config);
  return 0;
}

int cmd_coopprob(const Options& opt, Sink& sink, const std::vector<std::string>& argv) {
  const auto doc = load(opt);
  const auto grid = linspace(opt.rs_from, opt.rs_to, opt.steps);
  const auto sweep = cooperation_sweep(doc.config, grid, opt.realizations, opt.seed,
                                       resolve_workers(opt.workers));
  std::ostringstream csv;
  io::write_coopprob_csv(csv, sweep);
  sink.emit("coopprob.csv", csv.str(), true);
  sink.finish(argv, &doc.config);
  return 0;
}

int cmd_bsweep(const Options& opt, Sink& sink, const std::vector<std::string>& argv) {
  const auto doc = load(opt);
  const auto grid = linspace(opt.bmax_from, opt.bmax_to, opt.steps);
  const auto sweep = battery_sweep(doc.config, grid, opt.realizations, opt.seed,
                                   resolve_workers(opt.workers));
  std::ostringstream csv;
  io::write_bsweep_csv(csv, sweep);
  sink.emit("bsweep.csv", csv.str(), true);
  sink.finish(argv, &doc.config);
  return 0;
}

int cmd_oracle(const Options& opt, Sink& sink, const std::vector<std::string>& argv) {
  const auto doc = load(opt);
  const Instance inst = instance_for(doc, opt);
  const auto result = brute_force_solve(doc.config, inst.channels, inst.harvests, opt.grid_step,
                                        resolve_workers(opt.workers));
  Json j = io::to_json(result);
  j["instance"] = io::to_json(inst);
  sink.emit("oracle.json", j.dump(2) + "\n", true);
  sink.finish(argv, &doc.config);
  return 0;
}

}  // namespace

int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  CLI::App app{"Offline power policies for energy-harvesting primary/secondary cooperation",
               "ehcoop"};
  app.set_version_flag("--version", EHCOOP_VERSION);
  app.require_subcommand(1);
  Options opt;

  auto add_config = [&](CLI::App* c, bool required) {
    auto* o = c->add_option("--config", opt.config_path, "JSON scenario config");
    if (required) o->required();
    c->add_option("--seed", opt.seed, "master seed");
    c->add_option("--index", opt.index, "realization index under the master seed");
    c->add_option("--out", opt.out_dir, "output directory (writes a manifest)");
    c->add_option("--workers", opt.workers, "worker threads, 0 = all cores");
  };
  auto add_rs = [&](CLI::App* c) {
    c->add_option("--rs-from", opt.rs_from, "first secondary rate target");
    c->add_option("--rs-to", opt.rs_to, "last secondary rate target");
    c->add_option("--steps", opt.steps, "grid points");
  };

  auto* solve_cmd = app.add_subcommand("solve", "solve one instance");
  add_config(solve_cmd, true);
  solve_cmd->add_option("--mode", opt.mode, "joint or info");
  solve_cmd->add_flag("--trace", opt.trace, "record the outer-loop trace");

  auto* example_cmd = app.add_subcommand("example", "run the built-in five-slot instance");

  auto* region_cmd = app.add_subcommand("region", "rate-region curve for one realization");
  add_config(region_cmd, true);
  add_rs(region_cmd);
  region_cmd->add_option("--mode", opt.mode, "joint, info or both");

  auto* coop_cmd = app.add_subcommand("coopprob", "cooperation probability versus Rs_bar");
  add_config(coop_cmd, true);
  add_rs(coop_cmd);
  coop_cmd->add_option("--realizations", opt.realizations, "Monte Carlo realizations");

  auto* bsweep_cmd = app.add_subcommand("bsweep", "primary rate versus battery capacity");
  add_config(bsweep_cmd, true);
  bsweep_cmd->add_option("--bmax-from", opt.bmax_from, "first battery capacity");
  bsweep_cmd->add_option("--bmax-to", opt.bmax_to, "last battery capacity");
  bsweep_cmd->add_option("--steps", opt.steps, "grid points");
  bsweep_cmd->add_option("--realizations", opt.realizations, "Monte Carlo realizations");

  auto* oracle_cmd = app.add_subcommand("oracle", "brute-force solve, at most three slots");
  add_config(oracle_cmd, true);
  oracle_cmd->add_option("--grid-step", opt.grid_step, "transfer grid step, 0 = automatic");

  auto* generate_cmd = app.add_subcommand("generate", "sample an instance document");
  add_config(generate_cmd, false);

  std::vector<std::string> args(argv, argv + argc);
  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion& e) {
    out << EHCOOP_VERSION << "\n";
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "ehcoop: " << e.what() << "\n";
    return e.get_exit_code() == 0 ? 2 : e.get_exit_code();
  }

  try {
    if (*example_cmd) return cmd_example(out);
    CLI::App* active = app.get_subcommands().front();
    Sink sink(active->get_name(), opt, out);
    if (*solve_cmd) return cmd_solve(opt, sink, args, out);
    if (*region_cmd) return cmd_region(opt, sink, args);
    if (*coop_cmd) return cmd_coopprob(opt, sink, args);
    if (*bsweep_cmd) return cmd_bsweep(opt, sink, args);
    if (*oracle_cmd) return cmd_oracle(opt, sink, args);
    if (*generate_cmd) return cmd_generate(opt, sink, args);
  } catch (const std::exception& e) {
    err << "ehcoop: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

}  // namespace ehcoop::cli
