#include <CLI11.hpp>

#include <csignal>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>
#include <thread>

#include "titecrm/conduct.hpp"
#include "titecrm/event_log.hpp"
#include "titecrm/http_api.hpp"
#include "titecrm/simulation.hpp"
#include "titecrm/study_config.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace titecrm;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 1;
constexpr int kExitData = 2;

struct DataError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  out << content;
  if (!out) throw DataError("cannot write " + path.string());
}

struct StudyOverrides {
  std::string spec;
  int replicates = 0;
  long long seed = -1;
  int threads = 0;
  std::vector<std::string> strategies;
  std::vector<double> phis;
  std::vector<std::string> scenario_labels;
};

void add_study_options(CLI::App* cmd, StudyOverrides& o) {
  cmd->add_option("config", o.spec, "Study file (YAML/JSON), run manifest, or preset name")->required();
  cmd->add_option("--replicates,-r", o.replicates, "Override the replicate count")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", o.seed, "Override the base seed")->check(CLI::NonNegativeNumber);
  cmd->add_option("--threads,-j", o.threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
  cmd->add_option("--strategies", o.strategies, "Restrict to these strategies (A B C)");
  cmd->add_option("--phi", o.phis, "Override the phi list");
  cmd->add_option("--scenario", o.scenario_labels, "Only run scenarios with these labels");
}

StudyConfig resolve(const StudyOverrides& o) {
  StudyConfig cfg = resolve_study(o.spec);
  if (o.replicates > 0) cfg.replicates = o.replicates;
  if (o.seed >= 0) cfg.base_seed = static_cast<std::uint64_t>(o.seed);
  cfg.threads = o.threads;
  if (!o.strategies.empty()) {
    cfg.strategies.clear();
    for (const auto& s : o.strategies) cfg.strategies.push_back(parse_strategy(s));
  }
  if (!o.phis.empty()) cfg.phis = o.phis;
  if (!o.scenario_labels.empty()) {
    std::vector<ScenarioSpec> kept;
    for (const auto& label : o.scenario_labels) {
      auto it = std::find_if(cfg.scenarios.begin(), cfg.scenarios.end(),
                             [&](const ScenarioSpec& s) { return s.label == label; });
      if (it == cfg.scenarios.end()) throw ValidationError("no scenario labelled '" + label + "'");
      kept.push_back(*it);
    }
    cfg.scenarios = std::move(kept);
  }
  cfg.validate();
  return cfg;
}

int cmd_skeleton(double target, double halfwidth, int nu, int k) {
  const Skeleton s = build_skeleton(target, halfwidth, nu, k);
  std::cout << std::fixed << std::setprecision(4);
  for (int d = 1; d <= k; ++d) std::cout << (d > 1 ? " " : "") << s.prob(d);
  std::cout << '\n';
  return kExitOk;
}

int cmd_simulate(const StudyOverrides& o, const fs::path& out_dir) {
  const StudyConfig cfg = resolve(o);
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec || !fs::is_directory(out_dir)) throw DataError("cannot create output directory " + out_dir.string());

  const auto results = run_study(cfg);
  std::ostringstream results_csv, selection_csv;
  write_results_csv(results_csv, results);
  write_selection_csv(selection_csv, results);
  write_file(out_dir / "results.csv", results_csv.str());
  write_file(out_dir / "selection.csv", selection_csv.str());
  json artifacts{{"results", "results.csv"}, {"selection", "selection.csv"}};

  const auto report = compare_strategies(results);
  if (report.missing.empty() && !report.cells.empty()) {
    std::ostringstream comparison_csv;
    write_comparison_csv(comparison_csv, report);
    write_file(out_dir / "comparison.csv", comparison_csv.str());
    artifacts["comparison"] = "comparison.csv";
  }

  const json manifest{{"tool", "titecrm"},      {"version", TITECRM_VERSION}, {"timestamp", utc_timestamp()},
                      {"seed", cfg.base_seed},  {"source", o.spec},          {"artifacts", artifacts},
                      {"study", study_to_json(cfg)}};
  write_file(out_dir / "manifest.json", manifest.dump(2) + "\n");

  std::cout << "wrote " << results.size() << " cells (" << cfg.replicates << " replicates each) to " << out_dir.string()
            << '\n';
  if (artifacts.contains("comparison"))
    std::cout << "strategy-ordering violations: " << report.violations() << " of " << report.cells.size() << " cells\n";
  return kExitOk;
}

int cmd_trace(const StudyOverrides& o, const std::string& label, const std::string& strategy_text, double phi,
              int replicate, const std::string& out_path) {
  const StudyConfig cfg = resolve(o);
  auto it = std::find_if(cfg.scenarios.begin(), cfg.scenarios.end(),
                         [&](const ScenarioSpec& s) { return s.label == label; });
  if (it == cfg.scenarios.end()) throw ValidationError("no scenario labelled '" + label + "'");
  DesignConfig design = cfg.design;
  if (phi >= 0.0) design.phi = phi;
  const Strategy strategy = parse_strategy(strategy_text);
  const auto run = run_replicate(design, *it, strategy, cfg.base_seed, static_cast<std::uint64_t>(replicate),
                                 cfg.options);
  EventLog log{header_for(run.state, label + "-" + std::string(to_string(strategy)) + "-r" + std::to_string(replicate)),
               run.state.events(), {}};
  std::ostringstream os;
  write_event_log(os, log);
  if (out_path.empty() || out_path == "-") {
    std::cout << os.str();
  } else {
    write_file(out_path, os.str());
    std::cerr << "final MTD " << run.outcome.mtd << ", enrolled " << run.outcome.enrolled << '\n';
  }
  return kExitOk;
}

int cmd_replay(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open " + path);
  EventLog log;
  TrialState state = [&] {
    try {
      log = read_event_log(in);
      return replay(log);
    } catch (const LogFormatError& e) {
      throw DataError(path + ":" + std::to_string(e.line()) + ": " + e.what());
    }
  }();
  json out{{"trial_id", log.header.trial_id},
           {"strategy", to_string(state.strategy())},
           {"events", state.events().size()},
           {"enrolled", state.enrolled_count()},
           {"evaluable", state.evaluable_count()},
           {"pending", state.pending_count()},
           {"unevaluable", state.unevaluable_count()},
           {"clock", state.clock()}};
  if (state.pending_count() == 0 && state.evaluable_count() == state.design().sample_size) {
    const auto outcome = finalize_trial(state);
    out["final_mtd"] = outcome.mtd;
    out["added_patients"] = outcome.added_patients;
    out["p_hat"] = outcome.p_hat;
  } else {
    out["final_mtd"] = nullptr;
  }
  std::cout << out.dump(2) << '\n';
  return kExitOk;
}

int cmd_calibrate(const StudyOverrides& o, const std::vector<double>& halfwidths) {
  const StudyConfig cfg = resolve(o);
  const auto points = calibrate_halfwidth(cfg, halfwidths);
  std::cout << "halfwidth,mean_pcs\n" << std::fixed;
  double best_pcs = -1.0, best_hw = 0.0;
  for (const auto& p : points) {
    std::cout << std::setprecision(3) << p.halfwidth << ',' << std::setprecision(4) << p.mean_pcs << '\n';
    if (p.mean_pcs > best_pcs) best_pcs = p.mean_pcs, best_hw = p.halfwidth;
  }
  std::cerr << "best halfwidth " << best_hw << '\n';
  return kExitOk;
}

int cmd_presets(const std::string& show) {
  if (show.empty()) {
    for (const auto& name : preset_names()) std::cout << name << '\n';
    return kExitOk;
  }
  json j = study_to_json(preset(show));
  j["scenarios"] = "library";
  std::cout << j.dump(2) << '\n';
  return kExitOk;
}

int cmd_serve(const std::string& host, int port, const std::string& store) {
  sigset_t signals;
  sigemptyset(&signals);
  sigaddset(&signals, SIGINT);
  sigaddset(&signals, SIGTERM);
  pthread_sigmask(SIG_BLOCK, &signals, nullptr);

  std::unique_ptr<ConductService> service;
  try {
    service = store.empty() ? std::make_unique<ConductService>() : std::make_unique<ConductService>(store);
  } catch (const StoreError& e) {
    throw DataError(std::string("corrupt store: ") + e.what());
  }
  if (store.empty()) std::cerr << "warning: no --store given; trials are kept in memory and lost on exit\n";
  else std::cerr << "loaded " << service->trial_ids().size() << " trial(s) from " << store << '\n';

  HttpServer server(*service);
  int bound = 0;
  try {
    bound = server.bind(host, port);
  } catch (const std::runtime_error& e) {
    throw DataError(e.what());
  }
  std::cout << "listening on http://" << host << ':' << bound << std::endl;

  std::thread waiter([&] {
    int sig = 0;
    sigwait(&signals, &sig);
    server.stop();
  });
  server.listen();
  // listen() also returns on internal failure; wake the waiter either way.
  pthread_kill(waiter.native_handle(), SIGTERM);
  waiter.join();
  std::cerr << "stopped\n";
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"TITE-CRM dose-finding: skeletons, simulation studies and live trial conduct"};
  app.set_version_flag("--version", std::string(TITECRM_VERSION));
  app.require_subcommand(1);

  double target = 0.25, halfwidth = 0.10;
  int nu = 3, k = 5;
  auto* skeleton = app.add_subcommand("skeleton", "Print an indifference-interval skeleton");
  skeleton->add_option("--target", target, "Target DLT probability");
  skeleton->add_option("--halfwidth", halfwidth, "Indifference interval halfwidth");
  skeleton->add_option("--nu", nu, "Prior MTD level (1-based)");
  skeleton->add_option("--k", k, "Number of dose levels");

  StudyOverrides sim_opts;
  std::string out_dir = "results";
  auto* simulate = app.add_subcommand("simulate", "Run a simulation study and write CSV tables plus a manifest");
  add_study_options(simulate, sim_opts);
  simulate->add_option("--out,-o", out_dir, "Output directory");

  StudyOverrides trace_opts;
  std::string trace_label, trace_strategy = "C", trace_out;
  double trace_phi = -1.0;
  int trace_replicate = 0;
  auto* trace = app.add_subcommand("trace", "Write the event log of one simulated trial");
  add_study_options(trace, trace_opts);
  trace->add_option("--label", trace_label, "Scenario label")->required();
  trace->add_option("--strategy", trace_strategy, "Strategy A, B or C");
  trace->add_option("--trace-phi", trace_phi, "phi for this trace (defaults to the config's first phi)");
  trace->add_option("--replicate", trace_replicate, "Replicate index")->check(CLI::NonNegativeNumber);
  trace->add_option("--out,-o", trace_out, "Output file (default stdout)");

  std::string replay_path;
  auto* replay_cmd = app.add_subcommand("replay", "Fold an event log and print the resulting trial state");
  replay_cmd->add_option("log", replay_path, "Event log (.jsonl)")->required();

  StudyOverrides cal_opts;
  std::vector<double> halfwidths{0.04, 0.05, 0.06, 0.07, 0.08, 0.09, 0.10, 0.11, 0.12};
  auto* calibrate = app.add_subcommand("calibrate", "Grid-search the skeleton halfwidth with strategy A");
  add_study_options(calibrate, cal_opts);
  calibrate->add_option("--halfwidths", halfwidths, "Candidate halfwidths");

  std::string show;
  auto* presets = app.add_subcommand("presets", "List built-in study presets");
  presets->add_option("--show", show, "Print the resolved configuration of a preset");

  std::string host = "127.0.0.1", store;
  int port = 8080;
  auto* serve = app.add_subcommand("serve", "Run the trial conduct HTTP service");
  serve->add_option("--host", host, "Listen address");
  serve->add_option("--port", port, "Port (0 picks a free port)")->check(CLI::Range(0, 65535));
  serve->add_option("--store", store, "Directory of per-trial event logs; omitted = in-memory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (*skeleton) return cmd_skeleton(target, halfwidth, nu, k);
    if (*simulate) return cmd_simulate(sim_opts, out_dir);
    if (*trace) return cmd_trace(trace_opts, trace_label, trace_strategy, trace_phi, trace_replicate, trace_out);
    if (*replay_cmd) return cmd_replay(replay_path);
    if (*calibrate) return cmd_calibrate(cal_opts, halfwidths);
    if (*presets) return cmd_presets(show);
    if (*serve) return cmd_serve(host, port, store);
  } catch (const DataError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitData;
  }
  return kExitUsage;
}
