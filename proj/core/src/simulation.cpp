#include "titecrm/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <map>
#include <mutex>
#include <ostream>
#include <thread>
#include <tuple>

namespace titecrm {

void StudyConfig::validate() const {
  design.validate();
  if (replicates < 1) throw ValidationError("replicates must be >= 1");
  if (strategies.empty()) throw ValidationError("at least one strategy is required");
  if (scenarios.empty()) throw ValidationError("at least one scenario is required");
  for (double phi : phis)
    if (!(phi >= 0.0 && phi <= 1.0)) throw ValidationError("phi values must lie in [0, 1]");
  const bool needs_phi = std::any_of(strategies.begin(), strategies.end(), [](Strategy s) { return s != Strategy::A; });
  if (needs_phi && phis.empty()) throw ValidationError("strategies B and C need at least one phi value");
  for (const auto& s : scenarios)
    if (static_cast<int>(s.tox_probs.size()) != design.num_doses)
      throw ValidationError("scenario '" + s.label + "' does not have num_doses entries");
}

TrialEvent resolve_outcome(const LatentOutcome& latent, int patient_id, Weeks enroll_time, Weeks window,
                           const SimulationOptions& options) {
  constexpr double inf = std::numeric_limits<double>::infinity();
  const double u = latent.tox_time.value_or(inf);
  const double p = latent.prog_time.value_or(inf);
  const auto recorded = [&](double t) { return options.weekly_assessment ? std::min(std::ceil(t), window) : t; };
  if (u <= std::min(p, window)) return {enroll_time + recorded(u), patient_id, EventKind::DLTObserved, 0};
  if (p < std::min(u, window)) {
    const double rp = recorded(p);
    if (rp < window) return {enroll_time + rp, patient_id, EventKind::ProgressionObserved, 0};
  }
  return {enroll_time + window, patient_id, EventKind::WindowCompleted, 0};
}

namespace {

ReplicateRun run_with_model(const DesignConfig& design, const std::shared_ptr<const PosteriorModel>& model,
                            const ScenarioSpec& scenario, Strategy strategy, std::uint64_t seed,
                            std::uint64_t replicate, const SimulationOptions& options) {
  TrialState state(design, strategy, model);
  std::vector<TrialEvent> due;
  const auto by_time = [](const TrialEvent& a, const TrialEvent& b) {
    return std::tie(a.time, a.patient_id) < std::tie(b.time, b.patient_id);
  };
  constexpr std::uint64_t kMaxTicks = 1'000'000;
  for (std::uint64_t tick_no = 0; tick_no < kMaxTicks; ++tick_no) {
    const Weeks tick = static_cast<double>(tick_no) * design.accrual_interval;
    // Outcomes observed up to and including the arrival time are known
    // before the arriving patient is assigned.
    std::sort(due.begin(), due.end(), by_time);
    auto first_future = std::find_if(due.begin(), due.end(), [&](const TrialEvent& e) { return e.time > tick; });
    for (auto it = due.begin(); it != first_future; ++it) state.apply(*it);
    due.erase(due.begin(), first_future);

    if (state.enrollment_open()) {
      const auto rec = state.assign_next(tick);
      const int id = state.enrolled_count();
      PatientStream rng(seed, replicate, static_cast<std::uint64_t>(id));
      const auto latent = draw_outcome(scenario, rec.dose, design.window, rng);
      due.push_back(resolve_outcome(latent, id, tick, design.window, options));
    } else if (state.pending_count() == 0) {
      auto outcome = finalize_trial(state);
      return {std::move(outcome), std::move(state)};
    }
  }
  throw ContractViolation("simulated trial did not terminate");
}

template <typename Fn>
void parallel_for(int count, int threads, Fn&& fn) {
  if (threads <= 0) threads = static_cast<int>(std::max(1u, std::thread::hardware_concurrency()));
  threads = std::min(threads, count);
  if (threads <= 1) {
    for (int i = 0; i < count; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr error;
  std::mutex error_mutex;
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(threads));
  for (int t = 0; t < threads; ++t) {
    pool.emplace_back([&] {
      for (int i = next++; i < count; i = next++) {
        try {
          fn(i);
        } catch (...) {
          std::lock_guard lock(error_mutex);
          if (!error) error = std::current_exception();
        }
      }
    });
  }
  for (auto& th : pool) th.join();
  if (error) std::rethrow_exception(error);
}

double percent_se(double pct, int n) {
  const double p = pct / 100.0;
  return 100.0 * std::sqrt(std::max(0.0, p * (1.0 - p)) / n);
}

std::pair<double, double> mean_and_se(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  const double mean = sum / static_cast<double>(v.size());
  if (v.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  return {mean, sd / std::sqrt(static_cast<double>(v.size()))};
}

}  // namespace

ReplicateRun run_replicate(const DesignConfig& design, const ScenarioSpec& scenario, Strategy strategy,
                           std::uint64_t seed, std::uint64_t replicate, const SimulationOptions& options) {
  design.validate();
  if (static_cast<int>(scenario.tox_probs.size()) != design.num_doses)
    throw ValidationError("scenario dose count does not match design");
  auto model = std::make_shared<const PosteriorModel>(
      build_skeleton(design.target, design.halfwidth, design.prior_mtd, design.num_doses), design.prior_sd);
  return run_with_model(design, model, scenario, strategy, seed, replicate, options);
}

OperatingCharacteristics aggregate(const std::vector<TrialOutcome>& outcomes, const ScenarioSpec& scenario,
                                   Strategy strategy, double phi, int sample_size) {
  OperatingCharacteristics oc;
  oc.scenario_label = scenario.label;
  oc.tox_row = scenario.tox_row;
  oc.prog_row = scenario.prog_row;
  oc.strategy = strategy;
  oc.phi = phi;
  oc.sample_size = sample_size;
  oc.replicates = static_cast<int>(outcomes.size());
  oc.true_mtd = scenario.true_mtd;
  const auto k = scenario.tox_probs.size();
  std::vector<int> selected(k, 0);
  std::vector<double> added, duration;
  added.reserve(outcomes.size());
  duration.reserve(outcomes.size());
  for (const auto& o : outcomes) {
    ++selected.at(static_cast<std::size_t>(o.mtd - 1));
    added.push_back(o.added_patients);
    duration.push_back(o.duration);
  }
  const int r = oc.replicates;
  for (std::size_t d = 0; d < k; ++d) {
    const double pct = 100.0 * selected[d] / r;
    oc.selection_pct.push_back(pct);
    oc.se_selection.push_back(percent_se(pct, r));
  }
  const auto truth = static_cast<std::size_t>(scenario.true_mtd - 1);
  oc.pcs = 100.0 * selected[truth] / r;
  oc.se_pcs = percent_se(oc.pcs, r);
  if (truth + 1 < k) {
    int over = 0;
    for (std::size_t d = truth + 1; d < k; ++d) over += selected[d];
    oc.pos = 100.0 * over / r;
    oc.se_pos = percent_se(*oc.pos, r);
  }
  std::tie(oc.mean_added, oc.se_added) = mean_and_se(added);
  oc.pct_added = 100.0 * oc.mean_added / sample_size;
  std::tie(oc.mean_duration, oc.se_duration) = mean_and_se(duration);
  return oc;
}

std::vector<OperatingCharacteristics> run_study(const StudyConfig& config) {
  config.validate();
  auto model = std::make_shared<const PosteriorModel>(
      build_skeleton(config.design.target, config.design.halfwidth, config.design.prior_mtd, config.design.num_doses),
      config.design.prior_sd);

  std::vector<Strategy> strategies = config.strategies;
  std::sort(strategies.begin(), strategies.end());
  strategies.erase(std::unique(strategies.begin(), strategies.end()), strategies.end());
  std::vector<double> phis = config.phis;
  std::sort(phis.begin(), phis.end());
  phis.erase(std::unique(phis.begin(), phis.end()), phis.end());

  std::vector<OperatingCharacteristics> out;
  for (const auto& scenario : config.scenarios) {
    for (Strategy strategy : strategies) {
      const std::vector<double> cell_phis = strategy == Strategy::A ? std::vector<double>{0.0} : phis;
      for (double phi : cell_phis) {
        DesignConfig design = config.design;
        design.phi = phi;
        std::vector<TrialOutcome> outcomes(static_cast<std::size_t>(config.replicates));
        parallel_for(config.replicates, config.threads, [&](int r) {
          outcomes[static_cast<std::size_t>(r)] =
              run_with_model(design, model, scenario, strategy, config.base_seed, static_cast<std::uint64_t>(r),
                             config.options)
                  .outcome;
        });
        out.push_back(aggregate(outcomes, scenario, strategy, phi, design.sample_size));
      }
    }
  }
  return out;
}

int ComparisonReport::violations() const {
  return static_cast<int>(std::count_if(cells.begin(), cells.end(), [](const auto& c) { return c.ordering_violation; }));
}

ComparisonReport compare_strategies(const std::vector<OperatingCharacteristics>& results) {
  using Key = std::tuple<std::string, Strategy, double>;
  std::map<Key, const OperatingCharacteristics*> index;
  std::vector<std::pair<std::string, double>> cells;
  for (const auto& r : results) {
    index[{r.scenario_label, r.strategy, r.phi}] = &r;
    if (r.strategy != Strategy::A) {
      std::pair<std::string, double> cell{r.scenario_label, r.phi};
      if (std::find(cells.begin(), cells.end(), cell) == cells.end()) cells.push_back(cell);
    }
  }
  ComparisonReport report;
  const auto find = [&](const std::string& label, Strategy s, double phi) -> const OperatingCharacteristics* {
    auto it = index.find({label, s, phi});
    if (it == index.end()) {
      char buf[64];
      std::snprintf(buf, sizeof buf, "/%s/%g", std::string(to_string(s)).c_str(), phi);
      report.missing.push_back(label + buf);
      return nullptr;
    }
    return it->second;
  };
  for (const auto& [label, phi] : cells) {
    const auto* a = find(label, Strategy::A, 0.0);
    const auto* b = find(label, Strategy::B, phi);
    const auto* c = find(label, Strategy::C, phi);
    if (!a || !b || !c) continue;
    CellComparison cc;
    cc.scenario_label = label;
    cc.phi = phi;
    cc.pcs_a = a->pcs;
    cc.pcs_b = b->pcs;
    cc.pcs_c = c->pcs;
    cc.pos_a = a->pos;
    cc.pos_b = b->pos;
    cc.pos_c = c->pos;
    cc.added_b = b->mean_added;
    cc.added_c = c->mean_added;
    cc.d_pcs_ba = b->pcs - a->pcs;
    cc.d_pcs_cb = c->pcs - b->pcs;
    if (a->pos && b->pos && c->pos) {
      cc.d_pos_ba = *b->pos - *a->pos;
      cc.d_pos_cb = *c->pos - *b->pos;
      cc.se_pos_ba = std::hypot(*a->se_pos, *b->se_pos);
      cc.se_pos_cb = std::hypot(*b->se_pos, *c->se_pos);
      cc.ordering_violation = cc.d_pos_ba > 3.0 * cc.se_pos_ba || cc.d_pos_cb > 3.0 * cc.se_pos_cb;
    }
    report.cells.push_back(std::move(cc));
  }
  return report;
}

std::vector<CalibrationPoint> calibrate_halfwidth(const StudyConfig& config, const std::vector<double>& halfwidths) {
  std::vector<CalibrationPoint> out;
  for (double hw : halfwidths) {
    StudyConfig cfg = config;
    cfg.design.halfwidth = hw;
    cfg.strategies = {Strategy::A};
    const auto results = run_study(cfg);
    double sum = 0.0;
    for (const auto& r : results) sum += r.pcs;
    out.push_back({hw, sum / static_cast<double>(results.size())});
  }
  return out;
}

namespace {
std::string fixed(double v, int digits = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}
std::string fixed(const std::optional<double>& v, int digits = 4) { return v ? fixed(*v, digits) : "n/a"; }
}  // namespace

void write_results_csv(std::ostream& os, const std::vector<OperatingCharacteristics>& results) {
  os << "scenario_label,tox_row,prog_row,strategy,phi,N,PCS,POS,mean_added,pct_added,mean_duration,mc_se_pcs\n";
  for (const auto& r : results) {
    os << r.scenario_label << ',' << r.tox_row << ',' << r.prog_row << ',' << to_string(r.strategy) << ','
       << fixed(r.phi, 2) << ',' << r.sample_size << ',' << fixed(r.pcs) << ',' << fixed(r.pos) << ','
       << fixed(r.mean_added) << ',' << fixed(r.pct_added) << ',' << fixed(r.mean_duration) << ','
       << fixed(r.se_pcs) << '\n';
  }
}

void write_selection_csv(std::ostream& os, const std::vector<OperatingCharacteristics>& results) {
  os << "scenario_label,strategy,phi,N,dose,pct_selected,mc_se\n";
  for (const auto& r : results) {
    for (std::size_t d = 0; d < r.selection_pct.size(); ++d) {
      os << r.scenario_label << ',' << to_string(r.strategy) << ',' << fixed(r.phi, 2) << ',' << r.sample_size << ','
         << d + 1 << ',' << fixed(r.selection_pct[d]) << ',' << fixed(r.se_selection[d]) << '\n';
    }
  }
}

void write_comparison_csv(std::ostream& os, const ComparisonReport& report) {
  os << "scenario_label,phi,PCS_A,PCS_B,PCS_C,POS_A,POS_B,POS_C,dPOS_BA,dPOS_CB,se_dPOS_BA,se_dPOS_CB,added_B,added_C,"
        "ordering_violation\n";
  for (const auto& c : report.cells) {
    os << c.scenario_label << ',' << fixed(c.phi, 2) << ',' << fixed(c.pcs_a) << ',' << fixed(c.pcs_b) << ','
       << fixed(c.pcs_c) << ',' << fixed(c.pos_a) << ',' << fixed(c.pos_b) << ',' << fixed(c.pos_c) << ','
       << fixed(c.d_pos_ba) << ',' << fixed(c.d_pos_cb) << ',' << fixed(c.se_pos_ba) << ',' << fixed(c.se_pos_cb)
       << ',' << fixed(c.added_b) << ',' << fixed(c.added_c) << ',' << (c.ordering_violation ? 1 : 0) << '\n';
  }
}

}  // namespace titecrm
