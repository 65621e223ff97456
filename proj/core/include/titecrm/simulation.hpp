#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "titecrm/scenario.hpp"
#include "titecrm/trial.hpp"

namespace titecrm {

struct SimulationOptions {
  /// Record event times at whole weeks (rounded up) instead of continuous time.
  bool weekly_assessment = false;
};

struct StudyConfig {
  DesignConfig design;
  std::vector<Strategy> strategies{Strategy::A, Strategy::B, Strategy::C};
  std::vector<double> phis{0.5};
  std::vector<ScenarioSpec> scenarios;
  int replicates = 1000;
  std::uint64_t base_seed = 1;
  SimulationOptions options;
  /// Worker threads; 0 picks std::thread::hardware_concurrency().
  int threads = 0;

  void validate() const;
};

struct ReplicateRun {
  TrialOutcome outcome;
  TrialState state;
};

/// Observed terminal event for a latent outcome: first of U, P and T, with
/// DLT winning exact ties. Under weekly assessment the recorded time is
/// ceil(latent) and a progression rounding up to T becomes a completion.
TrialEvent resolve_outcome(const LatentOutcome& latent, int patient_id, Weeks enroll_time, Weeks window,
                           const SimulationOptions& options);

/// One full trial. `design.phi` is the phi used by strategies B and C.
/// Latent outcomes come from PatientStream(seed, replicate, patient_id).
ReplicateRun run_replicate(const DesignConfig& design, const ScenarioSpec& scenario, Strategy strategy,
                           std::uint64_t seed, std::uint64_t replicate, const SimulationOptions& options = {});

struct OperatingCharacteristics {
  std::string scenario_label;
  int tox_row = 0;
  int prog_row = 0;
  Strategy strategy = Strategy::A;
  double phi = 0.0;  ///< effective phi (0 for strategy A)
  int sample_size = 0;
  int replicates = 0;
  DoseLevel true_mtd = 1;
  double pcs = 0.0;                ///< percent
  std::optional<double> pos;       ///< percent; absent when the true MTD is the top dose
  double mean_added = 0.0;
  double pct_added = 0.0;          ///< mean_added as percent of N
  double mean_duration = 0.0;
  std::vector<double> selection_pct;
  double se_pcs = 0.0;
  std::optional<double> se_pos;
  double se_added = 0.0;
  double se_duration = 0.0;
  std::vector<double> se_selection;
};

/// Aggregates per-replicate outcomes in replicate order.
OperatingCharacteristics aggregate(const std::vector<TrialOutcome>& outcomes, const ScenarioSpec& scenario,
                                   Strategy strategy, double phi, int sample_size);

/// Every (scenario, strategy, phi) cell, sorted by scenario, then strategy,
/// then phi. Strategy A is run once per scenario and reported with phi = 0.
/// Output is independent of the thread count.
std::vector<OperatingCharacteristics> run_study(const StudyConfig& config);

struct CellComparison {
  std::string scenario_label;
  double phi = 0.0;
  std::optional<double> pos_a, pos_b, pos_c;
  double pcs_a = 0.0, pcs_b = 0.0, pcs_c = 0.0;
  double added_b = 0.0, added_c = 0.0;
  double d_pcs_ba = 0.0, d_pcs_cb = 0.0;
  double d_pos_ba = 0.0, d_pos_cb = 0.0;
  double se_pos_ba = 0.0, se_pos_cb = 0.0;
  /// POS_C <= POS_B <= POS_A violated by more than 3 standard errors.
  bool ordering_violation = false;
};

struct ComparisonReport {
  std::vector<CellComparison> cells;
  std::vector<std::string> missing;  ///< "label/strategy/phi" entries not found
  int violations() const;
};

ComparisonReport compare_strategies(const std::vector<OperatingCharacteristics>& results);

struct CalibrationPoint {
  double halfwidth = 0.0;
  double mean_pcs = 0.0;
};

/// Grid search over skeleton halfwidths using strategy A on the given
/// scenarios; the best point maximizes the mean PCS (first wins on ties).
std::vector<CalibrationPoint> calibrate_halfwidth(const StudyConfig& config, const std::vector<double>& halfwidths);

void write_results_csv(std::ostream& os, const std::vector<OperatingCharacteristics>& results);
void write_selection_csv(std::ostream& os, const std::vector<OperatingCharacteristics>& results);
void write_comparison_csv(std::ostream& os, const ComparisonReport& report);

}  // namespace titecrm
