#pragma once

// Hand-encoded sample trial: N = 18, T = 8 weeks, phi = 0.5, one arrival
// every 2 weeks. Outcomes are keyed by patient number and assigned dose so
// the same script can be replayed under every strategy.
//   #5, #13         progress at week 1 (before the next arrival)
//   #8, #16         progress at week 3 (after the next arrival)
//   #14             progresses at week 1 if given dose <= 2
//   others          DLT when the dose reaches kDltFrom, else complete T

#include <algorithm>
#include <tuple>
#include <vector>

#include "titecrm/trial.hpp"

namespace figure1 {

inline constexpr int kN = 18;
inline constexpr double kArrivalEvery = 2.0;

// Indexed by patient number (entry 0 unused). 6 means "never".
inline constexpr int kDltFrom[] = {0, 2, 3, 2, 6, 4, 4, 2, 4, 5, 5, 6, 6, 6,
                                   5, 4, 5, 6, 6, 2, 4, 4, 3, 6, 6, 6, 6, 6};
inline constexpr double kDltWeek[] = {0, 7, 7, 6, 5, 3, 3, 6, 2, 4, 3, 1, 3, 7,
                                      5, 3, 2, 5, 6, 5, 6, 1, 6, 3, 3, 3, 3, 3};

inline titecrm::DesignConfig design(double phi = 0.5) {
  titecrm::DesignConfig d;
  d.sample_size = kN;
  d.phi = phi;
  d.halfwidth = 0.09;
  return d;
}

/// Relative terminal event for a patient given the dose they received.
inline std::pair<titecrm::EventKind, double> outcome(int patient, titecrm::DoseLevel dose) {
  using titecrm::EventKind;
  if (patient == 5 || patient == 13 || (patient == 14 && dose <= 2)) return {EventKind::ProgressionObserved, 1.0};
  if (patient == 8 || patient == 16) return {EventKind::ProgressionObserved, 3.0};
  if (patient < static_cast<int>(std::size(kDltFrom)) && dose >= kDltFrom[patient])
    return {EventKind::DLTObserved, kDltWeek[patient]};
  return {EventKind::WindowCompleted, 8.0};
}

struct Run {
  titecrm::TrialState state;
  std::vector<titecrm::DoseLevel> doses;  ///< dose per patient, in order
};

/// Drives the trial to completion: outcomes due by an arrival are folded
/// before that arrival is assigned.
inline Run run(titecrm::Strategy strategy, double phi = 0.5) {
  using namespace titecrm;
  TrialState state(design(phi), strategy);
  std::vector<TrialEvent> due;
  std::vector<DoseLevel> doses;
  for (int tick = 0; tick < 1000; ++tick) {
    const double now = tick * kArrivalEvery;
    std::sort(due.begin(), due.end(),
              [](const auto& a, const auto& b) { return std::tie(a.time, a.patient_id) < std::tie(b.time, b.patient_id); });
    while (!due.empty() && due.front().time <= now) {
      state.apply(due.front());
      due.erase(due.begin());
    }
    if (state.enrollment_open()) {
      const DoseLevel dose = state.assign_next(now).dose;
      const int id = state.enrolled_count();
      doses.push_back(dose);
      const auto [kind, rel] = outcome(id, dose);
      due.push_back({now + rel, id, kind, 0});
    } else if (state.pending_count() == 0) {
      break;
    }
  }
  return {std::move(state), std::move(doses)};
}

}  // namespace figure1
