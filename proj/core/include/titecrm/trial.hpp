#pragma once

#include <memory>
#include <optional>
#include <string_view>
#include <utility>
#include <vector>

#include "titecrm/crm.hpp"
#include "titecrm/design.hpp"

namespace titecrm {

enum class PatientStatus { Pending, CompletedNoEvent, DLT, ProgressedEvaluable, ProgressedUnevaluable };
enum class Evaluability { Evaluable, Unevaluable, Pending };
enum class EventKind { Enrolled, DLTObserved, ProgressionObserved, WindowCompleted };

std::string_view to_string(PatientStatus s);
std::string_view to_string(EventKind k);
EventKind parse_event_kind(std::string_view text);

/// Raised for events that reference a patient the trial does not know.
class UnknownPatient : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

struct PatientRecord {
  int patient_id = 0;
  Weeks enroll_time = 0.0;
  DoseLevel dose = 1;
  std::optional<Weeks> tox_time;   ///< U, relative to enrollment
  std::optional<Weeks> prog_time;  ///< P, relative to enrollment
  PatientStatus status = PatientStatus::Pending;
  /// Strategy C: weight already used by earlier assignments, kept after an
  /// unevaluable progression. Unset for such a patient means "excluded".
  std::optional<double> frozen_weight;
  std::optional<Weeks> resolved_at;  ///< absolute time of the terminal event

  bool operator==(const PatientRecord&) const = default;
};

struct TrialEvent {
  Weeks time = 0.0;
  int patient_id = 0;
  EventKind kind = EventKind::Enrolled;
  DoseLevel dose = 0;  ///< Enrolled only

  bool operator==(const TrialEvent&) const = default;
};

struct SnapshotEntry {
  int patient_id = 0;
  Observation obs;

  bool operator==(const SnapshotEntry&) const = default;
};

struct AssignmentEntry {
  Weeks time = 0.0;
  int patient_id = 0;
  DoseLevel dose = 1;
  std::vector<SnapshotEntry> weights_used;

  bool operator==(const AssignmentEntry&) const = default;
};

Evaluability evaluability(const PatientRecord& patient, double phi, Weeks window);

/// Sequential trial history. Events are folded in log order; the fold is the
/// only way state changes, so replaying a log reproduces the state exactly.
class TrialState {
 public:
  TrialState(DesignConfig design, Strategy strategy);
  TrialState(DesignConfig design, Strategy strategy, Skeleton skeleton);
  /// Shares a prebuilt posterior model (its skeleton defines the doses).
  TrialState(DesignConfig design, Strategy strategy, std::shared_ptr<const PosteriorModel> model);

  const DesignConfig& design() const { return design_; }
  Strategy strategy() const { return strategy_; }
  const Skeleton& skeleton() const { return model_->skeleton(); }
  const PosteriorModel& model() const { return *model_; }
  Weeks clock() const { return clock_; }
  const std::vector<PatientRecord>& patients() const { return patients_; }
  const std::vector<AssignmentEntry>& assignment_log() const { return assignments_; }
  const std::vector<TrialEvent>& events() const { return events_; }
  const PatientRecord& patient(int patient_id) const;

  double effective_phi() const { return design_.effective_phi(strategy_); }
  int evaluable_count() const { return evaluable_; }
  int pending_count() const { return pending_; }
  int unevaluable_count() const { return unevaluable_; }
  int enrolled_count() const { return static_cast<int>(patients_.size()); }
  DoseLevel highest_tried() const { return highest_tried_; }
  bool enrollment_open() const { return evaluable_ + pending_ < design_.sample_size; }

  /// Observations the weighted likelihood sees at time `now` (>= clock).
  std::vector<SnapshotEntry> snapshot(Weeks now) const;

  /// Folds one event. Throws ValidationError (or UnknownPatient) for
  /// out-of-order, duplicate-terminal or otherwise inadmissible events.
  void apply(const TrialEvent& event);

  /// Enrolls the next patient at `now` on the recommended dose.
  Recommendation assign_next(Weeks now);

  bool operator==(const TrialState& other) const;

 private:
  void enroll(Weeks time, DoseLevel dose, std::vector<SnapshotEntry> used);
  void check_time(Weeks time) const;
  std::optional<double> frozen_weight_for(const PatientRecord& p) const;

  DesignConfig design_;
  Strategy strategy_;
  std::shared_ptr<const PosteriorModel> model_;
  Weeks clock_ = 0.0;
  std::vector<PatientRecord> patients_;
  std::vector<AssignmentEntry> assignments_;
  std::vector<TrialEvent> events_;
  int evaluable_ = 0;
  int pending_ = 0;
  int unevaluable_ = 0;
  DoseLevel highest_tried_ = 0;
};

std::vector<Observation> observations_of(const std::vector<SnapshotEntry>& entries);

inline std::vector<SnapshotEntry> likelihood_snapshot(const TrialState& state, Weeks now) {
  return state.snapshot(now);
}

inline TrialState process_event(TrialState state, const TrialEvent& event) {
  state.apply(event);
  return state;
}

inline bool enrollment_gate(const TrialState& state) { return state.enrollment_open(); }

std::pair<TrialState, DoseLevel> assign_next_patient(TrialState state, Weeks now);

struct TrialOutcome {
  DoseLevel mtd = 1;
  int enrolled = 0;
  int added_patients = 0;
  int unevaluable = 0;
  int dlt_count = 0;
  Weeks duration = 0.0;
  std::vector<int> per_dose_counts;
  double beta_hat = 0.0;
  std::vector<double> p_hat;
};

/// Final MTD from the full evaluable information, with no escalation cap.
/// Requires every patient resolved and exactly N evaluable.
TrialOutcome finalize_trial(const TrialState& state);

TrialState replay(const DesignConfig& design, Strategy strategy, const Skeleton& skeleton,
                  const std::vector<TrialEvent>& events);

}  // namespace titecrm
