#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <string>
#include <vector>

#include "titecrm/event_log.hpp"
#include "titecrm/trial.hpp"

namespace titecrm {

class TrialNotFound : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Enrollment requested while the evaluable quota is already covered.
class EnrollmentClosed : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Store directory could not be loaded or written.
class StoreError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrialSummary {
  std::string trial_id;
  Weeks clock = 0.0;
  int enrolled = 0;
  int evaluable = 0;
  int pending = 0;
  int unevaluable = 0;
  bool enrollment_open = true;
};

struct EnrollmentResult {
  int patient_id = 0;
  DoseLevel dose = 1;
  bool overridden = false;  ///< dose supplied by the caller rather than the model
  Recommendation recommendation;
  TrialSummary summary;
};

struct EventResult {
  int patient_id = 0;
  PatientStatus status = PatientStatus::Pending;
  Evaluability evaluability = Evaluability::Pending;
  std::optional<double> frozen_weight;
  TrialSummary summary;
};

struct RecommendationView {
  Weeks at_time = 0.0;
  Recommendation recommendation;
  std::vector<SnapshotEntry> weights;
  /// Set once all patients are resolved and the evaluable quota is met.
  std::optional<DoseLevel> final_mtd;
};

/// How a patient's follow-up enters the likelihood, for timeline rendering.
enum class Inclusion { Pending, Included, Partial, Excluded };
std::string_view to_string(Inclusion i);

struct PatientSegment {
  PatientRecord record;
  Evaluability evaluability = Evaluability::Pending;
  Inclusion inclusion = Inclusion::Pending;
  double weight = 0.0;                 ///< likelihood weight at the trial clock
  std::optional<Weeks> included_until; ///< end of the solid part of the lane
};

struct TrialView {
  LogHeader header;
  TrialSummary summary;
  double phi_effective = 0.0;
  std::vector<PatientSegment> patients;
  std::vector<TrialEvent> events;
};

nlohmann::json to_json(const TrialSummary& s);
nlohmann::json to_json(const EnrollmentResult& r);
nlohmann::json to_json(const EventResult& r);
nlohmann::json to_json(const RecommendationView& r);
nlohmann::json to_json(const TrialView& v);

/// Live trial registry backed by one append-only event log per trial
/// (`<store>/<trial_id>.jsonl`, same format as simulator traces). Writes to
/// a trial are serialized; distinct trials and reads proceed concurrently.
class ConductService {
 public:
  /// In-memory registry (nothing persisted).
  ConductService();
  /// Replays every log in `store_dir`, creating it if needed. Throws
  /// StoreError naming the file and line of the first bad entry.
  explicit ConductService(std::filesystem::path store_dir);
  ~ConductService();

  bool persistent() const { return store_.has_value(); }
  std::vector<std::string> trial_ids() const;

  /// `trial_id` may be empty, in which case one is generated. The skeleton
  /// is built from the design when not supplied.
  std::string create_trial(const DesignConfig& design, Strategy strategy,
                           std::optional<std::vector<double>> skeleton = std::nullopt,
                           std::string trial_id = {});

  /// Enrolls the next patient at `time` on the recommended dose, or on
  /// `dose_override` when given.
  EnrollmentResult enroll_patient(const std::string& trial_id, Weeks time,
                                  std::optional<DoseLevel> dose_override = std::nullopt);

  /// Terminal events only (dlt, progression, window_completed).
  EventResult post_event(const std::string& trial_id, const TrialEvent& event);

  /// Defaults to the trial clock; `at_time` must not precede it.
  RecommendationView get_recommendation(const std::string& trial_id, std::optional<Weeks> at_time = std::nullopt) const;

  TrialView get_state(const std::string& trial_id) const;

  /// Copy of the folded state, for cross-checks against the engine.
  TrialState snapshot_state(const std::string& trial_id) const;

 private:
  struct Trial;
  std::shared_ptr<Trial> find(const std::string& trial_id) const;
  void append(Trial& trial, const nlohmann::json& line);
  std::string next_id();

  std::optional<std::filesystem::path> store_;
  mutable std::shared_mutex registry_mutex_;
  std::map<std::string, std::shared_ptr<Trial>> trials_;
  long long id_counter_ = 0;
};

}  // namespace titecrm
