#include "titecrm/trial.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace titecrm {

namespace {
// Slack for comparisons of event times against enroll_time + window.
constexpr double kTimeSlack = 1e-9;
}  // namespace

std::string_view to_string(PatientStatus s) {
  switch (s) {
    case PatientStatus::Pending: return "pending";
    case PatientStatus::CompletedNoEvent: return "completed_no_event";
    case PatientStatus::DLT: return "dlt";
    case PatientStatus::ProgressedEvaluable: return "progressed_evaluable";
    case PatientStatus::ProgressedUnevaluable: return "progressed_unevaluable";
  }
  return "?";
}

std::string_view to_string(EventKind k) {
  switch (k) {
    case EventKind::Enrolled: return "enrolled";
    case EventKind::DLTObserved: return "dlt";
    case EventKind::ProgressionObserved: return "progression";
    case EventKind::WindowCompleted: return "window_completed";
  }
  return "?";
}

EventKind parse_event_kind(std::string_view text) {
  if (text == "enrolled") return EventKind::Enrolled;
  if (text == "dlt") return EventKind::DLTObserved;
  if (text == "progression") return EventKind::ProgressionObserved;
  if (text == "window_completed") return EventKind::WindowCompleted;
  throw ValidationError("unknown event kind '" + std::string(text) + "'");
}

Evaluability evaluability(const PatientRecord& patient, double phi, Weeks window) {
  switch (patient.status) {
    case PatientStatus::Pending:
      return Evaluability::Pending;
    case PatientStatus::CompletedNoEvent:
    case PatientStatus::DLT:
      return Evaluability::Evaluable;
    case PatientStatus::ProgressedEvaluable:
    case PatientStatus::ProgressedUnevaluable: {
      const Weeks p = patient.prog_time.value_or(0.0);
      return (phi == 0.0 || p >= phi * window) ? Evaluability::Evaluable : Evaluability::Unevaluable;
    }
  }
  return Evaluability::Pending;
}

TrialState::TrialState(DesignConfig design, Strategy strategy)
    : TrialState(design, strategy,
                 build_skeleton(design.target, design.halfwidth, design.prior_mtd, design.num_doses)) {}

TrialState::TrialState(DesignConfig design, Strategy strategy, Skeleton skeleton)
    : design_(std::move(design)), strategy_(strategy) {
  design_.validate();
  if (skeleton.num_doses() != design_.num_doses)
    throw ValidationError("skeleton length does not match num_doses");
  model_ = std::make_shared<const PosteriorModel>(std::move(skeleton), design_.prior_sd);
}

TrialState::TrialState(DesignConfig design, Strategy strategy, std::shared_ptr<const PosteriorModel> model)
    : design_(std::move(design)), strategy_(strategy), model_(std::move(model)) {
  design_.validate();
  if (!model_) throw ContractViolation("null posterior model");
  if (model_->skeleton().num_doses() != design_.num_doses)
    throw ValidationError("skeleton length does not match num_doses");
  if (model_->prior_sd() != design_.prior_sd) throw ValidationError("posterior model prior_sd does not match design");
}

const PatientRecord& TrialState::patient(int patient_id) const {
  if (patient_id < 1 || patient_id > enrolled_count())
    throw UnknownPatient("unknown patient " + std::to_string(patient_id));
  return patients_[static_cast<std::size_t>(patient_id - 1)];
}

void TrialState::check_time(Weeks time) const {
  if (!std::isfinite(time)) throw ValidationError("event time must be finite");
  if (time < clock_)
    throw ValidationError("out-of-order event: time " + std::to_string(time) + " precedes trial clock " +
                          std::to_string(clock_));
}

std::vector<SnapshotEntry> TrialState::snapshot(Weeks now) const {
  if (now < clock_) throw ContractViolation("snapshot requested before the trial clock");
  const Weeks window = design_.window;
  std::vector<SnapshotEntry> out;
  out.reserve(patients_.size());
  for (const auto& p : patients_) {
    switch (p.status) {
      case PatientStatus::DLT:
        out.push_back({p.patient_id, {p.dose, true, 1.0}});
        break;
      case PatientStatus::CompletedNoEvent:
        out.push_back({p.patient_id, {p.dose, false, 1.0}});
        break;
      case PatientStatus::ProgressedEvaluable:
        out.push_back({p.patient_id, {p.dose, false, weight_of(*p.prog_time, window, false)}});
        break;
      case PatientStatus::ProgressedUnevaluable:
        if (strategy_ != Strategy::C) {
          out.push_back({p.patient_id, {p.dose, false, weight_of(*p.prog_time, window, false)}});
        } else if (p.frozen_weight) {
          out.push_back({p.patient_id, {p.dose, false, *p.frozen_weight}});
        }
        break;
      case PatientStatus::Pending:
        out.push_back({p.patient_id, {p.dose, false, weight_of(now - p.enroll_time, window, false)}});
        break;
    }
  }
  return out;
}

std::optional<double> TrialState::frozen_weight_for(const PatientRecord& p) const {
  // Latest assignment made after this patient's own enrollment, in log order.
  if (assignments_.empty() || assignments_.back().patient_id <= p.patient_id) return std::nullopt;
  const auto& used = assignments_.back().weights_used;
  const auto it = std::find_if(used.begin(), used.end(),
                               [&](const SnapshotEntry& e) { return e.patient_id == p.patient_id; });
  if (it == used.end()) return std::nullopt;
  const double w = std::min(it->obs.weight, *p.prog_time / design_.window);
  if (!(w > 0.0)) return std::nullopt;
  return w;
}

void TrialState::enroll(Weeks time, DoseLevel dose, std::vector<SnapshotEntry> used) {
  const int id = enrolled_count() + 1;
  assignments_.push_back({time, id, dose, std::move(used)});
  PatientRecord rec;
  rec.patient_id = id;
  rec.enroll_time = time;
  rec.dose = dose;
  patients_.push_back(rec);
  events_.push_back({time, id, EventKind::Enrolled, dose});
  ++pending_;
  highest_tried_ = std::max(highest_tried_, dose);
  clock_ = time;
}

void TrialState::apply(const TrialEvent& event) {
  check_time(event.time);
  if (event.kind == EventKind::Enrolled) {
    if (event.patient_id != enrolled_count() + 1)
      throw ValidationError("enrollment must use the next patient id (" + std::to_string(enrolled_count() + 1) + ")");
    if (event.dose < 1 || event.dose > design_.num_doses) throw ValidationError("enrollment dose out of range");
    if (!enrollment_open()) throw ValidationError("enrollment is closed: evaluable quota is met");
    enroll(event.time, event.dose, snapshot(event.time));
    return;
  }

  auto& p = patients_.at(static_cast<std::size_t>(patient(event.patient_id).patient_id - 1));
  if (p.status != PatientStatus::Pending)
    throw ValidationError("patient " + std::to_string(p.patient_id) + " already has a terminal event (" +
                          std::string(to_string(p.status)) + ")");
  const Weeks rel = event.time - p.enroll_time;
  const Weeks window = design_.window;
  if (rel < 0.0) throw ValidationError("event precedes the patient's enrollment");

  switch (event.kind) {
    case EventKind::DLTObserved:
      if (rel > window + kTimeSlack) throw ValidationError("DLT observed after the toxicity window");
      p.tox_time = rel;
      p.status = PatientStatus::DLT;
      ++evaluable_;
      break;
    case EventKind::ProgressionObserved: {
      if (rel >= window) throw ValidationError("progression at or after the window end; record window_completed");
      p.prog_time = rel;
      p.status = PatientStatus::ProgressedEvaluable;
      if (evaluability(p, effective_phi(), window) == Evaluability::Unevaluable) {
        p.status = PatientStatus::ProgressedUnevaluable;
        if (strategy_ == Strategy::C) p.frozen_weight = frozen_weight_for(p);
        ++unevaluable_;
      } else {
        ++evaluable_;
      }
      break;
    }
    case EventKind::WindowCompleted:
      if (rel < window - kTimeSlack) throw ValidationError("window_completed before the window has elapsed");
      p.status = PatientStatus::CompletedNoEvent;
      ++evaluable_;
      break;
    case EventKind::Enrolled:
      break;
  }
  --pending_;
  p.resolved_at = event.time;
  clock_ = event.time;
  events_.push_back(event);
}

Recommendation TrialState::assign_next(Weeks now) {
  if (!enrollment_open()) throw ContractViolation("assign_next called while enrollment is closed");
  check_time(now);
  auto snap = snapshot(now);
  auto rec = recommend(*model_, observations_of(snap), design_, highest_tried_, true);
  enroll(now, rec.dose, std::move(snap));
  return rec;
}

bool TrialState::operator==(const TrialState& other) const {
  return design_ == other.design_ && strategy_ == other.strategy_ && skeleton() == other.skeleton() &&
         clock_ == other.clock_ && patients_ == other.patients_ && assignments_ == other.assignments_ &&
         events_ == other.events_ && evaluable_ == other.evaluable_ && pending_ == other.pending_ &&
         unevaluable_ == other.unevaluable_ && highest_tried_ == other.highest_tried_;
}

std::vector<Observation> observations_of(const std::vector<SnapshotEntry>& entries) {
  std::vector<Observation> out;
  out.reserve(entries.size());
  for (const auto& e : entries) out.push_back(e.obs);
  return out;
}

std::pair<TrialState, DoseLevel> assign_next_patient(TrialState state, Weeks now) {
  const DoseLevel dose = state.assign_next(now).dose;
  return {std::move(state), dose};
}

TrialOutcome finalize_trial(const TrialState& state) {
  if (state.pending_count() != 0) throw ContractViolation("finalize_trial called with unresolved patients");
  if (state.evaluable_count() != state.design().sample_size)
    throw ContractViolation("finalize_trial called before the evaluable quota is met");
  TrialOutcome out;
  const auto obs = observations_of(state.snapshot(state.clock()));
  auto rec = recommend(state.model(), obs, state.design(), state.highest_tried(), false);
  out.mtd = rec.dose;
  out.beta_hat = rec.beta_hat;
  out.p_hat = std::move(rec.p_hat);
  out.enrolled = state.enrolled_count();
  out.added_patients = out.enrolled - state.design().sample_size;
  out.unevaluable = state.unevaluable_count();
  out.per_dose_counts.assign(static_cast<std::size_t>(state.design().num_doses), 0);
  Weeks last = 0.0;
  for (const auto& p : state.patients()) {
    ++out.per_dose_counts[static_cast<std::size_t>(p.dose - 1)];
    if (p.status == PatientStatus::DLT) ++out.dlt_count;
    last = std::max(last, p.resolved_at.value_or(p.enroll_time));
  }
  out.duration = state.patients().empty() ? 0.0 : last - state.patients().front().enroll_time;
  return out;
}

TrialState replay(const DesignConfig& design, Strategy strategy, const Skeleton& skeleton,
                  const std::vector<TrialEvent>& events) {
  TrialState state(design, strategy, skeleton);
  for (const auto& e : events) state.apply(e);
  return state;
}

}  // namespace titecrm
