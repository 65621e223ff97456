#include "titecrm/conduct.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <mutex>
#include <sstream>

namespace titecrm {

using nlohmann::json;

struct ConductService::Trial {
  LogHeader header;
  TrialState state;
  std::optional<std::filesystem::path> file;
  mutable std::shared_mutex mutex;

  Trial(LogHeader h, TrialState s, std::optional<std::filesystem::path> f)
      : header(std::move(h)), state(std::move(s)), file(std::move(f)) {}
};

namespace {

bool valid_trial_id(const std::string& id) {
  if (id.empty() || id.size() > 64) return false;
  return std::all_of(id.begin(), id.end(), [](unsigned char c) { return std::isalnum(c) || c == '-' || c == '_'; });
}

TrialSummary summarize(const std::string& id, const TrialState& s) {
  return {id, s.clock(), s.enrolled_count(), s.evaluable_count(), s.pending_count(), s.unevaluable_count(),
          s.enrollment_open()};
}

json optional_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

}  // namespace

std::string_view to_string(Inclusion i) {
  switch (i) {
    case Inclusion::Pending: return "pending";
    case Inclusion::Included: return "included";
    case Inclusion::Partial: return "partial";
    case Inclusion::Excluded: return "excluded";
  }
  return "?";
}

ConductService::ConductService() = default;
ConductService::~ConductService() = default;

ConductService::ConductService(std::filesystem::path store_dir) : store_(std::move(store_dir)) {
  std::error_code ec;
  std::filesystem::create_directories(*store_, ec);
  if (ec) throw StoreError("cannot create store directory " + store_->string() + ": " + ec.message());

  std::vector<std::filesystem::path> files;
  for (const auto& entry : std::filesystem::directory_iterator(*store_))
    if (entry.is_regular_file() && entry.path().extension() == ".jsonl") files.push_back(entry.path());
  std::sort(files.begin(), files.end());

  for (const auto& path : files) {
    std::ifstream in(path);
    if (!in) throw StoreError("cannot read " + path.string());
    try {
      EventLog log = read_event_log(in);
      const std::string id = path.stem().string();
      if (log.header.trial_id != id)
        throw StoreError(path.string() + ":1: trial_id '" + log.header.trial_id + "' does not match file name");
      TrialState state = replay(log);
      trials_.emplace(id, std::make_shared<Trial>(std::move(log.header), std::move(state), path));
    } catch (const LogFormatError& e) {
      throw StoreError(path.string() + ":" + std::to_string(e.line()) + ": " + e.what());
    } catch (const ValidationError& e) {
      throw StoreError(path.string() + ": " + e.what());
    }
  }
}

std::vector<std::string> ConductService::trial_ids() const {
  std::shared_lock lock(registry_mutex_);
  std::vector<std::string> out;
  for (const auto& [id, t] : trials_) out.push_back(id);
  return out;
}

std::shared_ptr<ConductService::Trial> ConductService::find(const std::string& trial_id) const {
  std::shared_lock lock(registry_mutex_);
  auto it = trials_.find(trial_id);
  if (it == trials_.end()) throw TrialNotFound("unknown trial '" + trial_id + "'");
  return it->second;
}

std::string ConductService::next_id() {
  for (;;) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "trial-%04lld", ++id_counter_);
    if (!trials_.count(buf)) return buf;
  }
}

void ConductService::append(Trial& trial, const json& line) {
  if (!trial.file) return;
  std::ofstream out(*trial.file, std::ios::app);
  out << to_line(line) << '\n';
  out.flush();
  if (!out) throw StoreError("cannot append to " + trial.file->string());
}

std::string ConductService::create_trial(const DesignConfig& design, Strategy strategy,
                                         std::optional<std::vector<double>> skeleton, std::string trial_id) {
  design.validate();
  Skeleton sk = skeleton ? Skeleton(*skeleton, design.target, design.halfwidth, design.prior_mtd)
                         : build_skeleton(design.target, design.halfwidth, design.prior_mtd, design.num_doses);
  TrialState state(design, strategy, std::move(sk));

  std::unique_lock lock(registry_mutex_);
  if (trial_id.empty()) {
    trial_id = next_id();
  } else {
    if (!valid_trial_id(trial_id))
      throw ValidationError("trial_id must be 1-64 characters from [A-Za-z0-9_-]");
    if (trials_.count(trial_id)) throw ValidationError("trial '" + trial_id + "' already exists");
  }
  LogHeader header = header_for(state, trial_id);
  std::optional<std::filesystem::path> file;
  if (store_) {
    file = *store_ / (trial_id + ".jsonl");
    if (std::filesystem::exists(*file)) throw StoreError("log file already exists: " + file->string());
    std::ofstream out(*file);
    out << to_line(header_to_json(header)) << '\n';
    out.flush();
    if (!out) throw StoreError("cannot write " + file->string());
  }
  trials_.emplace(trial_id, std::make_shared<Trial>(std::move(header), std::move(state), std::move(file)));
  return trial_id;
}

EnrollmentResult ConductService::enroll_patient(const std::string& trial_id, Weeks time,
                                                std::optional<DoseLevel> dose_override) {
  auto trial = find(trial_id);
  std::unique_lock lock(trial->mutex);
  if (!trial->state.enrollment_open())
    throw EnrollmentClosed("enrollment is closed: " + std::to_string(trial->state.evaluable_count()) +
                           " evaluable and " + std::to_string(trial->state.pending_count()) + " pending cover N = " +
                           std::to_string(trial->state.design().sample_size));
  TrialState next = trial->state;
  EnrollmentResult result;
  if (time < next.clock())
    throw ValidationError("out-of-order event: time " + std::to_string(time) + " precedes trial clock " +
                          std::to_string(next.clock()));
  result.recommendation =
      recommend(next.model(), observations_of(next.snapshot(time)), next.design(), next.highest_tried(), true);
  if (dose_override) {
    next.apply({time, next.enrolled_count() + 1, EventKind::Enrolled, *dose_override});
    result.overridden = *dose_override != result.recommendation.dose;
  } else {
    next.assign_next(time);
  }
  const TrialEvent& e = next.events().back();
  append(*trial, event_to_json(e));
  trial->state = std::move(next);
  result.patient_id = e.patient_id;
  result.dose = e.dose;
  result.summary = summarize(trial_id, trial->state);
  return result;
}

EventResult ConductService::post_event(const std::string& trial_id, const TrialEvent& event) {
  if (event.kind == EventKind::Enrolled)
    throw ValidationError("enrollments go through the patients endpoint, not the events endpoint");
  auto trial = find(trial_id);
  std::unique_lock lock(trial->mutex);
  TrialState next = trial->state;
  next.apply(event);
  append(*trial, event_to_json(event));
  trial->state = std::move(next);
  const auto& p = trial->state.patient(event.patient_id);
  EventResult r;
  r.patient_id = p.patient_id;
  r.status = p.status;
  r.evaluability = evaluability(p, trial->state.effective_phi(), trial->state.design().window);
  r.frozen_weight = p.frozen_weight;
  r.summary = summarize(trial_id, trial->state);
  return r;
}

RecommendationView ConductService::get_recommendation(const std::string& trial_id, std::optional<Weeks> at_time) const {
  auto trial = find(trial_id);
  std::shared_lock lock(trial->mutex);
  const auto& s = trial->state;
  RecommendationView v;
  v.at_time = at_time.value_or(s.clock());
  if (!std::isfinite(v.at_time)) throw ValidationError("at_time must be finite");
  if (v.at_time < s.clock()) throw ValidationError("at_time precedes the trial clock");
  v.weights = s.snapshot(v.at_time);
  v.recommendation = recommend(s.model(), observations_of(v.weights), s.design(), s.highest_tried(), true);
  if (s.pending_count() == 0 && s.evaluable_count() == s.design().sample_size) v.final_mtd = finalize_trial(s).mtd;
  return v;
}

TrialView ConductService::get_state(const std::string& trial_id) const {
  auto trial = find(trial_id);
  std::shared_lock lock(trial->mutex);
  const auto& s = trial->state;
  TrialView v;
  v.header = trial->header;
  v.summary = summarize(trial_id, s);
  v.phi_effective = s.effective_phi();
  v.events = s.events();
  std::map<int, double> weights;
  for (const auto& e : s.snapshot(s.clock())) weights[e.patient_id] = e.obs.weight;
  const Weeks window = s.design().window;
  for (const auto& p : s.patients()) {
    PatientSegment seg;
    seg.record = p;
    seg.evaluability = evaluability(p, v.phi_effective, window);
    const auto w = weights.find(p.patient_id);
    seg.weight = w == weights.end() ? 0.0 : w->second;
    switch (p.status) {
      case PatientStatus::Pending:
        seg.inclusion = Inclusion::Pending;
        seg.included_until = s.clock();
        break;
      case PatientStatus::ProgressedUnevaluable:
        if (w == weights.end()) {
          seg.inclusion = Inclusion::Excluded;
        } else if (p.frozen_weight) {
          const bool cut = *p.frozen_weight < *p.prog_time / window - 1e-12;
          seg.inclusion = cut ? Inclusion::Partial : Inclusion::Included;
          seg.included_until = p.enroll_time + *p.frozen_weight * window;
        } else {
          seg.inclusion = Inclusion::Included;
          seg.included_until = p.resolved_at;
        }
        break;
      default:
        seg.inclusion = Inclusion::Included;
        seg.included_until = p.resolved_at;
        break;
    }
    v.patients.push_back(std::move(seg));
  }
  return v;
}

TrialState ConductService::snapshot_state(const std::string& trial_id) const {
  auto trial = find(trial_id);
  std::shared_lock lock(trial->mutex);
  return trial->state;
}

json to_json(const TrialSummary& s) {
  return json{{"trial_id", s.trial_id},   {"clock", s.clock},         {"enrolled", s.enrolled},
              {"evaluable", s.evaluable}, {"pending", s.pending},     {"unevaluable", s.unevaluable},
              {"enrollment_open", s.enrollment_open}};
}

namespace {
json recommendation_json(const Recommendation& r) {
  return json{{"dose", r.dose}, {"unconstrained", r.unconstrained}, {"beta_hat", r.beta_hat}, {"p_hat", r.p_hat}};
}
}  // namespace

json to_json(const EnrollmentResult& r) {
  return json{{"patient_id", r.patient_id},
              {"dose", r.dose},
              {"overridden", r.overridden},
              {"recommendation", recommendation_json(r.recommendation)},
              {"summary", to_json(r.summary)}};
}

json to_json(const EventResult& r) {
  return json{{"patient_id", r.patient_id},
              {"status", to_string(r.status)},
              {"evaluable", r.evaluability == Evaluability::Evaluable},
              {"unevaluable", r.evaluability == Evaluability::Unevaluable},
              {"frozen_weight", optional_json(r.frozen_weight)},
              {"summary", to_json(r.summary)}};
}

json to_json(const RecommendationView& r) {
  json weights = json::array();
  for (const auto& e : r.weights)
    weights.push_back({{"patient_id", e.patient_id}, {"dose", e.obs.dose}, {"tox", e.obs.tox}, {"weight", e.obs.weight}});
  json j = recommendation_json(r.recommendation);
  j["at_time"] = r.at_time;
  j["weights"] = weights;
  j["final_mtd"] = r.final_mtd ? json(*r.final_mtd) : json(nullptr);
  return j;
}

json to_json(const TrialView& v) {
  json patients = json::array();
  for (const auto& seg : v.patients) {
    const auto& p = seg.record;
    patients.push_back({{"patient_id", p.patient_id},
                        {"dose", p.dose},
                        {"enroll_time", p.enroll_time},
                        {"status", to_string(p.status)},
                        {"evaluable", seg.evaluability == Evaluability::Evaluable},
                        {"inclusion", to_string(seg.inclusion)},
                        {"weight", seg.weight},
                        {"included_until", optional_json(seg.included_until)},
                        {"resolved_at", optional_json(p.resolved_at)},
                        {"tox_time", optional_json(p.tox_time)},
                        {"prog_time", optional_json(p.prog_time)},
                        {"frozen_weight", optional_json(p.frozen_weight)}});
  }
  json events = json::array();
  for (const auto& e : v.events) events.push_back(event_to_json(e));
  json j = header_to_json(v.header);
  j.erase("kind");
  j["summary"] = to_json(v.summary);
  j["phi_effective"] = v.phi_effective;
  j["phi_window"] = v.phi_effective * v.header.design.window;
  j["patients"] = patients;
  j["events"] = events;
  return j;
}

}  // namespace titecrm
