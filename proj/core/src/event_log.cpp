#include "titecrm/event_log.hpp"

#include <istream>
#include <ostream>

namespace titecrm {

using nlohmann::json;

json design_to_json(const DesignConfig& d) {
  return json{{"num_doses", d.num_doses},   {"target", d.target},
              {"window", d.window},         {"sample_size", d.sample_size},
              {"phi", d.phi},               {"start_dose", d.start_dose},
              {"prior_sd", d.prior_sd},     {"halfwidth", d.halfwidth},
              {"prior_mtd", d.prior_mtd},   {"accrual_interval", d.accrual_interval}};
}

DesignConfig design_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("design must be a JSON object");
  DesignConfig d;
  try {
    d.num_doses = j.value("num_doses", d.num_doses);
    d.target = j.value("target", d.target);
    d.window = j.value("window", d.window);
    d.sample_size = j.value("sample_size", d.sample_size);
    d.phi = j.value("phi", d.phi);
    d.start_dose = j.value("start_dose", d.start_dose);
    d.prior_sd = j.value("prior_sd", d.prior_sd);
    d.halfwidth = j.value("halfwidth", d.halfwidth);
    d.prior_mtd = j.value("prior_mtd", d.prior_mtd);
    d.accrual_interval = j.value("accrual_interval", d.accrual_interval);
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad design field: ") + e.what());
  }
  d.validate();
  return d;
}

json event_to_json(const TrialEvent& e) {
  json j{{"time", e.time}, {"patient_id", e.patient_id}, {"kind", to_string(e.kind)}};
  if (e.kind == EventKind::Enrolled) j["dose"] = e.dose;
  return j;
}

TrialEvent event_from_json(const json& j) {
  if (!j.is_object()) throw ValidationError("event must be a JSON object");
  TrialEvent e;
  try {
    e.time = j.at("time").get<double>();
    e.patient_id = j.at("patient_id").get<int>();
    e.kind = parse_event_kind(j.at("kind").get<std::string>());
    if (e.kind == EventKind::Enrolled) e.dose = j.at("dose").get<int>();
  } catch (const json::exception& ex) {
    throw ValidationError(std::string("bad event: ") + ex.what());
  }
  return e;
}

json header_to_json(const LogHeader& h) {
  return json{{"kind", "trial_created"},
              {"trial_id", h.trial_id},
              {"strategy", to_string(h.strategy)},
              {"design", design_to_json(h.design)},
              {"skeleton", h.skeleton}};
}

LogHeader header_from_json(const json& j) {
  if (!j.is_object() || j.value("kind", "") != "trial_created")
    throw ValidationError("expected a trial_created header");
  LogHeader h;
  try {
    h.trial_id = j.value("trial_id", "");
    h.strategy = parse_strategy(j.at("strategy").get<std::string>());
    h.design = design_from_json(j.at("design"));
    h.skeleton = j.at("skeleton").get<std::vector<double>>();
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad header: ") + e.what());
  }
  return h;
}

std::string to_line(const json& j) { return j.dump(); }

void write_event_log(std::ostream& os, const EventLog& log) {
  os << to_line(header_to_json(log.header)) << '\n';
  for (const auto& e : log.events) os << to_line(event_to_json(e)) << '\n';
}

EventLog read_event_log(std::istream& is) {
  EventLog log;
  std::string line;
  std::size_t number = 0;
  bool have_header = false;
  while (std::getline(is, line)) {
    ++number;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (!have_header) {
        log.header = header_from_json(j);
        have_header = true;
      } else {
        log.events.push_back(event_from_json(j));
        log.event_lines.push_back(number);
      }
    } catch (const json::exception& e) {
      throw LogFormatError(number, e.what());
    } catch (const ValidationError& e) {
      throw LogFormatError(number, e.what());
    }
  }
  if (!have_header) throw LogFormatError(number, "missing trial_created header");
  return log;
}

LogHeader header_for(const TrialState& state, std::string trial_id) {
  LogHeader h;
  h.trial_id = std::move(trial_id);
  h.design = state.design();
  h.strategy = state.strategy();
  const auto probs = state.skeleton().probs();
  h.skeleton.assign(probs.begin(), probs.end());
  return h;
}

TrialState replay(const EventLog& log) {
  const auto& h = log.header;
  Skeleton skeleton(h.skeleton, h.design.target, h.design.halfwidth, h.design.prior_mtd);
  TrialState state(h.design, h.strategy, std::move(skeleton));
  const bool lines_known = log.event_lines.size() == log.events.size();
  for (std::size_t i = 0; i < log.events.size(); ++i) {
    try {
      state.apply(log.events[i]);
    } catch (const ValidationError& e) {
      if (!lines_known) throw;
      throw LogFormatError(log.event_lines[i], e.what());
    }
  }
  return state;
}

}  // namespace titecrm
