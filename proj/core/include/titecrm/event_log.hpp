#pragma once

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "titecrm/trial.hpp"

// Line-delimited JSON event logs shared by simulator traces and the conduct
// service store. First line is a header:
//   {"kind":"trial_created","trial_id":"...","strategy":"C","design":{...},"skeleton":[...]}
// followed by one event per line:
//   {"time":4.0,"patient_id":2,"kind":"enrolled","dose":1}
//   {"time":7.0,"patient_id":1,"kind":"progression"}
namespace titecrm {

struct LogHeader {
  std::string trial_id;
  DesignConfig design;
  Strategy strategy = Strategy::C;
  std::vector<double> skeleton;
};

struct EventLog {
  LogHeader header;
  std::vector<TrialEvent> events;
  /// Source line of each event when read from a stream (may be empty).
  std::vector<std::size_t> event_lines;
};

class LogFormatError : public std::runtime_error {
 public:
  LogFormatError(std::size_t line, const std::string& message)
      : std::runtime_error("line " + std::to_string(line) + ": " + message), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

nlohmann::json design_to_json(const DesignConfig& design);
/// Missing keys keep their defaults; the result is validated.
DesignConfig design_from_json(const nlohmann::json& j);

nlohmann::json event_to_json(const TrialEvent& e);
TrialEvent event_from_json(const nlohmann::json& j);

nlohmann::json header_to_json(const LogHeader& h);
LogHeader header_from_json(const nlohmann::json& j);

std::string to_line(const nlohmann::json& j);

void write_event_log(std::ostream& os, const EventLog& log);
/// Throws LogFormatError carrying the 1-based line number of the first bad line.
EventLog read_event_log(std::istream& is);

LogHeader header_for(const TrialState& state, std::string trial_id = {});
/// Inadmissible events are reported as LogFormatError when their source
/// lines are known, otherwise the engine's ValidationError propagates.
TrialState replay(const EventLog& log);

}  // namespace titecrm
