#include "titecrm/scenario.hpp"

#include <yaml-cpp/yaml.h>

#include <cmath>
#include <sstream>

#include "titecrm/crm.hpp"

namespace titecrm {

void ScenarioSpec::validate(double target) {
  if (tox_probs.empty()) throw ValidationError("scenario '" + label + "' has no doses");
  if (tox_probs.size() != prog_probs.size())
    throw ValidationError("scenario '" + label + "': tox_probs and prog_probs differ in length");
  for (const auto* v : {&tox_probs, &prog_probs})
    for (double p : *v)
      if (!(p >= 0.0 && p <= 1.0)) throw ValidationError("scenario '" + label + "': probability outside [0, 1]");
  true_mtd = closest_to_target(tox_probs, target);
}

bool ScenarioSpec::has_progression() const {
  for (double p : prog_probs)
    if (p > 0.0) return true;
  return false;
}

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace

PatientStream::PatientStream(std::uint64_t base_seed, std::uint64_t replicate, std::uint64_t patient)
    : state_(mix64(mix64(mix64(base_seed + kGolden) ^ (replicate + kGolden)) ^ (patient + kGolden))) {}

std::uint64_t PatientStream::next() {
  state_ += kGolden;
  return mix64(state_);
}

LatentOutcome draw_outcome(const ScenarioSpec& scenario, DoseLevel dose, Weeks window, PatientStream& rng) {
  const auto k = static_cast<std::size_t>(dose - 1);
  const double u_tox = rng.uniform();
  const double t_tox = window * (1.0 - rng.uniform());
  const double u_prog = rng.uniform();
  const double t_prog = window * (1.0 - rng.uniform());
  LatentOutcome out;
  if (u_tox < scenario.tox_probs.at(k)) out.tox_time = t_tox;
  if (u_prog < scenario.prog_probs.at(k)) out.prog_time = t_prog;
  return out;
}

std::vector<std::vector<double>> library_tox_rows() {
  return {
      {0.00, 0.01, 0.05, 0.10, 0.25},
      {0.01, 0.05, 0.10, 0.25, 0.40},
      {0.05, 0.10, 0.25, 0.40, 0.55},
      {0.10, 0.25, 0.40, 0.55, 0.65},
      {0.25, 0.40, 0.55, 0.65, 0.70},
  };
}

std::vector<std::vector<double>> library_prog_rows() {
  return {
      {0.00, 0.00, 0.00, 0.00, 0.00},
      {0.20, 0.20, 0.20, 0.20, 0.20},
      {0.40, 0.40, 0.40, 0.40, 0.40},
      {0.60, 0.60, 0.60, 0.60, 0.60},
      {0.80, 0.80, 0.80, 0.80, 0.80},
      {0.60, 0.50, 0.40, 0.30, 0.20},  // decreasing
      {0.60, 0.40, 0.40, 0.40, 0.40},  // plateau, step at dose 2
      {0.60, 0.60, 0.40, 0.40, 0.40},  // step at dose 3
      {0.60, 0.60, 0.60, 0.40, 0.40},  // step at dose 4
      {0.60, 0.60, 0.60, 0.60, 0.40},  // step at dose 5
      {0.60, 0.50, 0.40, 0.50, 0.60},  // U-shaped
  };
}

namespace {
std::string percent_label(const std::vector<double>& v) {
  std::ostringstream os;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) os << '-';
    const long pct = std::lround(v[i] * 100.0);
    if (pct < 10) os << '0';
    os << pct;
  }
  return os.str();
}
}  // namespace

std::vector<ScenarioSpec> scenario_library(double target) {
  std::vector<ScenarioSpec> out;
  const auto tox = library_tox_rows();
  const auto prog = library_prog_rows();
  for (std::size_t t = 0; t < tox.size(); ++t) {
    for (std::size_t p = 0; p < prog.size(); ++p) {
      ScenarioSpec s;
      s.tox_probs = tox[t];
      s.prog_probs = prog[p];
      s.tox_row = static_cast<int>(t + 1);
      s.prog_row = static_cast<int>(p + 1);
      s.label = "tox" + std::to_string(t + 1) + "_prog" + percent_label(prog[p]);
      s.validate(target);
      out.push_back(std::move(s));
    }
  }
  return out;
}

namespace {
ScenarioSpec scenario_from_node(const YAML::Node& node, double target, std::size_t index) {
  ScenarioSpec s;
  s.label = node["label"] ? node["label"].as<std::string>() : "scenario" + std::to_string(index + 1);
  if (!node["tox_probs"] || !node["prog_probs"])
    throw ValidationError("scenario '" + s.label + "' needs tox_probs and prog_probs");
  s.tox_probs = node["tox_probs"].as<std::vector<double>>();
  s.prog_probs = node["prog_probs"].as<std::vector<double>>();
  s.validate(target);
  return s;
}
}  // namespace

std::vector<ScenarioSpec> load_scenario_file(const std::filesystem::path& path, double target) {
  YAML::Node root;
  try {
    root = YAML::LoadFile(path.string());
  } catch (const YAML::Exception& e) {
    throw ValidationError("cannot read scenario file " + path.string() + ": " + e.what());
  }
  std::vector<ScenarioSpec> out;
  try {
    if (root["scenarios"]) {
      std::size_t i = 0;
      for (const auto& node : root["scenarios"]) out.push_back(scenario_from_node(node, target, i++));
    } else {
      out.push_back(scenario_from_node(root, target, 0));
    }
  } catch (const YAML::Exception& e) {
    throw ValidationError("malformed scenario file " + path.string() + ": " + e.what());
  }
  return out;
}

}  // namespace titecrm
