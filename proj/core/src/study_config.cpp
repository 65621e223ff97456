#include "titecrm/study_config.hpp"

#include <yaml-cpp/yaml.h>

#include <algorithm>
#include <cerrno>
#include <cstdlib>
#include <fstream>
#include <set>

#include "titecrm/event_log.hpp"

namespace titecrm {

using nlohmann::json;

namespace {

const std::set<std::string> kDesignKeys{"num_doses", "target",    "window",    "sample_size", "start_dose",
                                        "prior_sd",  "halfwidth", "prior_mtd", "accrual_interval"};
const std::set<std::string> kStudyKeys{"name",         "strategies", "phi",      "replicates",
                                       "seed",         "threads",    "weekly_assessment",
                                       "scenarios",    "scenario_files"};

json scalar_to_json(const YAML::Node& node) {
  const std::string& text = node.Scalar();
  if (node.Tag() == "!") return text;  // quoted
  if (text == "true" || text == "True") return true;
  if (text == "false" || text == "False") return false;
  if (text == "null" || text == "~") return nullptr;
  if (!text.empty()) {
    char* end = nullptr;
    errno = 0;
    const long long i = std::strtoll(text.c_str(), &end, 10);
    if (*end == '\0' && errno == 0) return i;
    errno = 0;
    const double d = std::strtod(text.c_str(), &end);
    if (*end == '\0' && errno == 0) return d;
  }
  return text;
}

json yaml_to_json(const YAML::Node& node) {
  switch (node.Type()) {
    case YAML::NodeType::Scalar: return scalar_to_json(node);
    case YAML::NodeType::Sequence: {
      json arr = json::array();
      for (const auto& item : node) arr.push_back(yaml_to_json(item));
      return arr;
    }
    case YAML::NodeType::Map: {
      json obj = json::object();
      for (const auto& kv : node) obj[kv.first.as<std::string>()] = yaml_to_json(kv.second);
      return obj;
    }
    default: return nullptr;
  }
}

template <typename T>
std::vector<T> scalar_or_list(const json& j) {
  if (j.is_array()) return j.get<std::vector<T>>();
  return {j.get<T>()};
}

ScenarioSpec scenario_from_json(const json& j, double target, std::size_t index) {
  if (!j.is_object()) throw ValidationError("scenario entries must be mappings");
  ScenarioSpec s;
  s.label = j.value("label", "scenario" + std::to_string(index + 1));
  if (!j.contains("tox_probs") || !j.contains("prog_probs"))
    throw ValidationError("scenario '" + s.label + "' needs tox_probs and prog_probs");
  s.tox_probs = j.at("tox_probs").get<std::vector<double>>();
  s.prog_probs = j.at("prog_probs").get<std::vector<double>>();
  s.tox_row = j.value("tox_row", 0);
  s.prog_row = j.value("prog_row", 0);
  s.validate(target);
  return s;
}

json scenario_to_json(const ScenarioSpec& s) {
  return json{{"label", s.label},       {"tox_probs", s.tox_probs}, {"prog_probs", s.prog_probs},
              {"tox_row", s.tox_row},   {"prog_row", s.prog_row}};
}

}  // namespace

StudyConfig study_from_json(const json& j, const std::filesystem::path& base_dir) {
  if (!j.is_object()) throw ValidationError("study config must be a mapping");
  for (const auto& [key, value] : j.items())
    if (!kDesignKeys.count(key) && !kStudyKeys.count(key)) throw ValidationError("unknown config key '" + key + "'");

  StudyConfig cfg;
  try {
    json design = json::object();
    for (const auto& key : kDesignKeys)
      if (j.contains(key)) design[key] = j.at(key);
    if (j.contains("phi")) {
      cfg.phis = scalar_or_list<double>(j.at("phi"));
      if (!cfg.phis.empty()) design["phi"] = cfg.phis.front();
    }
    cfg.design = design_from_json(design);

    if (j.contains("strategies")) {
      cfg.strategies.clear();
      for (const auto& s : scalar_or_list<std::string>(j.at("strategies"))) cfg.strategies.push_back(parse_strategy(s));
    }
    cfg.replicates = j.value("replicates", cfg.replicates);
    if (j.contains("seed")) {
      const auto& seed = j.at("seed");
      const bool ok = seed.is_number_unsigned() || (seed.is_number_integer() && seed.get<long long>() >= 0);
      if (!ok) throw ValidationError("seed must be a non-negative integer");
      cfg.base_seed = seed.get<std::uint64_t>();
    }
    cfg.threads = j.value("threads", cfg.threads);
    cfg.options.weekly_assessment = j.value("weekly_assessment", cfg.options.weekly_assessment);

    const json scenarios = j.value("scenarios", json("library"));
    if (scenarios.is_string()) {
      if (scenarios.get<std::string>() != "library")
        throw ValidationError("scenarios must be 'library' or a list of scenario mappings");
      cfg.scenarios = scenario_library(cfg.design.target);
    } else if (scenarios.is_array()) {
      for (std::size_t i = 0; i < scenarios.size(); ++i)
        cfg.scenarios.push_back(scenario_from_json(scenarios[i], cfg.design.target, i));
    } else if (!scenarios.is_null()) {
      throw ValidationError("scenarios must be 'library' or a list of scenario mappings");
    }
    if (j.contains("scenario_files")) {
      for (const auto& file : scalar_or_list<std::string>(j.at("scenario_files"))) {
        std::filesystem::path p(file);
        if (p.is_relative()) p = base_dir / p;
        for (auto& s : load_scenario_file(p, cfg.design.target)) cfg.scenarios.push_back(std::move(s));
      }
    }
  } catch (const json::exception& e) {
    throw ValidationError(std::string("bad config value: ") + e.what());
  }
  cfg.validate();
  return cfg;
}

json study_to_json(const StudyConfig& config) {
  json j = design_to_json(config.design);
  j.erase("phi");
  json strategies = json::array();
  for (Strategy s : config.strategies) strategies.push_back(std::string(to_string(s)));
  j["strategies"] = strategies;
  j["phi"] = config.phis;
  j["replicates"] = config.replicates;
  j["seed"] = config.base_seed;
  j["weekly_assessment"] = config.options.weekly_assessment;
  json scenarios = json::array();
  for (const auto& s : config.scenarios) scenarios.push_back(scenario_to_json(s));
  j["scenarios"] = scenarios;
  return j;
}

StudyConfig load_study_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  const auto base = path.parent_path();
  if (path.extension() == ".json") {
    json j;
    try {
      j = json::parse(in);
    } catch (const json::exception& e) {
      throw ValidationError("malformed JSON in " + path.string() + ": " + e.what());
    }
    if (j.is_object() && j.contains("study")) return study_from_json(j.at("study"), base);
    return study_from_json(j, base);
  }
  YAML::Node root;
  try {
    root = YAML::Load(in);
  } catch (const YAML::Exception& e) {
    throw ValidationError("malformed YAML in " + path.string() + ": " + e.what());
  }
  return study_from_json(yaml_to_json(root), base);
}

namespace {
struct PresetDef {
  const char* name;
  int sample_size;
  double halfwidth;
  double phi;
};

constexpr PresetDef kPresets[] = {
    {"paper-n24-phi025", 24, 0.10, 0.25}, {"paper-n24-phi050", 24, 0.10, 0.50}, {"paper-n24-phi075", 24, 0.10, 0.75},
    {"paper-n18-phi025", 18, 0.09, 0.25}, {"paper-n18-phi050", 18, 0.09, 0.50}, {"paper-n18-phi075", 18, 0.09, 0.75},
};

constexpr std::uint64_t kPresetSeed = 20240101;
}  // namespace

std::vector<std::string> preset_names() {
  std::vector<std::string> out;
  for (const auto& p : kPresets) out.emplace_back(p.name);
  return out;
}

StudyConfig preset(const std::string& name) {
  for (const auto& p : kPresets) {
    if (name != p.name) continue;
    StudyConfig cfg;
    cfg.design.sample_size = p.sample_size;
    cfg.design.halfwidth = p.halfwidth;
    cfg.design.phi = p.phi;
    cfg.phis = {p.phi};
    cfg.replicates = 10000;
    cfg.base_seed = kPresetSeed;
    cfg.options.weekly_assessment = true;
    cfg.scenarios = scenario_library(cfg.design.target);
    cfg.validate();
    return cfg;
  }
  throw ValidationError("unknown preset '" + name + "'");
}

StudyConfig resolve_study(const std::string& spec) {
  const auto names = preset_names();
  if (std::find(names.begin(), names.end(), spec) != names.end()) return preset(spec);
  return load_study_file(spec);
}

}  // namespace titecrm
