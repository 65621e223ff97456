#pragma once

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

#include "titecrm/simulation.hpp"

// Study configuration files are flat key/value documents (YAML or JSON):
//
//   num_doses: 5            # any DesignConfig field
//   sample_size: 24
//   halfwidth: 0.10
//   strategies: [A, B, C]
//   phi: [0.5]              # scalar or list
//   replicates: 10000
//   seed: 20240101
//   weekly_assessment: true
//   scenarios: library      # or a list of {label, tox_probs, prog_probs}
//   scenario_files: [extra.yaml]
//
// A run manifest (JSON with a "study" object) is also accepted, so every
// artifact can be regenerated from its manifest.
namespace titecrm {

/// Parses the flat representation described above. Relative scenario_files
/// are resolved against `base_dir`.
StudyConfig study_from_json(const nlohmann::json& j, const std::filesystem::path& base_dir = {});

/// Fully resolved form: scenarios are written inline, so the output alone
/// reproduces the study.
nlohmann::json study_to_json(const StudyConfig& config);

/// Loads a YAML study file, a JSON study file, or a run manifest.
StudyConfig load_study_file(const std::filesystem::path& path);

std::vector<std::string> preset_names();
/// Throws ValidationError for an unknown name.
StudyConfig preset(const std::string& name);

/// `spec` is either a preset name or a path to a study/manifest file.
StudyConfig resolve_study(const std::string& spec);

}  // namespace titecrm
