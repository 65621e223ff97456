#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "titecrm/design.hpp"

namespace titecrm {

struct ScenarioSpec {
  std::string label;
  std::vector<double> tox_probs;   ///< marginal P(DLT by T) per dose
  std::vector<double> prog_probs;  ///< marginal P(progression by T) per dose
  DoseLevel true_mtd = 1;
  int tox_row = 0;   ///< 1-based row in the built-in library, 0 for custom
  int prog_row = 0;

  /// Checks probabilities and (re)derives true_mtd for the given target.
  void validate(double target);

  bool has_progression() const;
  bool operator==(const ScenarioSpec&) const = default;
};

/// Times relative to enrollment, each in (0, T] when present.
struct LatentOutcome {
  std::optional<Weeks> tox_time;
  std::optional<Weeks> prog_time;
};

/// Counter-based stream owned by one (replicate, patient) pair: a SplitMix64
/// sequence whose starting point is a hash of the three keys. The stream
/// depends only on the keys, never on the order in which patients or
/// replicates are generated.
class PatientStream {
 public:
  PatientStream(std::uint64_t base_seed, std::uint64_t replicate, std::uint64_t patient);
  std::uint64_t next();
  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

 private:
  std::uint64_t state_;
};

/// Conditional-uniform generation: Bernoulli presence by T, then a uniform
/// time on (0, T]. Always consumes four uniforms (tox presence, tox time,
/// progression presence, progression time) so outcomes stay coupled across
/// doses for a given stream.
LatentOutcome draw_outcome(const ScenarioSpec& scenario, DoseLevel dose, Weeks window, PatientStream& rng);

/// 5 toxicity rows x 11 progression rows, in row-major order.
std::vector<ScenarioSpec> scenario_library(double target = 0.25);

std::vector<std::vector<double>> library_tox_rows();
std::vector<std::vector<double>> library_prog_rows();

/// Loads a scenario file: either a single mapping with keys
/// label/tox_probs/prog_probs or a `scenarios:` sequence of them.
std::vector<ScenarioSpec> load_scenario_file(const std::filesystem::path& path, double target);

}  // namespace titecrm
