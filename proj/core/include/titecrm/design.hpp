#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <string_view>

namespace titecrm {

/// Dose levels are 1-based throughout the public API; 0 means "none".
using DoseLevel = int;

/// Time in weeks since the trial clock started.
using Weeks = double;

/// Raised when caller-supplied data fails validation (bad config, bad event).
class ValidationError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised when an operation is called outside its contract (engine misuse).
class ContractViolation : public std::logic_error {
 public:
  using std::logic_error::logic_error;
};

enum class Strategy { A, B, C };

std::string_view to_string(Strategy s);
Strategy parse_strategy(std::string_view text);

struct DesignConfig {
  int num_doses = 5;
  double target = 0.25;
  Weeks window = 8.0;
  int sample_size = 24;
  double phi = 0.5;
  DoseLevel start_dose = 1;
  double prior_sd = std::sqrt(1.34);
  double halfwidth = 0.10;
  DoseLevel prior_mtd = 3;
  Weeks accrual_interval = 4.0;

  /// Throws ValidationError naming the first violated constraint.
  void validate() const;

  /// phi as seen by a strategy: A always evaluates with phi = 0.
  double effective_phi(Strategy s) const { return s == Strategy::A ? 0.0 : phi; }

  bool operator==(const DesignConfig&) const = default;
};

}  // namespace titecrm
