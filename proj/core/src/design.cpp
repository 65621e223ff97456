#include "titecrm/design.hpp"

#include <algorithm>

namespace titecrm {

std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::A: return "A";
    case Strategy::B: return "B";
    case Strategy::C: return "C";
  }
  return "?";
}

Strategy parse_strategy(std::string_view text) {
  if (text == "A" || text == "a") return Strategy::A;
  if (text == "B" || text == "b") return Strategy::B;
  if (text == "C" || text == "c") return Strategy::C;
  throw ValidationError("unknown strategy '" + std::string(text) + "' (expected A, B or C)");
}

namespace {
void require(bool ok, const char* what) {
  if (!ok) throw ValidationError(what);
}
}  // namespace

void DesignConfig::validate() const {
  require(num_doses >= 1, "num_doses must be >= 1");
  require(std::isfinite(target) && target > 0.0 && target < 1.0, "target must lie in (0, 1)");
  require(std::isfinite(window) && window > 0.0, "window must be > 0");
  require(sample_size >= 1, "sample_size must be >= 1");
  require(phi >= 0.0 && phi <= 1.0, "phi must lie in [0, 1]");
  require(start_dose >= 1 && start_dose <= num_doses, "start_dose must lie in 1..num_doses");
  require(std::isfinite(prior_sd) && prior_sd > 0.0, "prior_sd must be > 0");
  require(halfwidth > 0.0 && halfwidth < std::min(target, 1.0 - target),
          "halfwidth must lie in (0, min(target, 1 - target))");
  require(prior_mtd >= 1 && prior_mtd <= num_doses, "prior_mtd must lie in 1..num_doses");
  require(std::isfinite(accrual_interval) && accrual_interval > 0.0, "accrual_interval must be > 0");
}

}  // namespace titecrm
