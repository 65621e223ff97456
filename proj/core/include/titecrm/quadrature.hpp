#pragma once

#include <span>
#include <vector>

namespace titecrm {

/// Gauss-Hermite rule for integrals of the form  ∫ f(x) exp(-x^2) dx.
///
/// Nodes are stored in ascending order and are exactly antisymmetric:
/// node(i) == -node(n-1-i) bit-for-bit, with identical weights. Callers that
/// pair mirrored nodes therefore get exact cancellation for even integrands.
class GaussHermiteRule {
 public:
  explicit GaussHermiteRule(int num_nodes);

  int size() const { return static_cast<int>(nodes_.size()); }
  std::span<const double> nodes() const { return nodes_; }
  std::span<const double> weights() const { return weights_; }

  /// Shared, lazily built rule. Construction is thread-safe.
  static const GaussHermiteRule& cached(int num_nodes);

 private:
  std::vector<double> nodes_;
  std::vector<double> weights_;
};

}  // namespace titecrm
