#include "titecrm/quadrature.hpp"

#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <utility>

namespace titecrm {

namespace {

// Orthonormal Hermite recurrence at z: returns (h_n(z), h_{n-1}(z)).
std::pair<long double, long double> hermite_pair(int n, long double z) {
  const long double pim4 = 0.7511255444649424828587030047762276930510L;  // pi^(-1/4)
  long double p1 = pim4, p2 = 0.0L;
  for (int j = 0; j < n; ++j) {
    const long double p3 = p2;
    p2 = p1;
    p1 = z * std::sqrt(2.0L / (j + 1)) * p2 - std::sqrt(static_cast<long double>(j) / (j + 1)) * p3;
  }
  return {p1, p2};
}

}  // namespace

// Positive roots are bracketed by sign changes of h_n on a grid finer than
// the smallest root spacing, then polished by Newton steps kept inside the
// bracket. Long double keeps the recurrence in range for several hundred nodes.
GaussHermiteRule::GaussHermiteRule(int num_nodes) {
  if (num_nodes < 1) throw std::invalid_argument("Gauss-Hermite rule needs at least one node");
  const int n = num_nodes;
  const int half = n / 2;
  const long double top = std::sqrt(2.0L * n + 1.0L) + 1.0L;
  const long double step = 0.05L / std::sqrt(static_cast<long double>(n));
  std::vector<long double> roots, wts;
  roots.reserve(static_cast<std::size_t>(half));
  long double a = step / 2, fa = hermite_pair(n, a).first;
  while (a < top && static_cast<int>(roots.size()) < half) {
    const long double b = a + step;
    const long double fb = hermite_pair(n, b).first;
    if ((fa < 0) != (fb < 0)) {
      long double lo = a, hi = b, z = (a + b) / 2;
      for (int it = 0; it < 200; ++it) {
        const auto [p, q] = hermite_pair(n, z);
        if ((p < 0) == (fa < 0)) lo = z; else hi = z;
        const long double dp = std::sqrt(2.0L * n) * q;
        long double next = z - p / dp;
        if (!(next > lo && next < hi)) next = (lo + hi) / 2;
        if (std::fabs(next - z) <= 1e-18L * std::max(1.0L, z) || hi - lo <= 1e-18L * hi) {
          z = next;
          break;
        }
        z = next;
      }
      const long double dp = std::sqrt(2.0L * n) * hermite_pair(n, z).second;
      roots.push_back(z);
      wts.push_back(2.0L / (dp * dp));
    }
    a = b;
    fa = fb;
  }
  if (static_cast<int>(roots.size()) != half) throw std::runtime_error("Gauss-Hermite root search lost a root");

  nodes_.assign(static_cast<std::size_t>(n), 0.0);
  weights_.assign(static_cast<std::size_t>(n), 0.0);
  // Ascending order with exact mirror symmetry.
  for (int i = 0; i < half; ++i) {
    const auto r = static_cast<std::size_t>(half - 1 - i);
    nodes_[static_cast<std::size_t>(i)] = -static_cast<double>(roots[r]);
    weights_[static_cast<std::size_t>(i)] = static_cast<double>(wts[r]);
    nodes_[static_cast<std::size_t>(n - 1 - i)] = static_cast<double>(roots[r]);
    weights_[static_cast<std::size_t>(n - 1 - i)] = static_cast<double>(wts[r]);
  }
  if (n % 2 == 1) {
    const long double dp = std::sqrt(2.0L * n) * hermite_pair(n, 0.0L).second;
    weights_[static_cast<std::size_t>(half)] = static_cast<double>(2.0L / (dp * dp));
  }
}

const GaussHermiteRule& GaussHermiteRule::cached(int num_nodes) {
  static std::mutex mutex;
  static std::map<int, std::unique_ptr<GaussHermiteRule>> rules;
  std::lock_guard lock(mutex);
  auto& slot = rules[num_nodes];
  if (!slot) slot = std::make_unique<GaussHermiteRule>(num_nodes);
  return *slot;
}

}  // namespace titecrm
