#pragma once

// Independent reference computations used by the unit and acceptance tests.
// Nothing here calls into the library's numerical code.

#include <cmath>
#include <cstdint>
#include <functional>
#include <random>
#include <vector>

namespace oracle {

/// Plain bisection for a root of a monotone function on [lo, hi].
inline double bisect(const std::function<double(double)>& f, double lo, double hi) {
  double flo = f(lo);
  for (int i = 0; i < 200 && hi - lo > 1e-15; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if ((fm < 0) == (flo < 0)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

/// b such that p^exp(b) = level.
inline double power_root(double p, double level) {
  return bisect([&](double b) { return std::pow(p, std::exp(b)) - level; }, -30.0, 30.0);
}

/// Skeleton built by root-finding rather than the closed form: from each
/// level, find the model parameter that puts it on the near edge of the
/// indifference interval, then read the neighbour off the far edge.
inline std::vector<double> skeleton(double theta, double delta, int nu, int k) {
  std::vector<double> p(static_cast<std::size_t>(k));
  p[nu - 1] = theta;
  for (int i = nu; i < k; ++i) {
    const double b = power_root(p[i - 1], theta - delta);
    p[i] = bisect([&](double x) { return std::pow(x, std::exp(b)) - (theta + delta); }, 1e-300, 1.0 - 1e-16);
  }
  for (int i = nu - 2; i >= 0; --i) {
    const double b = power_root(p[i + 1], theta + delta);
    p[i] = bisect([&](double x) { return std::pow(x, std::exp(b)) - (theta - delta); }, 1e-300, 1.0 - 1e-16);
  }
  return p;
}

struct Obs {
  int dose;  // 1-based
  bool tox;
  double weight;
};

/// Exact (unclamped) log weighted likelihood, evaluated in log space.
inline long double log_lik(const std::vector<Obs>& obs, const std::vector<double>& skel, long double beta) {
  const long double scale = std::exp(beta);
  long double sum = 0.0L;
  for (const auto& o : obs) {
    const long double lp = scale * std::log(static_cast<long double>(skel[o.dose - 1]));  // ln psi
    if (o.tox) {
      sum += std::log(static_cast<long double>(o.weight)) + lp;
    } else if (o.weight == 1.0) {
      sum += std::log(-std::expm1(lp));
    } else if (o.weight > 0.0) {
      sum += std::log1p(-static_cast<long double>(o.weight) * std::exp(lp));
    }
  }
  return sum;
}

/// Posterior mean of beta by the trapezoid rule on [-10, 10] with 2^20
/// intervals, normal prior N(0, sd^2).
inline double posterior_mean(const std::vector<Obs>& obs, const std::vector<double>& skel, double sd,
                             int intervals = 1 << 20) {
  const long double lo = -10.0L, hi = 10.0L;
  const long double h = (hi - lo) / intervals;
  std::vector<long double> logf(static_cast<std::size_t>(intervals) + 1);
  long double peak = -INFINITY;
  for (int i = 0; i <= intervals; ++i) {
    const long double b = lo + h * i;
    logf[static_cast<std::size_t>(i)] = log_lik(obs, skel, b) - b * b / (2.0L * sd * sd);
    peak = std::max(peak, logf[static_cast<std::size_t>(i)]);
  }
  long double num = 0.0L, den = 0.0L;
  for (int i = 0; i <= intervals; ++i) {
    const long double b = lo + h * i;
    const long double wt = (i == 0 || i == intervals) ? 0.5L : 1.0L;
    const long double f = wt * std::exp(logf[static_cast<std::size_t>(i)] - peak);
    num += b * f;
    den += f;
  }
  return static_cast<double>(num / den);
}

/// Random observation set: 0-25 patients on 5 doses, mixing DLTs, complete
/// and partial follow-up.
inline std::vector<Obs> random_observations(std::mt19937_64& rng) {
  std::uniform_int_distribution<int> count(0, 25), dose(1, 5), kind(0, 3);
  std::uniform_real_distribution<double> frac(0.0, 1.0);
  std::vector<Obs> out;
  const int n = count(rng);
  for (int i = 0; i < n; ++i) {
    const int d = dose(rng);
    switch (kind(rng)) {
      case 0: out.push_back({d, true, 1.0}); break;
      case 1: out.push_back({d, false, 1.0}); break;
      default: out.push_back({d, false, frac(rng)}); break;
    }
  }
  return out;
}

}  // namespace oracle
