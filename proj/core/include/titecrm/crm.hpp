#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "titecrm/design.hpp"

namespace titecrm {

/// Prior guesses of the DLT probability per dose for the one-parameter
/// empiric model psi(k, beta) = p_k ^ exp(beta).
class Skeleton {
 public:
  Skeleton(std::vector<double> probs, double target, double halfwidth, DoseLevel prior_mtd);

  int num_doses() const { return static_cast<int>(probs_.size()); }
  /// 1-based access.
  double prob(DoseLevel k) const { return probs_.at(static_cast<std::size_t>(k - 1)); }
  std::span<const double> probs() const { return probs_; }
  double target() const { return target_; }
  double halfwidth() const { return halfwidth_; }
  DoseLevel prior_mtd() const { return prior_mtd_; }

  bool operator==(const Skeleton&) const = default;

 private:
  std::vector<double> probs_;
  double target_;
  double halfwidth_;
  DoseLevel prior_mtd_;
};

/// Indifference-interval skeleton anchored at probs[prior_mtd] == target.
Skeleton build_skeleton(double target, double halfwidth, DoseLevel prior_mtd, int num_doses);

/// One weighted-likelihood term.
struct Observation {
  DoseLevel dose = 1;
  bool tox = false;
  double weight = 0.0;

  bool operator==(const Observation&) const = default;
};

/// Raised when the posterior integrand becomes non-finite.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline constexpr double kLikelihoodEpsilon = 1e-12;
/// Gauss-Hermite nodes for the posterior mean; 301 keeps the error below 1e-8
/// for data sets of 40+ patients with the prior-scaled rule.
inline constexpr int kQuadratureNodes = 301;

double prob_tox(const Skeleton& skeleton, DoseLevel k, double beta);

/// Linear TITE weight; a DLT always carries full weight.
double weight_of(Weeks followup, Weeks window, bool had_dlt);

/// Sum of y*ln(w psi) + (1-y)*ln(1 - w psi). Zero-weight non-DLT terms
/// contribute exactly 0; other arguments of the logs are clamped to
/// [1e-12, 1 - 1e-12].
double log_weighted_likelihood(std::span<const Observation> obs, const Skeleton& skeleton, double beta);

struct PosteriorSummary {
  double beta_hat = 0.0;
  std::vector<double> p_hat;  ///< p_hat[k-1] = psi(k, beta_hat)
};

/// Posterior of beta under a N(0, prior_sd^2) prior, integrated with a fixed
/// Gauss-Hermite rule. Per-node probability tables are built once so repeated
/// evaluations only pay for the partially weighted terms.
class PosteriorModel {
 public:
  PosteriorModel(Skeleton skeleton, double prior_sd, int num_nodes = kQuadratureNodes);

  double beta_mean(std::span<const Observation> obs) const;
  PosteriorSummary summarize(std::span<const Observation> obs) const;

  const Skeleton& skeleton() const { return skeleton_; }
  double prior_sd() const { return prior_sd_; }

 private:
  Skeleton skeleton_;
  double prior_sd_;
  int num_doses_;
  std::vector<double> betas_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  // Row-major [node][dose] tables.
  std::vector<double> psi_;
  std::vector<double> log_psi_;     // ln(clamp(psi))
  std::vector<double> log1m_psi_;   // log1p(-min(psi, 1-eps))
};

double posterior_beta_mean(std::span<const Observation> obs, const Skeleton& skeleton, double prior_sd);

struct Recommendation {
  DoseLevel dose = 1;
  DoseLevel unconstrained = 1;
  double beta_hat = 0.0;
  std::vector<double> p_hat;
};

/// Dose closest to the target (ties to the lower dose). While escalating,
/// the choice is capped at highest_tried + 1; with nothing tried yet the
/// design's start dose is returned.
Recommendation recommend(const PosteriorModel& model, std::span<const Observation> obs,
                         const DesignConfig& design, DoseLevel highest_tried, bool escalating);

DoseLevel recommend_dose(std::span<const Observation> obs, const Skeleton& skeleton,
                         const DesignConfig& design, DoseLevel highest_tried, bool escalating);

/// argmin_k |p_hat[k] - target|, lower dose on ties. 1-based.
DoseLevel closest_to_target(std::span<const double> p_hat, double target);

}  // namespace titecrm
