#include "titecrm/crm.hpp"

#include <algorithm>
#include <cassert>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "titecrm/quadrature.hpp"

namespace titecrm {

Skeleton::Skeleton(std::vector<double> probs, double target, double halfwidth, DoseLevel prior_mtd)
    : probs_(std::move(probs)), target_(target), halfwidth_(halfwidth), prior_mtd_(prior_mtd) {
  if (probs_.empty()) throw ValidationError("skeleton must have at least one dose");
  for (std::size_t i = 0; i < probs_.size(); ++i) {
    if (!(probs_[i] > 0.0 && probs_[i] < 1.0))
      throw ValidationError("skeleton probabilities must lie in (0, 1)");
    if (i > 0 && !(probs_[i] > probs_[i - 1]))
      throw ValidationError("skeleton must be strictly increasing");
  }
  if (prior_mtd_ < 1 || prior_mtd_ > num_doses())
    throw ValidationError("skeleton prior MTD out of range");
}

Skeleton build_skeleton(double target, double halfwidth, DoseLevel prior_mtd, int num_doses) {
  if (!(target > 0.0 && target < 1.0)) throw ValidationError("target must lie in (0, 1)");
  if (!(halfwidth > 0.0 && halfwidth < std::min(target, 1.0 - target)))
    throw ValidationError("halfwidth must lie in (0, min(target, 1 - target))");
  if (num_doses < 1) throw ValidationError("num_doses must be >= 1");
  if (prior_mtd < 1 || prior_mtd > num_doses) throw ValidationError("prior_mtd must lie in 1..num_doses");

  const double log_lo = std::log(target - halfwidth);
  const double log_hi = std::log(target + halfwidth);
  std::vector<double> p(static_cast<std::size_t>(num_doses));
  const auto nu = static_cast<std::size_t>(prior_mtd - 1);
  p[nu] = target;
  // Each adjacent pair shares one beta at which the lower dose sits at
  // target - halfwidth and the upper one at target + halfwidth.
  for (std::size_t k = nu; k + 1 < p.size(); ++k) p[k + 1] = std::exp(log_hi * std::log(p[k]) / log_lo);
  for (std::size_t k = nu; k > 0; --k) p[k - 1] = std::exp(log_lo * std::log(p[k]) / log_hi);

  for (std::size_t k = 1; k < p.size(); ++k)
    if (!(p[k] > p[k - 1])) throw ContractViolation("indifference skeleton is not strictly increasing");
  return Skeleton(std::move(p), target, halfwidth, prior_mtd);
}

double prob_tox(const Skeleton& skeleton, DoseLevel k, double beta) {
  return std::pow(skeleton.prob(k), std::exp(beta));
}

double weight_of(Weeks followup, Weeks window, bool had_dlt) {
  if (!(followup >= 0.0)) throw ContractViolation("follow-up must be non-negative");
  if (!(window > 0.0)) throw ContractViolation("window must be positive");
  if (had_dlt) return 1.0;
  return std::min(followup / window, 1.0);
}

namespace {

void check_observation(const Observation& o, int num_doses) {
  if (o.dose < 1 || o.dose > num_doses) throw ContractViolation("observation dose out of range");
  if (!(o.weight >= 0.0 && o.weight <= 1.0)) throw ContractViolation("observation weight outside [0, 1]");
  if (o.tox && o.weight != 1.0) throw ContractViolation("a DLT observation must carry weight 1");
}

double log_tox_term(double psi) {
  return std::log(std::clamp(psi, kLikelihoodEpsilon, 1.0 - kLikelihoodEpsilon));
}

double log_censored_term(double weighted_psi) {
  return std::log1p(-std::min(weighted_psi, 1.0 - kLikelihoodEpsilon));
}

}  // namespace

double log_weighted_likelihood(std::span<const Observation> obs, const Skeleton& skeleton, double beta) {
  double total = 0.0;
  for (const auto& o : obs) {
    check_observation(o, skeleton.num_doses());
    if (!o.tox && o.weight == 0.0) continue;
    const double psi = prob_tox(skeleton, o.dose, beta);
    total += o.tox ? log_tox_term(psi) : log_censored_term(o.weight * psi);
  }
  return total;
}

PosteriorModel::PosteriorModel(Skeleton skeleton, double prior_sd, int num_nodes)
    : skeleton_(std::move(skeleton)), prior_sd_(prior_sd), num_doses_(skeleton_.num_doses()) {
  if (!(std::isfinite(prior_sd) && prior_sd > 0.0)) throw ValidationError("prior_sd must be > 0");
  const auto& rule = GaussHermiteRule::cached(num_nodes);
  const auto n = static_cast<std::size_t>(rule.size());
  const auto k = static_cast<std::size_t>(num_doses_);
  betas_.resize(n);
  weights_.resize(n);
  log_weights_.resize(n);
  psi_.resize(n * k);
  log_psi_.resize(n * k);
  log1m_psi_.resize(n * k);
  const double scale = std::numbers::sqrt2 * prior_sd;
  for (std::size_t j = 0; j < n; ++j) {
    betas_[j] = scale * rule.nodes()[j];
    weights_[j] = rule.weights()[j];
    log_weights_[j] = std::log(weights_[j]);
    for (std::size_t d = 0; d < k; ++d) {
      const double psi = prob_tox(skeleton_, static_cast<DoseLevel>(d + 1), betas_[j]);
      psi_[j * k + d] = psi;
      log_psi_[j * k + d] = log_tox_term(psi);
      log1m_psi_[j * k + d] = log_censored_term(psi);
    }
  }
}

double PosteriorModel::beta_mean(std::span<const Observation> obs) const {
  const auto k = static_cast<std::size_t>(num_doses_);
  // Sufficient statistics: DLT and full-weight counts per dose, plus the
  // partially weighted terms that need per-node evaluation.
  // Repeated (dose, weight) pairs are common (weekly follow-up, shared
  // progression times) and are folded into one term with a multiplicity.
  struct PartialTerm {
    std::size_t dose;
    double weight;
    double count;
  };
  std::vector<double> n_tox(k, 0.0), n_full(k, 0.0);
  std::vector<PartialTerm> partial;
  for (const auto& o : obs) {
    check_observation(o, num_doses_);
    const auto d = static_cast<std::size_t>(o.dose - 1);
    if (o.tox) {
      n_tox[d] += 1.0;
    } else if (o.weight == 1.0) {
      n_full[d] += 1.0;
    } else if (o.weight > 0.0) {
      auto it = std::find_if(partial.begin(), partial.end(),
                             [&](const PartialTerm& t) { return t.dose == d && t.weight == o.weight; });
      if (it == partial.end()) {
        partial.push_back({d, o.weight, 1.0});
      } else {
        it->count += 1.0;
      }
    }
  }

  const std::size_t n = betas_.size();
  const auto log_lik_at = [&](std::size_t j) {
    const double* lp = &log_psi_[j * k];
    const double* l1m = &log1m_psi_[j * k];
    const double* ps = &psi_[j * k];
    double s = 0.0;
    for (std::size_t d = 0; d < k; ++d) {
      if (n_tox[d] != 0.0) s += n_tox[d] * lp[d];
      if (n_full[d] != 0.0) s += n_full[d] * l1m[d];
    }
    for (const auto& t : partial) s += t.count * log_censored_term(t.weight * ps[t.dose]);
    if (!std::isfinite(s)) throw NumericalError("non-finite log-likelihood at beta = " + std::to_string(betas_[j]));
    return s;
  };

  // Since L <= 1, a node whose weight is e^-40 below the centre node's
  // weighted likelihood cannot contribute; skip that tail symmetrically.
  const std::size_t centre = n / 2;
  const double cutoff = log_weights_[centre] + log_lik_at(centre) - 40.0;
  std::size_t first = 0;
  while (first < centre && log_weights_[first] < cutoff) ++first;
  const std::size_t last = n - 1 - first;

  std::vector<double> ll(n, 0.0);
  double max_ll = -std::numeric_limits<double>::infinity();
  for (std::size_t j = first; j <= last; ++j) {
    ll[j] = log_lik_at(j);
    max_ll = std::max(max_ll, ll[j]);
  }

  // Mirrored nodes are summed in pairs so a likelihood that is flat in beta
  // yields exactly 0.
  double num = 0.0;
  double den = 0.0;
  for (std::size_t i = first, m = last; i < m; ++i, --m) {
    const double lo = std::exp(ll[i] - max_ll);
    const double hi = std::exp(ll[m] - max_ll);
    num += weights_[m] * betas_[m] * (hi - lo);
    den += weights_[m] * (hi + lo);
  }
  if (n % 2 == 1) den += weights_[n / 2] * std::exp(ll[n / 2] - max_ll);
  if (!(den > 0.0) || !std::isfinite(num)) throw NumericalError("degenerate posterior normalizing constant");
  return num / den;
}

PosteriorSummary PosteriorModel::summarize(std::span<const Observation> obs) const {
  PosteriorSummary out;
  out.beta_hat = beta_mean(obs);
  out.p_hat.reserve(static_cast<std::size_t>(num_doses_));
  for (DoseLevel d = 1; d <= num_doses_; ++d) out.p_hat.push_back(prob_tox(skeleton_, d, out.beta_hat));
  return out;
}

double posterior_beta_mean(std::span<const Observation> obs, const Skeleton& skeleton, double prior_sd) {
  return PosteriorModel(skeleton, prior_sd).beta_mean(obs);
}

DoseLevel closest_to_target(std::span<const double> p_hat, double target) {
  DoseLevel best = 1;
  double best_gap = std::fabs(p_hat[0] - target);
  for (std::size_t i = 1; i < p_hat.size(); ++i) {
    const double gap = std::fabs(p_hat[i] - target);
    if (gap < best_gap) {
      best_gap = gap;
      best = static_cast<DoseLevel>(i + 1);
    }
  }
  return best;
}

Recommendation recommend(const PosteriorModel& model, std::span<const Observation> obs,
                         const DesignConfig& design, DoseLevel highest_tried, bool escalating) {
  Recommendation rec;
  auto summary = model.summarize(obs);
  rec.beta_hat = summary.beta_hat;
  rec.p_hat = std::move(summary.p_hat);
  rec.unconstrained = closest_to_target(rec.p_hat, design.target);
  rec.dose = rec.unconstrained;
  if (escalating) {
    rec.dose = highest_tried <= 0 ? design.start_dose : std::min(rec.unconstrained, highest_tried + 1);
  }
  return rec;
}

DoseLevel recommend_dose(std::span<const Observation> obs, const Skeleton& skeleton,
                         const DesignConfig& design, DoseLevel highest_tried, bool escalating) {
  return recommend(PosteriorModel(skeleton, design.prior_sd), obs, design, highest_tried, escalating).dose;
}

}  // namespace titecrm
