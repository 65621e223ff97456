#include <doctest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "titecrm/crm.hpp"

using namespace titecrm;

namespace {
const double kSd = std::sqrt(1.34);

std::vector<Observation> to_obs(const std::vector<oracle::Obs>& in) {
  std::vector<Observation> out;
  for (const auto& o : in) out.push_back({o.dose, o.tox, o.weight});
  return out;
}

Skeleton default_skeleton() { return build_skeleton(0.25, 0.10, 3, 5); }
}  // namespace

TEST_SUITE("crm") {
  TEST_CASE("skeleton matches frozen root-finder values") {
    const auto s = default_skeleton();
    const double expected[] = {0.010812715206121, 0.0816629708990883, 0.25, 0.464337745323122, 0.654084216492608};
    for (int k = 1; k <= 5; ++k) CHECK(s.prob(k) == doctest::Approx(expected[k - 1]).epsilon(1e-12));
    CHECK(s.prob(3) == 0.25);

    const auto ref = oracle::skeleton(0.25, 0.10, 3, 5);
    for (int k = 1; k <= 5; ++k) CHECK(std::abs(s.prob(k) - ref[k - 1]) < 1e-10);
  }

  TEST_CASE("skeleton satisfies both indifference equations per adjacent pair") {
    for (double delta : {0.03, 0.07, 0.10, 0.12}) {
      for (int nu = 1; nu <= 5; ++nu) {
        CAPTURE(delta);
        CAPTURE(nu);
        const auto s = build_skeleton(0.25, delta, nu, 5);
        CHECK(s.prob(nu) == 0.25);
        for (int k = 1; k < 5; ++k) {
          CHECK(s.prob(k) < s.prob(k + 1));
          // The lower level hits theta - delta and the upper one theta + delta
          // at a common beta.
          const double b = oracle::power_root(s.prob(k), 0.25 - delta);
          CHECK(std::abs(std::pow(s.prob(k + 1), std::exp(b)) - (0.25 + delta)) < 1e-10);
        }
      }
    }
  }

  TEST_CASE("degenerate halfwidth collapses towards the target") {
    const auto s = build_skeleton(0.25, 1e-6, 3, 5);
    for (int k = 1; k <= 5; ++k) CHECK(std::abs(s.prob(k) - 0.25) < 1e-4);
  }

  TEST_CASE("skeleton rejects bad inputs") {
    CHECK_THROWS_AS(build_skeleton(0.25, 0.30, 3, 5), ValidationError);
    CHECK_THROWS_AS(build_skeleton(0.25, 0.0, 3, 5), ValidationError);
    CHECK_THROWS_AS(build_skeleton(1.2, 0.1, 3, 5), ValidationError);
    CHECK_THROWS_AS(build_skeleton(0.25, 0.1, 6, 5), ValidationError);
    CHECK_THROWS_AS(build_skeleton(0.25, 0.1, 0, 5), ValidationError);
    CHECK_THROWS_AS(Skeleton({0.3, 0.2}, 0.25, 0.1, 1), ValidationError);
    CHECK_THROWS_AS(Skeleton({0.0, 0.2}, 0.25, 0.1, 1), ValidationError);
  }

  TEST_CASE("prob_tox examples") {
    const auto s = default_skeleton();
    CHECK(prob_tox(s, 3, 0.0) == 0.25);
    CHECK(prob_tox(s, 3, std::log(2.0)) == doctest::Approx(0.0625).epsilon(1e-14));
    const Skeleton t({0.0817, 0.25}, 0.25, 0.1, 2);
    CHECK(prob_tox(t, 1, -0.5) == doctest::Approx(0.218891716206051).epsilon(1e-12));
    CHECK(std::abs(prob_tox(t, 1, -0.5) - 0.2191) < 5e-4);
  }

  TEST_CASE("prob_tox monotone in dose and beta") {
    const auto s = default_skeleton();
    for (double beta = -3.0; beta <= 3.0; beta += 0.25) {
      for (int k = 1; k < 5; ++k) CHECK(prob_tox(s, k, beta) < prob_tox(s, k + 1, beta));
      for (int k = 1; k <= 5; ++k) {
        const double p = prob_tox(s, k, beta);
        CHECK(p > 0.0);
        CHECK(p < 1.0);
        CHECK(prob_tox(s, k, beta + 0.25) < p);
      }
    }
  }

  TEST_CASE("linear weight") {
    CHECK(weight_of(4, 8, false) == 0.5);
    CHECK(weight_of(10, 8, false) == 1.0);
    CHECK(weight_of(2, 8, true) == 1.0);
    CHECK(weight_of(0, 8, false) == 0.0);
  }

  TEST_CASE("log weighted likelihood examples") {
    const auto s = default_skeleton();
    CHECK(log_weighted_likelihood({}, s, 0.7) == 0.0);
    const Observation dlt{3, true, 1.0};
    CHECK(log_weighted_likelihood({&dlt, 1}, s, 0.0) == doctest::Approx(std::log(0.25)).epsilon(1e-14));
    const Observation partial{3, false, 0.5};
    CHECK(log_weighted_likelihood({&partial, 1}, s, 0.0) == doctest::Approx(std::log(1 - 0.125)).epsilon(1e-14));
  }

  TEST_CASE("zero-weight observations are exactly neutral") {
    const auto s = default_skeleton();
    const PosteriorModel model(s, kSd);
    DesignConfig design;
    std::mt19937_64 rng(11);
    for (int rep = 0; rep < 50; ++rep) {
      auto obs = to_obs(oracle::random_observations(rng));
      const double ll = log_weighted_likelihood(obs, s, 0.3);
      const double bm = model.beta_mean(obs);
      const auto rec = recommend(model, obs, design, 5, false);
      auto padded = obs;
      for (int extra = 0; extra < 1 + rep % 7; ++extra) {
        const auto at = static_cast<std::ptrdiff_t>(static_cast<std::size_t>(extra) % (padded.size() + 1));
        padded.insert(padded.begin() + at, Observation{1 + extra % 5, false, 0.0});
      }
      CHECK(log_weighted_likelihood(padded, s, 0.3) == ll);
      CHECK(model.beta_mean(padded) == bm);
      CHECK(recommend(model, padded, design, 5, false).dose == rec.dose);
    }
  }

  TEST_CASE("posterior mean: prior and sign") {
    const auto s = default_skeleton();
    CHECK(posterior_beta_mean({}, s, 1.1576) == 0.0);
    const Observation ok{3, false, 1.0};
    CHECK(posterior_beta_mean({&ok, 1}, s, kSd) > 0.0);
    const Observation bad{3, true, 1.0};
    CHECK(posterior_beta_mean({&bad, 1}, s, kSd) < 0.0);
  }

  TEST_CASE("posterior mean agrees with the dense trapezoid oracle") {
    const auto s = default_skeleton();
    const std::vector<double> skel(s.probs().begin(), s.probs().end());
    const PosteriorModel model(s, kSd);
    const std::vector<oracle::Obs> single{{3, false, 1.0}};
    CHECK(std::abs(model.beta_mean(to_obs(single)) - oracle::posterior_mean(single, skel, kSd)) < 1e-8);

    std::mt19937_64 rng(2024);
    for (int rep = 0; rep < 5; ++rep) {
      const auto obs = oracle::random_observations(rng);
      CAPTURE(rep);
      CHECK(std::abs(model.beta_mean(to_obs(obs)) - oracle::posterior_mean(obs, skel, kSd)) < 1e-8);
    }
  }

  TEST_CASE("posterior mean stays accurate for large trials") {
    const auto s = default_skeleton();
    const std::vector<double> skel(s.probs().begin(), s.probs().end());
    const PosteriorModel model(s, kSd);
    std::mt19937_64 rng(77);
    for (int rep = 0; rep < 3; ++rep) {
      auto obs = oracle::random_observations(rng);
      while (obs.size() < 40) {
        const auto more = oracle::random_observations(rng);
        obs.insert(obs.end(), more.begin(), more.end());
      }
      obs.resize(40);
      CAPTURE(rep);
      CHECK(std::abs(model.beta_mean(to_obs(obs)) - oracle::posterior_mean(obs, skel, kSd, 1 << 18)) < 1e-8);
    }
  }

  TEST_CASE("posterior mean is reproducible bit for bit") {
    const auto s = default_skeleton();
    std::mt19937_64 rng(5);
    const auto obs = to_obs(oracle::random_observations(rng));
    const PosteriorModel a(s, kSd), b(s, kSd);
    CHECK(a.beta_mean(obs) == b.beta_mean(obs));
    CHECK(a.beta_mean(obs) == posterior_beta_mean(obs, s, kSd));
  }

  TEST_CASE("posterior responds monotonically to full-weight outcomes") {
    const auto s = default_skeleton();
    const PosteriorModel model(s, kSd);
    DesignConfig design;
    std::mt19937_64 rng(99);
    for (int rep = 0; rep < 200; ++rep) {
      auto obs = to_obs(oracle::random_observations(rng));
      const double base = model.beta_mean(obs);
      const int base_dose = recommend(model, obs, design, 5, false).dose;
      for (int d = 1; d <= 5; ++d) {
        auto with_tox = obs;
        with_tox.push_back({d, true, 1.0});
        CHECK(model.beta_mean(with_tox) <= base);
        CHECK(recommend(model, with_tox, design, 5, false).dose <= base_dose);
        auto with_ok = obs;
        with_ok.push_back({d, false, 1.0});
        CHECK(model.beta_mean(with_ok) >= base);
        CHECK(recommend(model, with_ok, design, 5, false).dose >= base_dose);
      }
    }
  }

  TEST_CASE("recommendation rules") {
    DesignConfig design;
    const PosteriorModel model(default_skeleton(), kSd);
    CHECK(recommend(model, {}, design, 0, true).dose == 1);
    design.start_dose = 2;
    CHECK(recommend(model, {}, design, 0, true).dose == 2);
    design.start_dose = 1;

    const auto fresh = recommend(model, {}, design, 0, true);
    CHECK(fresh.beta_hat == 0.0);
    for (int k = 1; k <= 5; ++k) CHECK(fresh.p_hat[k - 1] == doctest::Approx(model.skeleton().prob(k)).epsilon(1e-15));

    const PosteriorModel exact(Skeleton({0.05, 0.15, 0.25, 0.40, 0.55}, 0.25, 0.1, 3), kSd);
    CHECK(recommend(exact, {}, design, 5, true).dose == 3);

    const PosteriorModel high(Skeleton({0.02, 0.05, 0.10, 0.25, 0.50}, 0.25, 0.1, 4), kSd);
    const auto capped = recommend(high, {}, design, 2, true);
    CHECK(capped.unconstrained == 4);
    CHECK(capped.dose == 3);
    CHECK(recommend(high, {}, design, 2, false).dose == 4);

    const std::vector<Observation> clean(6, Observation{1, false, 1.0});
    CHECK(recommend(model, clean, design, 1, true).dose <= 2);
  }

  TEST_CASE("closest to target breaks ties downwards") {
    const std::vector<double> tie{0.125, 0.375, 0.6};
    CHECK(closest_to_target(tie, 0.25) == 1);
    const std::vector<double> p{0.05, 0.15, 0.25, 0.40, 0.55};
    CHECK(closest_to_target(p, 0.25) == 3);
  }
}
