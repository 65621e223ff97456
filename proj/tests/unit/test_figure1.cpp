#include <doctest.h>

#include <sstream>

#include "figure1.hpp"
#include "titecrm/event_log.hpp"

using namespace titecrm;

TEST_SUITE("figure1") {
  TEST_CASE("sample trial enrollment and the patient-14 decision") {
    const auto a = figure1::run(Strategy::A);
    const auto b = figure1::run(Strategy::B);
    const auto c = figure1::run(Strategy::C);

    CHECK(a.state.enrolled_count() == figure1::kN);
    CHECK(b.state.enrolled_count() == figure1::kN + 4);
    CHECK(c.state.enrolled_count() == figure1::kN + 5);

    CHECK(a.doses[13] == 3);
    CHECK(b.doses[13] == 3);
    CHECK(c.doses[13] == 2);
    CHECK(c.doses[13] <= b.doses[13]);

    // Identical histories up to the divergence.
    for (int i = 0; i < 13; ++i) CHECK(b.doses[i] == c.doses[i]);
  }

  TEST_CASE("unevaluable progressors and their weights") {
    const auto b = figure1::run(Strategy::B);
    const auto c = figure1::run(Strategy::C);
    for (int id : {5, 8, 13, 16}) {
      CHECK(b.state.patient(id).status == PatientStatus::ProgressedUnevaluable);
      CHECK(c.state.patient(id).status == PatientStatus::ProgressedUnevaluable);
    }
    CHECK(c.state.patient(14).status == PatientStatus::ProgressedUnevaluable);
    CHECK(b.state.patient(14).status != PatientStatus::ProgressedUnevaluable);
    CHECK(b.state.unevaluable_count() == 4);
    CHECK(c.state.unevaluable_count() == 5);

    // Early progressors are dropped under C; later ones keep the weight of
    // the assignment that used them (2 weeks of follow-up).
    for (int id : {5, 13, 14}) CHECK_FALSE(c.state.patient(id).frozen_weight.has_value());
    for (int id : {8, 16}) {
      REQUIRE(c.state.patient(id).frozen_weight.has_value());
      CHECK(*c.state.patient(id).frozen_weight == doctest::Approx(0.25));
    }

    const auto snap = c.state.snapshot(c.state.clock());
    const auto has = [&](int id) {
      return std::any_of(snap.begin(), snap.end(), [&](const SnapshotEntry& e) { return e.patient_id == id; });
    };
    CHECK_FALSE(has(5));
    CHECK(has(8));
    const auto snap_b = b.state.snapshot(b.state.clock());
    CHECK(snap_b.size() == static_cast<std::size_t>(b.state.enrolled_count()));
  }

  TEST_CASE("sample trial log replays exactly") {
    for (Strategy s : {Strategy::A, Strategy::B, Strategy::C}) {
      const auto run = figure1::run(s);
      std::stringstream io;
      write_event_log(io, {header_for(run.state, "figure1"), run.state.events(), {}});
      const TrialState replayed = replay(read_event_log(io));
      CHECK(replayed == run.state);
      CHECK(finalize_trial(replayed).mtd == finalize_trial(run.state).mtd);
    }
  }
}
