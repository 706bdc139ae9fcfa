#include <cmath>
#include <stdexcept>

#include "doctest.h"

#include "cdnmarket/options_desk.hpp"

using namespace cdnmarket;

TEST_SUITE("options_desk") {

TEST_CASE("deficit records keep zeros and exact values") {
  OptionsDesk desk("os-a");
  desk.record_deficit(0, 0.0);
  desk.record_deficit(1, 7.5);
  REQUIRE(desk.deficits().size() == 2);
  CHECK(desk.deficits()[0].deficit_gb == 0.0);
  CHECK(desk.deficits()[1].deficit_gb == 7.5);
  CHECK_THROWS_AS(desk.record_deficit(1, 2.0), std::invalid_argument); // one record per day
  CHECK_THROWS_AS(desk.record_deficit(0, 2.0), std::invalid_argument); // out of order
  CHECK_THROWS_AS(desk.record_deficit(2, -1.0), std::invalid_argument);
}

TEST_CASE("cold start and all zero history buy nothing") {
  OptionsDesk desk("os-a");
  PurchasePolicy policy;
  CHECK(desk.plan_purchase(0, policy) == 0.0);
  for (int d = 0; d < 20; ++d) desk.record_deficit(d, 0.0);
  CHECK(desk.plan_purchase(20, policy) == 0.0);
}

TEST_CASE("constant deficits plan their own size") {
  OptionsDesk desk("os-a");
  PurchasePolicy policy;
  for (int d = 0; d < 20; ++d) desk.record_deficit(d, 5.0);
  CHECK(std::abs(desk.plan_purchase(20, policy) - 5.0) <= 1e-12); // smoothed constant is itself
}

TEST_CASE("active coverage nets against the plan") {
  OptionsDesk desk("os-a");
  PurchasePolicy policy;
  for (int d = 0; d < 20; ++d) desk.record_deficit(d, 5.0);
  desk.buy(20, 5.0, 0.030, StrikeRule::normal, 0.0003, 60);
  CHECK(desk.plan_purchase(20, policy) == 0.0);
  desk.buy(20, 2.0, 0.030, StrikeRule::normal, 0.0003, 60); // overshoot still floors at zero
  CHECK(desk.plan_purchase(20, policy) == 0.0);
  CHECK_THROWS_AS(desk.plan_purchase(20, PurchasePolicy{0, 0.3}), std::invalid_argument);
}

TEST_CASE("purchases charge the per unit premium up front") {
  OptionsDesk desk("os-a");
  int id = desk.buy(3, 10.0, 0.035, StrikeRule::normal, 0.00029513, 60);
  CHECK(id == 1);
  REQUIRE(desk.contracts().size() == 1);
  const OptionContract& c = desk.contracts()[0];
  CHECK(std::abs(c.premium_paid - 0.0029513) <= 1e-15);
  CHECK(c.expiry_day == 63);
  CHECK(c.remaining_gb == 10.0);
  CHECK(c.state == ContractState::active);
  CHECK(std::abs(desk.premiums_paid() - 0.0029513) <= 1e-15);
}

TEST_CASE("zero quantity buys nothing and charges nothing") {
  OptionsDesk desk("os-a");
  CHECK(desk.buy(3, 0.0, 0.035, StrikeRule::normal, 0.0003, 60) == -1);
  CHECK(desk.contracts().empty());
  CHECK(desk.premiums_paid() == 0.0);
  CHECK_THROWS_AS(desk.buy(3, 1.0, 0.0, StrikeRule::normal, 0.0003, 60), std::invalid_argument);
  CHECK_THROWS_AS(desk.buy(3, 1.0, 0.035, StrikeRule::normal, -0.1, 60), std::invalid_argument);
  CHECK_THROWS_AS(desk.buy(3, 1.0, 0.035, StrikeRule::normal, 0.0003, 0), std::invalid_argument);
}

TEST_CASE("exercise covers the deficit when coverage suffices") {
  OptionsDesk desk("os-a");
  desk.buy(0, 15.0, 0.030, StrikeRule::normal, 0.0003, 60);
  ExerciseOutcome out = desk.exercise(5, 10.0, 0.030, 0.036);
  CHECK(out.exercised_gb == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(out.penalty_gb == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(out.exercise_cost == doctest::Approx(0.30).epsilon(1e-12));
  CHECK(out.penalty_cost == 0.0);
  CHECK(desk.contracts()[0].remaining_gb == doctest::Approx(5.0).epsilon(1e-12));
  CHECK(desk.contracts()[0].state == ContractState::active);
}

TEST_CASE("partial coverage splits into strike and penalty volume") {
  OptionsDesk desk("os-a");
  desk.buy(0, 6.0, 0.030, StrikeRule::normal, 0.0003, 60);
  ExerciseOutcome out = desk.exercise(5, 10.0, 0.030, 0.036);
  CHECK(out.exercised_gb == doctest::Approx(6.0).epsilon(1e-12));
  CHECK(out.penalty_gb == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(out.exercise_cost == doctest::Approx(0.18).epsilon(1e-12));
  CHECK(out.penalty_cost == doctest::Approx(4.0 * 0.036).epsilon(1e-12));
  CHECK(desk.contracts()[0].state == ContractState::exercised);
  CHECK(desk.contracts()[0].remaining_gb == 0.0);
}

TEST_CASE("no coverage leaves the whole deficit at the penalty price") {
  OptionsDesk desk("os-a");
  ExerciseOutcome out = desk.exercise(5, 10.0, 0.030, 0.036);
  CHECK(out.exercised_gb == 0.0);
  CHECK(out.penalty_gb == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(out.penalty_cost == doctest::Approx(0.36).epsilon(1e-12));
  CHECK_THROWS_AS(desk.exercise(6, -1.0, 0.030, 0.036), std::invalid_argument);
}

TEST_CASE("contracts are consumed soonest expiry first") {
  OptionsDesk desk("os-a");
  int late = desk.buy(0, 8.0, 0.030, StrikeRule::normal, 0.0003, 30);
  int soon = desk.buy(0, 8.0, 0.030, StrikeRule::normal, 0.0003, 10);
  ExerciseOutcome out = desk.exercise(2, 5.0, 0.030, 0.036);
  CHECK(out.exercised_gb == doctest::Approx(5.0).epsilon(1e-12));
  for (const OptionContract& c : desk.contracts()) {
    if (c.id == soon) CHECK(c.remaining_gb == doctest::Approx(3.0).epsilon(1e-12));
    if (c.id == late) CHECK(c.remaining_gb == doctest::Approx(8.0).epsilon(1e-12));
  }
}

TEST_CASE("a contract expiring today still exercises today") {
  OptionsDesk desk("os-a");
  desk.buy(0, 5.0, 0.030, StrikeRule::normal, 0.0003, 10); // expiry day 10
  CHECK(desk.active_coverage(10) == 5.0);
  ExerciseOutcome out = desk.exercise(10, 2.0, 0.030, 0.036);
  CHECK(out.exercised_gb == doctest::Approx(2.0).epsilon(1e-12));
  desk.expire(10);
  CHECK(desk.contracts()[0].state == ContractState::expired);
  CHECK(desk.active_coverage(11) == 0.0);
  ExerciseOutcome later = desk.exercise(11, 2.0, 0.030, 0.036);
  CHECK(later.exercised_gb == 0.0);
  CHECK(later.penalty_gb == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("expiry does not touch exercised contracts") {
  OptionsDesk desk("os-a");
  desk.buy(0, 3.0, 0.030, StrikeRule::normal, 0.0003, 10);
  desk.exercise(1, 3.0, 0.030, 0.036);
  REQUIRE(desk.contracts()[0].state == ContractState::exercised);
  desk.expire(10);
  CHECK(desk.contracts()[0].state == ContractState::exercised);
}

TEST_CASE("remaining volume stays within the contract bounds") {
  OptionsDesk desk("os-a");
  desk.buy(0, 4.0, 0.030, StrikeRule::normal, 0.0003, 60);
  desk.buy(1, 6.0, 0.030, StrikeRule::normal, 0.0003, 60);
  desk.exercise(2, 3.0, 0.030, 0.036);
  desk.exercise(3, 5.0, 0.030, 0.036);
  for (const OptionContract& c : desk.contracts()) {
    CHECK(c.remaining_gb >= 0.0);
    CHECK(c.remaining_gb <= c.quantity_gb);
  }
  CHECK(desk.active_coverage(4) == doctest::Approx(2.0).epsilon(1e-12));
}

} // TEST_SUITE
