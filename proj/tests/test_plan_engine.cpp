#include <cmath>
#include <map>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "doctest.h"

#include "cdnmarket/plan_engine.hpp"
#include "test_support.hpp"

using namespace cdnmarket;
using cdnmarket::testing::bumpy_series;
using cdnmarket::testing::flat_series;
using cdnmarket::testing::mini_config;

TEST_SUITE("plan_engine") {

TEST_CASE("unified and staggered monthly billing") {
  TierTable six = build_tier_table(6);
  CHECK(payg_bill(50.0, six, PaygMode::unified) == doctest::Approx(1.50).epsilon(1e-12));
  CHECK(payg_bill(50.0, six, PaygMode::staggered) ==
        doctest::Approx(10 * 0.035 + 40 * 0.030).epsilon(1e-12));
  CHECK(payg_bill(0.0, six, PaygMode::unified) == 0.0);
  CHECK(payg_bill(0.0, six, PaygMode::staggered) == 0.0);
  // prices fall with volume, so the early expensive brackets make the
  // staggered bill at least the unified one everywhere
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> expo(-1.0, 6.5);
  for (int i = 0; i < 200; ++i) {
    double gb = std::pow(10.0, expo(rng));
    CHECK(payg_bill(gb, six, PaygMode::staggered) >=
          payg_bill(gb, six, PaygMode::unified) - 1e-9);
  }
  CHECK_THROWS_AS(payg_bill(-1.0, six, PaygMode::unified), std::invalid_argument);
}

TEST_CASE("unlimited volumes bill at the flat unlimited rate") {
  TierTable six = build_tier_table(6);
  CHECK(payg_bill(2e6, six, PaygMode::unified) == doctest::Approx(2e6 * 0.011).epsilon(1e-12));
}

TEST_CASE("reserved tiers bill their upper bound plus penalized overage") {
  TierTable six = build_tier_table(6);
  const ServiceClass& p2 = six.classes[1];

  PrecostedOutcome under = precosted_bill(p2, 80.0, PenaltyType::high);
  CHECK(under.reserved_gb == 100.0);
  CHECK(under.cost_normal == doctest::Approx(3.00).epsilon(1e-12));
  CHECK(under.cost_penalty == 0.0);
  CHECK(under.cost() == doctest::Approx(3.00).epsilon(1e-12));

  PrecostedOutcome over = precosted_bill(p2, 130.0, PenaltyType::high);
  CHECK(over.overage_gb == doctest::Approx(30.0).epsilon(1e-12));
  CHECK(over.cost() == doctest::Approx(3.00 + 30 * 0.036).epsilon(1e-12));

  PrecostedOutcome low = precosted_bill(p2, 130.0, PenaltyType::low);
  CHECK(low.cost() == doctest::Approx(3.00 + 30 * 0.0285).epsilon(1e-12));

  PrecostedOutcome at_bound = precosted_bill(p2, 100.0, PenaltyType::high);
  CHECK(at_bound.overage_gb == 0.0);
  CHECK(at_bound.cost_penalty == 0.0);

  const ServiceClass& unlimited = six.classes.back();
  PrecostedOutcome open = precosted_bill(unlimited, 2e6, PenaltyType::high);
  CHECK(open.reserved_gb == 2e6);
  CHECK(open.cost_normal == doctest::Approx(2e6 * 0.011).epsilon(1e-12));
  CHECK(open.cost_penalty == 0.0);

  CHECK_THROWS_AS(precosted_bill(p2, -1.0, PenaltyType::high), std::invalid_argument);
}

TEST_CASE("the optimal choice is the cheapest reservation in hindsight") {
  TierTable six = build_tier_table(6);
  // 80 GB: P1 costs 0.35 + 70x0.042 = 3.29, P2 costs 3.00, larger tiers more
  PrecostedOutcome best = optimal_precosted_bill(six, 80.0, PenaltyType::high);
  CHECK(best.sc_id == "P2");
  CHECK(best.cost() == doctest::Approx(3.00).epsilon(1e-12));
  // zero volume: the smallest reservation wins
  PrecostedOutcome none = optimal_precosted_bill(six, 0.0, PenaltyType::high);
  CHECK(none.sc_id == "P1");
  CHECK(none.cost() == doctest::Approx(0.35).epsilon(1e-12));
  // truly unlimited volume: the open tier competes and wins
  PrecostedOutcome open = optimal_precosted_bill(six, 2e6, PenaltyType::high);
  CHECK(open.sc_id == "P7");
  CHECK(open.cost() == doctest::Approx(22000.0).epsilon(1e-12));

  // never worse than any explicit tier choice
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> expo(-1.0, 6.8);
  for (int sc_count : {3, 6}) {
    TierTable table = build_tier_table(sc_count);
    for (PenaltyType pen : {PenaltyType::high, PenaltyType::low}) {
      for (int i = 0; i < 200; ++i) {
        double gb = std::pow(10.0, expo(rng));
        PrecostedOutcome opt = optimal_precosted_bill(table, gb, pen);
        for (const ServiceClass& sc : table.classes) {
          if (sc.unlimited && !sc.contains_monthly(gb)) continue;
          CHECK(opt.cost() <= precosted_bill(sc, gb, pen).cost() + 1e-9);
        }
      }
    }
  }
}

TEST_CASE("the published plan grid wires the mechanisms") {
  CHECK(all_plan_ids().size() == 17);
  PlanSpec ideal = plan_from_id("1", 6);
  CHECK(ideal.family == BillingFamily::framework_ideal);
  CHECK(ideal.ure == UreMode::full);
  CHECK(ideal.sm_on);
  CHECK(!ideal.so_on);

  PlanSpec bare = plan_from_id("3.1.a", 6);
  CHECK(bare.family == BillingFamily::framework);
  CHECK(bare.penalty == PenaltyType::high);
  CHECK(bare.ure == UreMode::off);
  CHECK(!bare.sm_on);

  PlanSpec pooled = plan_from_id("3.2.b", 3);
  CHECK(pooled.ure == UreMode::days_28);
  CHECK(pooled.penalty == PenaltyType::low);

  PlanSpec market = plan_from_id("5.b", 6);
  CHECK(market.sm_on);
  CHECK(!market.so_on);

  PlanSpec options = plan_from_id("6.a", 6);
  CHECK(options.sm_on);
  CHECK(options.so_on);
  CHECK(options.penalty == PenaltyType::high);

  PlanSpec hindsight = plan_from_id("2.a", 3);
  CHECK(hindsight.family == BillingFamily::optimal_precosted);

  PlanSpec usage = plan_from_id("4.a", 6);
  CHECK(usage.family == BillingFamily::payg_staggered);
  CHECK(usage.penalty == PenaltyType::none);

  CHECK_THROWS_AS(plan_from_id("9.z", 6), std::invalid_argument);
  CHECK_THROWS_AS(plan_from_id("1", 4), std::invalid_argument);
}

TEST_CASE("plan specs reject inconsistent mechanism wiring") {
  PlanSpec s = plan_from_id("5.a", 6);
  s.sm_on = false;
  s.so_on = true;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = plan_from_id("4.a", 6);
  s.pm_on = true;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);

  s = plan_from_id("3.1.a", 6);
  s.penalty = PenaltyType::none;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}

TEST_CASE("a constant load is reserved and billed without penalties") {
  SimConfig cfg = mini_config(2, 1);
  Simulator sim({flat_series("os-a", 14, 10.0)}, cfg);
  PlanResult r = sim.run(plan_from_id("3.1.a", 6));
  // 10 GB/day sits in the 3.57..35.71 band at 0.025 $/GB
  CHECK(r.total_os_cost() == doctest::Approx(14 * 10 * 0.025).epsilon(1e-9));
  for (const auto& led : r.ledgers[0]) {
    CHECK(led.penalty_gb == 0.0);
    CHECK(led.cost_penalty == 0.0);
  }
}

TEST_CASE("underforecast days buy the shortfall at the penalty price") {
  SimConfig cfg = mini_config(2, 1);
  cfg.dedm_blend = 0.0; // keep week-two forecasts at the week-one constant
  std::vector<double> volumes(14, 10.0);
  for (int d = 7; d < 14; ++d) volumes[d] = 12.0;
  DailyLoadSeries trace;
  trace.os_id = "os-a";
  trace.volumes_gb = volumes;

  Simulator sim({trace}, cfg);
  PlanResult r = sim.run(plan_from_id("3.1.a", 6));
  for (int d = 7; d < 14; ++d) {
    const DailyLedgerEntry& led = r.ledgers[0][d];
    CHECK(led.reserved_gb == doctest::Approx(10.0).epsilon(1e-9));
    CHECK(led.cost_normal == doctest::Approx(10 * 0.025).epsilon(1e-9));
    CHECK(led.penalty_gb == doctest::Approx(2.0).epsilon(1e-6));
    CHECK(led.cost_penalty == doctest::Approx(2 * 0.030).epsilon(1e-6)); // 1.2 x 0.025
  }
}

TEST_CASE("a perfect forecast prices every day at the spot tier") {
  SimConfig cfg = mini_config(4, 2);
  std::vector<DailyLoadSeries> traces = {bumpy_series("os-a", 28, 8.0, 51),
                                         bumpy_series("os-b", 28, 120.0, 52)};
  Simulator sim(traces, cfg);
  PlanResult r = sim.run(plan_from_id("1", 6));

  TierTable six = build_tier_table(6);
  double expected = 0.0;
  for (const DailyLoadSeries& t : traces)
    for (double v : t.volumes_gb) expected += v * tier_for_volume(six, v).normal_price;
  CHECK(r.total_os_cost() == doctest::Approx(expected).epsilon(1e-12));
  CHECK(r.trades.empty()); // nothing to sell, nothing short
  CHECK(r.cdn.urgent_gb == 0.0);
}

TEST_CASE("the pool expiry window is invisible on short horizons") {
  SimConfig cfg = mini_config(3, 1);
  Simulator sim({bumpy_series("os-a", 21, 40.0, 9)}, cfg);
  PlanResult full = sim.run(plan_from_id("3.3.a", 6));
  PlanResult windowed = sim.run(plan_from_id("3.2.a", 6));
  // every carryover lot is younger than 28 days, so the runs are identical
  CHECK(full.total_os_cost() == windowed.total_os_cost());
  CHECK(full.total_reserved_paid_gb() == windowed.total_reserved_paid_gb());
  for (int d = 0; d < 21; ++d) {
    CHECK(full.ledgers[0][d].carryover_gb == windowed.ledgers[0][d].carryover_gb);
    CHECK(full.ledgers[0][d].dropped_gb == windowed.ledgers[0][d].dropped_gb);
  }
}

TEST_CASE("option premiums are the exact cost of adding the hedge") {
  SimConfig cfg = mini_config(10, 3);
  std::vector<DailyLoadSeries> traces = {bumpy_series("os-a", 70, 30.0, 61),
                                         bumpy_series("os-b", 70, 45.0, 62),
                                         bumpy_series("os-c", 70, 400.0, 63)};
  Simulator sim(traces, cfg);
  PlanResult base = sim.run(plan_from_id("5.b", 6));
  PlanResult hedged = sim.run(plan_from_id("6.b", 6));

  double premiums = 0.0;
  for (const OsRunSummary& s : hedged.os_summaries) premiums += s.premiums_paid;
  CHECK(std::abs((hedged.total_os_cost() - base.total_os_cost()) - premiums) <= 1e-9);
}

TEST_CASE("exercised volume is billed at the tier rule price") {
  SimConfig cfg = mini_config(10, 3);
  std::vector<DailyLoadSeries> traces = {bumpy_series("os-a", 70, 30.0, 61),
                                         bumpy_series("os-b", 70, 45.0, 62),
                                         bumpy_series("os-c", 70, 400.0, 63)};
  Simulator sim(traces, cfg);
  PlanResult r = sim.run(plan_from_id("6.a", 6));
  TierTable six = build_tier_table(6);
  double exercised = 0.0;
  for (const auto& ledger : r.ledgers) {
    for (const DailyLedgerEntry& led : ledger) {
      if (led.so_exercised_gb <= 0.0) continue;
      exercised += led.so_exercised_gb;
      double normal = tier_for_volume(six, led.served_gb).normal_price;
      CHECK(std::abs(led.so_exercise_cost / led.so_exercised_gb - normal) <= 1e-12);
    }
  }
  CHECK(exercised > 0.0); // the scenario must actually trigger the hedge
}

TEST_CASE("market cash is zero sum and trades match the ledgers") {
  SimConfig cfg = mini_config(8, 3);
  std::vector<DailyLoadSeries> traces = {bumpy_series("os-a", 56, 20.0, 71),
                                         bumpy_series("os-b", 56, 35.0, 72),
                                         bumpy_series("os-c", 56, 50.0, 73)};
  Simulator sim(traces, cfg);
  PlanResult r = sim.run(plan_from_id("5.b", 6));
  REQUIRE(!r.trades.empty());

  double cash = 0.0, bought = 0.0, sold = 0.0, traded = 0.0;
  for (const auto& ledger : r.ledgers)
    for (const DailyLedgerEntry& led : ledger) {
      cash += led.sm_cash;
      bought += led.sm_bought_gb;
      sold += led.sm_sold_gb;
    }
  for (const Trade& t : r.trades) traded += t.quantity_gb;
  CHECK(std::abs(cash) <= 1e-9);
  CHECK(std::abs(bought - sold) <= 1e-9);
  CHECK(std::abs(bought - traded) <= 1e-9);
}

TEST_CASE("revenue equals what the servers pay net of market transfers") {
  SimConfig cfg = mini_config(8, 2);
  std::vector<DailyLoadSeries> traces = {bumpy_series("os-a", 56, 25.0, 81),
                                         bumpy_series("os-b", 56, 300.0, 82)};
  Simulator sim(traces, cfg);
  for (const char* plan : {"1", "3.1.a", "5.a", "6.a", "2.c", "4.b"}) {
    PlanResult r = sim.run(plan_from_id(plan, 6));
    double paid = 0.0, cash = 0.0;
    for (const auto& ledger : r.ledgers)
      for (const DailyLedgerEntry& led : ledger) {
        paid += led.total_cost();
        cash += led.sm_cash;
      }
    CHECK(std::abs(r.cdn.revenue - (paid - cash)) <= 1e-9 * std::max(1.0, std::abs(paid)));
    CHECK(r.cdn.profit == doctest::Approx(r.cdn.revenue - r.cdn.cost).epsilon(1e-12));
  }
}

TEST_CASE("paid volume telescopes to served plus dropped") {
  SimConfig cfg = mini_config(8, 2);
  std::vector<DailyLoadSeries> traces = {bumpy_series("os-a", 56, 25.0, 91),
                                         bumpy_series("os-b", 56, 300.0, 92)};
  Simulator sim(traces, cfg);
  for (const std::string& plan : all_plan_ids()) {
    for (int sc_count : {3, 6}) {
      PlanResult r = sim.run(plan_from_id(plan, sc_count));
      double served = r.total_served_gb();
      double dropped = 0.0;
      for (const OsRunSummary& s : r.os_summaries) dropped += s.dropped_gb;
      CHECK(std::abs(r.total_reserved_paid_gb() - (served + dropped)) <= 1e-9 * served);
    }
  }
}

TEST_CASE("every plan serves the identical demand") {
  SimConfig cfg = mini_config(6, 2);
  std::vector<DailyLoadSeries> traces = {bumpy_series("os-a", 42, 15.0, 95),
                                         bumpy_series("os-b", 42, 90.0, 96)};
  Simulator sim(traces, cfg);
  double reference = -1.0;
  for (const std::string& plan : all_plan_ids()) {
    PlanResult r = sim.run(plan_from_id(plan, 6));
    if (reference < 0.0)
      reference = r.total_served_gb();
    else
      CHECK(r.total_served_gb() == reference);
  }
}

TEST_CASE("the simulator rejects malformed trace sets") {
  SimConfig cfg = mini_config(2, 1);
  CHECK_THROWS_AS(Simulator({}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(Simulator({flat_series("os-a", 7, 5.0)}, cfg), std::invalid_argument); // short
  CHECK_THROWS_AS(Simulator({flat_series("", 14, 5.0)}, cfg), std::invalid_argument);
  CHECK_THROWS_AS(
      Simulator({flat_series("os-a", 14, 5.0), flat_series("os-a", 14, 5.0)}, cfg),
      std::invalid_argument);
  DailyLoadSeries bad = flat_series("os-a", 14, 5.0);
  bad.volumes_gb[3] = -1.0;
  CHECK_THROWS_AS(Simulator({bad}, cfg), std::invalid_argument);
}

TEST_CASE("summaries add up to the ledgers") {
  SimConfig cfg = mini_config(4, 2);
  std::vector<DailyLoadSeries> traces = {bumpy_series("os-a", 28, 25.0, 31),
                                         bumpy_series("os-b", 28, 35.0, 32)};
  Simulator sim(traces, cfg);
  PlanResult r = sim.run(plan_from_id("5.a", 6));
  double total = 0.0;
  for (const auto& ledger : r.ledgers)
    for (const DailyLedgerEntry& led : ledger) total += led.total_cost();
  CHECK(r.total_os_cost() == doctest::Approx(total).epsilon(1e-12));
  CHECK(r.average_os_cost() == doctest::Approx(total / 2.0).epsilon(1e-12));
}

} // TEST_SUITE
