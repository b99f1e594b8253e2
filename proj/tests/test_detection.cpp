#include "relaysim/detection.hpp"
#include "relaysim/rng.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>

using namespace relaysim;

namespace {

DetectorSpec ideal(Detector d, double eta = 1.0, bool gated = false) {
  return DetectorSpec{eta, 0.0, gated, 1.0, d};
}

DetectorBank bank_of(DetectorSpec c1, DetectorSpec c2, DetectorSpec b, int slots = 2) {
  return {DetectorSetup{c1, 1.0, slots}, DetectorSetup{c2, 1.0, slots}, DetectorSetup{b, 1.0, slots}};
}

ArrivalPattern pattern(std::initializer_list<std::tuple<Detector, int, int>> photons) {
  ArrivalPattern p;
  for (const auto& [d, slot, n] : photons) p.add(d, slot, n);
  return p;
}

double within_sigmas(std::uint64_t count, double p, std::uint64_t pulses) {
  const double mean = p * static_cast<double>(pulses);
  const double sd = std::sqrt(std::max(mean * (1.0 - p), 1.0));
  return std::abs(static_cast<double>(count) - mean) / sd;
}

}  // namespace

TEST(DarkCounts, PerSlotProbabilities) {
  EXPECT_NEAR(dark_click_probability(ingaas_apd(Detector::b)), 1e-4, 1e-18);
  EXPECT_NEAR(dark_click_probability(germanium_apd()), 40e3 * 1.2e-9, 1e-15);
  EXPECT_EQ(germanium_apd().efficiency, 0.10);
  EXPECT_EQ(ingaas_apd(Detector::c2).efficiency, 0.30);
  EXPECT_TRUE(ingaas_apd(Detector::c2).gated);
  EXPECT_FALSE(germanium_apd().gated);
}

TEST(DetectorBank, RejectsImpossibleProbabilities) {
  auto bank = bank_of(ideal(Detector::c1), ideal(Detector::c2), ideal(Detector::b));
  EXPECT_NO_THROW(validate(bank));
  bank[2].survival = 1.5;
  EXPECT_THROW(validate(bank), std::invalid_argument);
  bank = bank_of(ideal(Detector::c1), ideal(Detector::c2), ideal(Detector::b));
  bank[1].spec.dark_prob_per_ns = 2.0;
  EXPECT_THROW(validate(bank), std::invalid_argument);
  bank = bank_of(ideal(Detector::c2), ideal(Detector::c1), ideal(Detector::b));
  EXPECT_THROW(validate(bank), std::invalid_argument);
}

TEST(SamplePulse, NothingToDetectNeverClicks) {
  const auto bank = bank_of(ideal(Detector::c1), ideal(Detector::c2), ideal(Detector::b));
  for (std::uint64_t k = 0; k < 10000; ++k) {
    const auto r = sample_pulse(ArrivalPattern{}, bank, 5, k);
    for (auto d : kAllDetectors) EXPECT_FALSE(r.at(d).clicked);
  }
}

TEST(SamplePulse, DarkOnlyRate) {
  auto c1 = ingaas_apd(Detector::c1);
  c1.gated = false;
  const auto bank = bank_of(c1, ideal(Detector::c2), ideal(Detector::b), 1);
  const ArrivalDistribution dist{{ArrivalPattern{}, 1.0}};
  CoincidenceRule any{"c1", {Detector::c1}, {}, std::nullopt, 0.8, 1.2};
  const auto counts = simulate_counts(dist, bank, std::vector{any}, 1'000'000, 17);
  EXPECT_LT(within_sigmas(counts[0].count, 1e-4, 1'000'000), 5.0);
}

TEST(SamplePulse, EfficiencyRate) {
  auto c1 = ideal(Detector::c1, 0.3);
  c1.dark_prob_per_ns = 1e-4;
  const auto bank = bank_of(c1, ideal(Detector::c2), ideal(Detector::b), 1);
  const ArrivalDistribution dist{{pattern({{Detector::c1, 0, 1}}), 1.0}};
  CoincidenceRule any{"c1", {Detector::c1}, {}, std::nullopt, 0.8, 1.2};
  const double expected = 1.0 - 0.7 * (1.0 - 1e-4);
  const auto counts = simulate_counts(dist, bank, std::vector{any}, 1'000'000, 3);
  EXPECT_LT(within_sigmas(counts[0].count, expected, 1'000'000), 5.0);
  EXPECT_NEAR(analytic_rule_probability(dist, bank, any), expected, 1e-15);
}

TEST(SamplePulse, GatingContract) {
  auto c1 = ideal(Detector::c1, 0.5);
  c1.dark_prob_per_ns = 0.01;
  auto c2 = ingaas_apd(Detector::c2);
  c2.dark_prob_per_ns = 0.05;
  auto b = ingaas_apd(Detector::b);
  b.dark_prob_per_ns = 0.05;
  const auto bank = bank_of(c1, c2, b, 3);
  const ArrivalDistribution dist{
      {pattern({{Detector::c1, 0, 1}, {Detector::c2, 1, 1}, {Detector::b, 2, 1}}), 0.5},
      {pattern({{Detector::c2, 0, 2}, {Detector::b, 1, 1}}), 0.5},
  };
  const auto records = simulate_records(dist, bank, 200'000, 9);
  std::uint64_t gated_clicks = 0;
  for (const auto& r : records) {
    if (!r.at(Detector::c1).clicked) {
      EXPECT_FALSE(r.at(Detector::c2).clicked);
      EXPECT_FALSE(r.at(Detector::b).clicked);
    } else {
      gated_clicks += r.at(Detector::b).clicked;
    }
  }
  EXPECT_GT(gated_clicks, 0u);
}

TEST(SamplePulse, FirstSlotWins) {
  const auto bank = bank_of(ideal(Detector::c1), ideal(Detector::c2), ideal(Detector::b), 3);
  const auto r = sample_pulse(pattern({{Detector::c1, 1, 1}, {Detector::c1, 2, 1}}), bank, 1, 0);
  EXPECT_TRUE(r.at(Detector::c1).clicked);
  EXPECT_EQ(r.at(Detector::c1).slot, 1);
  EXPECT_EQ(r.at(Detector::c1).origin, ClickOrigin::photon);
}

TEST(Rng, StreamsAreIndependentOfOrder) {
  StreamRng a(42, 7, 1), b(42, 7, 1), c(42, 7, 2), d(42, 8, 1);
  const auto x = a();
  EXPECT_EQ(x, b());
  EXPECT_NE(x, c());
  EXPECT_NE(x, d());
  for (int k = 0; k < 1000; ++k) {
    const double u = a.uniform();
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
}

TEST(Coincidence, Rules) {
  ClickRecord r;
  r.at(Detector::c1) = {true, 0, ClickOrigin::photon};
  r.at(Detector::c2) = {true, 1, ClickOrigin::photon};
  r.at(Detector::b) = {true, 1, ClickOrigin::dark};
  EXPECT_TRUE(evaluate_coincidence(r, bsm_rule()));
  EXPECT_TRUE(evaluate_coincidence(r, fourfold_rule({1})));
  EXPECT_FALSE(evaluate_coincidence(r, fourfold_rule({0})));
  EXPECT_TRUE(evaluate_coincidence(r, threefold_rule({1})));

  auto missing = r;
  missing.at(Detector::c2) = {};
  EXPECT_FALSE(evaluate_coincidence(missing, bsm_rule()));

  auto same = r;
  same.at(Detector::c2).slot = 0;
  EXPECT_FALSE(evaluate_coincidence(same, bsm_rule()));
  EXPECT_TRUE(evaluate_coincidence(same, hom_rule()));
}

TEST(Coincidence, OriginIsNeverRead) {
  ClickRecord r;
  r.at(Detector::c1) = {true, 0, ClickOrigin::photon};
  r.at(Detector::c2) = {true, 1, ClickOrigin::photon};
  auto dark = r;
  dark.at(Detector::c1).origin = ClickOrigin::dark;
  dark.at(Detector::c2).origin = ClickOrigin::dark;
  EXPECT_EQ(evaluate_coincidence(r, bsm_rule()), evaluate_coincidence(dark, bsm_rule()));
}

TEST(Coincidence, WindowMustBeShorterThanTheSlot) {
  auto rule = bsm_rule();
  EXPECT_NO_THROW(validate(rule));
  rule.window_ns = 1.2;
  EXPECT_THROW(validate(rule), std::invalid_argument);
}

TEST(Rates, EmptyAndAlwaysTrue) {
  CoincidenceRule none{"none", {Detector::c1}, {}, std::nullopt, 0.8, 1.2};
  const auto empty = accumulate_rates({}, std::vector{none});
  EXPECT_EQ(empty[0].count, 0u);
  EXPECT_EQ(empty[0].rate(), 0.0);

  std::vector<ClickRecord> records(1000);
  for (auto& r : records) r.at(Detector::c1) = {true, 0, ClickOrigin::photon};
  const auto all = accumulate_rates(records, std::vector{none});
  EXPECT_EQ(all[0].count, 1000u);
  EXPECT_DOUBLE_EQ(all[0].rate(), 1.0);
  EXPECT_NEAR(all[0].rate_error(), std::sqrt(1000.0) / 1000.0, 1e-15);
}

TEST(Rates, BernoulliClicks) {
  const double p = 0.013;
  const std::uint64_t n = 1'000'000;
  std::vector<ClickRecord> records(n);
  for (std::uint64_t k = 0; k < n; ++k) {
    StreamRng rng(123, k, 0);
    if (rng.uniform() < p) records[k].at(Detector::b) = {true, 0, ClickOrigin::photon};
  }
  CoincidenceRule rule{"b", {Detector::b}, {}, std::nullopt, 0.8, 1.2};
  const auto counts = accumulate_rates(records, std::vector{rule});
  EXPECT_LT(std::abs(counts[0].rate() - p), 5 * std::sqrt(p * (1 - p) / n));
}

TEST(Analytic, IdealFactorization) {
  const auto bank = bank_of(ideal(Detector::c1), ideal(Detector::c2, 1.0, true), ideal(Detector::b, 1.0, true), 3);
  // BSM succeeds with 1/4; Bob's photon sits in slot 1 half the time.
  const ArrivalDistribution dist{
      {pattern({{Detector::c1, 0, 1}, {Detector::c2, 1, 1}, {Detector::b, 1, 1}}), 0.125},
      {pattern({{Detector::c1, 1, 1}, {Detector::c2, 0, 1}, {Detector::b, 2, 1}}), 0.125},
      {pattern({{Detector::c1, 0, 2}, {Detector::b, 1, 1}}), 0.75},
  };
  EXPECT_NEAR(analytic_rule_probability(dist, bank, bsm_rule()), 0.25, 1e-15);
  EXPECT_NEAR(analytic_fourfold_probability(dist, bank, fourfold_rule({1})), 0.125, 1e-15);
}

TEST(Analytic, PureDarkCoincidences) {
  auto c1 = ideal(Detector::c1, 0.0);
  auto c2 = ideal(Detector::c2, 0.0, true);
  auto b = ideal(Detector::b, 0.0, true);
  c1.dark_prob_per_ns = 0.02;
  c2.dark_prob_per_ns = 0.03;
  b.dark_prob_per_ns = 0.05;
  const auto bank = bank_of(c1, c2, b, 1);
  const ArrivalDistribution dist{{pattern({{Detector::c1, 0, 1}, {Detector::b, 0, 2}}), 1.0}};
  CoincidenceRule all{"all", {Detector::c1, Detector::c2, Detector::b}, {}, std::nullopt, 0.8, 1.2};
  EXPECT_NEAR(analytic_rule_probability(dist, bank, all), 0.02 * 0.03 * 0.05, 1e-17);
}

TEST(Analytic, AgreesWithMonteCarlo) {
  auto c1 = germanium_apd();
  c1.efficiency = 0.6;
  c1.dark_prob_per_ns = 0.01;
  auto c2 = ingaas_apd(Detector::c2);
  c2.efficiency = 0.7;
  c2.dark_prob_per_ns = 0.02;
  auto b = ingaas_apd(Detector::b);
  b.efficiency = 0.8;
  const DetectorBank bank{DetectorSetup{c1, 0.9, 2}, DetectorSetup{c2, 0.9, 2}, DetectorSetup{b, 0.8, 3}};
  const ArrivalDistribution dist{
      {pattern({{Detector::c1, 0, 1}, {Detector::c2, 1, 1}, {Detector::b, 1, 1}}), 0.3},
      {pattern({{Detector::c1, 1, 1}, {Detector::c2, 0, 1}, {Detector::b, 2, 1}}), 0.2},
      {pattern({{Detector::c1, 0, 2}, {Detector::b, 0, 1}, {Detector::b, 1, 1}}), 0.1},
      {ArrivalPattern{}, 0.4},
  };
  const std::vector rules{bsm_rule(), fourfold_rule({1}), threefold_rule({1}), hom_rule()};
  const std::uint64_t n = 1'000'000;
  const auto counts = simulate_counts(dist, bank, rules, n, 2718);
  for (std::size_t k = 0; k < rules.size(); ++k) {
    const double p = analytic_rule_probability(dist, bank, rules[k]);
    EXPECT_LT(within_sigmas(counts[k].count, p, n), 5.0) << rules[k].name;
  }
}

TEST(Reproducibility, BitIdenticalAcrossRunsAndThreads) {
  auto c1 = germanium_apd();
  c1.dark_prob_per_ns = 0.05;
  const DetectorBank bank{DetectorSetup{c1, 1.0, 2}, DetectorSetup{ingaas_apd(Detector::c2), 1.0, 2},
                          DetectorSetup{ingaas_apd(Detector::b), 1.0, 3}};
  const ArrivalDistribution dist{
      {pattern({{Detector::c1, 0, 1}, {Detector::c2, 1, 1}, {Detector::b, 1, 1}}), 0.5},
      {ArrivalPattern{}, 0.5},
  };
  EXPECT_EQ(simulate_records(dist, bank, 5000, 77), simulate_records(dist, bank, 5000, 77));
  EXPECT_NE(simulate_records(dist, bank, 5000, 77), simulate_records(dist, bank, 5000, 78));

  const std::vector rules{bsm_rule(), fourfold_rule({1})};
  const auto one = simulate_counts(dist, bank, rules, 100'000, 5, 1);
  const auto four = simulate_counts(dist, bank, rules, 100'000, 5, 4);
  for (std::size_t k = 0; k < rules.size(); ++k) EXPECT_EQ(one[k].count, four[k].count);

  // A pulse sampled on its own matches the same pulse inside a batch.
  const auto batch = simulate_records(dist, bank, 10, 77, 100);
  const auto single = simulate_records(dist, bank, 1, 77, 105);
  EXPECT_EQ(batch[5], single[0]);
}

TEST(ArrivalDistribution, TracesOutUnmappedModes) {
  const ModeId a{Channel::alice, 0}, c{Channel::charlie, 1}, b{Channel::bob, 2, Band::nm1550};
  const ModeId a_orth{Channel::alice, 0, Band::nm1310, Ortho::orthogonal};
  const auto s = make_state({{FockBasisState{{a, 1}, {c, 1}}, 1.0},
                             {FockBasisState{{a_orth, 1}, {b, 1}}, 1.0},
                             {FockBasisState{{ModeId{Channel::alice_twin, 0, Band::nm1550}, 1}}, 1.0}});
  const auto dist = arrival_distribution(s, {{Channel::alice, Detector::c1}, {Channel::charlie, Detector::c2},
                                             {Channel::bob, Detector::b}});
  double total = 0.0;
  for (const auto& [p, w] : dist) total += w;
  EXPECT_NEAR(total, 1.0, 1e-15);
  EXPECT_EQ(dist.size(), 3u);
}
