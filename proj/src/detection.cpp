#include "relaysim/detection.hpp"

#include "relaysim/rng.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <thread>

namespace relaysim {

namespace {

std::size_t idx(Detector d) { return static_cast<std::size_t>(d); }

double photon_click_probability(double p_single, int photons) {
  return photons == 0 ? 0.0 : 1.0 - std::pow(1.0 - p_single, photons);
}

/// First-click distribution of one detector: entry s < slots is the
/// probability that the first click falls in slot s, entry `slots` that the
/// detector stays silent.
std::vector<double> first_click_distribution(const ArrivalPattern& arrivals,
                                             const DetectorSetup& setup, Detector d) {
  const double p_single = setup.spec.efficiency * setup.survival;
  const double dark = dark_click_probability(setup.spec);
  std::vector<double> out(static_cast<std::size_t>(setup.slots) + 1, 0.0);
  double silent = 1.0;
  for (int s = 0; s < setup.slots; ++s) {
    const double p_ph = photon_click_probability(p_single, arrivals.at(d, s));
    const double q = 1.0 - (1.0 - p_ph) * (1.0 - dark);
    out[static_cast<std::size_t>(s)] = silent * q;
    silent *= 1.0 - q;
  }
  out.back() = silent;
  return out;
}

}  // namespace

std::string to_string(Detector d) {
  switch (d) {
    case Detector::c1: return "C1";
    case Detector::c2: return "C2";
    case Detector::b: return "B";
  }
  return "?";
}

DetectorSpec germanium_apd(Detector label) {
  return DetectorSpec{0.10, 40e3 * 1e-9, false, 1.2, label};
}

DetectorSpec ingaas_apd(Detector label) { return DetectorSpec{0.30, 1e-4, true, 1.0, label}; }

double dark_click_probability(const DetectorSpec& spec) {
  return spec.dark_prob_per_ns * spec.gate_width_ns;
}

void validate(const DetectorBank& bank) {
  for (auto d : kAllDetectors) {
    const auto& setup = bank[idx(d)];
    if (setup.spec.label != d) throw std::invalid_argument("detector bank order does not match labels");
    const double p = setup.spec.efficiency * setup.survival;
    const double dark = dark_click_probability(setup.spec);
    if (!(setup.spec.efficiency >= 0.0 && setup.survival >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("detection probability of " + to_string(d) + " leaves [0, 1]");
    }
    if (!(dark >= 0.0 && dark <= 1.0)) {
      throw std::invalid_argument("dark-click probability of " + to_string(d) + " leaves [0, 1]");
    }
    if (setup.slots < 1 || setup.slots > kMaxSlots) {
      throw std::invalid_argument("observed slot count of " + to_string(d) + " out of range");
    }
  }
  if (bank[idx(kTriggerDetector)].spec.gated) {
    throw std::invalid_argument("the trigger detector cannot be gated");
  }
}

void ArrivalPattern::add(Detector d, int slot, int n) {
  if (slot < 0 || slot >= kMaxSlots) throw std::out_of_range("arrival slot out of range");
  auto& cell = photons[idx(d)][static_cast<std::size_t>(slot)];
  cell = static_cast<std::uint8_t>(cell + n);
}

ArrivalDistribution arrival_distribution(const StateVector& state, const DetectorMap& map) {
  std::map<ArrivalPattern, double> acc;
  for (const auto& [basis, amp] : state.amplitudes()) {
    ArrivalPattern pattern;
    for (const auto& [m, n] : basis.entries()) {
      auto it = map.find(m.spatial);
      if (it != map.end()) pattern.add(it->second, m.time_bin, n);
    }
    acc[pattern] += std::norm(amp);
  }
  return {acc.begin(), acc.end()};
}

ArrivalDistribution merge_distributions(
    std::span<const std::pair<double, ArrivalDistribution>> members) {
  std::map<ArrivalPattern, double> acc;
  double total = 0.0;
  for (const auto& [w, dist] : members) {
    if (w < 0.0) throw std::invalid_argument("ensemble weights must be non-negative");
    total += w;
    for (const auto& [p, q] : dist) acc[p] += w * q;
  }
  if (total <= 0.0) throw std::invalid_argument("ensemble has zero total weight");
  ArrivalDistribution out(acc.begin(), acc.end());
  for (auto& [p, q] : out) q /= total;
  return out;
}

ClickRecord sample_pulse(const ArrivalPattern& arrivals, const DetectorBank& bank,
                         std::uint64_t master_seed, std::uint64_t pulse_index) {
  ClickRecord record;
  record.pulse_index = pulse_index;

  auto sample_detector = [&](Detector d) {
    const auto& setup = bank[idx(d)];
    if (setup.spec.gated && !record.at(kTriggerDetector).clicked) return;
    StreamRng rng(master_seed, pulse_index, detector_stream(d));
    const double p_single = setup.spec.efficiency * setup.survival;
    const double dark = dark_click_probability(setup.spec);
    for (int s = 0; s < setup.slots; ++s) {
      const double p_ph = photon_click_probability(p_single, arrivals.at(d, s));
      if (p_ph > 0.0 && rng.uniform() < p_ph) {
        record.at(d) = {true, s, ClickOrigin::photon};
        return;
      }
      if (dark > 0.0 && rng.uniform() < dark) {
        record.at(d) = {true, s, ClickOrigin::dark};
        return;
      }
    }
  };

  sample_detector(kTriggerDetector);
  for (auto d : kAllDetectors) {
    if (d != kTriggerDetector) sample_detector(d);
  }
  return record;
}

void validate(const CoincidenceRule& rule) {
  if (!(rule.window_ns > 0.0) || !(rule.window_ns < rule.slot_spacing_ns)) {
    throw std::invalid_argument("coincidence window must be positive and shorter than the slot spacing");
  }
  if (rule.required.empty()) throw std::invalid_argument("coincidence rule requires no detector");
}

CoincidenceRule bsm_rule() {
  return CoincidenceRule{"bsm", {Detector::c1, Detector::c2}, {}, SlotSeparation{}, 0.8, 1.2};
}

CoincidenceRule fourfold_rule(std::vector<int> bob_slots, std::string name) {
  auto rule = bsm_rule();
  rule.name = std::move(name);
  rule.required.push_back(Detector::b);
  rule.allowed_slots[Detector::b] = std::move(bob_slots);
  return rule;
}

CoincidenceRule threefold_rule(std::vector<int> bob_slots, std::string name) {
  CoincidenceRule rule{std::move(name), {Detector::c1, Detector::b}, {}, std::nullopt, 0.8, 1.2};
  rule.allowed_slots[Detector::b] = std::move(bob_slots);
  return rule;
}

CoincidenceRule hom_rule() {
  return CoincidenceRule{
      "coincidence", {Detector::c1, Detector::c2}, {}, SlotSeparation{Detector::c1, Detector::c2, 0},
      0.8, 1.2};
}

bool evaluate_coincidence(const ClickRecord& record, const CoincidenceRule& rule) {
  for (auto d : rule.required) {
    const auto& click = record.at(d);
    if (!click.clicked) return false;
    auto it = rule.allowed_slots.find(d);
    if (it != rule.allowed_slots.end() &&
        std::find(it->second.begin(), it->second.end(), click.slot) == it->second.end()) {
      return false;
    }
  }
  if (rule.separation) {
    const auto& a = record.at(rule.separation->first);
    const auto& b = record.at(rule.separation->second);
    if (!a.clicked || !b.clicked || std::abs(a.slot - b.slot) != rule.separation->slots) {
      return false;
    }
  }
  return true;
}

double RuleCount::rate() const {
  return pulses == 0 ? 0.0 : static_cast<double>(count) / static_cast<double>(pulses);
}

double RuleCount::rate_error() const {
  return pulses == 0 ? 0.0 : std::sqrt(static_cast<double>(count)) / static_cast<double>(pulses);
}

RateTable accumulate_rates(std::span<const ClickRecord> records,
                           std::span<const CoincidenceRule> rules) {
  RateTable table;
  for (const auto& rule : rules) {
    validate(rule);
    RuleCount c{rule.name, 0, records.size()};
    for (const auto& r : records) {
      if (evaluate_coincidence(r, rule)) ++c.count;
    }
    table.push_back(std::move(c));
  }
  return table;
}

double analytic_rule_probability(const ArrivalDistribution& dist, const DetectorBank& bank,
                                 const CoincidenceRule& rule) {
  validate(bank);
  validate(rule);

  std::vector<Detector> involved{kTriggerDetector};
  for (auto d : rule.required) {
    if (std::find(involved.begin(), involved.end(), d) == involved.end()) involved.push_back(d);
  }
  if (rule.separation) {
    for (auto d : {rule.separation->first, rule.separation->second}) {
      if (std::find(involved.begin(), involved.end(), d) == involved.end()) involved.push_back(d);
    }
  }

  double total = 0.0;
  for (const auto& [pattern, weight] : dist) {
    if (weight == 0.0) continue;
    std::array<std::vector<double>, kDetectorCount> first;
    for (auto d : involved) first[idx(d)] = first_click_distribution(pattern, bank[idx(d)], d);

    // Enumerate the first-click outcome of every involved detector; the
    // trigger comes first so gated detectors see its outcome.
    double p_pattern = 0.0;
    ClickRecord record;
    auto recurse = [&](auto&& self, std::size_t k, double p) -> void {
      if (p == 0.0) return;
      if (k == involved.size()) {
        if (evaluate_coincidence(record, rule)) p_pattern += p;
        return;
      }
      const Detector d = involved[k];
      const auto& setup = bank[idx(d)];
      if (setup.spec.gated && !record.at(kTriggerDetector).clicked) {
        record.at(d) = {};
        self(self, k + 1, p);
        return;
      }
      const auto& fc = first[idx(d)];
      for (int s = 0; s <= setup.slots; ++s) {
        const bool silent = s == setup.slots;
        record.at(d) = silent ? DetectorClick{} : DetectorClick{true, s, ClickOrigin::none};
        self(self, k + 1, p * fc[static_cast<std::size_t>(s)]);
      }
      record.at(d) = {};
    };
    recurse(recurse, 0, 1.0);
    total += weight * p_pattern;
  }
  return total;
}

double analytic_fourfold_probability(const ArrivalDistribution& dist, const DetectorBank& bank,
                                     const CoincidenceRule& rule) {
  return analytic_rule_probability(dist, bank, rule);
}

ArrivalSampler::ArrivalSampler(const ArrivalDistribution& dist) {
  double acc = 0.0;
  for (const auto& [p, w] : dist) {
    if (w <= 0.0) continue;
    acc += w;
    patterns_.push_back(p);
    cumulative_.push_back(acc);
  }
  if (patterns_.empty()) throw std::invalid_argument("empty arrival distribution");
  for (auto& c : cumulative_) c /= acc;
}

const ArrivalPattern& ArrivalSampler::draw(double u) const {
  auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
  if (it == cumulative_.end()) --it;
  return patterns_[static_cast<std::size_t>(it - cumulative_.begin())];
}

std::vector<ClickRecord> simulate_records(const ArrivalDistribution& dist,
                                          const DetectorBank& bank, std::uint64_t pulses,
                                          std::uint64_t master_seed, std::uint64_t first_pulse) {
  validate(bank);
  const ArrivalSampler sampler(dist);
  std::vector<ClickRecord> out;
  out.reserve(pulses);
  for (std::uint64_t k = first_pulse; k < first_pulse + pulses; ++k) {
    StreamRng rng(master_seed, k, kOutcomeStream);
    out.push_back(sample_pulse(sampler.draw(rng.uniform()), bank, master_seed, k));
  }
  return out;
}

RateTable simulate_counts(const ArrivalDistribution& dist, const DetectorBank& bank,
                          std::span<const CoincidenceRule> rules, std::uint64_t pulses,
                          std::uint64_t master_seed, unsigned threads) {
  validate(bank);
  for (const auto& r : rules) validate(r);
  const ArrivalSampler sampler(dist);

  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = static_cast<unsigned>(std::min<std::uint64_t>(threads, std::max<std::uint64_t>(pulses, 1)));

  std::vector<std::vector<std::uint64_t>> partial(threads, std::vector<std::uint64_t>(rules.size(), 0));
  auto work = [&](unsigned t) {
    const std::uint64_t begin = pulses * t / threads;
    const std::uint64_t end = pulses * (t + 1) / threads;
    auto& counts = partial[t];
    for (std::uint64_t k = begin; k < end; ++k) {
      StreamRng rng(master_seed, k, kOutcomeStream);
      const auto record = sample_pulse(sampler.draw(rng.uniform()), bank, master_seed, k);
      for (std::size_t r = 0; r < rules.size(); ++r) {
        if (evaluate_coincidence(record, rules[r])) ++counts[r];
      }
    }
  };
  if (threads == 1) {
    work(0);
  } else {
    std::vector<std::jthread> pool;
    pool.reserve(threads);
    for (unsigned t = 0; t < threads; ++t) pool.emplace_back(work, t);
  }

  RateTable table;
  for (std::size_t r = 0; r < rules.size(); ++r) {
    RuleCount c{rules[r].name, 0, pulses};
    for (const auto& p : partial) c.count += p[r];
    table.push_back(std::move(c));
  }
  return table;
}

}  // namespace relaysim
