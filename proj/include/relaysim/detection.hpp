#pragma once

// Threshold detectors, gating and the coincidence logic of the experiment.
// Photon statistics enter as a distribution over arrival patterns (photon
// counts per detector and slot); clicks are sampled per pulse or evaluated
// exactly.

#include "relaysim/fock.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace relaysim {

enum class Detector : std::uint8_t { c1 = 0, c2 = 1, b = 2 };

inline constexpr std::size_t kDetectorCount = 3;
inline constexpr int kMaxSlots = 8;
inline constexpr std::array<Detector, kDetectorCount> kAllDetectors{Detector::c1, Detector::c2,
                                                                    Detector::b};
/// Free-running detector whose click (with the clock) opens the gates.
inline constexpr Detector kTriggerDetector = Detector::c1;

std::string to_string(Detector d);

struct DetectorSpec {
  double efficiency = 0.0;
  double dark_prob_per_ns = 0.0;
  bool gated = false;
  /// Gate width for gated detectors; exposure window per slot otherwise.
  double gate_width_ns = 1.0;
  Detector label = Detector::c1;

  bool operator==(const DetectorSpec&) const = default;
};

/// Passively quenched Ge APD: 10 % efficiency, 40 kHz dark counts, exposed
/// for one 1.2 ns slot.
DetectorSpec germanium_apd(Detector label = Detector::c1);
/// Gated InGaAs APD: 30 % efficiency, 1e-4 dark counts per ns, 1 ns gates.
DetectorSpec ingaas_apd(Detector label);

/// Dark-click probability per observed slot.
double dark_click_probability(const DetectorSpec& spec);

struct DetectorSetup {
  DetectorSpec spec;
  /// Transmission between the optical chain and the detector (fiber loss,
  /// insertion loss).
  double survival = 1.0;
  /// Observed slots are [0, slots).
  int slots = 2;
};

using DetectorBank = std::array<DetectorSetup, kDetectorCount>;

/// Throws std::invalid_argument when a composed probability leaves [0, 1].
void validate(const DetectorBank& bank);

/// Photons arriving at each detector, per slot.
struct ArrivalPattern {
  std::array<std::array<std::uint8_t, kMaxSlots>, kDetectorCount> photons{};

  int at(Detector d, int slot) const { return photons[static_cast<std::size_t>(d)][static_cast<std::size_t>(slot)]; }
  void add(Detector d, int slot, int n);

  auto operator<=>(const ArrivalPattern&) const = default;
};

/// Probability-weighted arrival patterns; weights sum to one.
using ArrivalDistribution = std::vector<std::pair<ArrivalPattern, double>>;

/// Which optical channel feeds which detector.
using DetectorMap = std::map<Channel, Detector>;

/// Projects a state onto arrival patterns: photons on mapped channels are
/// counted per detector and slot (ortho labels merged), all other modes are
/// traced out.
ArrivalDistribution arrival_distribution(const StateVector& state, const DetectorMap& map);

/// Weighted merge of several distributions (a mixed state given as an
/// ensemble of pure states).
ArrivalDistribution merge_distributions(
    std::span<const std::pair<double, ArrivalDistribution>> members);

enum class ClickOrigin : std::uint8_t { none, photon, dark };

struct DetectorClick {
  bool clicked = false;
  int slot = -1;
  /// Diagnostics only; coincidence logic never reads it.
  ClickOrigin origin = ClickOrigin::none;

  bool operator==(const DetectorClick&) const = default;
};

struct ClickRecord {
  std::uint64_t pulse_index = 0;
  std::array<DetectorClick, kDetectorCount> clicks{};

  const DetectorClick& at(Detector d) const { return clicks[static_cast<std::size_t>(d)]; }
  DetectorClick& at(Detector d) { return clicks[static_cast<std::size_t>(d)]; }

  bool operator==(const ClickRecord&) const = default;
};

/// Stream ids used under each pulse.
inline constexpr std::uint64_t kOutcomeStream = 0;
inline constexpr std::uint64_t detector_stream(Detector d) {
  return 1 + static_cast<std::uint64_t>(d);
}

/// Samples the clicks of one pulse given its photon arrivals. Each photon
/// survives with efficiency * survival; dark clicks occur per observed slot.
/// The first clicking slot wins. Gated detectors only click when the trigger
/// detector clicked.
ClickRecord sample_pulse(const ArrivalPattern& arrivals, const DetectorBank& bank,
                         std::uint64_t master_seed, std::uint64_t pulse_index);

/// |slot(first) - slot(second)| == slots.
struct SlotSeparation {
  Detector first = Detector::c1;
  Detector second = Detector::c2;
  int slots = 1;

  bool operator==(const SlotSeparation&) const = default;
};

struct CoincidenceRule {
  std::string name;
  std::vector<Detector> required;
  /// Allowed click slots per detector; detectors not listed may click in any
  /// slot.
  std::map<Detector, std::vector<int>> allowed_slots;
  std::optional<SlotSeparation> separation;
  double window_ns = 0.8;
  double slot_spacing_ns = 1.2;
};

/// Throws std::invalid_argument unless the window is narrower than the slot
/// spacing.
void validate(const CoincidenceRule& rule);

/// C1 + C2 + t0 with one slot between the two clicks.
CoincidenceRule bsm_rule();
/// C1 + C2 + B + t0 with B restricted to `bob_slots`.
CoincidenceRule fourfold_rule(std::vector<int> bob_slots, std::string name = "fourfold");
/// C1 + B + t0 with B restricted to `bob_slots`.
CoincidenceRule threefold_rule(std::vector<int> bob_slots, std::string name = "threefold");
/// C1 + C2 + t0 in the same slot.
CoincidenceRule hom_rule();

bool evaluate_coincidence(const ClickRecord& record, const CoincidenceRule& rule);

struct RuleCount {
  std::string name;
  std::uint64_t count = 0;
  std::uint64_t pulses = 0;

  double rate() const;
  /// sqrt(N) / pulses.
  double rate_error() const;
};

using RateTable = std::vector<RuleCount>;

RateTable accumulate_rates(std::span<const ClickRecord> records,
                           std::span<const CoincidenceRule> rules);

/// Exact per-pulse probability that `rule` fires, summing over arrival
/// patterns, photon survival and dark-count substitutions.
double analytic_rule_probability(const ArrivalDistribution& dist, const DetectorBank& bank,
                                 const CoincidenceRule& rule);

/// analytic_rule_probability for a rule requiring all three detectors.
double analytic_fourfold_probability(const ArrivalDistribution& dist, const DetectorBank& bank,
                                     const CoincidenceRule& rule = fourfold_rule({0, 1, 2}));

/// Categorical sampler over arrival patterns.
class ArrivalSampler {
 public:
  explicit ArrivalSampler(const ArrivalDistribution& dist);
  const ArrivalPattern& draw(double u) const;

 private:
  std::vector<ArrivalPattern> patterns_;
  std::vector<double> cumulative_;
};

/// Click records for pulses [first_pulse, first_pulse + pulses).
std::vector<ClickRecord> simulate_records(const ArrivalDistribution& dist,
                                          const DetectorBank& bank, std::uint64_t pulses,
                                          std::uint64_t master_seed, std::uint64_t first_pulse = 0);

/// Counts for every rule over `pulses` pulses. Work is split across threads;
/// counts are merged by addition, so the result is independent of scheduling.
RateTable simulate_counts(const ArrivalDistribution& dist, const DetectorBank& bank,
                          std::span<const CoincidenceRule> rules, std::uint64_t pulses,
                          std::uint64_t master_seed, unsigned threads = 0);

}  // namespace relaysim
