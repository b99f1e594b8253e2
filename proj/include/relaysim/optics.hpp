#pragma once

// Optical components of the teleportation setup: SPDC pair sources pumped in
// one or more time bins, unbalanced (Michelson-type) interferometers used for
// preparation and analysis, Bell states and the Pauli corrections.

#include "relaysim/fock.hpp"

#include <map>
#include <span>
#include <vector>

namespace relaysim {

struct PumpBin {
  int time_bin = 0;
  double phase = 0.0;  // relative to bin 0
};

struct SourceSpec {
  /// Pair-creation amplitude per pump time bin, in [0, 0.5].
  double pair_amplitude = 0.0;
  std::vector<PumpBin> pump_bins{PumpBin{}};
  Band signal_band = Band::nm1310;
  Band idler_band = Band::nm1550;
  Channel signal = Channel::charlie;
  Channel idler = Channel::bob;
};

void validate(const SourceSpec& spec);

struct EmissionOrder {
  /// Pairs kept in the expansion of exp(sum of pair creators), all sources.
  int max_pairs = 2;
  /// Pairs any single source may contribute; 1 disables same-source
  /// multi-pair terms.
  int max_pairs_per_source = 2;
};

/// Two-mode-squeezed output of one source, truncated at two pairs and
/// renormalized. Throws TruncationError when the truncation cannot hold two
/// pairs.
StateVector spdc_emit(const SourceSpec& spec, Truncation trunc = {});

/// Joint output of independent sources pumped by the same pulse.
StateVector spdc_emit(std::span<const SourceSpec> specs, Truncation trunc = {},
                      EmissionOrder order = {});

enum class PathMode {
  interferometer,  ///< both arms, one monitored output
  short_path,      ///< plain fiber, no delay
  long_path,       ///< plain fiber delayed by delay_slots
};

struct InterferometerSpec {
  int delay_slots = 1;
  /// Relative phase of the long arm against the short arm at the monitored
  /// output.
  double phase = 0.0;
  double insertion_loss = 0.0;
  PathMode mode = PathMode::interferometer;
};

void validate(const InterferometerSpec& spec);

/// Wraps into [0, 2 pi).
double wrap_phase(double phase);

/// Unitary propagation through the unbalanced interferometer on `channel`.
/// Amplitude leaving through the unmonitored port ends up on `arm`; for a
/// photon at slot t the monitored output is (|t> + e^{i phase}|t + delay>)/2.
/// Insertion loss is not applied here (it is a detection-layer survival).
StateVector propagate_interferometer(const StateVector& state, const InterferometerSpec& spec,
                                     Channel channel, Channel arm);

struct PreparedQubit {
  StateVector state;
  /// Probability lost to the unmonitored port and to insertion loss.
  double discarded_probability = 0.0;
};

/// Sends a single photon through the preparation device and post-selects the
/// monitored output.
PreparedQubit prepare_qubit(const InterferometerSpec& spec, const StateVector& input,
                            Channel channel = Channel::alice, Channel arm = Channel::alice_arm);

struct AnalyzerOutput {
  /// Detection probability per arrival slot at the monitored output.
  std::map<int, double> slot_probability;
  double discarded_probability = 0.0;
  StateVector state;
};

/// Propagates a single photon held in two adjacent slots on `channel` through
/// the analyzer. The middle output slot carries the interfering terms.
AnalyzerOutput analyze_qubit(const InterferometerSpec& spec, const StateVector& state,
                             Channel channel = Channel::bob, Channel arm = Channel::bob_arm);

/// Arbitrary lossless encoding of every photon at `slot` on `channel` into
/// the qubit a0|slot> + a1 e^{i alpha}|slot + 1>.
StateVector encode_qubit(const StateVector& state, const TimeBinQubit& qubit, Channel channel,
                         int slot = 0);

struct QubitModes {
  ModeId early;
  ModeId late;
};

QubitModes qubit_modes(Channel channel, Band band, int first_slot = 0);

struct BellStates {
  StateVector phi_plus;
  StateVector phi_minus;
  StateVector psi_plus;
  StateVector psi_minus;
};

BellStates bell_states(const QubitModes& first = qubit_modes(Channel::alice, Band::nm1310),
                       const QubitModes& second = qubit_modes(Channel::charlie, Band::nm1310),
                       Truncation trunc = {});

enum class Pauli { identity, bit_flip, phase_flip, both };

/// Matrix acting on (early, late) amplitudes. `both` is X*Z, the inverse of
/// i*sigma_y.
Eigen::Matrix2cd pauli_matrix(Pauli which);

/// Applies the Pauli action on the time-bin qubit held by the two modes (any
/// ortho label). Throws std::invalid_argument unless each basis state carries
/// exactly one photon on them.
StateVector pauli_correction(const StateVector& state, Pauli which, const QubitModes& modes);

}  // namespace relaysim
