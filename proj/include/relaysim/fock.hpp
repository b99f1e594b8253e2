#pragma once

// Truncated bosonic Fock-space engine: labeled modes, sparse state vectors,
// passive linear-optical maps and post-selected projections.
//
// All operations are free functions over immutable StateVector values.

#include <Eigen/Dense>

#include <compare>
#include <complex>
#include <cstdint>
#include <functional>
#include <initializer_list>
#include <map>
#include <numbers>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace relaysim {

using Complex = std::complex<double>;

/// Spatial channel labels. The *_arm labels are the long arm (and unmonitored
/// output) of the unbalanced interferometer on that channel; *_loss labels
/// absorb excess fiber loss on one side of the BSM.
enum class Channel : std::uint8_t {
  alice,
  alice_twin,
  alice_arm,
  alice_loss,
  charlie,
  charlie_arm,
  charlie_loss,
  bob,
  bob_arm,
};

enum class Band : std::uint16_t { nm1310 = 1310, nm1550 = 1550 };

enum class Ortho : std::uint8_t { matched, orthogonal };

std::string to_string(Channel c);

struct ModeId {
  Channel spatial = Channel::alice;
  int time_bin = 0;
  Band band = Band::nm1310;
  Ortho ortho = Ortho::matched;

  auto operator<=>(const ModeId&) const = default;
};

std::string to_string(const ModeId& m);

using ModePredicate = std::function<bool(const ModeId&)>;

/// Matches every mode on the given spatial channel.
ModePredicate on_channel(Channel c);
/// Matches every mode on any of the given channels.
ModePredicate on_channels(std::vector<Channel> cs);

struct Truncation {
  int max_photons = 4;
  int slot_count = 4;

  bool operator==(const Truncation&) const = default;
};

class TruncationError : public std::out_of_range {
 public:
  using std::out_of_range::out_of_range;
};

/// Occupation-number basis state in canonical form: entries sorted by mode,
/// no zero counts.
class FockBasisState {
 public:
  using Entry = std::pair<ModeId, int>;

  FockBasisState() = default;
  FockBasisState(std::initializer_list<Entry> entries);
  explicit FockBasisState(std::vector<Entry> entries);

  int count(const ModeId& m) const;
  int total() const;
  int total(const ModePredicate& pred) const;
  const std::vector<Entry>& entries() const { return entries_; }
  bool is_vacuum() const { return entries_.empty(); }

  /// Returns a copy with `delta` photons added to mode `m` (delta may be
  /// negative; the count must stay non-negative).
  FockBasisState with_added(const ModeId& m, int delta) const;

  auto operator<=>(const FockBasisState&) const = default;

 private:
  void canonicalize();

  std::vector<Entry> entries_;
};

std::string to_string(const FockBasisState& s);

using Amplitudes = std::map<FockBasisState, Complex>;

/// Normalized pure state over a truncated Fock basis.
class StateVector {
 public:
  static constexpr double kDefaultNormTolerance = 1e-10;

  /// Takes ownership of `amps`, which must already be normalized to within
  /// `norm_tolerance`; throws TruncationError if any basis state violates
  /// `trunc`.
  StateVector(Amplitudes amps, Truncation trunc,
              double norm_tolerance = kDefaultNormTolerance);

  const Amplitudes& amplitudes() const { return amps_; }
  const Truncation& truncation() const { return trunc_; }
  double norm_tolerance() const { return norm_tolerance_; }

  Complex amplitude(const FockBasisState& s) const;
  double norm_squared() const;
  std::size_t size() const { return amps_.size(); }

 private:
  Amplitudes amps_;
  Truncation trunc_;
  double norm_tolerance_;
};

/// Builds a normalized superposition. Throws std::invalid_argument("null state")
/// when every amplitude vanishes and TruncationError on truncation violation.
StateVector make_state(const std::vector<std::pair<FockBasisState, Complex>>& entries,
                       Truncation trunc = {});

StateVector vacuum(Truncation trunc = {});

/// Accumulates c * (product of creation operators) |0> terms, with the
/// sqrt(n!) factors of repeated creators, then normalizes.
class StateBuilder {
 public:
  explicit StateBuilder(Truncation trunc = {}) : trunc_(trunc) {}

  StateBuilder& add(const std::vector<ModeId>& creators, Complex coeff);
  StateVector build() const;

 private:
  Truncation trunc_;
  Amplitudes terms_;
};

/// Joint state of two independent subsystems on disjoint modes. Throws
/// TruncationError when a product term exceeds the truncation.
StateVector tensor_product(const StateVector& a, const StateVector& b);

Complex inner_product(const StateVector& bra, const StateVector& ket);

/// Max |a_i - b_i| over the union of supports.
double max_amplitude_distance(const StateVector& a, const StateVector& b);

/// Image of a single creation operator under a passive linear map.
using ModeImage = std::vector<std::pair<ModeId, Complex>>;
/// Returns std::nullopt for modes the map leaves untouched.
using LinearModeMap = std::function<std::optional<ModeImage>(const ModeId&)>;

/// Applies a_m^dagger -> sum_k c_k a_k^dagger to every creation operator of
/// every basis state. Unitary when the map is.
StateVector apply_linear_map(const StateVector& state, const LinearModeMap& map);

/// Applies a 2x2 unitary on mode pairs. `pairing` returns the pair partner
/// for a mode along with the mode's column index (0 or 1) in `u`; column j of
/// `u` is the image of the index-j creation operator.
struct ModePair {
  ModeId first;
  ModeId second;
  int index;
};
StateVector apply_pair_unitary(const StateVector& state,
                               const std::function<std::optional<ModePair>(const ModeId&)>& pairing,
                               const Eigen::Matrix2cd& u);

/// Symmetric beam splitter on every (time_bin, band, ortho) sublabel pair:
///   a+ -> sqrt(T) a+ + i sqrt(1-T) b+,   b+ -> i sqrt(1-T) a+ + sqrt(T) b+.
StateVector apply_beam_splitter(const StateVector& state, Channel port_a, Channel port_b,
                                double transmissivity);

StateVector apply_mode_phase(const StateVector& state, const ModePredicate& pred, double phase);

StateVector apply_time_shift(const StateVector& state, const ModePredicate& pred, int slots);

/// Rewrites each matching matched-label creation operator as
/// zeta * matched + sqrt(1 - zeta^2) * orthogonal (a rotation on the pair).
/// The predicate is evaluated on the matched-label version of each mode.
StateVector rotate_distinguishability(const StateVector& state, const ModePredicate& pred,
                                      double overlap);

struct Projection {
  double probability = 0.0;
  /// Absent when probability is zero.
  std::optional<StateVector> conditional;
};

/// Keeps basis states whose scoped modes carry exactly the pattern counts
/// (zero for scoped modes absent from the pattern); the conditional state has
/// the scoped modes removed and is renormalized.
Projection postselect(const StateVector& state, const FockBasisState& pattern,
                      const ModePredicate& scope);

/// Keeps basis states with exactly `photons` quanta in the scoped modes.
/// Modes are kept; the result is renormalized.
Projection restrict_photon_number(const StateVector& state, const ModePredicate& scope,
                                  int photons);

/// Time-bin qubit a0|early> + a1 e^{i alpha}|late>, a0, a1 >= 0.
class TimeBinQubit {
 public:
  static TimeBinQubit from_amplitudes(double a0, double a1, double alpha);
  /// Polar angle theta on the Poincare sphere: a0 = cos(theta/2).
  static TimeBinQubit from_sphere(double theta, double alpha);
  static TimeBinQubit equator(double alpha) { return from_sphere(std::numbers::pi / 2, alpha); }
  static TimeBinQubit early() { return from_amplitudes(1.0, 0.0, 0.0); }
  static TimeBinQubit late() { return from_amplitudes(0.0, 1.0, 0.0); }

  double a0() const { return a0_; }
  double a1() const { return a1_; }
  double alpha() const { return alpha_; }

  Eigen::Vector2cd amplitudes() const;

 private:
  TimeBinQubit(double a0, double a1, double alpha) : a0_(a0), a1_(a1), alpha_(alpha) {}

  double a0_;
  double a1_;
  double alpha_;
};

/// Single-photon state on two modes with the given qubit amplitudes.
StateVector qubit_state(const Eigen::Vector2cd& amps, const ModeId& early, const ModeId& late,
                        Truncation trunc = {});

/// |<target|conditional>|^2 with every other mode and the ortho label traced
/// out. `bob_modes` are the matched-label early/late modes. Throws
/// std::invalid_argument unless each basis state holds exactly one photon
/// across those modes (either ortho label).
double qubit_fidelity(const StateVector& conditional, const TimeBinQubit& target,
                      const std::pair<ModeId, ModeId>& bob_modes);

/// Reduced qubit vector(s) of a single photon on two modes, one per
/// environment configuration, with probabilities folded into the norms.
std::vector<Eigen::Vector2cd> qubit_components(const StateVector& state,
                                               const std::pair<ModeId, ModeId>& modes);

}  // namespace relaysim
