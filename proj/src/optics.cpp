#include "relaysim/optics.hpp"

#include <cmath>
#include <numbers>
#include <set>

namespace relaysim {

namespace {

constexpr double kPi = std::numbers::pi;

ModeId matched(ModeId m) {
  m.ortho = Ortho::matched;
  return m;
}

}  // namespace

void validate(const SourceSpec& spec) {
  if (!(spec.pair_amplitude >= 0.0 && spec.pair_amplitude <= 0.5)) {
    throw std::invalid_argument("pair amplitude must lie in [0, 0.5]");
  }
  if (spec.pump_bins.empty()) throw std::invalid_argument("source needs at least one pump bin");
  if (spec.signal == spec.idler) throw std::invalid_argument("signal and idler channels must differ");
}

StateVector spdc_emit(const SourceSpec& spec, Truncation trunc) {
  return spdc_emit(std::span<const SourceSpec>(&spec, 1), trunc);
}

StateVector spdc_emit(std::span<const SourceSpec> specs, Truncation trunc, EmissionOrder order) {
  if (order.max_pairs < 0 || order.max_pairs_per_source < 0) {
    throw std::invalid_argument("emission order must be non-negative");
  }
  if (2 * order.max_pairs > trunc.max_photons) {
    throw TruncationError("truncation of " + std::to_string(trunc.max_photons) +
                          " photons cannot hold " + std::to_string(order.max_pairs) + " pairs");
  }

  // Pair creators lambda e^{i phi_t} s+(t) i+(t), tagged with their source.
  struct Creator {
    std::size_t source;
    Complex coeff;
    ModeId signal;
    ModeId idler;
  };
  std::vector<Creator> creators;
  for (std::size_t k = 0; k < specs.size(); ++k) {
    const auto& s = specs[k];
    validate(s);
    for (const auto& bin : s.pump_bins) {
      creators.push_back({k, std::polar(s.pair_amplitude, bin.phase),
                          ModeId{s.signal, bin.time_bin, s.signal_band, Ortho::matched},
                          ModeId{s.idler, bin.time_bin, s.idler_band, Ortho::matched}});
    }
  }

  // exp(K)|0> = sum_n K^n / n! |0>; expand K^n as ordered products and divide
  // by n!, skipping products that exceed the per-source pair budget.
  StateBuilder builder(trunc);
  builder.add({}, 1.0);
  std::vector<std::size_t> index;
  double inv_factorial = 1.0;
  for (int n = 1; n <= order.max_pairs; ++n) {
    inv_factorial /= n;
    index.assign(static_cast<std::size_t>(n), 0);
    while (true) {
      std::vector<int> per_source(specs.size(), 0);
      Complex coeff = inv_factorial;
      std::vector<ModeId> modes;
      bool allowed = true;
      for (auto i : index) {
        const auto& c = creators[i];
        if (++per_source[c.source] > order.max_pairs_per_source) allowed = false;
        coeff *= c.coeff;
        modes.push_back(c.signal);
        modes.push_back(c.idler);
      }
      if (allowed && coeff != Complex{}) builder.add(modes, coeff);

      std::size_t pos = 0;
      while (pos < index.size() && ++index[pos] == creators.size()) index[pos++] = 0;
      if (pos == index.size()) break;
    }
  }
  return builder.build();
}

void validate(const InterferometerSpec& spec) {
  if (spec.delay_slots < 1) throw std::invalid_argument("interferometer delay must be >= 1 slot");
  if (!(spec.insertion_loss >= 0.0 && spec.insertion_loss <= 1.0)) {
    throw std::invalid_argument("insertion loss must lie in [0, 1]");
  }
}

double wrap_phase(double phase) {
  double w = std::fmod(phase, 2 * kPi);
  if (w < 0) w += 2 * kPi;
  if (w >= 2 * kPi) w = 0.0;
  return w;
}

StateVector propagate_interferometer(const StateVector& state, const InterferometerSpec& spec,
                                     Channel channel, Channel arm) {
  validate(spec);
  switch (spec.mode) {
    case PathMode::short_path:
      return state;
    case PathMode::long_path:
      return apply_time_shift(state, on_channel(channel), spec.delay_slots);
    case PathMode::interferometer:
      break;
  }
  // The two reflections contribute i * i = -1; the extra pi makes `phase` the
  // relative phase seen at the monitored output.
  auto s = apply_beam_splitter(state, channel, arm, 0.5);
  s = apply_time_shift(s, on_channel(arm), spec.delay_slots);
  s = apply_mode_phase(s, on_channel(arm), wrap_phase(spec.phase) + kPi);
  return apply_beam_splitter(s, channel, arm, 0.5);
}

PreparedQubit prepare_qubit(const InterferometerSpec& spec, const StateVector& input,
                            Channel channel, Channel arm) {
  validate(spec);
  std::set<ModeId> occupied;
  for (const auto& [basis, amp] : input.amplitudes()) {
    if (basis.total() != 1 || basis.total(on_channel(channel)) != 1) {
      throw std::invalid_argument("qubit preparation needs exactly one photon on " +
                                  to_string(channel));
    }
    occupied.insert(basis.entries().front().first);
  }
  if (occupied.size() != 1) {
    throw std::invalid_argument("qubit preparation needs the photon in a single time bin");
  }

  const auto out = propagate_interferometer(input, spec, channel, arm);
  auto kept = postselect(out, FockBasisState{}, on_channel(arm));
  const double transmission = (1.0 - spec.insertion_loss) * kept.probability;
  return PreparedQubit{std::move(*kept.conditional), 1.0 - transmission};
}

AnalyzerOutput analyze_qubit(const InterferometerSpec& spec, const StateVector& state,
                             Channel channel, Channel arm) {
  validate(spec);
  std::set<int> slots;
  for (const auto& [basis, amp] : state.amplitudes()) {
    if (basis.total(on_channel(channel)) != 1) {
      throw std::invalid_argument("analyzer needs exactly one photon on " + to_string(channel));
    }
    for (const auto& [m, n] : basis.entries()) {
      if (m.spatial == channel) slots.insert(m.time_bin);
    }
  }
  if (slots.size() > 2 || (slots.size() == 2 && *slots.rbegin() - *slots.begin() != 1)) {
    throw std::invalid_argument("analyzer input must occupy two adjacent slots");
  }

  auto out = propagate_interferometer(state, spec, channel, arm);
  AnalyzerOutput result{{}, 0.0, out};
  const double transmission = 1.0 - spec.insertion_loss;
  for (const auto& [basis, amp] : out.amplitudes()) {
    const double p = std::norm(amp);
    bool monitored = false;
    for (const auto& [m, n] : basis.entries()) {
      if (m.spatial == channel) {
        result.slot_probability[m.time_bin] += p * transmission;
        result.discarded_probability += p * (1.0 - transmission);
        monitored = true;
      }
    }
    if (!monitored) result.discarded_probability += p;
  }
  return result;
}

StateVector encode_qubit(const StateVector& state, const TimeBinQubit& qubit, Channel channel,
                         int slot) {
  const Eigen::Vector2cd a = qubit.amplitudes();
  Eigen::Matrix2cd u;
  u << a(0), -std::conj(a(1)), a(1), std::conj(a(0));
  return apply_pair_unitary(
      state,
      [&](const ModeId& m) -> std::optional<ModePair> {
        if (m.spatial != channel || (m.time_bin != slot && m.time_bin != slot + 1)) {
          return std::nullopt;
        }
        ModeId early = m, late = m;
        early.time_bin = slot;
        late.time_bin = slot + 1;
        return ModePair{early, late, m.time_bin == slot ? 0 : 1};
      },
      u);
}

QubitModes qubit_modes(Channel channel, Band band, int first_slot) {
  return {ModeId{channel, first_slot, band, Ortho::matched},
          ModeId{channel, first_slot + 1, band, Ortho::matched}};
}

BellStates bell_states(const QubitModes& first, const QubitModes& second, Truncation trunc) {
  const FockBasisState ee{{first.early, 1}, {second.early, 1}};
  const FockBasisState el{{first.early, 1}, {second.late, 1}};
  const FockBasisState le{{first.late, 1}, {second.early, 1}};
  const FockBasisState ll{{first.late, 1}, {second.late, 1}};
  return BellStates{
      make_state({{ee, 1.0}, {ll, 1.0}}, trunc),
      make_state({{ee, 1.0}, {ll, -1.0}}, trunc),
      make_state({{el, 1.0}, {le, 1.0}}, trunc),
      make_state({{el, 1.0}, {le, -1.0}}, trunc),
  };
}

Eigen::Matrix2cd pauli_matrix(Pauli which) {
  Eigen::Matrix2cd x, z;
  x << 0, 1, 1, 0;
  z << 1, 0, 0, -1;
  switch (which) {
    case Pauli::identity: return Eigen::Matrix2cd::Identity();
    case Pauli::bit_flip: return x;
    case Pauli::phase_flip: return z;
    case Pauli::both: return x * z;
  }
  return Eigen::Matrix2cd::Identity();
}

StateVector pauli_correction(const StateVector& state, Pauli which, const QubitModes& modes) {
  const ModeId early = matched(modes.early);
  const ModeId late = matched(modes.late);
  for (const auto& [basis, amp] : state.amplitudes()) {
    int n = 0;
    for (const auto& [m, k] : basis.entries()) {
      if (matched(m) == early || matched(m) == late) n += k;
    }
    if (n != 1) throw std::invalid_argument("Pauli correction needs exactly one photon on the qubit modes");
  }
  return apply_pair_unitary(
      state,
      [&](const ModeId& m) -> std::optional<ModePair> {
        const ModeId base = matched(m);
        if (base != early && base != late) return std::nullopt;
        ModeId e = early, l = late;
        e.ortho = l.ortho = m.ortho;
        return ModePair{e, l, base == early ? 0 : 1};
      },
      pauli_matrix(which));
}

}  // namespace relaysim
