#include "relaysim/fock.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace relaysim {

namespace {

// Amplitudes below this magnitude are treated as exact cancellations.
constexpr double kPruneTolerance = 1e-15;

double sqrt_factorial(int n) {
  double f = 1.0;
  for (int k = 2; k <= n; ++k) f *= k;
  return std::sqrt(f);
}

void check_truncation(const FockBasisState& s, const Truncation& trunc) {
  if (s.total() > trunc.max_photons) {
    throw TruncationError("basis state " + to_string(s) + " exceeds the truncation of " +
                          std::to_string(trunc.max_photons) + " photons");
  }
  for (const auto& [m, n] : s.entries()) {
    if (m.time_bin < 0 || m.time_bin >= trunc.slot_count) {
      throw TruncationError("mode " + to_string(m) + " lies outside the " +
                            std::to_string(trunc.slot_count) + " configured slots");
    }
  }
}

void accumulate(Amplitudes& out, const FockBasisState& s, Complex a) {
  auto [it, inserted] = out.try_emplace(s, a);
  if (!inserted) it->second += a;
}

Amplitudes pruned(Amplitudes amps) {
  std::erase_if(amps, [](const auto& kv) { return std::abs(kv.second) < kPruneTolerance; });
  return amps;
}

double norm_squared_of(const Amplitudes& amps) {
  double n = 0.0;
  for (const auto& [s, a] : amps) n += std::norm(a);
  return n;
}

StateVector normalized(Amplitudes amps, const Truncation& trunc, double tol) {
  amps = pruned(std::move(amps));
  const double n = norm_squared_of(amps);
  if (n <= 0.0) throw std::invalid_argument("null state");
  const double scale = 1.0 / std::sqrt(n);
  for (auto& [s, a] : amps) a *= scale;
  return StateVector(std::move(amps), trunc, tol);
}

}  // namespace

std::string to_string(Channel c) {
  switch (c) {
    case Channel::alice: return "alice";
    case Channel::alice_twin: return "alice_twin";
    case Channel::alice_arm: return "alice_arm";
    case Channel::alice_loss: return "alice_loss";
    case Channel::charlie: return "charlie";
    case Channel::charlie_arm: return "charlie_arm";
    case Channel::charlie_loss: return "charlie_loss";
    case Channel::bob: return "bob";
    case Channel::bob_arm: return "bob_arm";
  }
  return "?";
}

std::string to_string(const ModeId& m) {
  std::ostringstream os;
  os << to_string(m.spatial) << '@' << m.time_bin << '/' << static_cast<int>(m.band)
     << (m.ortho == Ortho::orthogonal ? "/perp" : "");
  return os.str();
}

ModePredicate on_channel(Channel c) {
  return [c](const ModeId& m) { return m.spatial == c; };
}

ModePredicate on_channels(std::vector<Channel> cs) {
  return [cs = std::move(cs)](const ModeId& m) {
    return std::find(cs.begin(), cs.end(), m.spatial) != cs.end();
  };
}

// ---------------------------------------------------------------------------
// FockBasisState

FockBasisState::FockBasisState(std::initializer_list<Entry> entries) : entries_(entries) {
  canonicalize();
}

FockBasisState::FockBasisState(std::vector<Entry> entries) : entries_(std::move(entries)) {
  canonicalize();
}

void FockBasisState::canonicalize() {
  std::sort(entries_.begin(), entries_.end(),
            [](const Entry& a, const Entry& b) { return a.first < b.first; });
  std::vector<Entry> merged;
  merged.reserve(entries_.size());
  for (const auto& [m, n] : entries_) {
    if (n < 0) throw std::invalid_argument("negative occupation for " + to_string(m));
    if (!merged.empty() && merged.back().first == m) {
      merged.back().second += n;
    } else {
      merged.emplace_back(m, n);
    }
  }
  std::erase_if(merged, [](const Entry& e) { return e.second == 0; });
  entries_ = std::move(merged);
}

int FockBasisState::count(const ModeId& m) const {
  auto it = std::lower_bound(entries_.begin(), entries_.end(), m,
                             [](const Entry& e, const ModeId& key) { return e.first < key; });
  return (it != entries_.end() && it->first == m) ? it->second : 0;
}

int FockBasisState::total() const {
  int t = 0;
  for (const auto& e : entries_) t += e.second;
  return t;
}

int FockBasisState::total(const ModePredicate& pred) const {
  int t = 0;
  for (const auto& [m, n] : entries_) {
    if (pred(m)) t += n;
  }
  return t;
}

FockBasisState FockBasisState::with_added(const ModeId& m, int delta) const {
  auto entries = entries_;
  entries.emplace_back(m, 0);
  for (auto& e : entries) {
    if (e.first == m) {
      e.second += delta;
      if (e.second < 0) throw std::invalid_argument("occupation of " + to_string(m) + " below zero");
      break;
    }
  }
  return FockBasisState(std::move(entries));
}

std::string to_string(const FockBasisState& s) {
  if (s.is_vacuum()) return "|vac>";
  std::ostringstream os;
  os << '|';
  bool first = true;
  for (const auto& [m, n] : s.entries()) {
    if (!first) os << ", ";
    first = false;
    os << to_string(m) << ':' << n;
  }
  os << '>';
  return os.str();
}

// ---------------------------------------------------------------------------
// StateVector

StateVector::StateVector(Amplitudes amps, Truncation trunc, double norm_tolerance)
    : amps_(std::move(amps)), trunc_(trunc), norm_tolerance_(norm_tolerance) {
  if (trunc_.max_photons < 0 || trunc_.slot_count < 2) {
    throw std::invalid_argument("truncation needs max_photons >= 0 and at least two slots");
  }
  for (const auto& [s, a] : amps_) check_truncation(s, trunc_);
  const double n = norm_squared();
  if (std::abs(n - 1.0) > norm_tolerance_) {
    throw std::invalid_argument("state norm " + std::to_string(n) + " deviates from 1");
  }
}

Complex StateVector::amplitude(const FockBasisState& s) const {
  auto it = amps_.find(s);
  return it == amps_.end() ? Complex{} : it->second;
}

double StateVector::norm_squared() const { return norm_squared_of(amps_); }

StateVector make_state(const std::vector<std::pair<FockBasisState, Complex>>& entries,
                       Truncation trunc) {
  if (entries.empty()) throw std::invalid_argument("null state");
  Amplitudes amps;
  for (const auto& [s, a] : entries) {
    check_truncation(s, trunc);
    accumulate(amps, s, a);
  }
  return normalized(std::move(amps), trunc, StateVector::kDefaultNormTolerance);
}

StateVector vacuum(Truncation trunc) { return make_state({{FockBasisState{}, 1.0}}, trunc); }

StateBuilder& StateBuilder::add(const std::vector<ModeId>& creators, Complex coeff) {
  std::vector<FockBasisState::Entry> entries;
  entries.reserve(creators.size());
  for (const auto& m : creators) entries.emplace_back(m, 1);
  FockBasisState s(std::move(entries));
  check_truncation(s, trunc_);
  double weight = 1.0;
  for (const auto& [m, n] : s.entries()) weight *= sqrt_factorial(n);
  accumulate(terms_, s, coeff * weight);
  return *this;
}

StateVector StateBuilder::build() const {
  if (terms_.empty()) throw std::invalid_argument("null state");
  return normalized(terms_, trunc_, StateVector::kDefaultNormTolerance);
}

StateVector tensor_product(const StateVector& a, const StateVector& b) {
  if (a.truncation() != b.truncation()) throw std::invalid_argument("truncation mismatch");
  Amplitudes out;
  for (const auto& [sa, xa] : a.amplitudes()) {
    for (const auto& [sb, xb] : b.amplitudes()) {
      for (const auto& [m, n] : sb.entries()) {
        if (sa.count(m) != 0) throw std::invalid_argument("tensor factors share mode " + to_string(m));
      }
      auto entries = sa.entries();
      entries.insert(entries.end(), sb.entries().begin(), sb.entries().end());
      FockBasisState s(std::move(entries));
      check_truncation(s, a.truncation());
      accumulate(out, s, xa * xb);
    }
  }
  return StateVector(pruned(std::move(out)), a.truncation(), a.norm_tolerance());
}

Complex inner_product(const StateVector& bra, const StateVector& ket) {
  Complex acc{};
  const auto& small = bra.size() <= ket.size() ? bra.amplitudes() : ket.amplitudes();
  const bool bra_small = bra.size() <= ket.size();
  for (const auto& [s, a] : small) {
    const Complex other = bra_small ? ket.amplitude(s) : bra.amplitude(s);
    acc += bra_small ? std::conj(a) * other : std::conj(other) * a;
  }
  return acc;
}

double max_amplitude_distance(const StateVector& a, const StateVector& b) {
  double d = 0.0;
  for (const auto& [s, x] : a.amplitudes()) d = std::max(d, std::abs(x - b.amplitude(s)));
  for (const auto& [s, y] : b.amplitudes()) d = std::max(d, std::abs(a.amplitude(s) - y));
  return d;
}

// ---------------------------------------------------------------------------
// Linear optics

StateVector apply_linear_map(const StateVector& state, const LinearModeMap& map) {
  const auto& trunc = state.truncation();
  Amplitudes out;
  for (const auto& [basis, amp] : state.amplitudes()) {
    // Expand prod_m (image of a_m^+)^{n_m} / sqrt(n_m!) as a polynomial in
    // creation operators; monomials are stored as occupation vectors.
    Complex scale = amp;
    for (const auto& [m, n] : basis.entries()) scale /= sqrt_factorial(n);

    Amplitudes poly{{FockBasisState{}, scale}};
    for (const auto& [m, n] : basis.entries()) {
      const auto image = map(m);
      for (int k = 0; k < n; ++k) {
        Amplitudes next;
        for (const auto& [mono, c] : poly) {
          if (!image) {
            accumulate(next, mono.with_added(m, 1), c);
            continue;
          }
          for (const auto& [target, coeff] : *image) {
            if (coeff == Complex{}) continue;
            accumulate(next, mono.with_added(target, 1), c * coeff);
          }
        }
        poly = std::move(next);
      }
    }
    for (const auto& [mono, c] : poly) {
      check_truncation(mono, trunc);
      double weight = 1.0;
      for (const auto& [m, n] : mono.entries()) weight *= sqrt_factorial(n);
      accumulate(out, mono, c * weight);
    }
  }
  return StateVector(pruned(std::move(out)), trunc, state.norm_tolerance());
}

StateVector apply_pair_unitary(const StateVector& state,
                               const std::function<std::optional<ModePair>(const ModeId&)>& pairing,
                               const Eigen::Matrix2cd& u) {
  return apply_linear_map(state, [&](const ModeId& m) -> std::optional<ModeImage> {
    const auto pair = pairing(m);
    if (!pair) return std::nullopt;
    const int j = pair->index;
    return ModeImage{{pair->first, u(0, j)}, {pair->second, u(1, j)}};
  });
}

StateVector apply_beam_splitter(const StateVector& state, Channel port_a, Channel port_b,
                                double transmissivity) {
  if (port_a == port_b) throw std::invalid_argument("beam splitter ports must differ");
  if (!(transmissivity >= 0.0 && transmissivity <= 1.0)) {
    throw std::invalid_argument("transmissivity must lie in [0, 1]");
  }
  const double t = std::sqrt(transmissivity);
  const Complex r{0.0, std::sqrt(1.0 - transmissivity)};
  Eigen::Matrix2cd u;
  u << t, r, r, t;
  return apply_pair_unitary(
      state,
      [&](const ModeId& m) -> std::optional<ModePair> {
        if (m.spatial != port_a && m.spatial != port_b) return std::nullopt;
        ModeId a = m, b = m;
        a.spatial = port_a;
        b.spatial = port_b;
        return ModePair{a, b, m.spatial == port_a ? 0 : 1};
      },
      u);
}

StateVector apply_mode_phase(const StateVector& state, const ModePredicate& pred, double phase) {
  Amplitudes out;
  for (const auto& [basis, amp] : state.amplitudes()) {
    const int n = basis.total(pred);
    out.emplace(basis, amp * std::polar(1.0, phase * n));
  }
  return StateVector(std::move(out), state.truncation(), state.norm_tolerance());
}

StateVector apply_time_shift(const StateVector& state, const ModePredicate& pred, int slots) {
  const auto& trunc = state.truncation();
  Amplitudes out;
  for (const auto& [basis, amp] : state.amplitudes()) {
    std::vector<FockBasisState::Entry> entries;
    entries.reserve(basis.entries().size());
    for (auto [m, n] : basis.entries()) {
      if (pred(m)) {
        m.time_bin += slots;
        if (m.time_bin < 0 || m.time_bin >= trunc.slot_count) {
          throw TruncationError("time shift moves " + to_string(m) + " outside the " +
                                std::to_string(trunc.slot_count) + " configured slots");
        }
      }
      entries.emplace_back(m, n);
    }
    accumulate(out, FockBasisState(std::move(entries)), amp);
  }
  return StateVector(std::move(out), trunc, state.norm_tolerance());
}

StateVector rotate_distinguishability(const StateVector& state, const ModePredicate& pred,
                                      double overlap) {
  if (!(overlap >= 0.0 && overlap <= 1.0)) {
    throw std::invalid_argument("overlap must lie in [0, 1]");
  }
  const double s = std::sqrt(1.0 - overlap * overlap);
  Eigen::Matrix2cd u;
  u << overlap, -s, s, overlap;
  return apply_pair_unitary(
      state,
      [&](const ModeId& m) -> std::optional<ModePair> {
        ModeId matched = m, orth = m;
        matched.ortho = Ortho::matched;
        orth.ortho = Ortho::orthogonal;
        if (!pred(matched)) return std::nullopt;
        return ModePair{matched, orth, m.ortho == Ortho::matched ? 0 : 1};
      },
      u);
}

// ---------------------------------------------------------------------------
// Projections

Projection postselect(const StateVector& state, const FockBasisState& pattern,
                      const ModePredicate& scope) {
  for (const auto& [m, n] : pattern.entries()) {
    if (!scope(m)) throw std::invalid_argument("pattern mode " + to_string(m) + " is out of scope");
  }
  check_truncation(pattern, state.truncation());

  Amplitudes kept;
  for (const auto& [basis, amp] : state.amplitudes()) {
    bool match = true;
    std::vector<FockBasisState::Entry> rest;
    std::vector<FockBasisState::Entry> scoped;
    for (const auto& e : basis.entries()) {
      (scope(e.first) ? scoped : rest).push_back(e);
    }
    if (FockBasisState(std::move(scoped)) != pattern) match = false;
    if (match) accumulate(kept, FockBasisState(std::move(rest)), amp);
  }
  Projection p;
  p.probability = norm_squared_of(kept);
  if (p.probability > 0.0) {
    p.conditional = normalized(std::move(kept), state.truncation(), state.norm_tolerance());
  }
  return p;
}

Projection restrict_photon_number(const StateVector& state, const ModePredicate& scope,
                                  int photons) {
  Amplitudes kept;
  for (const auto& [basis, amp] : state.amplitudes()) {
    if (basis.total(scope) == photons) kept.emplace(basis, amp);
  }
  Projection p;
  p.probability = norm_squared_of(kept);
  if (p.probability > 0.0) {
    p.conditional = normalized(std::move(kept), state.truncation(), state.norm_tolerance());
  }
  return p;
}

// ---------------------------------------------------------------------------
// Qubits

TimeBinQubit TimeBinQubit::from_amplitudes(double a0, double a1, double alpha) {
  if (a0 < 0.0 || a1 < 0.0) throw std::invalid_argument("qubit amplitudes must be non-negative");
  if (std::abs(a0 * a0 + a1 * a1 - 1.0) > 1e-12) {
    throw std::invalid_argument("qubit amplitudes must satisfy a0^2 + a1^2 = 1");
  }
  return TimeBinQubit(a0, a1, alpha);
}

TimeBinQubit TimeBinQubit::from_sphere(double theta, double alpha) {
  if (theta < 0.0 || theta > std::numbers::pi) {
    throw std::invalid_argument("polar angle must lie in [0, pi]");
  }
  return TimeBinQubit(std::cos(theta / 2), std::sin(theta / 2), alpha);
}

Eigen::Vector2cd TimeBinQubit::amplitudes() const {
  return {Complex{a0_, 0.0}, std::polar(a1_, alpha_)};
}

StateVector qubit_state(const Eigen::Vector2cd& amps, const ModeId& early, const ModeId& late,
                        Truncation trunc) {
  return make_state({{FockBasisState{{early, 1}}, amps(0)}, {FockBasisState{{late, 1}}, amps(1)}},
                    trunc);
}

std::vector<Eigen::Vector2cd> qubit_components(const StateVector& state,
                                               const std::pair<ModeId, ModeId>& modes) {
  const auto strip = [](ModeId m) {
    m.ortho = Ortho::matched;
    return m;
  };
  const ModeId early = strip(modes.first);
  const ModeId late = strip(modes.second);

  // Environment key: every other mode, plus the ortho label of the qubit photon.
  std::map<std::pair<FockBasisState, Ortho>, Eigen::Vector2cd> groups;
  for (const auto& [basis, amp] : state.amplitudes()) {
    int found = 0;
    int index = -1;
    Ortho label = Ortho::matched;
    std::vector<FockBasisState::Entry> env;
    for (const auto& [m, n] : basis.entries()) {
      const ModeId base = strip(m);
      if (base == early || base == late) {
        found += n;
        index = base == early ? 0 : 1;
        label = m.ortho;
      } else {
        env.emplace_back(m, n);
      }
    }
    if (found != 1) {
      throw std::invalid_argument("expected exactly one photon on the qubit modes, found " +
                                  std::to_string(found) + " in " + to_string(basis));
    }
    auto key = std::make_pair(FockBasisState(std::move(env)), label);
    auto [it, inserted] = groups.try_emplace(key, Eigen::Vector2cd::Zero());
    it->second(index) += amp;
  }
  std::vector<Eigen::Vector2cd> out;
  out.reserve(groups.size());
  for (auto& [k, v] : groups) out.push_back(v);
  return out;
}

double qubit_fidelity(const StateVector& conditional, const TimeBinQubit& target,
                      const std::pair<ModeId, ModeId>& bob_modes) {
  const Eigen::Vector2cd t = target.amplitudes();
  double f = 0.0;
  for (const auto& v : qubit_components(conditional, bob_modes)) f += std::norm(t.dot(v));
  return f;
}

}  // namespace relaysim
