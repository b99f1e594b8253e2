#include "relaysim/fock.hpp"

#include "support/oracles.hpp"
#include "support/random_states.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

using namespace relaysim;

namespace {

constexpr double kPi = std::numbers::pi;

const ModeId a0{Channel::alice, 0};
const ModeId a1{Channel::alice, 1};
const ModeId c0{Channel::charlie, 0};
const ModeId b0{Channel::bob, 0, Band::nm1550};
const ModeId b1{Channel::bob, 1, Band::nm1550};

ModeId orth(ModeId m) {
  m.ortho = Ortho::orthogonal;
  return m;
}

double coincidence(const StateVector& s, Channel x, Channel y) {
  double p = 0.0;
  for (const auto& [basis, amp] : s.amplitudes()) {
    if (basis.total(on_channel(x)) > 0 && basis.total(on_channel(y)) > 0) p += std::norm(amp);
  }
  return p;
}

std::vector<ModeId> alice_charlie_modes() {
  std::vector<ModeId> modes;
  for (auto ch : {Channel::alice, Channel::charlie}) {
    for (int t = 0; t < 3; ++t) {
      modes.push_back({ch, t});
      modes.push_back(orth({ch, t}));
    }
  }
  return modes;
}

}  // namespace

TEST(FockBasisState, CanonicalFormDropsZerosAndSorts) {
  const FockBasisState x{{c0, 1}, {a0, 0}, {a1, 2}};
  const FockBasisState y{{a1, 2}, {c0, 1}};
  EXPECT_EQ(x, y);
  EXPECT_EQ(x.entries().size(), 2u);
  EXPECT_EQ(x.total(), 3);
  EXPECT_EQ(x.count(a0), 0);
}

TEST(FockBasisState, RepeatedModesMerge) {
  const FockBasisState x{{a0, 1}, {a0, 1}};
  EXPECT_EQ(x.count(a0), 2);
  EXPECT_THROW(FockBasisState({{a0, 1}}).with_added(a0, -2), std::invalid_argument);
}

TEST(MakeState, VacuumHasUnitNorm) {
  const auto s = make_state({{FockBasisState{}, 1.0}});
  EXPECT_NEAR(s.norm_squared(), 1.0, 1e-15);
  EXPECT_NEAR(std::abs(s.amplitude(FockBasisState{})), 1.0, 1e-15);
}

TEST(MakeState, EqualWeightsNormalize) {
  const auto s = make_state({{FockBasisState{{a0, 1}}, 1.0}, {FockBasisState{{c0, 1}}, 1.0}});
  EXPECT_NEAR(s.amplitude(FockBasisState{{a0, 1}}).real(), 1 / std::sqrt(2.0), 1e-15);
  EXPECT_NEAR(s.amplitude(FockBasisState{{c0, 1}}).real(), 1 / std::sqrt(2.0), 1e-15);
}

TEST(MakeState, ThreeFourFive) {
  const auto s = make_state({{FockBasisState{{a0, 1}}, 3.0}, {FockBasisState{{c0, 1}}, Complex(0, 4)}});
  EXPECT_NEAR(std::abs(s.amplitude(FockBasisState{{a0, 1}}) - Complex(0.6, 0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s.amplitude(FockBasisState{{c0, 1}}) - Complex(0, 0.8)), 0.0, 1e-15);
}

TEST(MakeState, Errors) {
  try {
    make_state({{FockBasisState{{a0, 1}}, 0.0}});
    FAIL() << "expected null state";
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "null state");
  }
  EXPECT_THROW(make_state({}), std::invalid_argument);
  EXPECT_THROW(make_state({{FockBasisState{{a0, 5}}, 1.0}}), TruncationError);
  EXPECT_THROW(make_state({{FockBasisState{{ModeId{Channel::alice, 4}, 1}}, 1.0}}), TruncationError);
}

TEST(StateVector, RejectsUnnormalizedInput) {
  Amplitudes amps{{FockBasisState{{a0, 1}}, 2.0}};
  EXPECT_THROW(StateVector(amps, Truncation{}), std::invalid_argument);
}

TEST(StateBuilder, RepeatedCreatorsCarryFactorialWeight) {
  // (a+)^2 |0> = sqrt(2) |2>, so equal coefficients give weights sqrt(2) : 1.
  const auto s = StateBuilder{}.add({a0, a0}, 1.0).add({c0}, 1.0).build();
  const double ratio = std::abs(s.amplitude(FockBasisState{{a0, 2}})) / std::abs(s.amplitude(FockBasisState{{c0, 1}}));
  EXPECT_NEAR(ratio, std::sqrt(2.0), 1e-14);
}

TEST(TensorProduct, RejectsSharedModes) {
  const auto x = make_state({{FockBasisState{{a0, 1}}, 1.0}});
  EXPECT_THROW(tensor_product(x, x), std::invalid_argument);
  const auto y = make_state({{FockBasisState{{c0, 1}}, 1.0}});
  const auto xy = tensor_product(x, y);
  EXPECT_NEAR(std::abs(xy.amplitude(FockBasisState{{a0, 1}, {c0, 1}})), 1.0, 1e-15);
}

TEST(BeamSplitter, SinglePhotonSplits) {
  const auto s = apply_beam_splitter(make_state({{FockBasisState{{a0, 1}}, 1.0}}), Channel::alice,
                                     Channel::charlie, 0.5);
  EXPECT_NEAR(std::abs(s.amplitude(FockBasisState{{a0, 1}}) - Complex(1 / std::sqrt(2.0), 0)), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s.amplitude(FockBasisState{{c0, 1}}) - Complex(0, 1 / std::sqrt(2.0))), 0.0, 1e-15);
}

TEST(BeamSplitter, IdenticalPhotonsBunch) {
  const auto s = apply_beam_splitter(make_state({{FockBasisState{{a0, 1}, {c0, 1}}, 1.0}}), Channel::alice,
                                     Channel::charlie, 0.5);
  const Complex expected(0, 1 / std::sqrt(2.0));
  EXPECT_NEAR(std::abs(s.amplitude(FockBasisState{{a0, 2}}) - expected), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s.amplitude(FockBasisState{{c0, 2}}) - expected), 0.0, 1e-15);
  EXPECT_NEAR(std::abs(s.amplitude(FockBasisState{{a0, 1}, {c0, 1}})), 0.0, 1e-15);
}

TEST(BeamSplitter, OrthogonalPhotonsBehaveClassically) {
  const auto s = apply_beam_splitter(make_state({{FockBasisState{{orth(a0), 1}, {c0, 1}}, 1.0}}),
                                     Channel::alice, Channel::charlie, 0.5);
  EXPECT_NEAR(coincidence(s, Channel::alice, Channel::charlie), 0.5, 1e-14);
}

TEST(BeamSplitter, RejectsBadArguments) {
  const auto s = vacuum();
  EXPECT_THROW(apply_beam_splitter(s, Channel::alice, Channel::alice, 0.5), std::invalid_argument);
  EXPECT_THROW(apply_beam_splitter(s, Channel::alice, Channel::charlie, 1.5), std::invalid_argument);
  EXPECT_THROW(apply_beam_splitter(s, Channel::alice, Channel::charlie, -0.1), std::invalid_argument);
}

TEST(BeamSplitter, MatchesPermanentOracle) {
  std::mt19937_64 rng(11);
  const std::vector<ModeId> modes{a0, c0};
  const auto s = testing_support::random_state(rng, modes, 3, 6);
  const double t = 0.3;
  const auto out = apply_beam_splitter(s, Channel::alice, Channel::charlie, t);

  oracle::Superposition in;
  for (const auto& [basis, amp] : s.amplitudes()) in[{basis.count(a0), basis.count(c0)}] += amp;
  const auto expected = oracle::evolve(oracle::beam_splitter(2, 0, 1, t), in);
  for (const auto& [occ, amp] : expected) {
    EXPECT_NEAR(std::abs(out.amplitude(FockBasisState{{a0, occ[0]}, {c0, occ[1]}}) - amp), 0.0, 1e-12);
  }
}

TEST(ModePhase, Examples) {
  const auto one = make_state({{FockBasisState{{a0, 1}}, 1.0}});
  EXPECT_NEAR(max_amplitude_distance(apply_mode_phase(one, on_channel(Channel::alice), 0.0), one), 0.0, 1e-15);
  const auto flipped = apply_mode_phase(one, on_channel(Channel::alice), kPi);
  EXPECT_NEAR(std::abs(flipped.amplitude(FockBasisState{{a0, 1}}) + 1.0), 0.0, 1e-15);
  const auto two = make_state({{FockBasisState{{a0, 2}}, 1.0}});
  const auto rotated = apply_mode_phase(two, on_channel(Channel::alice), kPi / 2);
  EXPECT_NEAR(std::abs(rotated.amplitude(FockBasisState{{a0, 2}}) + 1.0), 0.0, 1e-15);
}

TEST(TimeShift, Examples) {
  const auto one = make_state({{FockBasisState{{a0, 1}}, 1.0}});
  EXPECT_NEAR(max_amplitude_distance(apply_time_shift(one, on_channel(Channel::alice), 0), one), 0.0, 0.0);
  const auto shifted = apply_time_shift(one, on_channel(Channel::alice), 1);
  EXPECT_NEAR(std::abs(shifted.amplitude(FockBasisState{{a1, 1}})), 1.0, 1e-15);

  const auto sup = make_state({{FockBasisState{{a0, 1}}, 0.6}, {FockBasisState{{a1, 1}}, Complex(0, 0.8)}});
  const auto moved = apply_time_shift(sup, on_channel(Channel::alice), 1);
  EXPECT_EQ(moved.amplitude(FockBasisState{{a1, 1}}), sup.amplitude(FockBasisState{{a0, 1}}));
  EXPECT_EQ(moved.amplitude(FockBasisState{{ModeId{Channel::alice, 2}, 1}}), sup.amplitude(FockBasisState{{a1, 1}}));
}

TEST(TimeShift, OverflowIsAnError) {
  const auto late = make_state({{FockBasisState{{ModeId{Channel::alice, 3}, 1}}, 1.0}});
  EXPECT_THROW(apply_time_shift(late, on_channel(Channel::alice), 1), TruncationError);
  EXPECT_THROW(apply_time_shift(late, on_channel(Channel::alice), -4), TruncationError);
}

TEST(Distinguishability, Limits) {
  const auto one = make_state({{FockBasisState{{a0, 1}}, 1.0}});
  EXPECT_NEAR(max_amplitude_distance(rotate_distinguishability(one, on_channel(Channel::alice), 1.0), one), 0.0,
              1e-15);
  const auto moved = rotate_distinguishability(one, on_channel(Channel::alice), 0.0);
  EXPECT_NEAR(std::abs(moved.amplitude(FockBasisState{{orth(a0), 1}})), 1.0, 1e-15);
  EXPECT_THROW(rotate_distinguishability(one, on_channel(Channel::alice), 1.1), std::invalid_argument);
  EXPECT_THROW(rotate_distinguishability(one, on_channel(Channel::alice), -0.1), std::invalid_argument);
}

TEST(Distinguishability, HomLawAgainstEnumeration) {
  // Oracle modes: alice matched, alice orthogonal, charlie matched, charlie orthogonal.
  for (double zeta : {0.0, 0.25, 0.5, 0.75, 1.0}) {
    auto s = make_state({{FockBasisState{{a0, 1}, {c0, 1}}, 1.0}});
    s = rotate_distinguishability(s, on_channel(Channel::alice), zeta);
    s = apply_beam_splitter(s, Channel::alice, Channel::charlie, 0.5);

    Eigen::MatrixXcd rot = Eigen::MatrixXcd::Identity(4, 4);
    const double c = std::sqrt(1 - zeta * zeta);
    rot(0, 0) = zeta;
    rot(1, 0) = c;
    rot(0, 1) = -c;
    rot(1, 1) = zeta;
    const Eigen::MatrixXcd u = oracle::beam_splitter(4, 1, 3, 0.5) * oracle::beam_splitter(4, 0, 2, 0.5) * rot;
    const auto out = oracle::evolve(u, {{{1, 0, 1, 0}, 1.0}});
    const double p_oracle = oracle::coincidence_probability(out, {0, 1}, {2, 3});

    EXPECT_NEAR(coincidence(s, Channel::alice, Channel::charlie), p_oracle, 1e-12) << "zeta " << zeta;
    EXPECT_NEAR(p_oracle, (1 - zeta * zeta) / 2, 1e-12);
  }
}

TEST(Unitarity, RandomStatesKeepTheirNorm) {
  std::mt19937_64 rng(2024);
  const auto modes = alice_charlie_modes();
  for (int trial = 0; trial < 40; ++trial) {
    const auto s = testing_support::random_state(rng, modes, 4, 8);
    const double t = std::uniform_real_distribution<double>(0, 1)(rng);
    EXPECT_NEAR(apply_beam_splitter(s, Channel::alice, Channel::charlie, t).norm_squared(), 1.0, 1e-12);
    EXPECT_NEAR(apply_mode_phase(s, on_channel(Channel::charlie), 1.234).norm_squared(), 1.0, 1e-12);
    EXPECT_NEAR(apply_time_shift(s, on_channel(Channel::alice), 1).norm_squared(), 1.0, 1e-12);
    EXPECT_NEAR(rotate_distinguishability(s, on_channel(Channel::alice), t).norm_squared(), 1.0, 1e-12);
  }
}

TEST(Unitarity, MachZehnderCloses) {
  std::mt19937_64 rng(7);
  const std::vector<ModeId> modes{a0, a1, c0, orth(c0)};
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = testing_support::random_state(rng, modes, 4, 6);
    auto out = apply_beam_splitter(s, Channel::alice, Channel::charlie, 0.5);
    out = apply_mode_phase(out, on_channel(Channel::charlie), kPi);
    out = apply_beam_splitter(out, Channel::alice, Channel::charlie, 0.5);
    // The balanced network is diag(1, -1); undo the sign on the second port.
    out = apply_mode_phase(out, on_channel(Channel::charlie), kPi);
    EXPECT_NEAR(max_amplitude_distance(out, s), 0.0, 1e-12);
  }
}

TEST(Postselect, Examples) {
  const auto s = make_state({{FockBasisState{{a0, 1}, {b0, 1}}, 1.0}});
  const auto all = postselect(s, FockBasisState{{a0, 1}}, on_channel(Channel::alice));
  EXPECT_NEAR(all.probability, 1.0, 1e-15);
  ASSERT_TRUE(all.conditional);
  EXPECT_NEAR(std::abs(all.conditional->amplitude(FockBasisState{{b0, 1}})), 1.0, 1e-15);

  const auto none = postselect(s, FockBasisState{{a1, 1}}, on_channel(Channel::alice));
  EXPECT_EQ(none.probability, 0.0);
  EXPECT_FALSE(none.conditional);

  const ModeId ch0{Channel::charlie, 0}, ch1{Channel::charlie, 1};
  const auto phi = make_state({{FockBasisState{{ch0, 1}, {b0, 1}}, 1.0}, {FockBasisState{{ch1, 1}, {b1, 1}}, 1.0}});
  const auto half = postselect(phi, FockBasisState{{ch0, 1}}, on_channel(Channel::charlie));
  EXPECT_NEAR(half.probability, 0.5, 1e-15);
  EXPECT_NEAR(std::abs(half.conditional->amplitude(FockBasisState{{b0, 1}})), 1.0, 1e-15);
}

TEST(Postselect, CompleteFamilySumsToOne) {
  std::mt19937_64 rng(99);
  const std::vector<ModeId> modes{a0, a1, c0};
  for (int trial = 0; trial < 20; ++trial) {
    const auto s = testing_support::random_state(rng, modes, 3, 8);
    double total = 0.0;
    for (int n0 = 0; n0 <= 4; ++n0) {
      for (int n1 = 0; n0 + n1 <= 4; ++n1) {
        total += postselect(s, FockBasisState{{a0, n0}, {a1, n1}}, on_channel(Channel::alice)).probability;
      }
    }
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
}

TEST(RestrictPhotonNumber, KeepsModes) {
  const auto s = make_state({{FockBasisState{{a0, 1}}, 1.0}, {FockBasisState{{a0, 2}}, 1.0}});
  const auto r = restrict_photon_number(s, on_channel(Channel::alice), 2);
  EXPECT_NEAR(r.probability, 0.5, 1e-15);
  EXPECT_NEAR(std::abs(r.conditional->amplitude(FockBasisState{{a0, 2}})), 1.0, 1e-15);
}

TEST(TimeBinQubit, Validation) {
  EXPECT_THROW(TimeBinQubit::from_amplitudes(-0.1, 1.0, 0.0), std::invalid_argument);
  EXPECT_THROW(TimeBinQubit::from_amplitudes(0.8, 0.8, 0.0), std::invalid_argument);
  const auto q = TimeBinQubit::from_sphere(kPi / 3, 0.4);
  EXPECT_NEAR(q.a0() * q.a0() + q.a1() * q.a1(), 1.0, 1e-12);
  EXPECT_NEAR(q.a0(), std::cos(kPi / 6), 1e-15);
}

TEST(QubitFidelity, Examples) {
  const auto target = TimeBinQubit::equator(0.0);
  const auto same = qubit_state(target.amplitudes(), b0, b1);
  EXPECT_NEAR(qubit_fidelity(same, target, {b0, b1}), 1.0, 1e-14);

  const auto opposite = qubit_state(TimeBinQubit::equator(kPi).amplitudes(), b0, b1);
  EXPECT_NEAR(qubit_fidelity(opposite, target, {b0, b1}), 0.0, 1e-14);

  // i sigma_y maps (1, 1)/sqrt2 to (1, -1)/sqrt2, the antipode.
  Eigen::Matrix2cd isy;
  isy << 0, 1, -1, 0;
  const auto flipped = qubit_state(isy * target.amplitudes(), b0, b1);
  EXPECT_NEAR(qubit_fidelity(flipped, target, {b0, b1}), 0.0, 1e-14);
  // A pole target sits half way from that antipode.
  EXPECT_NEAR(qubit_fidelity(flipped, TimeBinQubit::early(), {b0, b1}), 0.5, 1e-14);

  const auto two = make_state({{FockBasisState{{b0, 2}}, 1.0}});
  EXPECT_THROW(qubit_fidelity(two, target, {b0, b1}), std::invalid_argument);
}

TEST(QubitFidelity, OrthogonalLabelIsTracedOut) {
  const auto target = TimeBinQubit::equator(0.3);
  const auto s = qubit_state(target.amplitudes(), orth(b0), orth(b1));
  EXPECT_NEAR(qubit_fidelity(s, target, {b0, b1}), 1.0, 1e-14);
}
