#pragma once

#include "relaysim/fock.hpp"

#include <random>
#include <vector>

namespace testing_support {

/// Random normalized superposition of up to `terms` basis states over the
/// given modes, each term holding at most `max_photons` photons.
inline relaysim::StateVector random_state(std::mt19937_64& rng, const std::vector<relaysim::ModeId>& modes,
                                          int max_photons, int terms, relaysim::Truncation trunc = {}) {
  std::uniform_int_distribution<std::size_t> pick(0, modes.size() - 1);
  std::uniform_int_distribution<int> count(0, max_photons);
  std::normal_distribution<double> gauss;
  std::vector<std::pair<relaysim::FockBasisState, relaysim::Complex>> entries;
  for (int t = 0; t < terms; ++t) {
    relaysim::FockBasisState s;
    const int n = count(rng);
    for (int k = 0; k < n; ++k) s = s.with_added(modes[pick(rng)], 1);
    entries.emplace_back(s, relaysim::Complex(gauss(rng), gauss(rng)));
  }
  return relaysim::make_state(entries, trunc);
}

}  // namespace testing_support
