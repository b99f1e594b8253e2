#pragma once

// End-to-end drivers: teleportation fringe and pole scans, HOM delay scan,
// Franson phase scan, the relay fidelity-versus-distance model and the
// fidelity arithmetic tying them together.

#include "relaysim/channels.hpp"
#include "relaysim/detection.hpp"
#include "relaysim/fitting.hpp"
#include "relaysim/fock.hpp"
#include "relaysim/optics.hpp"

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace relaysim {

/// Classical teleportation bound on the average fidelity.
inline constexpr double kClassicalFidelityBound = 2.0 / 3.0;

struct RelayModelParams {
  int segments = 1;
  double dark_prob_per_ns = 1e-4;
  double gate_ns = 1.0;
  double attenuation_db_per_km = 0.25;
  /// Default efficiency of every station.
  double efficiency = 0.1;
  /// Per-station efficiencies; empty means `efficiency` everywhere.
  std::vector<double> station_efficiencies;
  double interference_visibility = 1.0;

  bool operator==(const RelayModelParams&) const = default;
};

void validate(const RelayModelParams& p);

struct RelayGrid {
  double max_km = 400.0;
  double step_km = 5.0;

  bool operator==(const RelayGrid&) const = default;
};

struct ExperimentConfig {
  // Sources. Pair probabilities are per pump time bin (lambda^2).
  double qubit_pair_probability = 0.05;
  /// qubit_pair_probability / epr_pair_probability.
  double pump_ratio = 7.0;
  double pump_phase = 0.0;
  /// Drops same-source multi-pair terms.
  bool first_order_only = false;
  /// Pump ratio used by the HOM scan.
  double hom_pump_ratio = 1.0;

  // Interferometers.
  double alpha = 0.0;
  double beta = 0.0;
  /// Visibility of the interfering term of the analysis interferometers.
  double interferometer_visibility = 1.0;
  double insertion_loss = 0.0;

  // Links and filtering.
  FiberSpec alice_link{2.0, 0.25, 0.0, 4.0};
  FiberSpec charlie_link{2.0, 0.25, 0.0, 4.0};
  FiberSpec bob_link{2.2, 0.25, 0.0, 4.0};
  FilterSpec filter{1310.0, 10.0};
  /// Path-length mismatch of Alice's photon at the BSM, micrometres.
  double delay_um = 0.0;
  /// Overlap of the BSM photons at zero delay (polarization and other
  /// residual mismatch).
  double mode_overlap = 1.0;
  /// Overlap penalty of a dispersion mismatch between the two BSM links.
  double dispersion_overlap = 1.0;

  // Detection.
  DetectorSpec c1 = germanium_apd(Detector::c1);
  DetectorSpec c2 = ingaas_apd(Detector::c2);
  DetectorSpec b = ingaas_apd(Detector::b);
  double slot_ns = 1.2;
  double window_ns = 0.8;

  RelayModelParams relay{};
  RelayGrid relay_grid{};

  std::uint64_t pulses = 1'000'000;
  std::uint64_t seed = 1;
  int max_photons = 4;

  bool operator==(const ExperimentConfig&) const = default;
};

/// Throws std::invalid_argument on any constraint violation.
void validate(const ExperimentConfig& cfg);

double epr_pair_probability(const ExperimentConfig& cfg);

/// Overlap of the BSM photons for an extra Alice delay on top of delay_um.
double bsm_overlap(const ExperimentConfig& cfg, double extra_delay_um = 0.0);

/// Defaults with no multi-pair terms, no dark counts and perfect
/// overlap and visibility.
ExperimentConfig ideal_config();

enum class RunMode { analytic, montecarlo, both };

struct RunOptions {
  RunMode mode = RunMode::both;
  std::uint64_t pulses = 1'000'000;
  std::uint64_t seed = 1;
};

inline bool wants_analytic(RunMode m) { return m != RunMode::montecarlo; }
inline bool wants_sampled(RunMode m) { return m != RunMode::analytic; }

struct Estimate {
  double value = 0.0;
  double error = 0.0;
};

struct ScanSummary {
  Estimate visibility;
  /// Absent for scans without a qubit fidelity (the HOM dip).
  std::optional<Estimate> fidelity;
  std::map<std::string, double> extra;
};

struct ScanPoint {
  double axis = 0.0;
  /// One entry per column.
  std::vector<double> analytic;
  std::vector<RuleCount> sampled;
};

struct ScanResult {
  std::string experiment;
  std::string axis_name;
  std::vector<std::string> columns;
  std::vector<ScanPoint> points;
  std::optional<ScanSummary> analytic_summary;
  std::optional<ScanSummary> sampled_summary;
  /// Why a summary is missing (a sampled fit without enough counts).
  std::vector<std::string> notes;
};

/// Experiment-level error (degenerate scans, failed fits).
class ExperimentError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Optical state and detector wiring of one pure-state ensemble member.
struct ChainSetup {
  StateVector state;
  DetectorMap detectors;
  DetectorBank bank;
};

enum class QubitInput { equator, early, late };
enum class BobAnalysis { interferometer, fiber };

/// Full teleportation chain for one analyzer phase offset.
ChainSetup teleportation_chain(const ExperimentConfig& cfg, QubitInput input, BobAnalysis bob,
                               double beta, double extra_delay_um = 0.0);

/// Arrival distribution of the teleportation chain, averaged over the
/// interferometer-visibility ensemble.
ArrivalDistribution teleportation_arrivals(const ExperimentConfig& cfg, QubitInput input,
                                           BobAnalysis bob, double beta, DetectorBank* bank = nullptr);

ChainSetup hom_chain(const ExperimentConfig& cfg, double delay_um);
ChainSetup franson_chain(const ExperimentConfig& cfg, double alpha, double beta);

/// Four-fold (C1+C2+B+t0, B in the middle slot) and three-fold (C1+B+t0)
/// rates versus Bob's phase; fidelity (1 + V) / 2 from the four-fold fringe.
ScanResult run_teleportation_equator(const ExperimentConfig& cfg, const std::vector<double>& betas,
                                     const RunOptions& opt);

/// Four-fold rates in the correct and wrong slot for both pole inputs;
/// F_poles = R_correct / (R_correct + R_wrong), averaged over the inputs.
ScanResult run_teleportation_poles(const ExperimentConfig& cfg, const RunOptions& opt);

/// C1+C2+t0 coincidences versus Alice's delay, with a Gaussian dip fit.
ScanResult run_hom_scan(const ExperimentConfig& cfg, const std::vector<double>& delays_um,
                        const RunOptions& opt);

/// Middle-slot coincidences of the EPR photons versus alpha + beta.
ScanResult run_franson_scan(const ExperimentConfig& cfg, const std::vector<double>& phases,
                            const RunOptions& opt);

/// F_poles / 3 + 2 F_equator / 3.
double total_fidelity(double f_poles, double f_equator);

/// V_BSM (1 + V_int) / 2 + (1 - V_BSM) / 2.
double fidelity_from_components(double v_bsm, double v_int);

/// Inverse of fidelity_from_components in V_BSM.
double bsm_visibility_from_fidelity(double fidelity, double v_int);

/// Overlap giving a BSM visibility of `v_bsm` (first-order pairs: V_BSM = zeta^2).
double overlap_for_bsm_visibility(double v_bsm);

/// Analytic total fidelity of the configured chain: poles from the pole runs,
/// equator from a fitted eight-point fringe.
double analytic_total_fidelity(const ExperimentConfig& cfg);

/// F(l) = 1/2 + (V_int / 2) prod_i p_i / (p_i + d), p_i = eta_i 10^(-att l / (10 n)), d = D w.
double relay_fidelity(const RelayModelParams& params, double length_km);

struct RelayCurves {
  std::vector<double> lengths_km;
  /// curves[n - 1][k] is F_n at lengths_km[k], n = 1..4.
  std::vector<std::vector<double>> curves;
  /// Distance each detected photon travels, l / n, at the grid end.
  std::vector<double> effective_distance_km;
};

RelayCurves relay_fidelity_curve(const RelayModelParams& params, const std::vector<double>& grid);

/// Smallest length at which F_n first drops below `threshold` (bisection on
/// the monotone closed form); infinity when it never does within 1e5 km.
double relay_threshold_distance(const RelayModelParams& params, double threshold);

std::vector<double> relay_grid(const RelayGrid& grid);

struct TeleportationOutcome {
  double bsm_probability = 0.0;
  /// Bob's conditional state for C1 late / C2 early; equals i sigma_y input.
  StateVector bob_state;
  StateVector expected;
  double corrected_fidelity = 0.0;
};

/// Ideal single-pair chain for an arbitrary input qubit.
TeleportationOutcome ideal_teleportation(const TimeBinQubit& input);

struct SweepPoint {
  double theta = 0.0;
  double alpha = 0.0;
  double bsm_probability = 0.0;
  double fidelity = 0.0;
};

/// Photon-level teleportation fidelity over a Poincare grid (theta in
/// [0, pi], alpha in [0, 2 pi)), with the configured sources and overlap.
std::vector<SweepPoint> teleportation_sweep(const ExperimentConfig& cfg, int n_theta, int n_alpha);

}  // namespace relaysim
