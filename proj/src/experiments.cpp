#include "relaysim/experiments.hpp"

#include "relaysim/rng.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <functional>
#include <numbers>
#include <optional>

namespace relaysim {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr int kChainSlots = 4;

void require(bool ok, const std::string& what) {
  if (!ok) throw std::invalid_argument(what);
}

bool in_unit(double x) { return x >= 0.0 && x <= 1.0; }

void validate_detector(const DetectorSpec& d, Detector label) {
  require(d.label == label, "detector label mismatch for " + to_string(label));
  require(in_unit(d.efficiency), "detector efficiency must lie in [0, 1]");
  require(d.dark_prob_per_ns >= 0.0, "dark-count probability must be >= 0");
  require(d.gate_width_ns > 0.0, "gate width must be > 0");
  require(in_unit(dark_click_probability(d)), "dark-click probability per slot must lie in [0, 1]");
}

Truncation chain_truncation(const ExperimentConfig& cfg) { return {cfg.max_photons, kChainSlots}; }

EmissionOrder emission_order(const ExperimentConfig& cfg) {
  return {2, cfg.first_order_only ? 1 : 2};
}

SourceSpec qubit_source(double pair_probability) {
  return SourceSpec{std::sqrt(pair_probability), {PumpBin{0, 0.0}}, Band::nm1310, Band::nm1550,
                    Channel::alice, Channel::alice_twin};
}

SourceSpec epr_source(double pair_probability, double pump_phase) {
  return SourceSpec{std::sqrt(pair_probability),
                    {PumpBin{0, 0.0}, PumpBin{1, pump_phase}},
                    Band::nm1310,
                    Band::nm1550,
                    Channel::charlie,
                    Channel::bob};
}

/// Equalizes the BSM input losses: the larger survival is applied at the
/// detectors, the excess loss of the other arm as a beam splitter into its
/// loss channel before the BSM. Returns the common survival.
double equalize_bsm_loss(StateVector& state, double s_alice, double s_charlie) {
  if (s_alice < s_charlie) {
    state = apply_beam_splitter(state, Channel::alice, Channel::alice_loss, s_alice / s_charlie);
  } else if (s_charlie < s_alice) {
    state = apply_beam_splitter(state, Channel::charlie, Channel::charlie_loss, s_charlie / s_alice);
  }
  return std::max(s_alice, s_charlie);
}

CoincidenceRule timed(CoincidenceRule rule, const ExperimentConfig& cfg) {
  rule.window_ns = cfg.window_ns;
  rule.slot_spacing_ns = cfg.slot_ns;
  return rule;
}

std::uint64_t point_seed(std::uint64_t seed, std::size_t k) {
  return StreamRng(seed, static_cast<std::uint64_t>(k), 0xa11ceULL)();
}

/// Ensemble for an imperfect analysis interferometer: the interfering term
/// keeps weight V when the analyzer phase is also run with a pi offset at
/// weight (1 - V) / 2.
std::vector<std::pair<double, double>> visibility_ensemble(double v) {
  if (v >= 1.0) return {{1.0, 0.0}};
  return {{0.5 * (1.0 + v), 0.0}, {0.5 * (1.0 - v), kPi}};
}

std::vector<DataPoint> column_points(const ScanResult& r, std::size_t column, bool sampled,
                                     double axis_offset = 0.0) {
  std::vector<DataPoint> pts;
  for (const auto& p : r.points) {
    if (sampled) {
      const double n = static_cast<double>(p.sampled[column].count);
      pts.push_back({p.axis + axis_offset, n, std::sqrt(std::max(n, 1.0))});
    } else {
      pts.push_back({p.axis + axis_offset, p.analytic[column], 0.0});
    }
  }
  return pts;
}

ScanSummary fringe_summary(const SinusoidFit& fit) {
  ScanSummary s;
  s.visibility = {fit.visibility, fit.visibility_error};
  s.fidelity = Estimate{equator_fidelity(fit.visibility), 0.5 * fit.visibility_error};
  s.extra["phase"] = fit.phase;
  s.extra["offset"] = fit.offset;
  return s;
}

template <typename ChainFn>
void evaluate_point(ScanPoint& point, const std::vector<std::pair<double, ChainFn>>& members,
                    const std::vector<CoincidenceRule>& rules, const RunOptions& opt,
                    std::uint64_t seed) {
  std::vector<std::pair<double, ArrivalDistribution>> dists;
  std::optional<DetectorBank> bank;
  for (const auto& [w, make] : members) {
    if (w <= 0.0) continue;
    auto chain = make();
    dists.emplace_back(w, arrival_distribution(chain.state, chain.detectors));
    bank = chain.bank;
  }
  const auto dist = merge_distributions(dists);
  if (wants_analytic(opt.mode)) {
    for (const auto& rule : rules) point.analytic.push_back(analytic_rule_probability(dist, *bank, rule));
  }
  if (wants_sampled(opt.mode)) {
    point.sampled = simulate_counts(dist, *bank, rules, opt.pulses, seed);
  }
}

/// Fills both summaries. A failed analytic fit is an error; a failed sampled
/// fit is only an error when nothing else was asked for.
template <typename Fn>
void summarize(ScanResult& r, const RunOptions& opt, const std::string& what, Fn&& fit) {
  if (wants_analytic(opt.mode)) {
    try {
      r.analytic_summary = fit(false);
    } catch (const FitError& e) {
      throw ExperimentError(what + " fit failed: " + e.what());
    }
  }
  if (wants_sampled(opt.mode)) {
    try {
      r.sampled_summary = fit(true);
    } catch (const FitError& e) {
      if (!wants_analytic(opt.mode)) throw ExperimentError("sampled " + what + " fit failed: " + e.what());
      r.notes.push_back("sampled " + what + " fit skipped: " + e.what());
    }
  }
}

void check_scan(const std::vector<double>& axis, std::size_t min_points, const std::string& what) {
  if (axis.size() < min_points) {
    throw ExperimentError(what + " needs at least " + std::to_string(min_points) + " points");
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Configuration

void validate(const RelayModelParams& p) {
  require(p.segments >= 1, "relay needs at least one segment");
  require(in_unit(p.efficiency), "relay efficiency must lie in [0, 1]");
  for (double e : p.station_efficiencies) require(in_unit(e), "relay efficiency must lie in [0, 1]");
  require(p.dark_prob_per_ns >= 0.0 && p.gate_ns > 0.0, "relay noise parameters out of range");
  require(in_unit(p.dark_prob_per_ns * p.gate_ns), "relay noise probability must lie in [0, 1]");
  require(p.attenuation_db_per_km >= 0.0, "relay attenuation must be >= 0");
  require(in_unit(p.interference_visibility), "relay visibility must lie in [0, 1]");
}

void validate(const ExperimentConfig& cfg) {
  require(cfg.qubit_pair_probability >= 0.0 && cfg.qubit_pair_probability <= 0.25,
          "qubit pair probability must lie in [0, 0.25]");
  require(cfg.pump_ratio > 0.0 && std::isfinite(cfg.pump_ratio), "pump ratio must be > 0");
  require(cfg.hom_pump_ratio > 0.0 && std::isfinite(cfg.hom_pump_ratio), "HOM pump ratio must be > 0");
  require(epr_pair_probability(cfg) <= 0.25, "EPR pair probability must lie in [0, 0.25]");
  require(std::isfinite(cfg.pump_phase) && std::isfinite(cfg.alpha) && std::isfinite(cfg.beta),
          "phases must be finite");
  require(in_unit(cfg.interferometer_visibility), "interferometer visibility must lie in [0, 1]");
  require(in_unit(cfg.insertion_loss), "insertion loss must lie in [0, 1]");
  require(in_unit(cfg.mode_overlap), "mode overlap must lie in [0, 1]");
  require(in_unit(cfg.dispersion_overlap), "dispersion overlap must lie in [0, 1]");
  require(std::isfinite(cfg.delay_um), "delay must be finite");
  validate(cfg.alice_link);
  validate(cfg.charlie_link);
  validate(cfg.bob_link);
  validate(cfg.filter);
  validate_detector(cfg.c1, Detector::c1);
  validate_detector(cfg.c2, Detector::c2);
  validate_detector(cfg.b, Detector::b);
  require(!cfg.c1.gated, "C1 is the free-running trigger detector");
  require(cfg.slot_ns > 0.0, "slot duration must be > 0");
  require(cfg.window_ns > 0.0 && cfg.window_ns < cfg.slot_ns,
          "coincidence window must be positive and shorter than a slot");
  validate(cfg.relay);
  require(cfg.relay_grid.max_km > 0.0 && cfg.relay_grid.step_km > 0.0, "relay grid must be positive");
  require(cfg.pulses >= 1, "pulse count must be >= 1");
  require(cfg.max_photons >= 4, "truncation must hold two pairs (4 photons)");
}

double epr_pair_probability(const ExperimentConfig& cfg) {
  return cfg.qubit_pair_probability / cfg.pump_ratio;
}

double bsm_overlap(const ExperimentConfig& cfg, double extra_delay_um) {
  return cfg.mode_overlap * cfg.dispersion_overlap *
         overlap_from_delay(cfg.delay_um + extra_delay_um, cfg.filter);
}

ExperimentConfig ideal_config() {
  ExperimentConfig cfg;
  cfg.first_order_only = true;
  cfg.c1.dark_prob_per_ns = 0.0;
  cfg.c2.dark_prob_per_ns = 0.0;
  cfg.b.dark_prob_per_ns = 0.0;
  return cfg;
}

// ---------------------------------------------------------------------------
// Chains

ChainSetup teleportation_chain(const ExperimentConfig& cfg, QubitInput input, BobAnalysis bob,
                               double beta, double extra_delay_um) {
  const auto trunc = chain_truncation(cfg);
  const std::array sources{qubit_source(cfg.qubit_pair_probability),
                           epr_source(epr_pair_probability(cfg), cfg.pump_phase)};
  auto state = spdc_emit(sources, trunc, emission_order(cfg));

  InterferometerSpec prep{1, cfg.alpha, cfg.insertion_loss, PathMode::interferometer};
  if (input == QubitInput::early) prep.mode = PathMode::short_path;
  if (input == QubitInput::late) prep.mode = PathMode::long_path;
  state = propagate_interferometer(state, prep, Channel::alice, Channel::alice_arm);

  const double zeta = bsm_overlap(cfg, extra_delay_um);
  if (zeta < 1.0) state = rotate_distinguishability(state, on_channel(Channel::alice), zeta);

  const double s_alice = survival_probability(cfg.alice_link) *
                         (input == QubitInput::equator ? 1.0 - cfg.insertion_loss : 1.0);
  const double s_bsm = equalize_bsm_loss(state, s_alice, survival_probability(cfg.charlie_link));
  state = apply_beam_splitter(state, Channel::alice, Channel::charlie, 0.5);

  const bool analyzer = bob == BobAnalysis::interferometer;
  const InterferometerSpec analysis{1, beta, cfg.insertion_loss,
                                    analyzer ? PathMode::interferometer : PathMode::short_path};
  state = propagate_interferometer(state, analysis, Channel::bob, Channel::bob_arm);

  const double s_bob = survival_probability(cfg.bob_link) * (analyzer ? 1.0 - cfg.insertion_loss : 1.0);
  DetectorBank bank{DetectorSetup{cfg.c1, s_bsm, 2}, DetectorSetup{cfg.c2, s_bsm, 2},
                    DetectorSetup{cfg.b, s_bob, analyzer ? 3 : 2}};
  return ChainSetup{std::move(state),
                    {{Channel::alice, Detector::c1}, {Channel::charlie, Detector::c2}, {Channel::bob, Detector::b}},
                    bank};
}

ArrivalDistribution teleportation_arrivals(const ExperimentConfig& cfg, QubitInput input,
                                           BobAnalysis bob, double beta, DetectorBank* bank) {
  validate(cfg);
  const auto ensemble = bob == BobAnalysis::interferometer
                            ? visibility_ensemble(cfg.interferometer_visibility)
                            : std::vector<std::pair<double, double>>{{1.0, 0.0}};
  std::vector<std::pair<double, ArrivalDistribution>> members;
  for (const auto& [w, offset] : ensemble) {
    auto chain = teleportation_chain(cfg, input, bob, beta + offset);
    members.emplace_back(w, arrival_distribution(chain.state, chain.detectors));
    if (bank) *bank = chain.bank;
  }
  return merge_distributions(members);
}

ChainSetup hom_chain(const ExperimentConfig& cfg, double delay_um) {
  const auto trunc = chain_truncation(cfg);
  auto second = epr_source(cfg.qubit_pair_probability / cfg.hom_pump_ratio, 0.0);
  second.pump_bins = {PumpBin{0, 0.0}};
  const std::array sources{qubit_source(cfg.qubit_pair_probability), second};
  auto state = spdc_emit(sources, trunc, emission_order(cfg));

  const double zeta = bsm_overlap(cfg, delay_um);
  if (zeta < 1.0) state = rotate_distinguishability(state, on_channel(Channel::alice), zeta);
  const double s_bsm = equalize_bsm_loss(state, survival_probability(cfg.alice_link),
                                         survival_probability(cfg.charlie_link));
  state = apply_beam_splitter(state, Channel::alice, Channel::charlie, 0.5);

  DetectorBank bank{DetectorSetup{cfg.c1, s_bsm, 1}, DetectorSetup{cfg.c2, s_bsm, 1},
                    DetectorSetup{cfg.b, survival_probability(cfg.bob_link), 1}};
  return ChainSetup{std::move(state),
                    {{Channel::alice, Detector::c1}, {Channel::charlie, Detector::c2}, {Channel::bob, Detector::b}},
                    bank};
}

ChainSetup franson_chain(const ExperimentConfig& cfg, double alpha, double beta) {
  const auto trunc = chain_truncation(cfg);
  const std::array sources{epr_source(epr_pair_probability(cfg), cfg.pump_phase)};
  auto state = spdc_emit(sources, trunc, emission_order(cfg));
  state = propagate_interferometer(state, {1, alpha, cfg.insertion_loss, PathMode::interferometer},
                                   Channel::charlie, Channel::charlie_arm);
  state = propagate_interferometer(state, {1, beta, cfg.insertion_loss, PathMode::interferometer},
                                   Channel::bob, Channel::bob_arm);
  const double t = 1.0 - cfg.insertion_loss;
  DetectorBank bank{DetectorSetup{cfg.c1, survival_probability(cfg.charlie_link) * t, 3},
                    DetectorSetup{cfg.c2, 1.0, 1},
                    DetectorSetup{cfg.b, survival_probability(cfg.bob_link) * t, 3}};
  return ChainSetup{std::move(state), {{Channel::charlie, Detector::c1}, {Channel::bob, Detector::b}}, bank};
}

// ---------------------------------------------------------------------------
// Drivers

ScanResult run_teleportation_equator(const ExperimentConfig& cfg, const std::vector<double>& betas,
                                     const RunOptions& opt) {
  validate(cfg);
  check_scan(betas, 4, "teleportation fringe scan");
  ScanResult r{"teleport-equator", "beta", {"fourfold", "threefold"}, {}, {}, {}, {}};
  const std::vector rules{timed(fourfold_rule({1}), cfg), timed(threefold_rule({1}), cfg)};

  using Make = std::function<ChainSetup()>;
  for (std::size_t k = 0; k < betas.size(); ++k) {
    ScanPoint point{betas[k], {}, {}};
    std::vector<std::pair<double, Make>> members;
    for (const auto& [w, offset] : visibility_ensemble(cfg.interferometer_visibility)) {
      const double beta = betas[k] + offset;
      members.emplace_back(w, [&cfg, beta] {
        return teleportation_chain(cfg, QubitInput::equator, BobAnalysis::interferometer, beta);
      });
    }
    evaluate_point(point, members, rules, opt, point_seed(opt.seed, k));
    r.points.push_back(std::move(point));
  }

  summarize(r, opt, "teleportation fringe", [&](bool sampled) {
    auto s = fringe_summary(fit_sinusoid(column_points(r, 0, sampled, cfg.alpha)));
    s.extra["threefold_visibility"] = fit_sinusoid(column_points(r, 1, sampled, cfg.alpha)).visibility;
    return s;
  });
  return r;
}

ScanResult run_teleportation_poles(const ExperimentConfig& cfg, const RunOptions& opt) {
  validate(cfg);
  ScanResult r{"teleport-poles", "input_late", {"correct", "wrong"}, {}, {}, {}, {}};

  using Make = std::function<ChainSetup()>;
  for (int late = 0; late <= 1; ++late) {
    // i sigma_y swaps the bins, so the correct arrival slot is the other one.
    const int correct_slot = late ? 0 : 1;
    const std::vector rules{timed(fourfold_rule({correct_slot}, "correct"), cfg),
                            timed(fourfold_rule({1 - correct_slot}, "wrong"), cfg)};
    const auto input = late ? QubitInput::late : QubitInput::early;
    ScanPoint point{static_cast<double>(late), {}, {}};
    std::vector<std::pair<double, Make>> members{
        {1.0, [&cfg, input] { return teleportation_chain(cfg, input, BobAnalysis::fiber, 0.0); }}};
    evaluate_point(point, members, rules, opt, point_seed(opt.seed, static_cast<std::size_t>(late)));
    r.points.push_back(std::move(point));
  }

  summarize(r, opt, "pole", [&](bool sampled) {
    ScanSummary s;
    double f_sum = 0.0, var_sum = 0.0;
    for (std::size_t k = 0; k < r.points.size(); ++k) {
      const auto& p = r.points[k];
      double f = 0.0, var = 0.0;
      if (sampled) {
        const double c = static_cast<double>(p.sampled[0].count);
        const double w = static_cast<double>(p.sampled[1].count);
        if (c + w == 0.0) throw FitError("no four-fold coincidences");
        f = c / (c + w);
        var = f * (1.0 - f) / (c + w);
      } else {
        const double total = p.analytic[0] + p.analytic[1];
        if (total <= 0.0) throw FitError("zero four-fold probability");
        f = p.analytic[0] / total;
      }
      s.extra[k == 0 ? "F_early" : "F_late"] = f;
      f_sum += f;
      var_sum += var;
    }
    s.fidelity = Estimate{0.5 * f_sum, 0.5 * std::sqrt(var_sum)};
    s.visibility = {2.0 * s.fidelity->value - 1.0, 2.0 * s.fidelity->error};
    return s;
  });
  return r;
}

ScanResult run_hom_scan(const ExperimentConfig& cfg, const std::vector<double>& delays_um,
                        const RunOptions& opt) {
  validate(cfg);
  check_scan(delays_um, 5, "HOM scan");
  ScanResult r{"hom", "delay_um", {"coincidence"}, {}, {}, {}, {}};
  const std::vector rules{timed(hom_rule(), cfg)};

  using Make = std::function<ChainSetup()>;
  for (std::size_t k = 0; k < delays_um.size(); ++k) {
    ScanPoint point{delays_um[k], {}, {}};
    const double delay = delays_um[k];
    std::vector<std::pair<double, Make>> members{{1.0, [&cfg, delay] { return hom_chain(cfg, delay); }}};
    evaluate_point(point, members, rules, opt, point_seed(opt.seed, k));
    r.points.push_back(std::move(point));
  }

  summarize(r, opt, "HOM dip", [&](bool sampled) {
    const auto fit = fit_gaussian_dip(column_points(r, 0, sampled));
    ScanSummary s;
    s.visibility = {fit.visibility, fit.visibility_error};
    s.extra["fwhm_um"] = fit.fwhm;
    s.extra["center_um"] = fit.center;
    s.extra["baseline"] = fit.baseline;
    return s;
  });
  return r;
}

ScanResult run_franson_scan(const ExperimentConfig& cfg, const std::vector<double>& phases,
                            const RunOptions& opt) {
  validate(cfg);
  check_scan(phases, 4, "Franson scan");
  ScanResult r{"franson", "phase_sum", {"coincidence"}, {}, {}, {}, {}};
  CoincidenceRule rule{"coincidence", {Detector::c1, Detector::b}, {}, std::nullopt, 0.8, 1.2};
  rule.allowed_slots[Detector::c1] = {1};
  rule.allowed_slots[Detector::b] = {1};
  const std::vector rules{timed(rule, cfg)};

  using Make = std::function<ChainSetup()>;
  for (std::size_t k = 0; k < phases.size(); ++k) {
    ScanPoint point{phases[k], {}, {}};
    std::vector<std::pair<double, Make>> members;
    for (const auto& [w, offset] : visibility_ensemble(cfg.interferometer_visibility)) {
      const double beta = phases[k] + offset;
      members.emplace_back(w, [&cfg, beta] { return franson_chain(cfg, 0.0, beta); });
    }
    evaluate_point(point, members, rules, opt, point_seed(opt.seed, k));
    r.points.push_back(std::move(point));
  }

  summarize(r, opt, "Franson fringe",
            [&](bool sampled) { return fringe_summary(fit_sinusoid(column_points(r, 0, sampled))); });
  return r;
}

// ---------------------------------------------------------------------------
// Fidelity arithmetic

double total_fidelity(double f_poles, double f_equator) {
  require(in_unit(f_poles) && in_unit(f_equator), "fidelities must lie in [0, 1]");
  return f_poles / 3.0 + 2.0 * f_equator / 3.0;
}

double fidelity_from_components(double v_bsm, double v_int) {
  require(in_unit(v_bsm) && in_unit(v_int), "visibilities must lie in [0, 1]");
  return v_bsm * (1.0 + v_int) / 2.0 + (1.0 - v_bsm) / 2.0;
}

double bsm_visibility_from_fidelity(double fidelity, double v_int) {
  require(in_unit(fidelity) && v_int > 0.0 && v_int <= 1.0, "fidelity or visibility out of range");
  return (2.0 * fidelity - 1.0) / v_int;
}

double overlap_for_bsm_visibility(double v_bsm) {
  require(in_unit(v_bsm), "BSM visibility must lie in [0, 1]");
  return std::sqrt(v_bsm);
}

double analytic_total_fidelity(const ExperimentConfig& cfg) {
  const RunOptions opt{RunMode::analytic, 1, 1};
  const double f_poles = run_teleportation_poles(cfg, opt).analytic_summary->fidelity->value;
  std::vector<double> betas;
  for (int k = 0; k < 8; ++k) betas.push_back(2 * kPi * k / 8);
  const double f_eq = run_teleportation_equator(cfg, betas, opt).analytic_summary->fidelity->value;
  return total_fidelity(f_poles, f_eq);
}

// ---------------------------------------------------------------------------
// Relay model

double relay_fidelity(const RelayModelParams& params, double length_km) {
  validate(params);
  require(length_km >= 0.0, "relay length must be >= 0");
  const double d = params.dark_prob_per_ns * params.gate_ns;
  const double segment = length_km / params.segments;
  double product = 1.0;
  for (int i = 0; i < params.segments; ++i) {
    const double eta = static_cast<std::size_t>(i) < params.station_efficiencies.size()
                           ? params.station_efficiencies[static_cast<std::size_t>(i)]
                           : params.efficiency;
    const double p = eta * std::pow(10.0, -params.attenuation_db_per_km * segment / 10.0);
    product *= p > 0.0 ? p / (p + d) : 0.0;
  }
  return 0.5 + 0.5 * params.interference_visibility * product;
}

RelayCurves relay_fidelity_curve(const RelayModelParams& params, const std::vector<double>& grid) {
  require(!grid.empty(), "relay grid must be non-empty");
  RelayCurves out;
  out.lengths_km = grid;
  const double l_end = *std::max_element(grid.begin(), grid.end());
  for (int n = 1; n <= 4; ++n) {
    auto p = params;
    p.segments = n;
    std::vector<double> curve;
    curve.reserve(grid.size());
    for (double l : grid) curve.push_back(relay_fidelity(p, l));
    out.curves.push_back(std::move(curve));
    out.effective_distance_km.push_back(l_end / n);
  }
  return out;
}

double relay_threshold_distance(const RelayModelParams& params, double threshold) {
  if (relay_fidelity(params, 0.0) < threshold) return 0.0;
  double hi = 1e5;
  if (relay_fidelity(params, hi) >= threshold) return std::numeric_limits<double>::infinity();
  double lo = 0.0;
  for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
    const double mid = 0.5 * (lo + hi);
    (relay_fidelity(params, mid) < threshold ? hi : lo) = mid;
  }
  return hi;
}

std::vector<double> relay_grid(const RelayGrid& grid) {
  std::vector<double> out;
  const auto steps = static_cast<long>(std::floor(grid.max_km / grid.step_km + 1e-9));
  for (long k = 0; k <= steps; ++k) out.push_back(grid.step_km * static_cast<double>(k));
  return out;
}

// ---------------------------------------------------------------------------
// Photon-level teleportation

TeleportationOutcome ideal_teleportation(const TimeBinQubit& input) {
  const Truncation trunc{4, kChainSlots};
  const auto alice = qubit_modes(Channel::alice, Band::nm1310);
  const auto bob = qubit_modes(Channel::bob, Band::nm1550);

  const auto a = qubit_state(input.amplitudes(), alice.early, alice.late, trunc);
  const auto pair = spdc_emit(std::array{epr_source(0.01, 0.0)}, trunc, EmissionOrder{1, 1});
  const auto phi_plus = restrict_photon_number(pair, [](const ModeId&) { return true; }, 2);
  auto state = tensor_product(a, *phi_plus.conditional);
  state = apply_beam_splitter(state, Channel::alice, Channel::charlie, 0.5);

  const auto scope = on_channels({Channel::alice, Channel::charlie});
  const auto c1_late = postselect(
      state, FockBasisState{{qubit_modes(Channel::alice, Band::nm1310).late, 1},
                            {qubit_modes(Channel::charlie, Band::nm1310).early, 1}},
      scope);
  const auto c1_early = postselect(
      state, FockBasisState{{qubit_modes(Channel::alice, Band::nm1310).early, 1},
                            {qubit_modes(Channel::charlie, Band::nm1310).late, 1}},
      scope);
  if (!c1_late.conditional) throw ExperimentError("BSM never succeeds for this input");

  Eigen::Matrix2cd i_sigma_y;
  i_sigma_y << 0, 1, -1, 0;
  const auto bob_state = *c1_late.conditional;
  auto expected = qubit_state(i_sigma_y * input.amplitudes(), bob.early, bob.late, trunc);
  const auto corrected = pauli_correction(bob_state, Pauli::both, bob);
  return TeleportationOutcome{c1_late.probability + c1_early.probability, bob_state,
                              std::move(expected),
                              qubit_fidelity(corrected, input, {bob.early, bob.late})};
}

std::vector<SweepPoint> teleportation_sweep(const ExperimentConfig& cfg, int n_theta, int n_alpha) {
  validate(cfg);
  require(n_theta >= 2 && n_alpha >= 1, "sweep grid too small");
  const auto trunc = chain_truncation(cfg);
  const std::array sources{qubit_source(cfg.qubit_pair_probability),
                           epr_source(epr_pair_probability(cfg), cfg.pump_phase)};
  const auto emitted = spdc_emit(sources, trunc, emission_order(cfg));
  const auto bob = qubit_modes(Channel::bob, Band::nm1550);
  const auto scope = on_channels({Channel::alice, Channel::charlie});

  std::vector<SweepPoint> out;
  for (int i = 0; i < n_theta; ++i) {
    for (int j = 0; j < n_alpha; ++j) {
      const double theta = kPi * i / (n_theta - 1);
      const double alpha = 2 * kPi * j / n_alpha;
      const auto input = TimeBinQubit::from_sphere(theta, alpha);

      auto state = encode_qubit(emitted, input, Channel::alice, 0);
      const double zeta = bsm_overlap(cfg);
      if (zeta < 1.0) state = rotate_distinguishability(state, on_channel(Channel::alice), zeta);
      equalize_bsm_loss(state, survival_probability(cfg.alice_link), survival_probability(cfg.charlie_link));
      state = apply_beam_splitter(state, Channel::alice, Channel::charlie, 0.5);

      double p_bsm = 0.0, weight = 0.0, weighted_f = 0.0;
      for (auto [ta, tc] : {std::pair{0, 1}, std::pair{1, 0}}) {
        for (auto oa : {Ortho::matched, Ortho::orthogonal}) {
          for (auto oc : {Ortho::matched, Ortho::orthogonal}) {
            const FockBasisState pattern{{ModeId{Channel::alice, ta, Band::nm1310, oa}, 1},
                                         {ModeId{Channel::charlie, tc, Band::nm1310, oc}, 1}};
            const auto bsm = postselect(state, pattern, scope);
            p_bsm += bsm.probability;
            if (!bsm.conditional) continue;
            const auto one = restrict_photon_number(*bsm.conditional, on_channel(Channel::bob), 1);
            if (!one.conditional) continue;
            const auto corrected = pauli_correction(*one.conditional, Pauli::both, bob);
            const double w = bsm.probability * one.probability;
            weight += w;
            weighted_f += w * qubit_fidelity(corrected, input, {bob.early, bob.late});
          }
        }
      }
      out.push_back({theta, alpha, p_bsm, weight > 0.0 ? weighted_f / weight : 0.0});
    }
  }
  return out;
}

}  // namespace relaysim
