#pragma once

// Fiber and environment models: loss, coherence time of filtered photons,
// delay-dependent mode overlap, thermal and slow drifts, dispersion.

#include <vector>

namespace relaysim {

/// Speed of light in vacuum, micrometres per femtosecond.
inline constexpr double kSpeedOfLightUmPerFs = 0.299792458;

struct FiberSpec {
  double length_km = 0.0;
  double attenuation_db_per_km = 0.25;
  double dispersion_ps_per_nm_km = 0.0;
  double thermal_coeff_mm_per_K_per_km = 4.0;

  bool operator==(const FiberSpec&) const = default;
};

struct FilterSpec {
  double center_wavelength_nm = 1310.0;
  double bandwidth_fwhm_nm = 10.0;

  bool operator==(const FilterSpec&) const = default;
};

void validate(const FiberSpec& fiber);
void validate(const FilterSpec& filter);

/// 10^(-attenuation * length / 10).
double survival_probability(const FiberSpec& fiber);

/// Gaussian time-bandwidth constant 2 ln2 / pi.
double gaussian_time_bandwidth();

/// FWHM coherence time of a Gaussian spectrum, in femtoseconds.
double coherence_time_fs(const FilterSpec& filter);

/// Coherence time expressed as a path length, micrometres.
double coherence_length_um(const FilterSpec& filter);

/// Gaussian mode overlap exp(-delay^2 / (2 sigma^2)) for a path-length
/// mismatch in micrometres; sigma = c * coherence_time / sqrt(2 ln 2).
double overlap_from_delay(double delay_um, const FilterSpec& filter);

/// FWHM, in micrometres, of the squared overlap versus delay (the HOM dip
/// profile).
double hom_dip_fwhm_um(const FilterSpec& filter);

/// Thermal fiber length change in millimetres.
double thermal_length_drift(const FiberSpec& fiber, double delta_T_K);

/// Linear path-difference ramp delay(t) = offset + rate * t.
class DriftSchedule {
 public:
  DriftSchedule(double rate_um_per_hour, double duration_h, double offset_um = 0.0);

  double rate() const { return rate_; }
  double duration() const { return duration_; }
  double delay_at(double t_h) const;
  double endpoint() const { return delay_at(duration_); }
  /// `points` evenly spaced samples from 0 to the duration, inclusive.
  std::vector<double> sample(int points) const;

 private:
  double rate_;
  double duration_;
  double offset_;
};

DriftSchedule drift_schedule(double rate_um_per_hour, double duration_h);

/// |dispersion| * length * bandwidth in picoseconds.
double dispersed_length(const FiberSpec& fiber, const FilterSpec& filter);

}  // namespace relaysim
