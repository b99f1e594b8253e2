#include "relaysim/channels.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace relaysim {

void validate(const FiberSpec& fiber) {
  if (!(fiber.length_km >= 0.0)) throw std::invalid_argument("fiber length must be >= 0");
  if (!(fiber.attenuation_db_per_km >= 0.0)) {
    throw std::invalid_argument("fiber attenuation must be >= 0");
  }
  if (!std::isfinite(fiber.dispersion_ps_per_nm_km) ||
      !std::isfinite(fiber.thermal_coeff_mm_per_K_per_km)) {
    throw std::invalid_argument("fiber coefficients must be finite");
  }
}

void validate(const FilterSpec& filter) {
  if (!(filter.center_wavelength_nm > 0.0) || !(filter.bandwidth_fwhm_nm > 0.0)) {
    throw std::invalid_argument("filter center and bandwidth must be positive");
  }
}

double survival_probability(const FiberSpec& fiber) {
  validate(fiber);
  return std::pow(10.0, -fiber.attenuation_db_per_km * fiber.length_km / 10.0);
}

double gaussian_time_bandwidth() { return 2.0 * std::numbers::ln2 / std::numbers::pi; }

double coherence_time_fs(const FilterSpec& filter) {
  validate(filter);
  const double lambda_um = filter.center_wavelength_nm * 1e-3;
  const double dlambda_um = filter.bandwidth_fwhm_nm * 1e-3;
  return gaussian_time_bandwidth() * lambda_um * lambda_um / (kSpeedOfLightUmPerFs * dlambda_um);
}

double coherence_length_um(const FilterSpec& filter) {
  return kSpeedOfLightUmPerFs * coherence_time_fs(filter);
}

namespace {

double overlap_sigma_um(const FilterSpec& filter) {
  return coherence_length_um(filter) / std::sqrt(2.0 * std::numbers::ln2);
}

}  // namespace

double overlap_from_delay(double delay_um, const FilterSpec& filter) {
  const double sigma = overlap_sigma_um(filter);
  return std::exp(-delay_um * delay_um / (2.0 * sigma * sigma));
}

double hom_dip_fwhm_um(const FilterSpec& filter) {
  // overlap^2 = exp(-delay^2 / sigma^2)
  return 2.0 * overlap_sigma_um(filter) * std::sqrt(std::numbers::ln2);
}

double thermal_length_drift(const FiberSpec& fiber, double delta_T_K) {
  validate(fiber);
  return fiber.thermal_coeff_mm_per_K_per_km * fiber.length_km * delta_T_K;
}

DriftSchedule::DriftSchedule(double rate_um_per_hour, double duration_h, double offset_um)
    : rate_(rate_um_per_hour), duration_(duration_h), offset_(offset_um) {
  if (!(rate_ >= 0.0) || !(duration_ >= 0.0)) {
    throw std::invalid_argument("drift rate and duration must be >= 0");
  }
}

double DriftSchedule::delay_at(double t_h) const { return offset_ + rate_ * t_h; }

std::vector<double> DriftSchedule::sample(int points) const {
  if (points < 2) throw std::invalid_argument("drift schedule needs at least two samples");
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(points));
  for (int k = 0; k < points; ++k) out.push_back(delay_at(duration_ * k / (points - 1)));
  return out;
}

DriftSchedule drift_schedule(double rate_um_per_hour, double duration_h) {
  return DriftSchedule(rate_um_per_hour, duration_h);
}

double dispersed_length(const FiberSpec& fiber, const FilterSpec& filter) {
  validate(fiber);
  validate(filter);
  return std::abs(fiber.dispersion_ps_per_nm_km) * fiber.length_km * filter.bandwidth_fwhm_nm;
}

}  // namespace relaysim
