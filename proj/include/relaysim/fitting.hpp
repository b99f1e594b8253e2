#pragma once

// Weighted least-squares fits for fringes and dips.

#include <Eigen/Dense>

#include <stdexcept>
#include <vector>

namespace relaysim {

struct DataPoint {
  double x = 0.0;
  double y = 0.0;
  /// Standard error of y; non-positive errors switch the whole fit to unit
  /// weights with the residual variance as noise estimate.
  double sigma = 0.0;
};

class FitError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// y = c (1 + V cos(x + x0)), solved linearly in (c, c V cos x0, -c V sin x0).
struct SinusoidFit {
  double offset = 0.0;
  double amplitude = 0.0;
  double phase = 0.0;
  double visibility = 0.0;
  double visibility_error = 0.0;
  /// Covariance of (offset, cosine coefficient, sine coefficient).
  Eigen::Matrix3d covariance = Eigen::Matrix3d::Zero();
};

/// Needs at least four points spanning at least half a period. Throws
/// FitError on a singular design matrix.
SinusoidFit fit_sinusoid(const std::vector<DataPoint>& points);

/// y = b (1 - V exp(-(x - x0)^2 / (2 w^2))).
struct DipFit {
  double baseline = 0.0;
  double depth = 0.0;
  double center = 0.0;
  double width = 0.0;
  double visibility = 0.0;
  double visibility_error = 0.0;
  double fwhm = 0.0;
};

/// Needs at least five points with the minimum strictly inside the x range.
DipFit fit_gaussian_dip(const std::vector<DataPoint>& points);

/// Fidelity (1 + V) / 2 of an equatorial state from a fringe visibility.
inline double equator_fidelity(double visibility) { return 0.5 * (1.0 + visibility); }

}  // namespace relaysim
