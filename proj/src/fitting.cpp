#include "relaysim/fitting.hpp"

#include <unsupported/Eigen/LevenbergMarquardt>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace relaysim {

namespace {

bool unit_weights(const std::vector<DataPoint>& points) {
  return std::any_of(points.begin(), points.end(), [](const DataPoint& p) { return !(p.sigma > 0.0); });
}

Eigen::VectorXd weights_of(const std::vector<DataPoint>& points) {
  Eigen::VectorXd w(static_cast<Eigen::Index>(points.size()));
  const bool unit = unit_weights(points);
  for (std::size_t i = 0; i < points.size(); ++i) {
    w(static_cast<Eigen::Index>(i)) = unit ? 1.0 : 1.0 / points[i].sigma;
  }
  return w;
}

struct DipResidual : Eigen::DenseFunctor<double> {
  DipResidual(const std::vector<DataPoint>& pts, const Eigen::VectorXd& w)
      : Eigen::DenseFunctor<double>(4, static_cast<int>(pts.size())), points(pts), weights(w) {}

  int operator()(const InputType& p, ValueType& f) const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d = points[i].x - p(2);
      const double g = std::exp(-d * d / (2 * p(3) * p(3)));
      const auto k = static_cast<Eigen::Index>(i);
      f(k) = weights(k) * (p(0) * (1.0 - p(1) * g) - points[i].y);
    }
    return 0;
  }

  int df(const InputType& p, JacobianType& j) const {
    for (std::size_t i = 0; i < points.size(); ++i) {
      const double d = points[i].x - p(2);
      const double w2 = p(3) * p(3);
      const double g = std::exp(-d * d / (2 * w2));
      const auto k = static_cast<Eigen::Index>(i);
      j(k, 0) = weights(k) * (1.0 - p(1) * g);
      j(k, 1) = weights(k) * (-p(0) * g);
      j(k, 2) = weights(k) * (-p(0) * p(1) * g * d / w2);
      j(k, 3) = weights(k) * (-p(0) * p(1) * g * d * d / (w2 * p(3)));
    }
    return 0;
  }

  const std::vector<DataPoint>& points;
  Eigen::VectorXd weights;
};

}  // namespace

SinusoidFit fit_sinusoid(const std::vector<DataPoint>& points) {
  if (points.size() < 4) throw FitError("sinusoid fit needs at least four points");
  const auto [lo, hi] = std::minmax_element(points.begin(), points.end(),
                                            [](const DataPoint& a, const DataPoint& b) { return a.x < b.x; });
  if (hi->x - lo->x < std::numbers::pi - 1e-12) {
    throw FitError("sinusoid fit needs points spanning at least half a period");
  }

  const auto n = static_cast<Eigen::Index>(points.size());
  const Eigen::VectorXd w = weights_of(points);
  Eigen::MatrixXd a(n, 3);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& p = points[static_cast<std::size_t>(i)];
    a.row(i) << w(i), w(i) * std::cos(p.x), w(i) * std::sin(p.x);
    y(i) = w(i) * p.y;
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < 3) throw FitError("singular design matrix in sinusoid fit");
  const Eigen::Vector3d beta = qr.solve(y);

  Eigen::Matrix3d cov = (a.transpose() * a).inverse();
  if (unit_weights(points)) {
    const double dof = static_cast<double>(n - 3);
    const double rss = (a * beta - y).squaredNorm();
    cov *= dof > 0 ? rss / dof : 0.0;
  }

  SinusoidFit fit;
  fit.offset = beta(0);
  if (fit.offset == 0.0) throw FitError("sinusoid fit with zero offset");
  const double r = std::hypot(beta(1), beta(2));
  fit.amplitude = r;
  fit.phase = std::atan2(-beta(2), beta(1));
  fit.visibility = r / fit.offset;
  fit.covariance = cov;

  Eigen::Vector3d grad;
  if (r > 0.0) {
    grad << -r / (fit.offset * fit.offset), beta(1) / (fit.offset * r), beta(2) / (fit.offset * r);
    fit.visibility_error = std::sqrt(std::max(0.0, grad.dot(cov * grad)));
  } else {
    fit.visibility_error = std::sqrt(std::max(0.0, cov(1, 1) + cov(2, 2))) / std::abs(fit.offset);
  }
  return fit;
}

DipFit fit_gaussian_dip(const std::vector<DataPoint>& input) {
  if (input.size() < 5) throw FitError("dip fit needs at least five points");
  auto points = input;
  std::sort(points.begin(), points.end(), [](const DataPoint& a, const DataPoint& b) { return a.x < b.x; });

  const auto [min_it, max_it] = std::minmax_element(
      points.begin(), points.end(), [](const DataPoint& a, const DataPoint& b) { return a.y < b.y; });
  const double ymin = min_it->y;
  const double ymax = max_it->y;

  DipFit fit;
  if (ymax - ymin <= 1e-12 * std::max(std::abs(ymax), 1e-300)) {
    double sum = 0.0;
    for (const auto& p : points) sum += p.y;
    fit.baseline = sum / static_cast<double>(points.size());
    fit.center = 0.5 * (points.front().x + points.back().x);
    return fit;
  }

  const auto imin = static_cast<std::size_t>(min_it - points.begin());
  if (imin == 0 || imin + 1 == points.size()) {
    throw FitError("dip fit data do not bracket the minimum");
  }

  // Initial guesses: edge baseline, depth at the minimum, width from the
  // half-depth crossing.
  const double b0 = 0.5 * (points.front().y + points.back().y);
  const double half = 0.5 * (b0 + ymin);
  double half_width = 0.25 * (points.back().x - points.front().x);
  for (std::size_t i = imin; i + 1 < points.size(); ++i) {
    if (points[i + 1].y >= half) {
      const double t = (half - points[i].y) / (points[i + 1].y - points[i].y);
      half_width = points[i].x + t * (points[i + 1].x - points[i].x) - points[imin].x;
      break;
    }
  }
  half_width = std::max(half_width, 1e-12 * (points.back().x - points.front().x));

  Eigen::VectorXd p(4);
  p << b0, 1.0 - ymin / b0, points[imin].x, half_width / std::sqrt(2 * std::numbers::ln2);

  const Eigen::VectorXd w = weights_of(points);
  DipResidual functor(points, w);
  Eigen::LevenbergMarquardt<DipResidual> lm(functor);
  lm.setXtol(1e-15);
  lm.setFtol(1e-15);
  lm.setMaxfev(4000);
  const auto status = lm.minimize(p);
  if (status == Eigen::LevenbergMarquardtSpace::ImproperInputParameters) {
    throw FitError("dip fit rejected its input");
  }

  fit.baseline = p(0);
  fit.visibility = p(1);
  fit.center = p(2);
  fit.width = std::abs(p(3));
  fit.depth = p(0) * p(1);
  fit.fwhm = 2.0 * std::sqrt(2.0 * std::numbers::ln2) * fit.width;

  Eigen::MatrixXd jac(static_cast<Eigen::Index>(points.size()), 4);
  functor.df(p, jac);
  const Eigen::Matrix4d jtj = jac.transpose() * jac;
  Eigen::FullPivLU<Eigen::Matrix4d> lu(jtj);
  if (lu.isInvertible()) {
    Eigen::Matrix4d cov = lu.inverse();
    if (unit_weights(points)) {
      Eigen::VectorXd f(static_cast<Eigen::Index>(points.size()));
      functor(p, f);
      const double dof = static_cast<double>(points.size()) - 4.0;
      cov *= dof > 0 ? f.squaredNorm() / dof : 0.0;
    }
    fit.visibility_error = std::sqrt(std::max(0.0, cov(1, 1)));
  }
  return fit;
}

}  // namespace relaysim
