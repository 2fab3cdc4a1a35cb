#include "lossforge/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "lossforge/dataset.hpp"

namespace lossforge {

namespace {

constexpr double kPsdTolerance = 1e-9;

}  // namespace

GaussianFit fit_gaussian(std::span<const Point> points) {
  if (points.size() < 3) throw std::invalid_argument("insufficient samples");
  const double n = static_cast<double>(points.size());
  GaussianFit fit;
  for (const auto& p : points) {
    fit.mean[0] += p[0];
    fit.mean[1] += p[1];
  }
  fit.mean[0] /= n;
  fit.mean[1] /= n;
  double sxx = 0.0;
  double sxy = 0.0;
  double syy = 0.0;
  for (const auto& p : points) {
    const double dx = p[0] - fit.mean[0];
    const double dy = p[1] - fit.mean[1];
    sxx += dx * dx;
    sxy += dx * dy;
    syy += dy * dy;
  }
  fit.cov = {sxx / (n - 1.0), sxy / (n - 1.0), syy / (n - 1.0)};
  return fit;
}

double frechet_distance(const GaussianFit& a, const GaussianFit& b) {
  const double dx = a.mean[0] - b.mean[0];
  const double dy = a.mean[1] - b.mean[1];
  const auto& s = a.cov;
  const auto& t = b.cov;
  // M = S T for symmetric S = [[s0, s1], [s1, s2]] and T likewise.
  const double m00 = s[0] * t[0] + s[1] * t[1];
  const double m11 = s[1] * t[1] + s[2] * t[2];
  const double trace_m = m00 + m11;
  const double det_s = s[0] * s[2] - s[1] * s[1];
  const double det_t = t[0] * t[2] - t[1] * t[1];
  double det_m = det_s * det_t;
  if (det_m < 0.0) det_m = 0.0;
  const double root_arg = trace_m + 2.0 * std::sqrt(det_m);
  const double trace_sqrt = root_arg > 0.0 ? std::sqrt(root_arg) : 0.0;
  const double result = dx * dx + dy * dy + (s[0] + s[2]) + (t[0] + t[2]) - 2.0 * trace_sqrt;
  if (result < 0.0 && result > -kPsdTolerance) return 0.0;
  return std::max(result, 0.0);
}

double frechet_distance(std::span<const Point> a, std::span<const Point> b) {
  return frechet_distance(fit_gaussian(a), fit_gaussian(b));
}

Coverage mode_coverage(std::span<const Point> generated, const DatasetSpec& spec,
                       double radius_mult) {
  const auto centers = mode_centers(spec);
  const double radius = radius_mult * spec.sigma;
  const double r2 = radius * radius;
  Coverage c{0, static_cast<int>(centers.size())};
  for (const auto& center : centers) {
    const bool hit = std::any_of(generated.begin(), generated.end(), [&](const Point& p) {
      const double dx = p[0] - center[0];
      const double dy = p[1] - center[1];
      return dx * dx + dy * dy <= r2;
    });
    if (hit) ++c.covered;
  }
  return c;
}

double discriminator_accuracy(std::span<const double> scores_real,
                              std::span<const double> scores_fake) {
  if (scores_real.empty() || scores_fake.empty()) {
    throw std::invalid_argument("discriminator accuracy needs real and fake scores");
  }
  const auto correct_real = std::count_if(scores_real.begin(), scores_real.end(),
                                          [](double s) { return s > 0.5; });
  const auto correct_fake = std::count_if(scores_fake.begin(), scores_fake.end(),
                                          [](double s) { return s <= 0.5; });
  return static_cast<double>(correct_real + correct_fake) /
         static_cast<double>(scores_real.size() + scores_fake.size());
}

}  // namespace lossforge
