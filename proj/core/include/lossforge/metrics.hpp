#pragma once

#include <array>
#include <span>
#include <vector>

namespace lossforge {

using Point = std::array<double, 2>;

struct DatasetSpec;

/// Mean and covariance of a 2-D sample. The covariance is stored as
/// {xx, xy, yy}.
struct GaussianFit {
  Point mean{0.0, 0.0};
  std::array<double, 3> cov{0.0, 0.0, 0.0};
};

/// Moment fit with the unbiased (n - 1) covariance. Throws
/// std::invalid_argument("insufficient samples") for fewer than 3 points.
GaussianFit fit_gaussian(std::span<const Point> points);

/// ||mu1 - mu2||^2 + Tr(S1 + S2 - 2 (S1 S2)^{1/2}), using the 2x2 identity
/// Tr(sqrt(M)) = sqrt(Tr M + 2 sqrt(det M)). Negative determinants and
/// results are clamped to zero.
double frechet_distance(const GaussianFit& a, const GaussianFit& b);
double frechet_distance(std::span<const Point> a, std::span<const Point> b);

struct Coverage {
  int covered = 0;
  int total = 0;
};

/// A mode is covered when some generated point lies within
/// radius_mult * sigma of its center.
Coverage mode_coverage(std::span<const Point> generated, const DatasetSpec& spec,
                       double radius_mult = 3.0);

/// Fraction of correct decisions at threshold 0.5: reals need s > 0.5,
/// fakes need s <= 0.5. Throws std::invalid_argument on empty input.
double discriminator_accuracy(std::span<const double> scores_real,
                              std::span<const double> scores_fake);

}  // namespace lossforge
