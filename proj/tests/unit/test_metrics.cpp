#include <gtest/gtest.h>

#include <cmath>

#include "lossforge/dataset.hpp"
#include "lossforge/metrics.hpp"
#include "oracles.hpp"

namespace lossforge {
namespace {

std::vector<Point> gaussian(std::size_t n, double mx, double my, double sx, double sy, Rng& rng) {
  std::normal_distribution<double> nx(mx, sx), ny(my, sy);
  std::vector<Point> out(n);
  for (auto& p : out) p = {nx(rng), ny(rng)};
  return out;
}

TEST(Frechet, IdenticalSetsGiveZero) {
  Rng rng(1);
  const auto a = gaussian(500, 0.3, -1.0, 1.0, 0.5, rng);
  EXPECT_NEAR(frechet_distance(a, a), 0.0, 1e-9);
}

TEST(Frechet, InjectedMoments) {
  const GaussianFit unit0{{0.0, 0.0}, {1.0, 0.0, 1.0}};
  const GaussianFit unit3{{3.0, 0.0}, {1.0, 0.0, 1.0}};
  EXPECT_DOUBLE_EQ(frechet_distance(unit0, unit3), 9.0);
  const GaussianFit four{{0.0, 0.0}, {4.0, 0.0, 4.0}};
  EXPECT_NEAR(frechet_distance(four, unit0), 2.0, 1e-12);
}

TEST(Frechet, MatchesEigenOracleOnRandomMoments) {
  Rng rng(5);
  for (int i = 0; i < 200; ++i) {
    auto rand_cov = [&] {
      Eigen::Matrix2d a = Eigen::Matrix2d::Random();
      const double u = uniform_real(rng, -1, 1);
      a(0, 0) += u;
      return Eigen::Matrix2d(a * a.transpose() + 0.01 * Eigen::Matrix2d::Identity());
    };
    const Eigen::Matrix2d s1 = rand_cov();
    const Eigen::Matrix2d s2 = rand_cov();
    const Eigen::Vector2d m1(uniform_real(rng, -2, 2), uniform_real(rng, -2, 2));
    const Eigen::Vector2d m2(uniform_real(rng, -2, 2), uniform_real(rng, -2, 2));
    const GaussianFit a{{m1(0), m1(1)}, {s1(0, 0), s1(0, 1), s1(1, 1)}};
    const GaussianFit b{{m2(0), m2(1)}, {s2(0, 0), s2(0, 1), s2(1, 1)}};
    const double want = oracle::frechet(m1, s1, m2, s2);
    EXPECT_NEAR(frechet_distance(a, b), want, 1e-9 * std::max(1.0, want));
  }
}

TEST(Frechet, SampledOffsetThree) {
  Rng rng(42);
  const auto a = gaussian(100000, 0.0, 0.0, 1.0, 1.0, rng);
  const auto b = gaussian(100000, 3.0, 0.0, 1.0, 1.0, rng);
  EXPECT_NEAR(frechet_distance(a, b), 9.0, 0.15);
}

TEST(Frechet, SymmetricAndTranslationConsistent) {
  Rng rng(7);
  const auto a = gaussian(300, 0.0, 1.0, 2.0, 0.5, rng);
  const auto b = gaussian(300, 1.0, -1.0, 0.7, 1.3, rng);
  EXPECT_NEAR(frechet_distance(a, b), frechet_distance(b, a), 1e-12);
  auto shift = [](std::vector<Point> v) {
    for (auto& p : v) p = {p[0] + 5.0, p[1] - 2.0};
    return v;
  };
  EXPECT_NEAR(frechet_distance(shift(a), shift(b)), frechet_distance(a, b), 1e-9);
  EXPECT_GE(frechet_distance(a, b), 0.0);
}

TEST(Frechet, OffsetScalesQuadratically) {
  const GaussianFit base{{0.0, 0.0}, {0.5, 0.1, 0.8}};
  for (const double c : {0.5, 2.0, 7.0}) {
    const GaussianFit one{{1.0, 2.0}, {0.5, 0.1, 0.8}};
    const GaussianFit scaled{{c * 1.0, c * 2.0}, {0.5, 0.1, 0.8}};
    EXPECT_NEAR(frechet_distance(base, scaled), c * c * frechet_distance(base, one), 1e-9);
  }
}

TEST(Frechet, InsufficientSamples) {
  const std::vector<Point> two{{0, 0}, {1, 1}};
  const std::vector<Point> three{{0, 0}, {1, 1}, {2, 0}};
  try {
    frechet_distance(two, three);
    FAIL();
  } catch (const std::invalid_argument& e) {
    EXPECT_STREQ(e.what(), "insufficient samples");
  }
}

TEST(Frechet, UnbiasedCovariance) {
  const std::vector<Point> pts{{0, 0}, {2, 0}, {0, 2}, {2, 2}};
  const auto fit = fit_gaussian(pts);
  EXPECT_DOUBLE_EQ(fit.mean[0], 1.0);
  EXPECT_DOUBLE_EQ(fit.cov[0], 4.0 / 3.0);
  EXPECT_DOUBLE_EQ(fit.cov[1], 0.0);
  EXPECT_DOUBLE_EQ(fit.cov[2], 4.0 / 3.0);
}

TEST(Coverage, Examples) {
  const auto spec = DatasetSpec::ring(8, 2.0, 0.02);
  const auto centers = mode_centers(spec);
  EXPECT_EQ(mode_coverage(centers, spec).covered, 8);
  EXPECT_EQ(mode_coverage(centers, spec).total, 8);
  const std::vector<Point> one{centers[3]};
  EXPECT_EQ(mode_coverage(one, spec).covered, 1);
  EXPECT_EQ(mode_coverage(std::vector<Point>{}, spec).covered, 0);
  const std::vector<Point> edge{{centers[0][0] + 0.059, centers[0][1]}, {centers[1][0] + 0.061, centers[1][1]}};
  EXPECT_EQ(mode_coverage(edge, spec).covered, 1);
}

TEST(Accuracy, Examples) {
  const std::vector<double> ones(4, 1.0), zeros(4, 0.0), halves(4, 0.5);
  EXPECT_DOUBLE_EQ(discriminator_accuracy(ones, zeros), 1.0);
  EXPECT_DOUBLE_EQ(discriminator_accuracy(zeros, ones), 0.0);
  EXPECT_DOUBLE_EQ(discriminator_accuracy(halves, halves), 0.5);
  EXPECT_THROW(discriminator_accuracy(std::vector<double>{}, ones), std::invalid_argument);
  EXPECT_THROW(discriminator_accuracy(ones, std::vector<double>{}), std::invalid_argument);
}

}  // namespace
}  // namespace lossforge
