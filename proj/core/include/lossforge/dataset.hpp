#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "lossforge/metrics.hpp"
#include "lossforge/random.hpp"

namespace lossforge {

/// Synthetic 2-D Gaussian mixture with equally weighted modes.
///   ring: `modes` centers at radius `scale`, center i at angle 2*pi*i/modes
///   grid: modes x modes centers spaced `scale` apart, centered on the origin
struct DatasetSpec {
  enum class Kind { Ring, Grid };

  Kind kind = Kind::Ring;
  int modes = 8;
  double scale = 2.0;
  double sigma = 0.02;
  /// Size of the fixed training set drawn at the start of a run.
  std::size_t n_samples = 10000;

  static DatasetSpec ring(int k, double radius, double sigma, std::size_t n = 10000) {
    return {Kind::Ring, k, radius, sigma, n};
  }
  static DatasetSpec grid(int k, double spacing, double sigma, std::size_t n = 10000) {
    return {Kind::Grid, k, spacing, sigma, n};
  }

  void validate() const;
};

std::vector<Point> mode_centers(const DatasetSpec& spec);

/// Each point picks a mode uniformly and adds N(0, sigma^2 I) noise.
std::vector<Point> sample_dataset(const DatasetSpec& spec, std::size_t n, Rng& rng);

std::string to_string(const DatasetSpec& spec);
/// Inverse of to_string: "ring:8:2:0.02" or "grid:5:1.5:0.05", optionally
/// followed by ":<n_samples>". Throws std::invalid_argument.
DatasetSpec parse_dataset_spec(const std::string& text);

}  // namespace lossforge
