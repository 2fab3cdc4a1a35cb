#include "lossforge/dataset.hpp"

#include "lossforge/format.hpp"

#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace lossforge {

namespace {

// Exact values at quarter turns so axis-aligned modes carry no rounding.
Point unit_direction(int i, int k) {
  if ((4 * i) % k == 0) {
    switch (((4 * i) / k) % 4) {
      case 0: return {1.0, 0.0};
      case 1: return {0.0, 1.0};
      case 2: return {-1.0, 0.0};
      default: return {0.0, -1.0};
    }
  }
  const double angle = 2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(k);
  return {std::cos(angle), std::sin(angle)};
}

}  // namespace

void DatasetSpec::validate() const {
  if (modes < 1) throw std::invalid_argument("dataset needs at least one mode");
  if (!(scale > 0.0)) throw std::invalid_argument("dataset scale must be > 0");
  if (!(sigma >= 0.0)) throw std::invalid_argument("dataset sigma must be >= 0");
  if (n_samples < 1) throw std::invalid_argument("dataset n_samples must be >= 1");
}

std::vector<Point> mode_centers(const DatasetSpec& spec) {
  std::vector<Point> centers;
  if (spec.kind == DatasetSpec::Kind::Ring) {
    centers.reserve(static_cast<std::size_t>(spec.modes));
    for (int i = 0; i < spec.modes; ++i) {
      const auto [c, s] = unit_direction(i, spec.modes);
      centers.push_back({spec.scale * c, spec.scale * s});
    }
  } else {
    const double offset = (spec.modes - 1) / 2.0;
    for (int i = 0; i < spec.modes; ++i) {
      for (int j = 0; j < spec.modes; ++j) {
        centers.push_back({(i - offset) * spec.scale, (j - offset) * spec.scale});
      }
    }
  }
  return centers;
}

std::vector<Point> sample_dataset(const DatasetSpec& spec, std::size_t n, Rng& rng) {
  spec.validate();
  const auto centers = mode_centers(spec);
  std::normal_distribution<double> noise(0.0, 1.0);
  std::vector<Point> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& c = centers[uniform_index(rng, centers.size())];
    const double nx = noise(rng);
    const double ny = noise(rng);
    out.push_back({c[0] + spec.sigma * nx, c[1] + spec.sigma * ny});
  }
  return out;
}

std::string to_string(const DatasetSpec& spec) {
  return std::string(spec.kind == DatasetSpec::Kind::Ring ? "ring" : "grid") + ':' +
         std::to_string(spec.modes) + ':' + format_shortest(spec.scale) + ':' +
         format_shortest(spec.sigma) + ':' + std::to_string(spec.n_samples);
}

DatasetSpec parse_dataset_spec(const std::string& text) {
  std::vector<std::string> parts;
  std::stringstream ss(text);
  for (std::string part; std::getline(ss, part, ':');) parts.push_back(part);
  if (parts.size() != 4 && parts.size() != 5) {
    throw std::invalid_argument("dataset must look like ring:K:RADIUS:SIGMA[:N], got '" + text + "'");
  }
  DatasetSpec spec;
  if (parts[0] == "ring") {
    spec.kind = DatasetSpec::Kind::Ring;
  } else if (parts[0] == "grid") {
    spec.kind = DatasetSpec::Kind::Grid;
  } else {
    throw std::invalid_argument("unknown dataset kind '" + parts[0] + "'");
  }
  try {
    spec.modes = std::stoi(parts[1]);
    spec.scale = std::stod(parts[2]);
    spec.sigma = std::stod(parts[3]);
    if (parts.size() == 5) spec.n_samples = std::stoul(parts[4]);
  } catch (const std::logic_error&) {
    throw std::invalid_argument("malformed dataset spec '" + text + "'");
  }
  spec.validate();
  return spec;
}

}  // namespace lossforge
