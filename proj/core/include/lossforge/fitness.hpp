#pragma once

#include <span>
#include <vector>

namespace lossforge {

/// Dominates any real Frechet distance; marks degenerate candidates.
inline constexpr double kWorstFitness = 1e18;

struct RunOutcome {
  double fd = 0.0;
  double disc_accuracy = 0.0;
  bool degenerate = false;
};

/// Mean and population standard deviation of the final Frechet distance over
/// repeated trainings. scalar = mean_fd + lambda * std_fd, or kWorstFitness
/// if any run was degenerate.
struct FitnessRecord {
  double mean_fd = 0.0;
  double std_fd = 0.0;
  std::vector<RunOutcome> per_run;
  double scalar = kWorstFitness;

  bool degenerate() const { return scalar >= kWorstFitness; }
};

/// Aggregates run outcomes. Moments are taken over the non-degenerate runs.
FitnessRecord make_fitness_record(std::span<const RunOutcome> runs, double std_weight = 1.0);

/// A record carrying only a scalar, for evaluators that are not GAN based.
FitnessRecord scalar_fitness(double value);

}  // namespace lossforge
