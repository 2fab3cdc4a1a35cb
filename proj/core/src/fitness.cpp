#include "lossforge/fitness.hpp"

#include <cmath>

namespace lossforge {

FitnessRecord make_fitness_record(std::span<const RunOutcome> runs, double std_weight) {
  FitnessRecord rec;
  rec.per_run.assign(runs.begin(), runs.end());
  double sum = 0.0;
  int finite = 0;
  bool degenerate = runs.empty();
  for (const auto& r : runs) {
    if (r.degenerate || !std::isfinite(r.fd)) {
      degenerate = true;
      continue;
    }
    sum += r.fd;
    ++finite;
  }
  if (finite > 0) {
    rec.mean_fd = sum / finite;
    double sq = 0.0;
    for (const auto& r : runs) {
      if (r.degenerate || !std::isfinite(r.fd)) continue;
      sq += (r.fd - rec.mean_fd) * (r.fd - rec.mean_fd);
    }
    rec.std_fd = std::sqrt(sq / finite);
  }
  rec.scalar = degenerate ? kWorstFitness : rec.mean_fd + std_weight * rec.std_fd;
  if (!std::isfinite(rec.scalar) || rec.scalar > kWorstFitness) rec.scalar = kWorstFitness;
  return rec;
}

FitnessRecord scalar_fitness(double value) {
  FitnessRecord rec;
  const bool ok = std::isfinite(value) && value < kWorstFitness;
  rec.mean_fd = ok ? value : 0.0;
  rec.scalar = ok ? value : kWorstFitness;
  rec.per_run.push_back({rec.mean_fd, 0.0, !ok});
  return rec;
}

}  // namespace lossforge
