#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lossforge/dataset.hpp"
#include "lossforge/fitness.hpp"
#include "lossforge/losses.hpp"
#include "lossforge/network.hpp"

namespace lossforge {

/// Which network trains with the candidate loss; the other one uses BCE.
enum class LossTarget { Both, Generator, Discriminator };

std::string to_string(LossTarget target);
/// Accepts both|gen|generator|disc|discriminator. Throws std::invalid_argument.
LossTarget parse_loss_target(const std::string& text);

struct GanConfig {
  int latent_dim = 2;
  std::vector<int> gen_layers{2, 32, 32, 2};
  std::vector<int> disc_layers{2, 32, 32, 1};
  double leaky_slope = 0.2;
  double lr = 2e-4;
  double beta1 = 0.5;
  double beta2 = 0.999;
  int batch_size = 128;
  int steps = 4000;
  int eval_interval = 200;
  int eval_samples = 1024;
  DatasetSpec dataset{};
  LossTarget loss_on = LossTarget::Both;
  std::uint64_t seed = 0;

  /// Throws std::invalid_argument on the first broken invariant.
  void validate() const;
};

struct EvalPoint {
  int step = 0;
  double fd = 0.0;
  double disc_accuracy = 0.0;
};

struct TrainedGan {
  Mlp generator;
  Mlp discriminator;
  std::vector<EvalPoint> history;
  /// Generated and reference points of the last evaluation.
  std::vector<Point> generated;
  std::vector<Point> reference;
  bool degenerate = false;
  int steps_completed = 0;

  double final_fd() const { return history.back().fd; }
  double final_disc_accuracy() const { return history.back().disc_accuracy; }
  RunOutcome outcome() const;
};

/// Alternating training: one discriminator step on
///   mean L(1, D(x_real)) + mean L(0, D(G(z)))
/// followed by one generator step on mean L(1, D(G(z))) (or the loss's
/// generator override). Losses with expects_bounded_pred read sigmoid(D);
/// the others read the raw score. A non-finite loss or gradient stops the
/// run and marks it degenerate. Deterministic in config.seed.
TrainedGan train_gan(const GanConfig& config, const LossFunction& loss);
/// Validates the tree (both variables present) before training; throws
/// InvalidTree otherwise.
TrainedGan train_gan(const GanConfig& config, const ExprTree& loss);

/// Generator samples for latent draws from `rng`.
std::vector<Point> generate(const Mlp& generator, std::size_t n, Rng& rng);

/// Trains `runs` GANs with seeds base_seed + 0 .. runs - 1 and aggregates
/// their final Frechet distances and discriminator accuracies.
FitnessRecord evaluate_fitness(const LossFunction& loss, const GanConfig& config, int runs,
                               std::uint64_t base_seed, double std_weight = 1.0,
                               int threads = 1);

/// The individual trainings behind evaluate_fitness (same seeds), for
/// callers that need more than the aggregate.
std::vector<TrainedGan> train_runs(const LossFunction& loss, const GanConfig& config, int runs,
                                   std::uint64_t base_seed, int threads = 1);

}  // namespace lossforge
