#pragma once

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "lossforge/expr.hpp"
#include "lossforge/fitness.hpp"
#include "lossforge/random.hpp"

namespace lossforge {

class Individual {
 public:
  explicit Individual(ExprTree tree, int birth_generation = 0)
      : tree_(std::move(tree)), birth_generation_(birth_generation) {}

  const ExprTree& tree() const noexcept { return tree_; }
  const std::optional<FitnessRecord>& fitness() const noexcept { return fitness_; }
  int birth_generation() const noexcept { return birth_generation_; }
  /// The scalar fitness, or kWorstFitness before evaluation.
  double scalar() const noexcept { return fitness_ ? fitness_->scalar : kWorstFitness; }

  /// A copy carrying `record`; the original stays unevaluated or keeps its
  /// own record.
  Individual evaluated(FitnessRecord record) const {
    Individual out = *this;
    out.fitness_ = std::move(record);
    return out;
  }

 private:
  ExprTree tree_;
  std::optional<FitnessRecord> fitness_;
  int birth_generation_ = 0;
};

enum class Selection { Tournament, BestN };

struct GpConfig {
  int n = 10;
  int generations = 50;
  double crossover_rate = 0.7;
  double subtree_mutation_rate = 0.3;
  double node_mutation_rate = 0.0;
  double archive_admission = 0.0;
  double archive_crossover = 0.0;
  Selection selection = Selection::Tournament;
  int tournament_size = 3;
  GenConstraints constraints{};
  int fitness_runs = 5;
  /// Weight of the standard deviation in the scalar fitness.
  double std_weight = 1.0;
  std::uint64_t seed = 0;

  /// Archive capacity equals the population size.
  int archive_capacity() const { return n; }
  void validate() const;

  /// Preset configurations 1..8 of the reference search study. Throws
  /// std::out_of_range for any other id.
  static GpConfig preset(int id);
};

/// Bounded pool of individuals that lost selection, reused as crossover
/// donors.
struct Archive {
  std::size_t capacity = 10;
  double admission_prob = 0.0;
  double usage_prob = 0.0;
  std::vector<Individual> members;
};

// Operators. Each takes the generation number stamped on new individuals.

/// Swaps uniformly chosen subtrees. An oversized child is replaced by a copy
/// of the parent it grew from; a child missing a variable gets leaf repair
/// (and falls back to its parent if repair has no room).
std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b,
                                            const GenConstraints& constraints, Rng& rng,
                                            int generation);
std::pair<Individual, Individual> crossover_at(const Individual& a, std::size_t at_a,
                                               const Individual& b, std::size_t at_b,
                                               const GenConstraints& constraints, Rng& rng,
                                               int generation);

/// Replaces a uniformly chosen subtree with a grown random tree of height
/// at most constraints.mutation_subtree_height. Oversized results are
/// redrawn up to 10 times, after which the individual is returned as is.
Individual mutate_subtree(const Individual& ind, const GenConstraints& constraints, Rng& rng,
                          int generation);
/// Replaces a uniformly chosen node by a different random node of the same
/// arity, then repairs the both-variables rule.
Individual mutate_node(const Individual& ind, const GenConstraints& constraints, Rng& rng,
                       int generation);
Individual mutate_node_at(const Individual& ind, std::size_t at, const GenConstraints& constraints,
                          Rng& rng, int generation);

/// Strict ordering used by every selection: lower scalar, then smaller
/// tree, then earlier birth generation (input order breaks what remains).
bool fitter(const Individual& a, const Individual& b) noexcept;

/// Indices into `pool` of the n survivors. Tournament picks may repeat an
/// index; best-n returns n distinct indices in rank order.
std::vector<std::size_t> select_indices(std::span<const Individual> pool, const GpConfig& config,
                                        Rng& rng);
std::vector<Individual> select(std::span<const Individual> pool, const GpConfig& config, Rng& rng);

/// Admits each loser with probability admission_prob; a full archive
/// replaces a uniformly chosen member.
Archive archive_step(std::span<const Individual> losers, Archive archive, Rng& rng);

using Evaluator = std::function<FitnessRecord(const ExprTree&)>;

struct GenerationRecord {
  int generation = 0;
  double best_scalar = kWorstFitness;
  double mean_scalar = kWorstFitness;
  double best_ever_scalar = kWorstFitness;
  std::string best_expr;
  std::size_t archive_size = 0;
  std::size_t evaluations = 0;
};

/// Everything needed to continue a run after `generation`.
struct GpState {
  int generation = 0;
  std::vector<Individual> population;
  Archive archive;
  std::optional<Individual> best_ever;
  std::vector<GenerationRecord> history;
  /// Text form of the engine state (operator<< of Rng).
  std::string rng_state;
  /// Fitness by serialized tree; each distinct tree is evaluated once.
  std::map<std::string, FitnessRecord> cache;
  std::size_t evaluations = 0;
};

struct SearchResult {
  Individual best;
  std::vector<GenerationRecord> history;
  std::size_t evaluations = 0;
  GpState final_state;
};

struct RunHooks {
  /// Called after every generation with the state a resume would need.
  std::function<void(const GenerationRecord&, const GpState&)> on_generation;
  /// Worker count for fitness evaluation; <= 0 uses configured_threads().
  int threads = 0;
  /// Continue from this state instead of initializing.
  const GpState* resume = nullptr;
};

/// Initialization followed by config.generations rounds of pairing and
/// crossover, mutation, evaluation, selection over parents + offspring and
/// archive admission of the losers. Evaluator exceptions and non-finite
/// results give the worst fitness. Reproducible from config.seed.
SearchResult run_gp(const GpConfig& config, const Evaluator& evaluator, const RunHooks& hooks = {});

/// Mean squared deviation of the tree from `target` over a grid of
/// `grid_points` y_pred values in [0, 1] for each label y_real in {0, 1}.
Evaluator grid_proxy_evaluator(const ExprTree& target, int grid_points = 21, double eps = 1e-8);

// Persistence.

std::string to_json_line(const GenerationRecord& record);
std::string checkpoint_to_json(const GpState& state);
/// Throws std::invalid_argument on malformed input.
GpState checkpoint_from_json(const std::string& text);
std::string fitness_to_json(const FitnessRecord& record);

}  // namespace lossforge
