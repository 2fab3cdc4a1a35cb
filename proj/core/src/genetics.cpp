#include "lossforge/genetics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "lossforge/parallel.hpp"

namespace lossforge {

void GpConfig::validate() const {
  constraints.validate();
  auto rate = [](double r, const char* name) {
    if (!(r >= 0.0 && r <= 1.0)) throw std::invalid_argument(std::string(name) + " must lie in [0, 1]");
  };
  rate(crossover_rate, "crossover rate");
  rate(subtree_mutation_rate, "subtree mutation rate");
  rate(node_mutation_rate, "node mutation rate");
  rate(archive_admission, "archive admission probability");
  rate(archive_crossover, "archive crossover probability");
  if (n < 2) throw std::invalid_argument("population size must be >= 2");
  if (generations < 1) throw std::invalid_argument("generations must be >= 1");
  if (selection == Selection::Tournament && tournament_size < 1) {
    throw std::invalid_argument("tournament size must be >= 1");
  }
  if (fitness_runs < 1) throw std::invalid_argument("fitness_runs must be >= 1");
  if (!(std_weight >= 0.0)) throw std::invalid_argument("std_weight must be >= 0");
}

GpConfig GpConfig::preset(int id) {
  struct Row {
    double m_st, m_n, p_a, cr_a;
    Selection selection;
  };
  static constexpr Row rows[] = {
      {0.3, 0.0, 0.0, 0.0, Selection::Tournament}, {0.3, 0.0, 0.5, 0.5, Selection::Tournament},
      {0.3, 0.0, 0.0, 0.0, Selection::BestN},      {0.3, 0.0, 0.5, 0.5, Selection::BestN},
      {0.2, 0.1, 0.0, 0.0, Selection::Tournament}, {0.2, 0.1, 0.5, 0.5, Selection::Tournament},
      {0.2, 0.1, 0.0, 0.0, Selection::BestN},      {0.2, 0.1, 0.5, 0.5, Selection::BestN},
  };
  if (id < 1 || id > 8) {
    throw std::out_of_range("unknown GP configuration " + std::to_string(id) +
                            "; valid ids are 1-8");
  }
  const Row& r = rows[id - 1];
  GpConfig c;
  c.subtree_mutation_rate = r.m_st;
  c.node_mutation_rate = r.m_n;
  c.archive_admission = r.p_a;
  c.archive_crossover = r.cr_a;
  c.selection = r.selection;
  c.tournament_size = 3;
  return c;
}

// ---------------------------------------------------------------------------
// Variation operators

namespace {

/// Validity fix-up shared by all operators; nullopt means "fall back".
std::optional<ExprTree> finish(const ExprTree& tree, const GenConstraints& constraints, Rng& rng) {
  if (tree.size() > constraints.max_size) return std::nullopt;
  auto repaired = repair_variables(tree, constraints, rng);
  if (!repaired || repaired->size() > constraints.max_size) return std::nullopt;
  return repaired;
}

}  // namespace

std::pair<Individual, Individual> crossover_at(const Individual& a, std::size_t at_a,
                                               const Individual& b, std::size_t at_b,
                                               const GenConstraints& constraints, Rng& rng,
                                               int generation) {
  const ExprTree sub_a = a.tree().subtree(at_a);
  const ExprTree sub_b = b.tree().subtree(at_b);
  auto child_a = finish(a.tree().replace_subtree(at_a, sub_b), constraints, rng);
  auto child_b = finish(b.tree().replace_subtree(at_b, sub_a), constraints, rng);
  return {Individual(child_a ? *child_a : a.tree(), generation),
          Individual(child_b ? *child_b : b.tree(), generation)};
}

std::pair<Individual, Individual> crossover(const Individual& a, const Individual& b,
                                            const GenConstraints& constraints, Rng& rng,
                                            int generation) {
  const std::size_t at_a = uniform_index(rng, a.tree().size());
  const std::size_t at_b = uniform_index(rng, b.tree().size());
  return crossover_at(a, at_a, b, at_b, constraints, rng, generation);
}

Individual mutate_subtree(const Individual& ind, const GenConstraints& constraints, Rng& rng,
                          int generation) {
  constexpr int kAttempts = 10;
  for (int attempt = 0; attempt < kAttempts; ++attempt) {
    const std::size_t at = uniform_index(rng, ind.tree().size());
    const ExprTree fresh = grow_tree(1, constraints.mutation_subtree_height, constraints, rng);
    if (auto out = finish(ind.tree().replace_subtree(at, fresh), constraints, rng)) {
      return Individual(*std::move(out), generation);
    }
  }
  return Individual(ind.tree(), generation);
}

Individual mutate_node_at(const Individual& ind, std::size_t at, const GenConstraints& constraints,
                          Rng& rng, int generation) {
  const ExprTree& tree = ind.tree();
  const Node old = tree.node(at);
  std::vector<Node> nodes(tree.nodes().begin(), tree.nodes().end());
  const int a = arity(old.op);
  if (a == 0) {
    Node fresh = random_terminal(constraints, rng);
    // A variable must become something else; a constant gets a new value.
    for (int tries = 0; tries < 16 && fresh.op == old.op && old.op != Op::Const; ++tries) {
      fresh = random_terminal(constraints, rng);
    }
    nodes[at] = fresh;
  } else {
    Op op = old.op;
    while (op == old.op) op = random_operator_of_arity(a, rng);
    nodes[at] = Node{op};
  }
  if (auto out = finish(ExprTree(std::move(nodes)), constraints, rng)) {
    return Individual(*std::move(out), generation);
  }
  return Individual(tree, generation);
}

Individual mutate_node(const Individual& ind, const GenConstraints& constraints, Rng& rng,
                       int generation) {
  return mutate_node_at(ind, uniform_index(rng, ind.tree().size()), constraints, rng, generation);
}

// ---------------------------------------------------------------------------
// Selection and archive

bool fitter(const Individual& a, const Individual& b) noexcept {
  if (a.scalar() != b.scalar()) return a.scalar() < b.scalar();
  if (a.tree().size() != b.tree().size()) return a.tree().size() < b.tree().size();
  return a.birth_generation() < b.birth_generation();
}

std::vector<std::size_t> select_indices(std::span<const Individual> pool, const GpConfig& config,
                                        Rng& rng) {
  const auto n = static_cast<std::size_t>(config.n);
  if (pool.size() < n) throw std::invalid_argument("selection pool is smaller than n");
  std::vector<std::size_t> order(pool.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  // Index order is the last tie-breaker.
  auto better = [&](std::size_t i, std::size_t j) {
    if (fitter(pool[i], pool[j])) return true;
    if (fitter(pool[j], pool[i])) return false;
    return i < j;
  };

  if (config.selection == Selection::BestN) {
    std::stable_sort(order.begin(), order.end(), better);
    order.resize(n);
    return order;
  }

  const auto k = std::min<std::size_t>(static_cast<std::size_t>(config.tournament_size), pool.size());
  std::vector<std::size_t> winners;
  winners.reserve(n);
  for (std::size_t t = 0; t < n; ++t) {
    // Partial Fisher-Yates draws k distinct entrants.
    for (std::size_t i = 0; i < k; ++i) {
      const std::size_t j = i + uniform_index(rng, order.size() - i);
      std::swap(order[i], order[j]);
    }
    std::size_t best = order[0];
    for (std::size_t i = 1; i < k; ++i) {
      if (better(order[i], best)) best = order[i];
    }
    winners.push_back(best);
  }
  return winners;
}

std::vector<Individual> select(std::span<const Individual> pool, const GpConfig& config, Rng& rng) {
  std::vector<Individual> out;
  for (const auto i : select_indices(pool, config, rng)) out.push_back(pool[i]);
  return out;
}

Archive archive_step(std::span<const Individual> losers, Archive archive, Rng& rng) {
  if (archive.capacity == 0) return archive;
  for (const auto& loser : losers) {
    if (!bernoulli(rng, archive.admission_prob)) continue;
    if (archive.members.size() < archive.capacity) {
      archive.members.push_back(loser);
    } else {
      archive.members[uniform_index(rng, archive.members.size())] = loser;
    }
  }
  return archive;
}

// ---------------------------------------------------------------------------
// Search loop

namespace {

class FitnessCache {
 public:
  FitnessCache(const Evaluator& evaluator, int threads, std::map<std::string, FitnessRecord>& store,
               std::size_t evaluations)
      : evaluator_(evaluator), threads_(threads), store_(store), evaluations_(evaluations) {}

  /// Attaches fitness to every individual, evaluating each distinct
  /// uncached tree once. Results are independent of the worker count.
  void evaluate(std::vector<Individual>& individuals) {
    std::vector<std::string> keys;
    keys.reserve(individuals.size());
    std::vector<std::size_t> pending;
    std::vector<std::string> pending_keys;
    for (std::size_t i = 0; i < individuals.size(); ++i) {
      keys.push_back(serialize(individuals[i].tree()));
      if (store_.count(keys.back()) == 0 &&
          std::find(pending_keys.begin(), pending_keys.end(), keys.back()) == pending_keys.end()) {
        pending.push_back(i);
        pending_keys.push_back(keys.back());
      }
    }
    std::vector<FitnessRecord> fresh(pending.size());
    parallel_for(pending.size(), threads_, [&](std::size_t k) {
      fresh[k] = safe_eval(individuals[pending[k]].tree());
    });
    for (std::size_t k = 0; k < pending.size(); ++k) store_.emplace(pending_keys[k], fresh[k]);
    evaluations_ += pending.size();
    for (std::size_t i = 0; i < individuals.size(); ++i) {
      if (!individuals[i].fitness()) individuals[i] = individuals[i].evaluated(store_.at(keys[i]));
    }
  }

  std::size_t evaluations() const { return evaluations_; }

 private:
  FitnessRecord safe_eval(const ExprTree& tree) const {
    try {
      FitnessRecord rec = evaluator_(tree);
      if (!std::isfinite(rec.scalar) || rec.scalar > kWorstFitness) rec.scalar = kWorstFitness;
      return rec;
    } catch (const std::exception&) {
      return FitnessRecord{};
    }
  }

  const Evaluator& evaluator_;
  int threads_;
  std::map<std::string, FitnessRecord>& store_;
  std::size_t evaluations_ = 0;
};

std::string rng_to_text(const Rng& rng) {
  std::ostringstream os;
  os << rng;
  return os.str();
}

Rng rng_from_text(const std::string& text) {
  Rng rng;
  std::istringstream is(text);
  is >> rng;
  if (!is) throw std::invalid_argument("malformed rng state");
  return rng;
}

const Individual& best_of(std::span<const Individual> pool) {
  return *std::min_element(pool.begin(), pool.end(),
                           [](const Individual& a, const Individual& b) { return fitter(a, b); });
}

}  // namespace

SearchResult run_gp(const GpConfig& config, const Evaluator& evaluator, const RunHooks& hooks) {
  config.validate();
  const GenConstraints& cons = config.constraints;

  GpState state;
  Rng rng(config.seed);
  if (hooks.resume != nullptr) {
    state = *hooks.resume;
    rng = rng_from_text(state.rng_state);
  } else {
    state.archive.capacity = static_cast<std::size_t>(config.archive_capacity());
  }
  state.archive.admission_prob = config.archive_admission;
  state.archive.usage_prob = config.archive_crossover;

  FitnessCache cache(evaluator, hooks.threads, state.cache, state.evaluations);

  if (hooks.resume == nullptr) {
    for (int i = 0; i < config.n; ++i) state.population.emplace_back(random_tree(cons, rng), 0);
    cache.evaluate(state.population);
    state.best_ever = best_of(state.population);
    state.evaluations = cache.evaluations();
  }

  const auto n = static_cast<std::size_t>(config.n);
  for (int g = state.generation + 1; g <= config.generations; ++g) {
    auto& population = state.population;

    // Pairing and crossover.
    std::vector<std::size_t> order(population.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::shuffle(order.begin(), order.end(), rng);
    if (order.size() % 2 == 1) {
      // The odd one out pairs with a random other member.
      std::size_t mate = uniform_index(rng, order.size() - 1);
      order.push_back(order[mate]);
    }
    std::vector<Individual> offspring;
    for (std::size_t p = 0; p + 1 < order.size(); p += 2) {
      const Individual& first = population[order[p]];
      const Individual* second = &population[order[p + 1]];
      bool varied = false;
      std::optional<std::pair<Individual, Individual>> children;
      if (bernoulli(rng, config.crossover_rate)) {
        if (!state.archive.members.empty() && bernoulli(rng, config.archive_crossover)) {
          second = &state.archive.members[uniform_index(rng, state.archive.members.size())];
        }
        children = crossover(first, *second, cons, rng, g);
        varied = true;
      } else {
        children.emplace(Individual(first.tree(), g), Individual(second->tree(), g));
      }
      for (Individual* child : {&children->first, &children->second}) {
        bool changed = varied;
        if (bernoulli(rng, config.subtree_mutation_rate)) {
          *child = mutate_subtree(*child, cons, rng, g);
          changed = true;
        }
        if (bernoulli(rng, config.node_mutation_rate)) {
          *child = mutate_node(*child, cons, rng, g);
          changed = true;
        }
        if (changed) offspring.push_back(std::move(*child));
      }
    }

    cache.evaluate(offspring);

    // Selection over parents + offspring.
    std::vector<Individual> pool = population;
    pool.insert(pool.end(), std::make_move_iterator(offspring.begin()),
                std::make_move_iterator(offspring.end()));
    const auto chosen = select_indices(pool, config, rng);
    std::vector<bool> survived(pool.size(), false);
    std::vector<Individual> next;
    next.reserve(n);
    for (const auto i : chosen) {
      survived[i] = true;
      next.push_back(pool[i]);
    }
    std::vector<Individual> losers;
    for (std::size_t i = 0; i < pool.size(); ++i) {
      if (!survived[i]) losers.push_back(pool[i]);
    }
    state.archive = archive_step(losers, std::move(state.archive), rng);

    const Individual& pool_best = best_of(pool);
    if (!state.best_ever || fitter(pool_best, *state.best_ever)) state.best_ever = pool_best;

    population = std::move(next);
    state.generation = g;

    GenerationRecord rec;
    rec.generation = g;
    const Individual& best_now = best_of(population);
    rec.best_scalar = best_now.scalar();
    rec.best_expr = serialize(best_now.tree());
    double total = 0.0;
    for (const auto& ind : population) total += ind.scalar();
    rec.mean_scalar = total / static_cast<double>(population.size());
    rec.best_ever_scalar = state.best_ever->scalar();
    rec.archive_size = state.archive.members.size();
    state.evaluations = cache.evaluations();
    rec.evaluations = state.evaluations;
    state.history.push_back(rec);
    state.rng_state = rng_to_text(rng);
    if (hooks.on_generation) hooks.on_generation(rec, state);
  }

  if (state.rng_state.empty()) state.rng_state = rng_to_text(rng);
  SearchResult result{*state.best_ever, state.history, cache.evaluations(), state};
  return result;
}

Evaluator grid_proxy_evaluator(const ExprTree& target, int grid_points, double eps) {
  if (grid_points < 2) throw std::invalid_argument("grid_points must be >= 2");
  return [target, grid_points, eps](const ExprTree& tree) {
    double sum = 0.0;
    int count = 0;
    for (const double y_real : {0.0, 1.0}) {
      for (int i = 0; i < grid_points; ++i) {
        const double y_pred = static_cast<double>(i) / static_cast<double>(grid_points - 1);
        const double d = evaluate(tree, y_pred, y_real, eps) - evaluate(target, y_pred, y_real, eps);
        sum += d * d;
        ++count;
      }
    }
    return scalar_fitness(sum / count);
  };
}

}  // namespace lossforge
