#include <cmath>
#include <limits>
#include <nlohmann/json.hpp>
#include <stdexcept>

#include "lossforge/genetics.hpp"

namespace lossforge {

using nlohmann::json;

namespace {

// Non-finite values have no JSON form; they round-trip through null.
json number(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

double read_number(const json& j) {
  return j.is_null() ? std::numeric_limits<double>::quiet_NaN() : j.get<double>();
}

json fitness_json(const FitnessRecord& r) {
  json runs = json::array();
  for (const auto& run : r.per_run) {
    runs.push_back({{"fd", number(run.fd)},
                    {"disc_accuracy", number(run.disc_accuracy)},
                    {"degenerate", run.degenerate}});
  }
  return {{"mean_fd", number(r.mean_fd)},
          {"std_fd", number(r.std_fd)},
          {"scalar", number(r.scalar)},
          {"per_run", std::move(runs)}};
}

FitnessRecord fitness_from(const json& j) {
  FitnessRecord r;
  r.mean_fd = read_number(j.at("mean_fd"));
  r.std_fd = read_number(j.at("std_fd"));
  r.scalar = read_number(j.at("scalar"));
  if (!std::isfinite(r.scalar)) r.scalar = kWorstFitness;
  for (const auto& run : j.at("per_run")) {
    r.per_run.push_back({read_number(run.at("fd")), read_number(run.at("disc_accuracy")),
                         run.at("degenerate").get<bool>()});
  }
  return r;
}

json individual_json(const Individual& ind) {
  json j{{"expr", serialize(ind.tree())}, {"birth_generation", ind.birth_generation()}};
  j["fitness"] = ind.fitness() ? fitness_json(*ind.fitness()) : json(nullptr);
  return j;
}

Individual individual_from(const json& j) {
  Individual ind(parse(j.at("expr").get<std::string>()), j.at("birth_generation").get<int>());
  if (!j.at("fitness").is_null()) return ind.evaluated(fitness_from(j.at("fitness")));
  return ind;
}

json record_json(const GenerationRecord& r) {
  return {{"generation", r.generation},       {"best_scalar", number(r.best_scalar)},
          {"mean_scalar", number(r.mean_scalar)}, {"best_ever_scalar", number(r.best_ever_scalar)},
          {"best_expr", r.best_expr},         {"archive_size", r.archive_size},
          {"evaluations", r.evaluations}};
}

GenerationRecord record_from(const json& j) {
  GenerationRecord r;
  r.generation = j.at("generation").get<int>();
  r.best_scalar = read_number(j.at("best_scalar"));
  r.mean_scalar = read_number(j.at("mean_scalar"));
  r.best_ever_scalar = read_number(j.at("best_ever_scalar"));
  r.best_expr = j.at("best_expr").get<std::string>();
  r.archive_size = j.at("archive_size").get<std::size_t>();
  r.evaluations = j.at("evaluations").get<std::size_t>();
  return r;
}

}  // namespace

std::string to_json_line(const GenerationRecord& record) { return record_json(record).dump(); }

std::string fitness_to_json(const FitnessRecord& record) { return fitness_json(record).dump(); }

std::string checkpoint_to_json(const GpState& state) {
  json pop = json::array();
  for (const auto& ind : state.population) pop.push_back(individual_json(ind));
  json archive = json::array();
  for (const auto& ind : state.archive.members) archive.push_back(individual_json(ind));
  json history = json::array();
  for (const auto& r : state.history) history.push_back(record_json(r));
  json cache = json::array();
  for (const auto& [expr, rec] : state.cache) cache.push_back({{"expr", expr}, {"fitness", fitness_json(rec)}});
  json j{{"generation", state.generation},
         {"population", std::move(pop)},
         {"archive",
          {{"capacity", state.archive.capacity},
           {"admission_prob", state.archive.admission_prob},
           {"usage_prob", state.archive.usage_prob},
           {"members", std::move(archive)}}},
         {"best_ever", state.best_ever ? individual_json(*state.best_ever) : json(nullptr)},
         {"history", std::move(history)},
         {"rng_state", state.rng_state},
         {"cache", std::move(cache)},
         {"evaluations", state.evaluations}};
  return j.dump();
}

GpState checkpoint_from_json(const std::string& text) {
  try {
    const json j = json::parse(text);
    GpState s;
    s.generation = j.at("generation").get<int>();
    for (const auto& ind : j.at("population")) s.population.push_back(individual_from(ind));
    const auto& a = j.at("archive");
    s.archive.capacity = a.at("capacity").get<std::size_t>();
    s.archive.admission_prob = a.at("admission_prob").get<double>();
    s.archive.usage_prob = a.at("usage_prob").get<double>();
    for (const auto& ind : a.at("members")) s.archive.members.push_back(individual_from(ind));
    if (!j.at("best_ever").is_null()) s.best_ever = individual_from(j.at("best_ever"));
    for (const auto& r : j.at("history")) s.history.push_back(record_from(r));
    s.rng_state = j.at("rng_state").get<std::string>();
    for (const auto& e : j.at("cache")) {
      s.cache.emplace(e.at("expr").get<std::string>(), fitness_from(e.at("fitness")));
    }
    s.evaluations = j.at("evaluations").get<std::size_t>();
    return s;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed checkpoint: ") + e.what());
  } catch (const ParseError& e) {
    throw std::invalid_argument(std::string("malformed checkpoint expression: ") + e.what());
  }
}

}  // namespace lossforge
