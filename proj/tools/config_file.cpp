#include "config_file.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "lossforge/format.hpp"

namespace lossforge::cli {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double to_double(const std::string& key, const std::string& v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw UsageError("config key '" + key + "': expected a number, got '" + v + "'");
  }
  return out;
}

long long to_integer(const std::string& key, const std::string& v) {
  long long out = 0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) {
    throw UsageError("config key '" + key + "': expected an integer, got '" + v + "'");
  }
  return out;
}

int to_int(const std::string& key, const std::string& v) { return static_cast<int>(to_integer(key, v)); }

std::vector<int> to_widths(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string part;
  while (std::getline(ss, part, ',')) out.push_back(to_int(key, trim(part)));
  if (out.empty()) throw UsageError("config key '" + key + "': empty layer list");
  return out;
}

std::string widths_text(const std::vector<int>& w) {
  std::string out;
  for (std::size_t i = 0; i < w.size(); ++i) {
    if (i) out += ',';
    out += std::to_string(w[i]);
  }
  return out;
}

}  // namespace

std::map<std::string, std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file '" + path + "'");
  std::map<std::string, std::string> values;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw UsageError(path + ":" + std::to_string(number) + ": expected key=value");
    }
    values[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
  }
  return values;
}

void apply_settings(const std::map<std::string, std::string>& values, GpConfig* gp, GanConfig* gan) {
  for (const auto& [key, v] : values) {
    if (gp != nullptr && key.rfind("gp.", 0) == 0) {
      const std::string k = key.substr(3);
      auto& c = gp->constraints;
      if (k == "n") gp->n = to_int(key, v);
      else if (k == "generations") gp->generations = to_int(key, v);
      else if (k == "crossover_rate") gp->crossover_rate = to_double(key, v);
      else if (k == "subtree_mutation_rate") gp->subtree_mutation_rate = to_double(key, v);
      else if (k == "node_mutation_rate") gp->node_mutation_rate = to_double(key, v);
      else if (k == "archive_admission") gp->archive_admission = to_double(key, v);
      else if (k == "archive_crossover") gp->archive_crossover = to_double(key, v);
      else if (k == "tournament_size") gp->tournament_size = to_int(key, v);
      else if (k == "fitness_runs") gp->fitness_runs = to_int(key, v);
      else if (k == "std_weight") gp->std_weight = to_double(key, v);
      else if (k == "min_height") c.min_height = to_int(key, v);
      else if (k == "max_size") c.max_size = static_cast<std::size_t>(to_integer(key, v));
      else if (k == "const_low") c.const_low = to_double(key, v);
      else if (k == "const_high") c.const_high = to_double(key, v);
      else if (k == "epsilon") c.epsilon = to_double(key, v);
      else if (k == "max_init_height") c.max_init_height = to_int(key, v);
      else if (k == "mutation_subtree_height") c.mutation_subtree_height = to_int(key, v);
      else if (k == "selection") {
        if (v == "tournament") gp->selection = Selection::Tournament;
        else if (v == "best_n") gp->selection = Selection::BestN;
        else throw UsageError("gp.selection must be tournament or best_n, got '" + v + "'");
      } else {
        throw UsageError("unknown config key '" + key + "'");
      }
    } else if (gan != nullptr && key.rfind("gan.", 0) == 0) {
      const std::string k = key.substr(4);
      if (k == "latent_dim") gan->latent_dim = to_int(key, v);
      else if (k == "gen_layers") gan->gen_layers = to_widths(key, v);
      else if (k == "disc_layers") gan->disc_layers = to_widths(key, v);
      else if (k == "leaky_slope") gan->leaky_slope = to_double(key, v);
      else if (k == "lr") gan->lr = to_double(key, v);
      else if (k == "beta1") gan->beta1 = to_double(key, v);
      else if (k == "beta2") gan->beta2 = to_double(key, v);
      else if (k == "batch_size") gan->batch_size = to_int(key, v);
      else if (k == "steps") gan->steps = to_int(key, v);
      else if (k == "eval_interval") gan->eval_interval = to_int(key, v);
      else if (k == "eval_samples") gan->eval_samples = to_int(key, v);
      else if (k == "loss_on") {
        try {
          gan->loss_on = parse_loss_target(v);
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
      } else if (k == "dataset") {
        try {
          gan->dataset = parse_dataset_spec(v);
        } catch (const std::invalid_argument& e) {
          throw UsageError(e.what());
        }
      } else {
        throw UsageError("unknown config key '" + key + "'");
      }
    } else {
      throw UsageError("unknown config key '" + key + "'");
    }
  }
}

Settings describe(const GpConfig& c) {
  const auto& k = c.constraints;
  return {
      {"gp.n", std::to_string(c.n)},
      {"gp.generations", std::to_string(c.generations)},
      {"gp.crossover_rate", format_g17(c.crossover_rate)},
      {"gp.subtree_mutation_rate", format_g17(c.subtree_mutation_rate)},
      {"gp.node_mutation_rate", format_g17(c.node_mutation_rate)},
      {"gp.archive_admission", format_g17(c.archive_admission)},
      {"gp.archive_crossover", format_g17(c.archive_crossover)},
      {"gp.archive_capacity", std::to_string(c.archive_capacity())},
      {"gp.selection", c.selection == Selection::Tournament ? "tournament" : "best_n"},
      {"gp.tournament_size", std::to_string(c.tournament_size)},
      {"gp.fitness_runs", std::to_string(c.fitness_runs)},
      {"gp.std_weight", format_g17(c.std_weight)},
      {"gp.min_height", std::to_string(k.min_height)},
      {"gp.max_size", std::to_string(k.max_size)},
      {"gp.const_low", format_g17(k.const_low)},
      {"gp.const_high", format_g17(k.const_high)},
      {"gp.epsilon", format_g17(k.epsilon)},
      {"gp.max_init_height", std::to_string(k.max_init_height)},
      {"gp.mutation_subtree_height", std::to_string(k.mutation_subtree_height)},
  };
}

Settings describe(const GanConfig& c) {
  return {
      {"gan.latent_dim", std::to_string(c.latent_dim)},
      {"gan.gen_layers", widths_text(c.gen_layers)},
      {"gan.disc_layers", widths_text(c.disc_layers)},
      {"gan.leaky_slope", format_g17(c.leaky_slope)},
      {"gan.lr", format_g17(c.lr)},
      {"gan.beta1", format_g17(c.beta1)},
      {"gan.beta2", format_g17(c.beta2)},
      {"gan.batch_size", std::to_string(c.batch_size)},
      {"gan.steps", std::to_string(c.steps)},
      {"gan.eval_interval", std::to_string(c.eval_interval)},
      {"gan.eval_samples", std::to_string(c.eval_samples)},
      {"gan.dataset", to_string(c.dataset)},
      {"gan.loss_on", to_string(c.loss_on)},
  };
}

}  // namespace lossforge::cli
