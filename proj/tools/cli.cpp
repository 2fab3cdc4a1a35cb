#include "cli.hpp"

#include <spdlog/sinks/ostream_sink.h>
#include <spdlog/spdlog.h>

#include <CLI11.hpp>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <optional>
#include <sstream>

#include "config_file.hpp"
#include "lossforge/format.hpp"
#include "lossforge/gan.hpp"
#include "lossforge/genetics.hpp"
#include "lossforge/losses.hpp"
#include "lossforge/metrics.hpp"
#include "lossforge/parallel.hpp"

#ifndef LOSSFORGE_VERSION
#define LOSSFORGE_VERSION "0.0.0"
#endif

namespace lossforge::cli {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  f << text;
  f.close();
  if (!f) throw std::runtime_error("cannot write " + path.string());
}

/// Writes through a temporary so readers never see a half-written file.
void replace_text(const fs::path& path, const std::string& text) {
  fs::path tmp = path;
  tmp += ".tmp";
  write_text(tmp, text);
  fs::rename(tmp, path);
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw UsageError("cannot read '" + path.string() + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw UsageError("cannot create output directory '" + dir.string() + "': " + ec.message());
}

class Manifest {
 public:
  Manifest(fs::path path, std::string command, const std::vector<std::string>& args,
           std::uint64_t seed, const Settings& config)
      : path_(std::move(path)) {
    doc_["command"] = std::move(command);
    doc_["argv"] = args;
    doc_["tool_version"] = LOSSFORGE_VERSION;
    doc_["seed"] = seed;
    ordered_json cfg = ordered_json::object();
    for (const auto& [k, v] : config) cfg[k] = v;
    doc_["config"] = std::move(cfg);
    doc_["threads"] = configured_threads();
  }

  void add_output(const fs::path& file) { outputs_.push_back(file); }

  void start() {
    doc_["started_at"] = utc_now();
    doc_["finished_at"] = nullptr;
    doc_["status"] = "running";
    doc_["outputs"] = names(false);
    replace_text(path_, doc_.dump(2) + "\n");
  }

  void finish(bool ok) {
    doc_["finished_at"] = utc_now();
    doc_["status"] = ok ? "ok" : "failed";
    doc_["outputs"] = names(true);
    replace_text(path_, doc_.dump(2) + "\n");
  }

 private:
  std::vector<std::string> names(bool existing_only) const {
    std::vector<std::string> out{path_.filename().string()};
    for (const auto& f : outputs_) {
      if (!existing_only || fs::exists(f)) out.push_back(f.filename().string());
    }
    return out;
  }

  fs::path path_;
  ordered_json doc_;
  std::vector<fs::path> outputs_;
};

/// Finishes the manifest as failed if the command leaves by an exception.
class ManifestGuard {
 public:
  explicit ManifestGuard(Manifest& m) : m_(m) {}
  ManifestGuard(const ManifestGuard&) = delete;
  ManifestGuard& operator=(const ManifestGuard&) = delete;
  ~ManifestGuard() {
    if (!done_) {
      try {
        m_.finish(false);
      } catch (...) {
      }
    }
  }
  void ok() {
    m_.finish(true);
    done_ = true;
  }

 private:
  Manifest& m_;
  bool done_ = false;
};

std::string known_losses() {
  std::string out;
  for (const auto& n : builtin_loss_names()) out += (out.empty() ? "" : ", ") + n;
  return out;
}

LossFunction resolve_loss(const std::string& spec, double eps) {
  const auto& names = builtin_loss_names();
  if (std::find(names.begin(), names.end(), spec) != names.end()) return builtin_loss(spec);
  const bool looks_like_file = spec.size() > 5 && spec.substr(spec.size() - 5) == ".sexp";
  if (!looks_like_file && !fs::exists(spec)) {
    throw UsageError("unknown loss '" + spec + "'; known losses: " + known_losses() +
                     " (or a path to a .sexp file)");
  }
  const std::string text = read_text(spec);
  try {
    const ExprTree tree = parse(text);
    return loss_from_tree(serialize(tree), tree, eps);
  } catch (const ParseError& e) {
    throw UsageError(spec + ": " + e.what());
  } catch (const InvalidTree& e) {
    throw UsageError(spec + ": " + e.what());
  }
}

template <typename F>
void as_usage(F&& f) {
  try {
    f();
  } catch (const UsageError&) {
    throw;
  } catch (const std::invalid_argument& e) {
    throw UsageError(e.what());
  } catch (const std::out_of_range& e) {
    throw UsageError(e.what());
  }
}

std::vector<std::string> split_list(const std::string& text) {
  std::vector<std::string> out;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    part.erase(0, part.find_first_not_of(" \t"));
    part.erase(part.find_last_not_of(" \t") + 1);
    if (!part.empty()) out.push_back(part);
  }
  return out;
}

Settings joined(Settings a, const Settings& b) {
  a.insert(a.end(), b.begin(), b.end());
  return a;
}

double population_std(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  double mean = 0.0;
  for (const double x : v) mean += x;
  mean /= static_cast<double>(v.size());
  double ss = 0.0;
  for (const double x : v) ss += (x - mean) * (x - mean);
  return std::sqrt(ss / static_cast<double>(v.size()));
}

struct Common {
  std::string config_file;
  std::uint64_t seed = 0;
  std::optional<int> steps;
};

struct Options {
  Common common;
  // search
  std::optional<int> config_id;
  std::string proxy_fitness;
  std::string resume;
  // eval / shape / train / compare
  std::string loss;
  std::string losses;
  int runs = 5;
  int seeds = 10;
  int y_real = 1;
  int grid = 512;
  std::string loss_on = "both";
  std::string out;
};

void load_configs(const Common& c, GpConfig* gp, GanConfig* gan) {
  if (!c.config_file.empty()) apply_settings(read_config_file(c.config_file), gp, gan);
  if (gan != nullptr && c.steps) gan->steps = *c.steps;
}

class Commands {
 public:
  Commands(const Options& o, const std::vector<std::string>& args, std::ostream& out,
           std::shared_ptr<spdlog::logger> log)
      : o_(o), args_(args), out_(out), log_(std::move(log)) {}

  int search() {
    GpConfig gp;
    GanConfig gan;
    std::optional<ExprTree> target;
    as_usage([&] {
      if (o_.config_id) gp = GpConfig::preset(*o_.config_id);
      load_configs(o_.common, &gp, &gan);
      gp.seed = o_.common.seed;
      gp.validate();
      gan.validate();
      if (!o_.proxy_fitness.empty()) {
        try {
          target = parse(read_text(o_.proxy_fitness));
        } catch (const ParseError& e) {
          throw UsageError(o_.proxy_fitness + ": " + e.what());
        } catch (const InvalidTree& e) {
          throw UsageError(o_.proxy_fitness + ": " + e.what());
        }
      }
    });
    std::optional<GpState> resume;
    if (!o_.resume.empty()) {
      try {
        resume = checkpoint_from_json(read_text(o_.resume));
      } catch (const std::invalid_argument& e) {
        throw UsageError(o_.resume + ": " + e.what());
      }
    }

    const fs::path dir = o_.out;
    make_dir(dir);
    Settings settings = describe(gp);
    settings.emplace_back("fitness", target ? "proxy:" + serialize(*target) : "gan");
    if (!target) settings = joined(settings, describe(gan));
    Manifest manifest(dir / "manifest.json", "search", args_, o_.common.seed, settings);
    const fs::path history_path = dir / "history.jsonl";
    const fs::path checkpoint_path = dir / "checkpoint.json";
    const fs::path best_path = dir / "best.sexp";
    const fs::path best_fitness_path = dir / "best_fitness.json";
    const fs::path timings_path = dir / "timings.jsonl";
    for (const auto& p : {history_path, checkpoint_path, best_path, best_fitness_path, timings_path}) {
      manifest.add_output(p);
    }
    manifest.start();
    ManifestGuard guard(manifest);

    Evaluator evaluator;
    if (target) {
      evaluator = grid_proxy_evaluator(*target, 21, gp.constraints.epsilon);
    } else {
      const std::uint64_t fitness_seed = derive_seed(gp.seed, 7);
      const int runs = gp.fitness_runs;
      const double weight = gp.std_weight;
      const double eps = gp.constraints.epsilon;
      evaluator = [gan, runs, weight, eps, fitness_seed](const ExprTree& tree) {
        return evaluate_fitness(loss_from_tree(serialize(tree), tree, eps), gan, runs, fitness_seed,
                                weight, 1);
      };
    }

    std::ofstream history(history_path, std::ios::binary | std::ios::trunc);
    std::ofstream timings(timings_path, std::ios::binary | std::ios::trunc);
    if (!history || !timings) throw std::runtime_error("cannot open output files in " + dir.string());
    if (resume) {
      for (const auto& rec : resume->history) history << to_json_line(rec) << '\n';
    }
    auto last = std::chrono::steady_clock::now();
    RunHooks hooks;
    hooks.resume = resume ? &*resume : nullptr;
    hooks.on_generation = [&](const GenerationRecord& rec, const GpState& state) {
      const auto now = std::chrono::steady_clock::now();
      const double wall = std::chrono::duration<double>(now - last).count();
      last = now;
      history << to_json_line(rec) << '\n' << std::flush;
      timings << ordered_json{{"generation", rec.generation}, {"wall_time", wall}}.dump() << '\n'
              << std::flush;
      replace_text(checkpoint_path, checkpoint_to_json(state) + "\n");
      log_->info("generation {} best {} best_ever {} evaluations {}", rec.generation,
                 format_g17(rec.best_scalar), format_g17(rec.best_ever_scalar), rec.evaluations);
    };
    log_->info("search seed {} n {} generations {}", gp.seed, gp.n, gp.generations);
    const SearchResult result = run_gp(gp, evaluator, hooks);
    if (!history || !timings) throw std::runtime_error("write failure in " + dir.string());
    history.close();
    timings.close();
    if (!fs::exists(checkpoint_path)) {
      replace_text(checkpoint_path, checkpoint_to_json(result.final_state) + "\n");
    }
    const std::string best = serialize(result.best.tree());
    write_text(best_path, best + "\n");
    write_text(best_fitness_path,
               (result.best.fitness() ? fitness_to_json(*result.best.fitness()) : "null") + "\n");
    guard.ok();
    out_ << ordered_json{{"best", best},
                         {"scalar", result.best.scalar()},
                         {"evaluations", result.evaluations}}
                .dump()
         << '\n';
    return 0;
  }

  int eval() {
    GanConfig gan;
    std::optional<LossFunction> loss;
    as_usage([&] {
      load_configs(o_.common, nullptr, &gan);
      gan.validate();
      if (o_.runs < 1) throw UsageError("--runs must be >= 1");
      loss = resolve_loss(o_.loss, losses::kEpsilon);
    });
    std::optional<Manifest> manifest;
    std::optional<ManifestGuard> guard;
    fs::path record_path;
    if (!o_.out.empty()) {
      make_dir(o_.out);
      Settings s = describe(gan);
      s.emplace_back("loss", o_.loss);
      s.emplace_back("runs", std::to_string(o_.runs));
      manifest.emplace(fs::path(o_.out) / "manifest.json", "eval", args_, o_.common.seed, s);
      record_path = fs::path(o_.out) / "fitness.json";
      manifest->add_output(record_path);
      manifest->start();
      guard.emplace(*manifest);
    }
    log_->info("eval {} runs {} seed {}", loss->name, o_.runs, o_.common.seed);
    const FitnessRecord record =
        evaluate_fitness(*loss, gan, o_.runs, o_.common.seed, 1.0, configured_threads());
    const std::string text = fitness_to_json(record);
    if (manifest) {
      write_text(record_path, text + "\n");
      guard->ok();
    }
    out_ << text << '\n';
    return 0;
  }

  int shape() {
    std::optional<LossFunction> loss;
    as_usage([&] {
      if (o_.grid < 16) throw UsageError("--grid must be >= 16");
      if (o_.y_real != 0 && o_.y_real != 1) throw UsageError("--y-real must be 0 or 1");
      loss = resolve_loss(o_.loss, losses::kEpsilon);
    });
    std::optional<Manifest> manifest;
    std::optional<ManifestGuard> guard;
    if (!o_.out.empty()) {
      const fs::path csv = o_.out;
      if (csv.has_parent_path()) make_dir(csv.parent_path());
      fs::path mpath = csv;
      mpath += ".manifest.json";
      manifest.emplace(mpath, "shape", args_, o_.common.seed,
                       Settings{{"loss", o_.loss},
                                {"y_real", std::to_string(o_.y_real)},
                                {"grid", std::to_string(o_.grid)}});
      manifest->add_output(csv);
      manifest->start();
      guard.emplace(*manifest);
    }
    const ShapeReport report = shape_report(*loss, o_.y_real, o_.grid);
    if (manifest) {
      std::string csv = "y_pred,loss,gradient\n";
      for (const auto& s : report.samples) {
        csv += format_g17(s.y_pred) + ',' + format_g17(s.loss) + ',' + format_g17(s.gradient) + '\n';
      }
      write_text(o_.out, csv);
      guard->ok();
    }
    out_ << ordered_json{{"loss", loss->name},
                         {"y_real", o_.y_real},
                         {"grid", o_.grid},
                         {"argmin", report.argmin},
                         {"min_value", report.min_value}}
                .dump()
         << '\n';
    return 0;
  }

  int compare() {
    GanConfig gan;
    std::vector<LossFunction> list;
    as_usage([&] {
      load_configs(o_.common, nullptr, &gan);
      gan.validate();
      if (o_.seeds < 1) throw UsageError("--seeds must be >= 1");
      const auto names = split_list(o_.losses);
      if (names.empty()) throw UsageError("--losses needs at least one loss");
      for (const auto& n : names) list.push_back(resolve_loss(n, losses::kEpsilon));
    });
    const fs::path dir = o_.out;
    make_dir(dir);
    Settings s = describe(gan);
    s.emplace_back("losses", o_.losses);
    s.emplace_back("seeds", std::to_string(o_.seeds));
    Manifest manifest(dir / "manifest.json", "compare", args_, o_.common.seed, s);
    const fs::path summary_path = dir / "summary.csv";
    const fs::path runs_path = dir / "runs.csv";
    manifest.add_output(summary_path);
    manifest.add_output(runs_path);
    manifest.start();
    ManifestGuard guard(manifest);

    std::string summary = "loss,best,worst,mean,std,coverage\n";
    std::string runs = "loss,seed,fd,disc_acc,covered,total,degenerate\n";
    for (const auto& loss : list) {
      log_->info("compare {} over {} seeds", loss.name, o_.seeds);
      const auto trained = train_runs(loss, gan, o_.seeds, o_.common.seed, configured_threads());
      std::vector<double> fds;
      double coverage = 0.0;
      for (std::size_t r = 0; r < trained.size(); ++r) {
        const auto outcome = trained[r].outcome();
        const Coverage cov = outcome.degenerate ? Coverage{0, static_cast<int>(mode_centers(gan.dataset).size())}
                                                : mode_coverage(trained[r].generated, gan.dataset);
        if (!outcome.degenerate) fds.push_back(outcome.fd);
        coverage += static_cast<double>(cov.covered) / static_cast<double>(cov.total);
        runs += loss.name + ',' + std::to_string(o_.common.seed + r) + ',' + format_g17(outcome.fd) +
                ',' + format_g17(outcome.disc_accuracy) + ',' + std::to_string(cov.covered) + ',' +
                std::to_string(cov.total) + ',' + (outcome.degenerate ? "1" : "0") + '\n';
      }
      const double nan = std::nan("");
      const double best = fds.empty() ? nan : *std::min_element(fds.begin(), fds.end());
      const double worst = fds.empty() ? nan : *std::max_element(fds.begin(), fds.end());
      double mean = nan;
      if (!fds.empty()) {
        mean = 0.0;
        for (const double x : fds) mean += x;
        mean /= static_cast<double>(fds.size());
      }
      summary += loss.name + ',' + format_g17(best) + ',' + format_g17(worst) + ',' + format_g17(mean) +
                 ',' + format_g17(population_std(fds)) + ',' +
                 format_g17(coverage / static_cast<double>(trained.size())) + '\n';
    }
    write_text(summary_path, summary);
    write_text(runs_path, runs);
    guard.ok();
    out_ << summary;
    return 0;
  }

  int train() {
    GanConfig gan;
    std::optional<LossFunction> loss;
    as_usage([&] {
      load_configs(o_.common, nullptr, &gan);
      gan.loss_on = parse_loss_target(o_.loss_on);
      gan.seed = o_.common.seed;
      gan.validate();
      loss = resolve_loss(o_.loss, losses::kEpsilon);
    });
    const fs::path dir = o_.out;
    make_dir(dir);
    Settings s = describe(gan);
    s.emplace_back("loss", o_.loss);
    Manifest manifest(dir / "manifest.json", "train", args_, o_.common.seed, s);
    const fs::path samples_path = dir / "samples.csv";
    const fs::path history_path = dir / "history.csv";
    const fs::path summary_path = dir / "summary.json";
    manifest.add_output(samples_path);
    manifest.add_output(history_path);
    manifest.add_output(summary_path);
    manifest.start();
    ManifestGuard guard(manifest);

    log_->info("train {} on {} seed {} steps {}", loss->name, to_string(gan.loss_on), gan.seed,
               gan.steps);
    const TrainedGan trained = train_gan(gan, *loss);

    std::string samples = "x,y,source\n";
    for (const auto& p : trained.reference) {
      samples += format_g17(p[0]) + ',' + format_g17(p[1]) + ",real\n";
    }
    for (const auto& p : trained.generated) {
      samples += format_g17(p[0]) + ',' + format_g17(p[1]) + ",generated\n";
    }
    std::string history = "step,fd,disc_acc\n";
    for (const auto& e : trained.history) {
      history += std::to_string(e.step) + ',' + format_g17(e.fd) + ',' + format_g17(e.disc_accuracy) + '\n';
    }
    const auto outcome = trained.outcome();
    const Coverage cov = outcome.degenerate ? Coverage{0, static_cast<int>(mode_centers(gan.dataset).size())}
                                            : mode_coverage(trained.generated, gan.dataset);
    ordered_json summary{{"loss", loss->name},
                         {"loss_on", to_string(gan.loss_on)},
                         {"seed", gan.seed},
                         {"steps_completed", trained.steps_completed},
                         {"degenerate", outcome.degenerate},
                         {"final_fd", std::isfinite(outcome.fd) ? ordered_json(outcome.fd) : ordered_json()},
                         {"final_disc_accuracy", outcome.disc_accuracy},
                         {"coverage", {{"covered", cov.covered}, {"total", cov.total}}}};
    write_text(samples_path, samples);
    write_text(history_path, history);
    write_text(summary_path, summary.dump(2) + "\n");
    guard.ok();
    out_ << summary.dump() << '\n';
    return 0;
  }

 private:
  const Options& o_;
  const std::vector<std::string>& args_;
  std::ostream& out_;
  std::shared_ptr<spdlog::logger> log_;
};

void add_common(CLI::App* cmd, Common& c, bool with_steps) {
  cmd->add_option("--config", c.config_file, "key=value config file (gp.* and gan.* keys)");
  cmd->add_option("--seed", c.seed, "Base random seed");
  if (with_steps) cmd->add_option("--steps", c.steps, "Override gan.steps");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Evolved GAN loss functions: search, evaluate and inspect", "lossforge"};
  app.set_version_flag("--version", std::string(LOSSFORGE_VERSION));
  app.require_subcommand(1);

  auto* search = app.add_subcommand("search", "Run a genetic-programming loss search");
  add_common(search, o.common, true);
  search->add_option("--config-id", o.config_id, "Preset GP configuration 1-8");
  search->add_option("--proxy-fitness", o.proxy_fitness,
                     "Score trees by squared deviation from this .sexp target instead of training GANs");
  search->add_option("--resume", o.resume, "Continue from a checkpoint.json");
  search->add_option("--out", o.out, "Output directory")->required();

  auto* eval = app.add_subcommand("eval", "Train repeated GANs with one loss and print its fitness");
  add_common(eval, o.common, true);
  eval->add_option("--loss", o.loss, "Built-in loss name or .sexp file")->required();
  eval->add_option("--runs", o.runs, "Number of trainings");
  eval->add_option("--out", o.out, "Optional output directory");

  auto* shape = app.add_subcommand("shape", "Tabulate a loss and its gradient over y_pred in [0, 1]");
  add_common(shape, o.common, false);
  shape->add_option("--loss", o.loss, "Built-in loss name or .sexp file")->required();
  shape->add_option("--y-real", o.y_real, "Label, 0 or 1");
  shape->add_option("--grid", o.grid, "Grid points (>= 16)");
  shape->add_option("--out", o.out, "CSV output path");

  auto* compare = app.add_subcommand("compare", "Train several losses over several seeds");
  add_common(compare, o.common, true);
  compare->add_option("--losses", o.losses, "Comma-separated losses")->required();
  compare->add_option("--seeds", o.seeds, "Seeds per loss");
  compare->add_option("--out", o.out, "Output directory")->required();

  auto* train = app.add_subcommand("train", "Train a single GAN");
  add_common(train, o.common, true);
  train->add_option("--loss", o.loss, "Built-in loss name or .sexp file")->required();
  train->add_option("--loss-on", o.loss_on, "both|gen|disc");
  train->add_option("--out", o.out, "Output directory")->required();

  auto sink = std::make_shared<spdlog::sinks::ostream_sink_mt>(err);
  auto log = std::make_shared<spdlog::logger>("lossforge", sink);
  log->set_pattern("[%l] %v");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return 0;
  } catch (const CLI::CallForVersion&) {
    out << LOSSFORGE_VERSION << '\n';
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  Commands commands(o, args, out, log);
  try {
    if (search->parsed()) return commands.search();
    if (eval->parsed()) return commands.eval();
    if (shape->parsed()) return commands.shape();
    if (compare->parsed()) return commands.compare();
    if (train->parsed()) return commands.train();
    err << app.help();
    return 2;
  } catch (const UsageError& e) {
    log->error("{}", e.what());
    return 2;
  } catch (const std::exception& e) {
    log->error("{}", e.what());
    return 1;
  }
}

}  // namespace lossforge::cli
