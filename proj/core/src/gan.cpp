#include "lossforge/gan.hpp"

#include <cmath>
#include <stdexcept>

#include "lossforge/metrics.hpp"
#include "lossforge/parallel.hpp"

namespace lossforge {

std::string to_string(LossTarget target) {
  switch (target) {
    case LossTarget::Both: return "both";
    case LossTarget::Generator: return "gen";
    case LossTarget::Discriminator: return "disc";
  }
  return "both";
}

LossTarget parse_loss_target(const std::string& text) {
  if (text == "both") return LossTarget::Both;
  if (text == "gen" || text == "generator") return LossTarget::Generator;
  if (text == "disc" || text == "discriminator") return LossTarget::Discriminator;
  throw std::invalid_argument("loss target must be one of both|gen|disc, got '" + text + "'");
}

void GanConfig::validate() const {
  if (latent_dim < 1) throw std::invalid_argument("latent_dim must be >= 1");
  if (gen_layers.size() < 2 || disc_layers.size() < 2) {
    throw std::invalid_argument("networks need input and output widths");
  }
  for (const int w : gen_layers) {
    if (w < 1) throw std::invalid_argument("layer widths must be >= 1");
  }
  for (const int w : disc_layers) {
    if (w < 1) throw std::invalid_argument("layer widths must be >= 1");
  }
  if (gen_layers.front() != latent_dim) {
    throw std::invalid_argument("generator input width must equal latent_dim");
  }
  if (gen_layers.back() != 2 || disc_layers.front() != 2) {
    throw std::invalid_argument("generator output and discriminator input must be 2-D");
  }
  if (disc_layers.back() != 1) throw std::invalid_argument("discriminator output width must be 1");
  if (!(lr > 0.0)) throw std::invalid_argument("lr must be > 0");
  if (!(beta1 >= 0.0 && beta1 < 1.0) || !(beta2 >= 0.0 && beta2 < 1.0)) {
    throw std::invalid_argument("Adam betas must lie in [0, 1)");
  }
  if (batch_size < 2) throw std::invalid_argument("batch_size must be >= 2");
  if (steps < 0) throw std::invalid_argument("steps must be >= 0");
  if (eval_interval < 1) throw std::invalid_argument("eval_interval must be >= 1");
  if (eval_samples < 3) throw std::invalid_argument("eval_samples must be >= 3");
  dataset.validate();
}

RunOutcome TrainedGan::outcome() const {
  const bool bad = degenerate || history.empty() || !std::isfinite(history.back().fd);
  return RunOutcome{history.empty() ? 0.0 : history.back().fd,
                    history.empty() ? 0.0 : history.back().disc_accuracy, bad};
}

namespace {

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  const double e = std::exp(s);
  return e / (1.0 + e);
}

Eigen::MatrixXd to_matrix(std::span<const Point> points) {
  Eigen::MatrixXd m(2, static_cast<Eigen::Index>(points.size()));
  for (std::size_t i = 0; i < points.size(); ++i) {
    m(0, static_cast<Eigen::Index>(i)) = points[i][0];
    m(1, static_cast<Eigen::Index>(i)) = points[i][1];
  }
  return m;
}

std::vector<Point> to_points(const Eigen::MatrixXd& m) {
  std::vector<Point> out(static_cast<std::size_t>(m.cols()));
  for (Eigen::Index i = 0; i < m.cols(); ++i) out[static_cast<std::size_t>(i)] = {m(0, i), m(1, i)};
  return out;
}

Eigen::MatrixXd latent_batch(int dim, int n, Rng& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd z(dim, n);
  for (int c = 0; c < n; ++c) {
    for (int r = 0; r < dim; ++r) z(r, c) = normal(rng);
  }
  return z;
}

/// Applies a per-sample loss to a row of discriminator scores. Returns the
/// batch mean and writes d mean / d score into `grad`. `generator` selects
/// the loss's generator-side form.
struct ScoreLoss {
  const LossFunction& loss;
  bool generator = false;

  double operator()(const Eigen::MatrixXd& scores, double label, Eigen::MatrixXd& grad) const {
    const auto n = scores.cols();
    grad.resize(1, n);
    double total = 0.0;
    const double inv_n = 1.0 / static_cast<double>(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      const double s = scores(0, i);
      double value;
      double slope;
      if (loss.expects_bounded_pred) {
        const double p = sigmoid(s);
        if (generator) {
          value = loss.generator_value(p);
          slope = loss.generator_slope(p);
        } else {
          value = loss.per_sample(label, p);
          slope = loss.gradient(label, p);
        }
        slope *= p * (1.0 - p);
      } else if (generator) {
        value = loss.generator_value(s);
        slope = loss.generator_slope(s);
      } else {
        value = loss.per_sample(label, s);
        slope = loss.gradient(label, s);
      }
      total += value;
      grad(0, i) = slope * inv_n;
    }
    return total * inv_n;
  }
};

bool all_finite(const std::vector<Mlp::Layer>& layers) {
  for (const auto& l : layers) {
    if (!l.weight.allFinite() || !l.bias.allFinite()) return false;
  }
  return true;
}

void evaluate_into(TrainedGan& gan, const GanConfig& config, const std::vector<Point>& reference,
                   const Eigen::MatrixXd& reference_matrix, int step, Rng& eval_rng) {
  const Eigen::MatrixXd z = latent_batch(config.latent_dim, config.eval_samples, eval_rng);
  const Eigen::MatrixXd fake = gan.generator.forward(z);
  gan.generated = to_points(fake);
  EvalPoint point{step, 0.0, 0.0};
  if (!fake.allFinite()) {
    point.fd = std::nan("");
    gan.degenerate = true;
  } else {
    point.fd = frechet_distance(reference, gan.generated);
    const Eigen::MatrixXd real_scores = gan.discriminator.forward(reference_matrix);
    const Eigen::MatrixXd fake_scores = gan.discriminator.forward(fake);
    std::vector<double> pr(static_cast<std::size_t>(real_scores.cols()));
    std::vector<double> pf(static_cast<std::size_t>(fake_scores.cols()));
    for (std::size_t i = 0; i < pr.size(); ++i) pr[i] = sigmoid(real_scores(0, static_cast<Eigen::Index>(i)));
    for (std::size_t i = 0; i < pf.size(); ++i) pf[i] = sigmoid(fake_scores(0, static_cast<Eigen::Index>(i)));
    point.disc_accuracy = discriminator_accuracy(pr, pf);
  }
  gan.history.push_back(point);
}

}  // namespace

TrainedGan train_gan(const GanConfig& config, const LossFunction& loss) {
  config.validate();
  const LossFunction bce = builtin_loss("bce");
  const LossFunction& disc_loss = config.loss_on == LossTarget::Generator ? bce : loss;
  const LossFunction& gen_loss = config.loss_on == LossTarget::Discriminator ? bce : loss;

  Rng init_rng(derive_seed(config.seed, 0));
  Rng data_rng(derive_seed(config.seed, 1));
  Rng eval_rng(derive_seed(config.seed, 2));

  TrainedGan gan;
  gan.generator = Mlp(config.gen_layers, config.leaky_slope, init_rng);
  gan.discriminator = Mlp(config.disc_layers, config.leaky_slope, init_rng);
  const AdamSettings adam{config.lr, config.beta1, config.beta2, 1e-8};
  Adam opt_g(gan.generator, adam);
  Adam opt_d(gan.discriminator, adam);

  const auto train_set = sample_dataset(config.dataset, config.dataset.n_samples, data_rng);
  gan.reference = sample_dataset(config.dataset, static_cast<std::size_t>(config.eval_samples), eval_rng);
  const Eigen::MatrixXd reference_matrix = to_matrix(gan.reference);

  evaluate_into(gan, config, gan.reference, reference_matrix, 0, eval_rng);

  const int batch = config.batch_size;
  Eigen::MatrixXd real(2, batch);
  Eigen::MatrixXd grad_real;
  Eigen::MatrixXd grad_fake;
  Mlp::Trace d_real_trace;
  Mlp::Trace d_fake_trace;
  Mlp::Trace g_trace;
  const ScoreLoss d_objective{disc_loss, false};
  const ScoreLoss g_objective{gen_loss, true};

  for (int step = 1; step <= config.steps && !gan.degenerate; ++step) {
    // Discriminator step.
    for (int c = 0; c < batch; ++c) {
      const auto& p = train_set[uniform_index(data_rng, train_set.size())];
      real(0, c) = p[0];
      real(1, c) = p[1];
    }
    const Eigen::MatrixXd fake = gan.generator.forward(latent_batch(config.latent_dim, batch, data_rng));
    const Eigen::MatrixXd s_real = gan.discriminator.forward(real, d_real_trace);
    const Eigen::MatrixXd s_fake = gan.discriminator.forward(fake, d_fake_trace);
    const double d_value =
        d_objective(s_real, 1.0, grad_real) + d_objective(s_fake, 0.0, grad_fake);
    auto d_grads = gan.discriminator.zero_gradients();
    gan.discriminator.backward(d_real_trace, grad_real, &d_grads);
    gan.discriminator.backward(d_fake_trace, grad_fake, &d_grads);
    if (!std::isfinite(d_value) || !all_finite(d_grads)) {
      gan.degenerate = true;
      break;
    }
    opt_d.step(gan.discriminator, d_grads);

    // Generator step through the updated discriminator.
    const Eigen::MatrixXd z = latent_batch(config.latent_dim, batch, data_rng);
    const Eigen::MatrixXd gen = gan.generator.forward(z, g_trace);
    const Eigen::MatrixXd s_gen = gan.discriminator.forward(gen, d_fake_trace);
    const double g_value = g_objective(s_gen, 1.0, grad_fake);
    const Eigen::MatrixXd grad_sample = gan.discriminator.backward(d_fake_trace, grad_fake, nullptr);
    auto g_grads = gan.generator.zero_gradients();
    gan.generator.backward(g_trace, grad_sample, &g_grads);
    if (!std::isfinite(g_value) || !all_finite(g_grads)) {
      gan.degenerate = true;
      break;
    }
    opt_g.step(gan.generator, g_grads);
    gan.steps_completed = step;

    if (step % config.eval_interval == 0 || step == config.steps) {
      evaluate_into(gan, config, gan.reference, reference_matrix, step, eval_rng);
    }
  }
  return gan;
}

TrainedGan train_gan(const GanConfig& config, const ExprTree& loss) {
  if (!has_both_variables(loss)) throw InvalidTree("loss must contain both yp and yr");
  return train_gan(config, loss_from_tree(serialize(loss), loss));
}

std::vector<Point> generate(const Mlp& generator, std::size_t n, Rng& rng) {
  return to_points(generator.forward(latent_batch(generator.input_width(), static_cast<int>(n), rng)));
}

std::vector<TrainedGan> train_runs(const LossFunction& loss, const GanConfig& config, int runs,
                                   std::uint64_t base_seed, int threads) {
  if (runs < 1) throw std::invalid_argument("runs must be >= 1");
  std::vector<TrainedGan> out(static_cast<std::size_t>(runs));
  parallel_for(out.size(), threads, [&](std::size_t r) {
    GanConfig cfg = config;
    cfg.seed = base_seed + r;
    out[r] = train_gan(cfg, loss);
  });
  return out;
}

FitnessRecord evaluate_fitness(const LossFunction& loss, const GanConfig& config, int runs,
                               std::uint64_t base_seed, double std_weight, int threads) {
  const auto trained = train_runs(loss, config, runs, base_seed, threads);
  std::vector<RunOutcome> outcomes;
  outcomes.reserve(trained.size());
  for (const auto& t : trained) outcomes.push_back(t.outcome());
  return make_fitness_record(outcomes, std_weight);
}

}  // namespace lossforge
