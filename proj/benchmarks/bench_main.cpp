#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "lossforge/expr.hpp"
#include "lossforge/gan.hpp"
#include "lossforge/losses.hpp"
#include "lossforge/metrics.hpp"
#include "lossforge/network.hpp"

using namespace lossforge;

namespace {

const ExprTree& ganetic_tree() {
  static const ExprTree tree = parse("(add (mul (mul yp yp) yp) (sqrt (mul 3.985 (div yr yp))))");
  return tree;
}

void BM_Evaluate(benchmark::State& state) {
  const auto& tree = ganetic_tree();
  double p = 0.25;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(tree, p, 1.0));
    p = p < 0.9 ? p + 1e-3 : 0.25;
  }
}
BENCHMARK(BM_Evaluate);

void BM_EvaluateRandomTree(benchmark::State& state) {
  Rng rng(1);
  std::vector<ExprTree> trees;
  for (int i = 0; i < 64; ++i) trees.push_back(random_tree(GenConstraints{}, rng));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(evaluate(trees[i++ % trees.size()], 0.4, 0.0));
  }
}
BENCHMARK(BM_EvaluateRandomTree);

void BM_Differentiate(benchmark::State& state) {
  Rng rng(2);
  std::vector<ExprTree> trees;
  for (int i = 0; i < 64; ++i) trees.push_back(random_tree(GenConstraints{}, rng));
  std::size_t i = 0;
  for (auto _ : state) {
    benchmark::DoNotOptimize(differentiate(trees[i++ % trees.size()]));
  }
}
BENCHMARK(BM_Differentiate);

void BM_FrechetDistance(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n01;
  std::vector<Point> a(n), b(n);
  for (auto& p : a) p = {n01(rng), n01(rng)};
  for (auto& p : b) p = {1.0 + n01(rng), n01(rng)};
  for (auto _ : state) benchmark::DoNotOptimize(frechet_distance(a, b));
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * n));
}
BENCHMARK(BM_FrechetDistance)->Arg(1024)->Arg(100000);

// One optimizer step of the default discriminator on a 128-sample batch.
void BM_DiscriminatorStep(benchmark::State& state) {
  Rng rng(4);
  const GanConfig cfg;
  Mlp net(cfg.disc_layers, cfg.leaky_slope, rng);
  Adam adam(net, AdamSettings{});
  const Eigen::MatrixXd x = Eigen::MatrixXd::Random(2, cfg.batch_size);
  const Eigen::MatrixXd grad_out = Eigen::MatrixXd::Constant(1, cfg.batch_size, 1.0 / cfg.batch_size);
  for (auto _ : state) {
    Mlp::Trace trace;
    net.forward(x, trace);
    auto grads = net.zero_gradients();
    net.backward(trace, grad_out, &grads);
    adam.step(net, grads);
  }
}
BENCHMARK(BM_DiscriminatorStep);

// Full alternating GAN training, reported per step.
void BM_GanTrainSteps(benchmark::State& state) {
  GanConfig cfg;
  cfg.steps = static_cast<int>(state.range(0));
  cfg.eval_interval = cfg.steps;
  const auto loss = builtin_loss("ganetic");
  for (auto _ : state) benchmark::DoNotOptimize(train_gan(cfg, loss).final_fd());
  state.SetItemsProcessed(static_cast<std::int64_t>(state.iterations() * cfg.steps));
}
BENCHMARK(BM_GanTrainSteps)->Arg(200)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
