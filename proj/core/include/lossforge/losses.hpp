#pragma once

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "lossforge/expr.hpp"

namespace lossforge {

/// A per-sample GAN loss. `per_sample(y_real, y_pred)` is evaluated with the
/// sample's own label; a batch loss is the arithmetic mean over the batch.
struct LossFunction {
  using Scalar = std::function<double(double y_real, double y_pred)>;

  std::string name;
  Scalar per_sample;
  /// d per_sample / d y_pred.
  Scalar gradient;
  /// False when the loss reads the discriminator's pre-sigmoid score.
  bool expects_bounded_pred = true;
  /// Overrides used when training the generator. Unset means the generator
  /// applies per_sample with y_real = 1.
  Scalar generator_per_sample;
  Scalar generator_gradient;
  /// The loss as a tree, when it is expressible in the search grammar.
  std::optional<ExprTree> expression;

  double generator_value(double y_pred) const {
    return generator_per_sample ? generator_per_sample(1.0, y_pred) : per_sample(1.0, y_pred);
  }
  double generator_slope(double y_pred) const {
    return generator_gradient ? generator_gradient(1.0, y_pred) : gradient(1.0, y_pred);
  }
};

/// Wraps a loss tree: values come from evaluate(tree) and gradients from
/// evaluate(differentiate(tree)). Throws InvalidTree unless both variables
/// occur.
LossFunction loss_from_tree(std::string name, const ExprTree& tree, double eps = 1e-8);

namespace losses {

inline constexpr double kEpsilon = 1e-8;
inline constexpr double kGaneticAlpha = 3.985;

// Closed forms of the discovered losses, per sample.
double ganetic(double y_real, double y_pred);
double f1(double y_real, double y_pred);
double f2(double y_real, double y_pred);
double f3(double y_real, double y_pred);
double f4(double y_real, double y_pred);
double f5(double y_real, double y_pred);
double f6(double y_real, double y_pred);
double f7(double y_real, double y_pred);
double f8(double y_real, double y_pred);

// Baselines. bce, least_squares and adversarial_minimax take a probability;
// hinge and wasserstein take the raw discriminator score.
double bce(double y_real, double y_pred);
double least_squares(double y_real, double y_pred);
double hinge(double y_real, double score);
double wasserstein(double y_real, double score);
/// Discriminator side of the minimax game: -[y ln D + (1 - y) ln(1 - D)].
double adversarial_minimax(double y_real, double y_pred);
/// Generator side of the minimax game: ln(1 - D(G(z))).
double adversarial_minimax_generator(double y_pred);

/// S-expression for ganetic and f1..f8; empty for the baselines.
std::string_view expression_text(std::string_view name);

}  // namespace losses

/// Names accepted by builtin_loss(), in display order.
const std::vector<std::string>& builtin_loss_names();
/// Throws std::invalid_argument for an unknown name.
LossFunction builtin_loss(std::string_view name);

struct ShapeSample {
  double y_pred = 0.0;
  double loss = 0.0;
  double gradient = 0.0;
};

struct ShapeReport {
  int y_real = 1;
  std::vector<ShapeSample> samples;
  double argmin = 0.0;
  double min_value = 0.0;
};

/// Samples the loss and its gradient on a uniform grid of `grid_n` points
/// over [0, 1] and refines the grid minimum with golden-section search
/// (tolerance 1e-6). Requires grid_n >= 16.
ShapeReport shape_report(const LossFunction& loss, int y_real, int grid_n);

/// Golden-section minimization of `f` on [lo, hi] to the given bracket width.
double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                               double tol = 1e-6);

/// True when consecutive samples with y_pred in [from, to] strictly increase
/// (or strictly decrease, for the second overload).
bool strictly_increasing(const ShapeReport& report, double from, double to);
bool strictly_decreasing(const ShapeReport& report, double from, double to);

}  // namespace lossforge
