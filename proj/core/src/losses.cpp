#include "lossforge/losses.hpp"

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>

namespace lossforge {

namespace losses {

namespace {

constexpr double kEps = kEpsilon;

double cube(double x) { return x * x * x; }
double psqrt(double x) { return std::sqrt(std::fabs(x) + kEps); }
double plog(double x) { return std::log(std::fabs(x) + kEps); }

}  // namespace

double ganetic(double y_real, double y_pred) {
  return cube(y_pred) + psqrt(kGaneticAlpha * (y_real / (y_pred + kEps)));
}

double f1(double y_real, double y_pred) {
  return std::exp(2.2061) + std::sin(1.7577) + cube(y_real - 4.092) - plog(y_real - y_pred);
}

double f2(double y_real, double y_pred) { return std::exp(std::cos(psqrt(y_real - y_pred))); }

double f3(double y_real, double y_pred) { return cube(psqrt(y_real + plog(y_pred))); }

double f4(double y_real, double y_pred) { return ganetic(y_real, y_pred); }

double f5(double y_real, double y_pred) {
  return cube(psqrt(plog(y_pred))) +
         plog(cube(y_pred)) / (3.6278 * y_real * (y_pred * y_pred) + kEps);
}

double f6(double y_real, double y_pred) {
  const double d = y_pred - y_real;
  return std::exp(std::cos(y_pred) - y_pred * y_pred) * ((d * d) * (d * d));
}

double f7(double y_real, double y_pred) {
  const double s = y_real + y_pred;
  return std::sin(1.0657 * y_real + 0.4129 / (y_pred + kEps)) + std::cos(s * s);
}

double f8(double y_real, double y_pred) {
  const double c = std::cos(y_real);
  return y_pred * (c * c) * plog(y_real * y_pred) - psqrt(plog(y_pred));
}

double bce(double y_real, double y_pred) {
  return -(y_real * std::log(y_pred + kEps) + (1.0 - y_real) * std::log(1.0 - y_pred + kEps));
}

double least_squares(double y_real, double y_pred) {
  const double d = y_pred - y_real;
  return d * d;
}

double hinge(double y_real, double score) {
  return y_real > 0.5 ? std::max(0.0, 1.0 - score) : std::max(0.0, 1.0 + score);
}

double wasserstein(double y_real, double score) { return y_real > 0.5 ? -score : score; }

double adversarial_minimax(double y_real, double y_pred) { return bce(y_real, y_pred); }

double adversarial_minimax_generator(double y_pred) { return std::log(1.0 - y_pred + kEps); }

std::string_view expression_text(std::string_view name) {
  // Each tree mirrors its closed form operation for operation.
  if (name == "ganetic" || name == "f4") {
    return "(add (mul (mul yp yp) yp) (sqrt (mul 3.985 (div yr yp))))";
  }
  if (name == "f1") {
    return "(sub (add (add (exp 2.2061) (sin 1.7577))"
           " (mul (mul (sub yr 4.092) (sub yr 4.092)) (sub yr 4.092)))"
           " (log (sub yr yp)))";
  }
  if (name == "f2") return "(exp (cos (sqrt (sub yr yp))))";
  if (name == "f3") {
    return "(mul (mul (sqrt (add yr (log yp))) (sqrt (add yr (log yp))))"
           " (sqrt (add yr (log yp))))";
  }
  if (name == "f5") {
    return "(add (mul (mul (sqrt (log yp)) (sqrt (log yp))) (sqrt (log yp)))"
           " (div (log (mul (mul yp yp) yp)) (mul (mul 3.6278 yr) (mul yp yp))))";
  }
  if (name == "f6") {
    return "(mul (exp (sub (cos yp) (mul yp yp)))"
           " (mul (mul (sub yp yr) (sub yp yr)) (mul (sub yp yr) (sub yp yr))))";
  }
  if (name == "f7") {
    return "(add (sin (add (mul 1.0657 yr) (div 0.4129 yp)))"
           " (cos (mul (add yr yp) (add yr yp))))";
  }
  if (name == "f8") {
    return "(sub (mul (mul yp (mul (cos yr) (cos yr))) (log (mul yr yp)))"
           " (sqrt (log yp)))";
  }
  return {};
}

}  // namespace losses

LossFunction loss_from_tree(std::string name, const ExprTree& tree, double eps) {
  if (!has_both_variables(tree)) throw InvalidTree("loss must contain both yp and yr");
  auto value = std::make_shared<const ExprTree>(tree);
  auto slope = std::make_shared<const ExprTree>(differentiate(tree));
  LossFunction loss;
  loss.name = std::move(name);
  loss.per_sample = [value, eps](double y_real, double y_pred) {
    return evaluate(*value, y_pred, y_real, eps);
  };
  loss.gradient = [slope, eps](double y_real, double y_pred) {
    return evaluate(*slope, y_pred, y_real, eps);
  };
  loss.expression = tree;
  return loss;
}

const std::vector<std::string>& builtin_loss_names() {
  static const std::vector<std::string> names{
      "ganetic", "f1",  "f2",    "f3",            "f4",          "f5",         "f6",
      "f7",      "f8",  "bce",   "least_squares", "hinge",       "wasserstein", "adversarial"};
  return names;
}

LossFunction builtin_loss(std::string_view name) {
  using namespace losses;
  if (const auto text = expression_text(name); !text.empty()) {
    return loss_from_tree(std::string(name), parse(text), kEpsilon);
  }
  LossFunction loss;
  if (name == "lsgan") loss.name = "least_squares";
  else if (name == "adversarial_minimax") loss.name = "adversarial";
  else loss.name = std::string(name);
  if (name == "bce") {
    loss.per_sample = bce;
    loss.gradient = [](double y, double p) {
      return -(y / (p + kEpsilon) - (1.0 - y) / (1.0 - p + kEpsilon));
    };
  } else if (name == "least_squares" || name == "lsgan") {
    loss.per_sample = least_squares;
    loss.gradient = [](double y, double p) { return 2.0 * (p - y); };
  } else if (name == "hinge") {
    loss.per_sample = hinge;
    loss.gradient = [](double y, double s) {
      if (y > 0.5) return s < 1.0 ? -1.0 : 0.0;
      return s > -1.0 ? 1.0 : 0.0;
    };
    loss.expects_bounded_pred = false;
  } else if (name == "wasserstein") {
    loss.per_sample = wasserstein;
    loss.gradient = [](double y, double) { return y > 0.5 ? -1.0 : 1.0; };
    loss.expects_bounded_pred = false;
  } else if (name == "adversarial" || name == "adversarial_minimax") {
    loss.per_sample = adversarial_minimax;
    loss.gradient = [](double y, double p) {
      return -(y / (p + kEpsilon) - (1.0 - y) / (1.0 - p + kEpsilon));
    };
    loss.generator_per_sample = [](double, double p) { return adversarial_minimax_generator(p); };
    loss.generator_gradient = [](double, double p) { return -1.0 / (1.0 - p + kEpsilon); };
  } else {
    std::string known;
    for (const auto& n : builtin_loss_names()) known += (known.empty() ? "" : ", ") + n;
    throw std::invalid_argument("unknown loss '" + std::string(name) + "' (known: " + known + ")");
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Shape analysis

double golden_section_minimize(const std::function<double(double)>& f, double lo, double hi,
                               double tol) {
  const double inv_phi = (std::sqrt(5.0) - 1.0) / 2.0;
  double a = lo;
  double b = hi;
  double c = b - inv_phi * (b - a);
  double d = a + inv_phi * (b - a);
  double fc = f(c);
  double fd = f(d);
  while (b - a > tol) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - inv_phi * (b - a);
      fc = f(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + inv_phi * (b - a);
      fd = f(d);
    }
  }
  return (a + b) / 2.0;
}

ShapeReport shape_report(const LossFunction& loss, int y_real, int grid_n) {
  if (grid_n < 16) throw std::invalid_argument("grid_n must be >= 16");
  if (y_real != 0 && y_real != 1) throw std::invalid_argument("y_real must be 0 or 1");
  const double label = y_real;
  ShapeReport report;
  report.y_real = y_real;
  report.samples.reserve(static_cast<std::size_t>(grid_n));
  std::size_t best = 0;
  for (int i = 0; i < grid_n; ++i) {
    const double p = static_cast<double>(i) / static_cast<double>(grid_n - 1);
    ShapeSample s{p, loss.per_sample(label, p), loss.gradient(label, p)};
    if (!report.samples.empty() && s.loss < report.samples[best].loss) best = report.samples.size();
    report.samples.push_back(s);
  }

  const auto f = [&](double p) { return loss.per_sample(label, p); };
  const double lo = report.samples[best == 0 ? 0 : best - 1].y_pred;
  const double hi = report.samples[std::min(best + 1, report.samples.size() - 1)].y_pred;
  const double refined = golden_section_minimize(f, lo, hi);

  // Minima on the domain boundary are reported exactly at the boundary.
  double argmin = refined;
  double min_value = f(refined);
  for (const double edge : {lo, hi}) {
    const double v = f(edge);
    if (v < min_value) {
      argmin = edge;
      min_value = v;
    }
  }
  report.argmin = argmin;
  report.min_value = min_value;
  return report;
}

namespace {

template <typename Cmp>
bool monotone(const ShapeReport& report, double from, double to, Cmp cmp) {
  const ShapeSample* prev = nullptr;
  for (const auto& s : report.samples) {
    if (s.y_pred < from || s.y_pred > to) continue;
    if (prev != nullptr && !cmp(prev->loss, s.loss)) return false;
    prev = &s;
  }
  return true;
}

}  // namespace

bool strictly_increasing(const ShapeReport& report, double from, double to) {
  return monotone(report, from, to, [](double a, double b) { return a < b; });
}

bool strictly_decreasing(const ShapeReport& report, double from, double to) {
  return monotone(report, from, to, [](double a, double b) { return a > b; });
}

}  // namespace lossforge
