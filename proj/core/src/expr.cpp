#include "lossforge/expr.hpp"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <string>

namespace lossforge {

namespace {

constexpr std::array kSearchOperators{Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Sqrt,
                                      Op::Log, Op::Exp, Op::Sin, Op::Cos};
constexpr std::array kBinaryOperators{Op::Add, Op::Sub, Op::Mul, Op::Div};
constexpr std::array kUnaryOperators{Op::Sqrt, Op::Log, Op::Exp, Op::Sin, Op::Cos};
// Grow picks uniformly among operators and the three terminal kinds.
constexpr std::size_t kTerminalKinds = 3;

}  // namespace

int arity(Op op) noexcept {
  switch (op) {
    case Op::Add:
    case Op::Sub:
    case Op::Mul:
    case Op::Div:
    case Op::Quot:
      return 2;
    case Op::Sqrt:
    case Op::Log:
    case Op::Exp:
    case Op::Sin:
    case Op::Cos:
    case Op::Neg:
    case Op::Sign:
    case Op::Abs:
      return 1;
    case Op::VarPred:
    case Op::VarReal:
    case Op::Const:
      return 0;
  }
  return 0;
}

bool is_terminal(Op op) noexcept { return arity(op) == 0; }

bool is_search_operator(Op op) noexcept {
  return std::find(kSearchOperators.begin(), kSearchOperators.end(), op) != kSearchOperators.end();
}

std::string_view op_name(Op op) noexcept {
  switch (op) {
    case Op::Add: return "add";
    case Op::Sub: return "sub";
    case Op::Mul: return "mul";
    case Op::Div: return "div";
    case Op::Sqrt: return "sqrt";
    case Op::Log: return "log";
    case Op::Exp: return "exp";
    case Op::Sin: return "sin";
    case Op::Cos: return "cos";
    case Op::VarPred: return "yp";
    case Op::VarReal: return "yr";
    case Op::Const: return "const";
    case Op::Neg: return "neg";
    case Op::Sign: return "sgn";
    case Op::Abs: return "abs";
    case Op::Quot: return "quot";
  }
  return "?";
}

bool operator==(const Node& a, const Node& b) noexcept {
  if (a.op != b.op) return false;
  return a.op != Op::Const || std::bit_cast<std::uint64_t>(a.value) == std::bit_cast<std::uint64_t>(b.value);
}

// ---------------------------------------------------------------------------
// ExprTree

ExprTree::ExprTree(std::vector<Node> prefix) : nodes_(std::move(prefix)) {
  if (nodes_.empty()) throw InvalidTree("empty expression");
  // Walk the prefix sequence with a count of still-open child slots.
  std::size_t open = 1;
  for (std::size_t i = 0; i < nodes_.size(); ++i) {
    if (open == 0) throw InvalidTree("trailing nodes after a complete expression");
    const Node& n = nodes_[i];
    if (n.op == Op::Const && !std::isfinite(n.value)) throw InvalidTree("non-finite constant");
    open = open - 1 + static_cast<std::size_t>(arity(n.op));
  }
  if (open != 0) throw InvalidTree("expression is missing operands");
  height_ = measure(nodes_).height;
}

ExprTree ExprTree::var_pred() { return ExprTree({Node{Op::VarPred}}); }
ExprTree ExprTree::var_real() { return ExprTree({Node{Op::VarReal}}); }
ExprTree ExprTree::constant(double value) { return ExprTree({Node{Op::Const, value}}); }

ExprTree ExprTree::unary(Op op, const ExprTree& child) {
  if (arity(op) != 1) throw InvalidTree(std::string(op_name(op)) + " is not unary");
  std::vector<Node> nodes;
  nodes.reserve(child.size() + 1);
  nodes.push_back(Node{op});
  nodes.insert(nodes.end(), child.nodes_.begin(), child.nodes_.end());
  return ExprTree(std::move(nodes));
}

ExprTree ExprTree::binary(Op op, const ExprTree& lhs, const ExprTree& rhs) {
  if (arity(op) != 2) throw InvalidTree(std::string(op_name(op)) + " is not binary");
  std::vector<Node> nodes;
  nodes.reserve(lhs.size() + rhs.size() + 1);
  nodes.push_back(Node{op});
  nodes.insert(nodes.end(), lhs.nodes_.begin(), lhs.nodes_.end());
  nodes.insert(nodes.end(), rhs.nodes_.begin(), rhs.nodes_.end());
  return ExprTree(std::move(nodes));
}

std::size_t ExprTree::subtree_end(std::size_t i) const {
  if (i >= nodes_.size()) throw std::out_of_range("node index out of range");
  std::size_t open = 1;
  std::size_t j = i;
  while (open > 0) {
    open = open - 1 + static_cast<std::size_t>(arity(nodes_[j].op));
    ++j;
  }
  return j;
}

ExprTree ExprTree::subtree(std::size_t i) const {
  const auto end = subtree_end(i);
  return ExprTree(std::vector<Node>(nodes_.begin() + static_cast<std::ptrdiff_t>(i),
                                    nodes_.begin() + static_cast<std::ptrdiff_t>(end)));
}

ExprTree ExprTree::replace_subtree(std::size_t i, const ExprTree& replacement) const {
  const auto end = subtree_end(i);
  std::vector<Node> out;
  out.reserve(nodes_.size() - (end - i) + replacement.size());
  out.insert(out.end(), nodes_.begin(), nodes_.begin() + static_cast<std::ptrdiff_t>(i));
  out.insert(out.end(), replacement.nodes_.begin(), replacement.nodes_.end());
  out.insert(out.end(), nodes_.begin() + static_cast<std::ptrdiff_t>(end), nodes_.end());
  return ExprTree(std::move(out));
}

int ExprTree::depth_of(std::size_t i) const {
  if (i >= nodes_.size()) throw std::out_of_range("node index out of range");
  // Stack of remaining child slots per open ancestor.
  std::vector<int> slots;
  for (std::size_t j = 0; j < i; ++j) {
    while (!slots.empty() && slots.back() == 0) slots.pop_back();
    if (!slots.empty()) --slots.back();
    const int a = arity(nodes_[j].op);
    if (a > 0) slots.push_back(a);
  }
  while (!slots.empty() && slots.back() == 0) slots.pop_back();
  return static_cast<int>(slots.size());
}

bool ExprTree::contains(Op op) const noexcept {
  return std::any_of(nodes_.begin(), nodes_.end(), [op](const Node& n) { return n.op == op; });
}

std::size_t ExprTree::count(Op op) const noexcept {
  return static_cast<std::size_t>(
      std::count_if(nodes_.begin(), nodes_.end(), [op](const Node& n) { return n.op == op; }));
}

Shape measure(std::span<const Node> prefix) {
  // Depth of the next node equals the number of ancestors with open slots.
  std::vector<int> slots;
  int height = 0;
  for (const Node& n : prefix) {
    while (!slots.empty() && slots.back() == 0) slots.pop_back();
    const int depth = static_cast<int>(slots.size());
    height = std::max(height, depth + 1);
    if (!slots.empty()) --slots.back();
    const int a = arity(n.op);
    if (a > 0) slots.push_back(a);
  }
  return Shape{prefix.size(), height};
}

// ---------------------------------------------------------------------------
// Constraints and validity

void GenConstraints::validate() const {
  if (min_height < 1) throw std::invalid_argument("min_height must be >= 1");
  if (max_size < 3) {
    throw std::invalid_argument(
        "max_size must be >= 3: a loss needs y_pred and y_real under one operator");
  }
  if (min_height < 63 && max_size < ((std::size_t{1} << min_height) - 1)) {
    throw std::invalid_argument("max_size must be >= 2^min_height - 1");
  }
  if (!(const_low < const_high)) throw std::invalid_argument("const_low must be < const_high");
  if (!(epsilon > 0.0)) throw std::invalid_argument("epsilon must be > 0");
  if (max_init_height < min_height) {
    throw std::invalid_argument("max_init_height must be >= min_height");
  }
  if (mutation_subtree_height < 1) throw std::invalid_argument("mutation_subtree_height must be >= 1");
}

bool has_both_variables(const ExprTree& tree) noexcept {
  return tree.contains(Op::VarPred) && tree.contains(Op::VarReal);
}

bool is_valid_loss(const ExprTree& tree, const GenConstraints& constraints) noexcept {
  if (tree.size() > constraints.max_size || !has_both_variables(tree)) return false;
  return std::all_of(tree.nodes().begin(), tree.nodes().end(), [](const Node& n) {
    return is_search_operator(n.op) || is_terminal(n.op);
  });
}

void require_valid_loss(const ExprTree& tree, const GenConstraints& constraints) {
  if (tree.size() > constraints.max_size) {
    throw InvalidTree("tree size " + std::to_string(tree.size()) + " exceeds max_size " +
                      std::to_string(constraints.max_size));
  }
  if (!tree.contains(Op::VarPred)) throw InvalidTree("loss must contain yp");
  if (!tree.contains(Op::VarReal)) throw InvalidTree("loss must contain yr");
  for (const Node& n : tree.nodes()) {
    if (!is_search_operator(n.op) && !is_terminal(n.op)) {
      throw InvalidTree("operator '" + std::string(op_name(n.op)) + "' is not allowed in a loss");
    }
  }
}

std::optional<ExprTree> repair_variables(const ExprTree& tree, const GenConstraints& constraints,
                                         Rng& rng) {
  ExprTree current = tree;
  for (const Op wanted : {Op::VarPred, Op::VarReal}) {
    if (current.contains(wanted)) continue;
    std::vector<std::size_t> replaceable;
    std::vector<std::size_t> leaves;
    for (std::size_t i = 0; i < current.size(); ++i) {
      const Op op = current.node(i).op;
      if (!is_terminal(op)) continue;
      leaves.push_back(i);
      if (op == Op::Const || current.count(op) >= 2) replaceable.push_back(i);
    }
    const Node var{wanted};
    if (!replaceable.empty()) {
      const auto at = replaceable[uniform_index(rng, replaceable.size())];
      current = current.replace_subtree(at, ExprTree({var}));
      continue;
    }
    if (current.size() + 2 > constraints.max_size) return std::nullopt;
    const auto at = leaves[uniform_index(rng, leaves.size())];
    const Op op = random_operator_of_arity(2, rng);
    current = current.replace_subtree(
        at, ExprTree::binary(op, current.subtree(at), ExprTree({var})));
  }
  return current;
}

// ---------------------------------------------------------------------------
// Random generation

Node random_terminal(const GenConstraints& constraints, Rng& rng) {
  switch (uniform_index(rng, kTerminalKinds)) {
    case 0: return Node{Op::VarPred};
    case 1: return Node{Op::VarReal};
    default: return Node{Op::Const, uniform_real(rng, constraints.const_low, constraints.const_high)};
  }
}

Op random_operator(Rng& rng) { return kSearchOperators[uniform_index(rng, kSearchOperators.size())]; }

Op random_operator_of_arity(int n, Rng& rng) {
  if (n == 2) return kBinaryOperators[uniform_index(rng, kBinaryOperators.size())];
  if (n == 1) return kUnaryOperators[uniform_index(rng, kUnaryOperators.size())];
  throw std::invalid_argument("operators have arity 1 or 2");
}

namespace {

void emit_random(std::vector<Node>& out, int depth, int min_height, int max_height, bool full,
                 const GenConstraints& constraints, Rng& rng) {
  const int level = depth + 1;
  bool terminal;
  if (level >= max_height) {
    terminal = true;
  } else if (full || level < min_height) {
    terminal = false;
  } else {
    terminal = uniform_index(rng, kSearchOperators.size() + kTerminalKinds) < kTerminalKinds;
  }
  if (terminal) {
    out.push_back(random_terminal(constraints, rng));
    return;
  }
  const Op op = random_operator(rng);
  out.push_back(Node{op});
  for (int c = 0; c < arity(op); ++c) {
    emit_random(out, depth + 1, min_height, max_height, full, constraints, rng);
  }
}

}  // namespace

ExprTree grow_tree(int min_height, int max_height, const GenConstraints& constraints, Rng& rng) {
  std::vector<Node> out;
  emit_random(out, 0, min_height, std::max(min_height, max_height), false, constraints, rng);
  return ExprTree(std::move(out));
}

ExprTree full_tree(int height, const GenConstraints& constraints, Rng& rng) {
  std::vector<Node> out;
  emit_random(out, 0, height, height, true, constraints, rng);
  return ExprTree(std::move(out));
}

ExprTree random_tree(const GenConstraints& constraints, Rng& rng) {
  constraints.validate();
  const auto span = static_cast<std::size_t>(constraints.max_init_height - constraints.min_height + 1);
  for (int attempt = 0;; ++attempt) {
    // Ramp down to the minimum height if the size cap keeps rejecting trees.
    const int height = attempt < 100
                           ? constraints.min_height + static_cast<int>(uniform_index(rng, span))
                           : constraints.min_height;
    const bool full = bernoulli(rng, 0.5);
    ExprTree tree = full ? full_tree(height, constraints, rng)
                         : grow_tree(constraints.min_height, height, constraints, rng);
    if (tree.size() > constraints.max_size) continue;
    if (auto repaired = repair_variables(tree, constraints, rng)) return *std::move(repaired);
  }
}

// ---------------------------------------------------------------------------
// Evaluation

double evaluate(const ExprTree& tree, double y_pred, double y_real, double eps) {
  thread_local std::vector<double> stack;
  stack.clear();
  const auto nodes = tree.nodes();
  // Reverse prefix order: both operands are on the stack when an operator is
  // reached, with the first operand on top.
  for (std::size_t k = nodes.size(); k-- > 0;) {
    const Node& n = nodes[k];
    switch (n.op) {
      case Op::VarPred: stack.push_back(y_pred); break;
      case Op::VarReal: stack.push_back(y_real); break;
      case Op::Const: stack.push_back(n.value); break;
      default: {
        if (arity(n.op) == 1) {
          double& x = stack.back();
          switch (n.op) {
            case Op::Sqrt: x = std::sqrt(std::fabs(x) + eps); break;
            case Op::Log: x = std::log(std::fabs(x) + eps); break;
            case Op::Exp: x = std::exp(x); break;
            case Op::Sin: x = std::sin(x); break;
            case Op::Cos: x = std::cos(x); break;
            case Op::Neg: x = -x; break;
            case Op::Sign: x = static_cast<double>((x > 0.0) - (x < 0.0)); break;
            case Op::Abs: x = std::fabs(x); break;
            default: break;
          }
        } else {
          const double a = stack.back();
          stack.pop_back();
          double& b = stack.back();
          switch (n.op) {
            case Op::Add: b = a + b; break;
            case Op::Sub: b = a - b; break;
            case Op::Mul: b = a * b; break;
            case Op::Div: b = a / (b + eps); break;
            case Op::Quot: b = a / b; break;
            default: break;
          }
        }
      }
    }
  }
  return stack.back();
}

}  // namespace lossforge
