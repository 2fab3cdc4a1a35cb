#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "lossforge/random.hpp"

namespace lossforge {

// Node kinds. The first nine operators plus the three terminals form the
// search space of loss functions. Neg, Sign, Abs and Quot appear only in
// gradient programs produced by differentiate().
enum class Op : std::uint8_t {
  Add,
  Sub,
  Mul,
  Div,
  Sqrt,
  Log,
  Exp,
  Sin,
  Cos,
  VarPred,
  VarReal,
  Const,
  Neg,
  Sign,
  Abs,
  Quot,
};

int arity(Op op) noexcept;
bool is_terminal(Op op) noexcept;
/// True for the operators a random loss tree may contain.
bool is_search_operator(Op op) noexcept;
std::string_view op_name(Op op) noexcept;

struct Node {
  Op op = Op::Const;
  double value = 0.0;  // meaningful only for Op::Const

  /// Bitwise comparison of constants so that structural identity is exact.
  friend bool operator==(const Node& a, const Node& b) noexcept;
};

class InvalidTree : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t byte)
      : std::runtime_error(what), byte_(byte) {}
  /// 1-based byte offset of the offending input position.
  std::size_t byte() const noexcept { return byte_; }

 private:
  std::size_t byte_;
};

/// An immutable expression tree stored in prefix order. A subtree always
/// occupies a contiguous range of nodes, which keeps crossover and mutation
/// simple index arithmetic.
class ExprTree {
 public:
  /// Throws InvalidTree unless `prefix` encodes exactly one well-formed tree
  /// with finite constants.
  explicit ExprTree(std::vector<Node> prefix);

  static ExprTree var_pred();
  static ExprTree var_real();
  static ExprTree constant(double value);
  static ExprTree unary(Op op, const ExprTree& child);
  static ExprTree binary(Op op, const ExprTree& lhs, const ExprTree& rhs);

  std::span<const Node> nodes() const noexcept { return nodes_; }
  const Node& node(std::size_t i) const { return nodes_.at(i); }
  const Node& root() const noexcept { return nodes_.front(); }
  std::size_t size() const noexcept { return nodes_.size(); }
  int height() const noexcept { return height_; }

  /// One past the last node of the subtree rooted at `i`.
  std::size_t subtree_end(std::size_t i) const;
  ExprTree subtree(std::size_t i) const;
  ExprTree replace_subtree(std::size_t i, const ExprTree& replacement) const;
  /// Depth of node `i` (root has depth 0).
  int depth_of(std::size_t i) const;

  bool contains(Op op) const noexcept;
  std::size_t count(Op op) const noexcept;

  friend bool operator==(const ExprTree& a, const ExprTree& b) noexcept {
    return a.nodes_ == b.nodes_;
  }

 private:
  std::vector<Node> nodes_;
  int height_ = 0;
};

struct Shape {
  std::size_t size = 0;
  int height = 0;
  friend bool operator==(const Shape&, const Shape&) = default;
};

/// Node count and level count (a lone node has height 1), recomputed from
/// the nodes rather than read from the cache.
Shape measure(std::span<const Node> prefix);
inline Shape measure(const ExprTree& tree) { return measure(tree.nodes()); }

struct GenConstraints {
  int min_height = 2;
  std::size_t max_size = 100;
  double const_low = -5.0;
  double const_high = 5.0;
  double epsilon = 1e-8;
  /// Upper height for ramped half-and-half initialization.
  int max_init_height = 6;
  /// Height bound of the random subtree inserted by subtree mutation.
  int mutation_subtree_height = 4;

  /// Throws std::invalid_argument describing the first violated rule.
  void validate() const;
};

bool has_both_variables(const ExprTree& tree) noexcept;
bool is_valid_loss(const ExprTree& tree, const GenConstraints& constraints) noexcept;
/// Throws InvalidTree if the tree exceeds max_size or misses a variable.
void require_valid_loss(const ExprTree& tree, const GenConstraints& constraints);

/// Restores the both-variables rule. A missing variable overwrites a
/// uniformly chosen leaf that is not the only occurrence of the other
/// variable; a tree with no such leaf gets one leaf widened into
/// (op leaf var). Returns nullopt when the size cap leaves no room.
std::optional<ExprTree> repair_variables(const ExprTree& tree, const GenConstraints& constraints,
                                         Rng& rng);

/// Grow method: interior nodes while below `min_height`, then a mix of
/// operators and terminals up to `max_height`.
ExprTree grow_tree(int min_height, int max_height, const GenConstraints& constraints, Rng& rng);
/// Full method: operators on every level above `height`, terminals at it.
ExprTree full_tree(int height, const GenConstraints& constraints, Rng& rng);
Node random_terminal(const GenConstraints& constraints, Rng& rng);
Op random_operator(Rng& rng);
Op random_operator_of_arity(int n, Rng& rng);

/// Ramped half-and-half initialization followed by variable repair.
/// The result always satisfies is_valid_loss().
ExprTree random_tree(const GenConstraints& constraints, Rng& rng);

/// Protected evaluation:
///   div(a, b)  = a / (b + eps)
///   sqrt(x)    = sqrt(|x| + eps)
///   log(x)     = ln(|x| + eps)
/// Other operators are unprotected; exp overflow yields +inf which callers
/// must detect.
double evaluate(const ExprTree& tree, double y_pred, double y_real, double eps = 1e-8);

/// Symbolic derivative with respect to y_pred of the protected expression.
/// eps terms are constants and d|x|/dx = sign(x) with sign(0) = 0. The
/// result is a gradient program, not a loss individual.
ExprTree differentiate(const ExprTree& tree);

/// Prefix s-expression, e.g. "(add yp 3.985)". Constants use the shortest
/// decimal that round-trips exactly.
std::string serialize(const ExprTree& tree);

/// Parses any well-formed program, including gradient-only operators.
ExprTree parse_program(std::string_view text);
/// Parses a loss tree; throws InvalidTree if a required variable is absent.
ExprTree parse(std::string_view text);

}  // namespace lossforge
