#include <optional>

#include "lossforge/expr.hpp"

namespace lossforge {

namespace {

using Maybe = std::optional<ExprTree>;  // nullopt: derivative is identically zero

ExprTree un(Op op, const ExprTree& a) { return ExprTree::unary(op, a); }
ExprTree bin(Op op, const ExprTree& a, const ExprTree& b) { return ExprTree::binary(op, a, b); }

Maybe derive(const ExprTree& tree, std::size_t at);

struct Operands {
  ExprTree u;
  Maybe du;
  std::optional<ExprTree> v;
  Maybe dv;
};

Operands operands(const ExprTree& tree, std::size_t at) {
  const std::size_t first = at + 1;
  Operands o{tree.subtree(first), derive(tree, first), std::nullopt, std::nullopt};
  if (arity(tree.node(at).op) == 2) {
    const std::size_t second = tree.subtree_end(first);
    o.v = tree.subtree(second);
    o.dv = derive(tree, second);
  }
  return o;
}

Maybe derive(const ExprTree& tree, std::size_t at) {
  const Op op = tree.node(at).op;
  switch (op) {
    case Op::VarPred: return ExprTree::constant(1.0);
    case Op::VarReal:
    case Op::Const:
    case Op::Sign: return std::nullopt;
    default: break;
  }

  auto [u, du, v, dv] = operands(tree, at);
  if (!du && !dv) return std::nullopt;

  switch (op) {
    case Op::Add:
      if (du && dv) return bin(Op::Add, *du, *dv);
      return du ? *du : *dv;
    case Op::Sub:
      if (du && dv) return bin(Op::Sub, *du, *dv);
      return du ? *du : un(Op::Neg, *dv);
    case Op::Mul: {
      if (du && dv) return bin(Op::Add, bin(Op::Mul, *du, *v), bin(Op::Mul, u, *dv));
      return du ? bin(Op::Mul, *du, *v) : bin(Op::Mul, u, *dv);
    }
    case Op::Div: {
      // d[u / (v + eps)] = du / (v + eps) - u dv / (v + eps)^2
      if (!dv) return bin(Op::Div, *du, *v);
      const ExprTree tail = bin(Op::Div, bin(Op::Div, bin(Op::Mul, u, *dv), *v), *v);
      return du ? bin(Op::Sub, bin(Op::Div, *du, *v), tail) : un(Op::Neg, tail);
    }
    case Op::Quot: {
      // d[u / v] = (du v - u dv) / v^2
      const ExprTree vv = bin(Op::Mul, *v, *v);
      if (!dv) return bin(Op::Quot, *du, *v);
      const ExprTree udv = bin(Op::Mul, u, *dv);
      const ExprTree num = du ? bin(Op::Sub, bin(Op::Mul, *du, *v), udv) : un(Op::Neg, udv);
      return bin(Op::Quot, num, vv);
    }
    case Op::Sqrt:
      // d sqrt(|u| + eps) = sign(u) du / (2 sqrt(|u| + eps)); the denominator
      // is at least 2 sqrt(eps) so raw division is safe.
      return bin(Op::Quot, bin(Op::Mul, un(Op::Sign, u), *du),
                 bin(Op::Mul, ExprTree::constant(2.0), un(Op::Sqrt, u)));
    case Op::Log:
      // d ln(|u| + eps) = sign(u) du / (|u| + eps)
      return bin(Op::Div, bin(Op::Mul, un(Op::Sign, u), *du), un(Op::Abs, u));
    case Op::Exp: return bin(Op::Mul, un(Op::Exp, u), *du);
    case Op::Sin: return bin(Op::Mul, un(Op::Cos, u), *du);
    case Op::Cos: return un(Op::Neg, bin(Op::Mul, un(Op::Sin, u), *du));
    case Op::Neg: return un(Op::Neg, *du);
    case Op::Abs: return bin(Op::Mul, un(Op::Sign, u), *du);
    default: break;
  }
  return std::nullopt;
}

}  // namespace

ExprTree differentiate(const ExprTree& tree) {
  if (auto d = derive(tree, 0)) return *std::move(d);
  return ExprTree::constant(0.0);
}

}  // namespace lossforge
