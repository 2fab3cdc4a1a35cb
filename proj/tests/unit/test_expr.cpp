#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "lossforge/expr.hpp"

namespace lossforge {
namespace {

ExprTree yp() { return ExprTree::var_pred(); }
ExprTree yr() { return ExprTree::var_real(); }
ExprTree c(double v) { return ExprTree::constant(v); }
ExprTree bin(Op op, const ExprTree& a, const ExprTree& b) { return ExprTree::binary(op, a, b); }
ExprTree un(Op op, const ExprTree& a) { return ExprTree::unary(op, a); }

TEST(ExprTree, MeasureExamples) {
  EXPECT_EQ(measure(std::vector<Node>{{Op::Const, 1.0}}), (Shape{1, 1}));
  EXPECT_EQ(measure(bin(Op::Add, yp(), yr())), (Shape{3, 2}));
  EXPECT_EQ(measure(bin(Op::Add, bin(Op::Mul, yp(), yr()), c(2.0))), (Shape{5, 3}));
}

TEST(ExprTree, CachesMatchRecomputedShape) {
  Rng rng(3);
  const GenConstraints cons;
  for (int i = 0; i < 200; ++i) {
    const auto t = random_tree(cons, rng);
    const auto s = measure(t.nodes());
    EXPECT_EQ(t.size(), s.size);
    EXPECT_EQ(t.height(), s.height);
  }
}

TEST(ExprTree, RejectsBadPrefix) {
  EXPECT_THROW(ExprTree(std::vector<Node>{}), InvalidTree);
  EXPECT_THROW(ExprTree(std::vector<Node>{{Op::Add, 0}, {Op::VarPred, 0}}), InvalidTree);
  EXPECT_THROW(ExprTree(std::vector<Node>{{Op::VarPred, 0}, {Op::VarReal, 0}}), InvalidTree);
  EXPECT_THROW(ExprTree::constant(std::nan("")), InvalidTree);
  EXPECT_THROW(ExprTree::constant(INFINITY), InvalidTree);
}

TEST(ExprTree, SubtreeOperations) {
  const auto t = bin(Op::Add, bin(Op::Mul, yp(), yr()), un(Op::Sin, c(2.0)));
  EXPECT_EQ(t.subtree_end(1), 4u);
  EXPECT_EQ(t.subtree(1), bin(Op::Mul, yp(), yr()));
  EXPECT_EQ(t.depth_of(0), 0);
  EXPECT_EQ(t.depth_of(5), 2);
  EXPECT_EQ(t.replace_subtree(4, yr()), bin(Op::Add, bin(Op::Mul, yp(), yr()), yr()));
  EXPECT_EQ(t.count(Op::VarPred), 1u);
  EXPECT_TRUE(t.contains(Op::Sin));
  EXPECT_FALSE(t.contains(Op::Cos));
}

TEST(Constraints, Validation) {
  GenConstraints ok;
  EXPECT_NO_THROW(ok.validate());
  GenConstraints tiny;
  tiny.min_height = 1;
  tiny.max_size = 1;
  EXPECT_THROW(tiny.validate(), std::invalid_argument);
  GenConstraints shallow;
  shallow.min_height = 3;
  shallow.max_size = 6;
  EXPECT_THROW(shallow.validate(), std::invalid_argument);
  GenConstraints consts;
  consts.const_low = 1;
  consts.const_high = 1;
  EXPECT_THROW(consts.validate(), std::invalid_argument);
  GenConstraints eps;
  eps.epsilon = 0;
  EXPECT_THROW(eps.validate(), std::invalid_argument);
}

TEST(Evaluate, ProtectedOperatorExamples) {
  EXPECT_DOUBLE_EQ(evaluate(bin(Op::Div, c(1.0), yp()), 0.0, 1.0, 1e-8), 1e8);
  const auto root = un(Op::Sqrt, bin(Op::Sub, yr(), bin(Op::Mul, c(4.0), yp())));
  EXPECT_DOUBLE_EQ(evaluate(root, 1.0, 0.0, 1e-8), std::sqrt(4.0 + 1e-8));
  EXPECT_NEAR(evaluate(root, 1.0, 0.0, 1e-8), 2.000000, 1e-6);
  EXPECT_NEAR(evaluate(un(Op::Log, yp()), 0.0, 1.0, 1e-8), -18.420681, 1e-6);
  EXPECT_DOUBLE_EQ(evaluate(un(Op::Log, yp()), 0.0, 1.0, 1e-8), std::log(1e-8));
}

TEST(Evaluate, OverflowIsReportedNotClamped) {
  const auto t = un(Op::Exp, bin(Op::Div, yr(), bin(Op::Sub, yp(), yp())));
  EXPECT_TRUE(std::isinf(evaluate(t, 0.5, 1.0)));
}

TEST(Evaluate, MatchesRecursiveOracle) {
  // Independent recursive evaluation over the prefix form.
  std::function<double(const ExprTree&, std::size_t&, double, double)> rec =
      [&](const ExprTree& t, std::size_t& i, double p, double r) -> double {
    const Node n = t.node(i++);
    const double eps = 1e-8;
    switch (n.op) {
      case Op::VarPred: return p;
      case Op::VarReal: return r;
      case Op::Const: return n.value;
      case Op::Add: { double a = rec(t, i, p, r); double b = rec(t, i, p, r); return a + b; }
      case Op::Sub: { double a = rec(t, i, p, r); double b = rec(t, i, p, r); return a - b; }
      case Op::Mul: { double a = rec(t, i, p, r); double b = rec(t, i, p, r); return a * b; }
      case Op::Div: { double a = rec(t, i, p, r); double b = rec(t, i, p, r); return a / (b + eps); }
      case Op::Sqrt: return std::sqrt(std::fabs(rec(t, i, p, r)) + eps);
      case Op::Log: return std::log(std::fabs(rec(t, i, p, r)) + eps);
      case Op::Exp: return std::exp(rec(t, i, p, r));
      case Op::Sin: return std::sin(rec(t, i, p, r));
      case Op::Cos: return std::cos(rec(t, i, p, r));
      default: ADD_FAILURE(); return 0.0;
    }
  };
  Rng rng(11);
  const GenConstraints cons;
  for (int k = 0; k < 100; ++k) {
    const auto t = random_tree(cons, rng);
    for (const double r : {0.0, 1.0}) {
      for (const double p : {0.0, 0.25, 0.5, 0.99}) {
        std::size_t i = 0;
        const double want = rec(t, i, p, r);
        const double got = evaluate(t, p, r);
        if (std::isnan(want)) {
          EXPECT_TRUE(std::isnan(got));
        } else {
          EXPECT_EQ(got, want) << serialize(t);
        }
      }
    }
  }
}

TEST(SExpr, FormatExamples) {
  EXPECT_EQ(serialize(bin(Op::Add, yp(), c(3.985))), "(add yp 3.985)");
  const auto t = parse("(sqrt (div yr yp))");
  EXPECT_EQ(t, un(Op::Sqrt, bin(Op::Div, yr(), yp())));
  EXPECT_DOUBLE_EQ(evaluate(t, 0.5, 1.0), std::sqrt(std::fabs(1.0 / (0.5 + 1e-8)) + 1e-8));
}

TEST(SExpr, ParseErrorsCarryPosition) {
  try {
    parse("(add yp");
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_STREQ(e.what(), "unbalanced parenthesis at byte 8");
    EXPECT_EQ(e.byte(), 8u);
  }
  EXPECT_THROW(parse("(add yp yr yr)"), ParseError);
  EXPECT_THROW(parse("(pow yp yr)"), ParseError);
  EXPECT_THROW(parse("(add yp yr))"), ParseError);
  EXPECT_THROW(parse("(add yp 1.2.3)"), ParseError);
  EXPECT_THROW(parse(""), ParseError);
}

TEST(SExpr, ParseRequiresBothVariables) {
  EXPECT_THROW(parse("(add yp 1.0)"), InvalidTree);
  EXPECT_THROW(parse("(sgn (add yp yr))"), InvalidTree);
  EXPECT_NO_THROW(parse_program("(sgn (add yp 1.0))"));
}

TEST(SExpr, ConstantsRoundTripExactly) {
  for (const double v : {0.1, -4.999999999999999, 1e-300, 3.985, 1.0 / 3.0, -0.0, 2.0}) {
    const auto t = bin(Op::Add, bin(Op::Mul, yp(), yr()), c(v));
    const auto back = parse(serialize(t));
    EXPECT_EQ(back, t);
    EXPECT_EQ(std::signbit(back.node(4).value), std::signbit(v));
  }
}

TEST(SExpr, RoundTripProperty) {
  Rng rng(2024);
  const GenConstraints cons;
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    const auto t = random_tree(cons, rng);
    const auto back = parse(serialize(t));
    ASSERT_EQ(back, t) << serialize(t);
    for (int j = 0; j < 100; ++j) {
      const double p = unit(rng);
      const double r = j % 2;
      const double a = evaluate(t, p, r);
      const double b = evaluate(back, p, r);
      EXPECT_TRUE(a == b || (std::isnan(a) && std::isnan(b)));
    }
  }
}

TEST(Generation, RandomTreeInvariants) {
  const GenConstraints cons;
  Rng rng(5);
  for (int k = 0; k < 500; ++k) {
    const auto t = random_tree(cons, rng);
    EXPECT_GE(t.height(), cons.min_height);
    EXPECT_LE(t.size(), cons.max_size);
    EXPECT_TRUE(has_both_variables(t));
    EXPECT_TRUE(is_valid_loss(t, cons));
    EXPECT_NO_THROW(require_valid_loss(t, cons));
    for (const auto& n : t.nodes()) {
      if (n.op == Op::Const) {
        EXPECT_GE(n.value, cons.const_low);
        EXPECT_LE(n.value, cons.const_high);
      }
    }
  }
}

TEST(Generation, Deterministic) {
  const GenConstraints cons;
  Rng a(99), b(99);
  for (int k = 0; k < 50; ++k) EXPECT_EQ(random_tree(cons, a), random_tree(cons, b));
}

TEST(Generation, FullAndGrowHeights) {
  const GenConstraints cons;
  Rng rng(8);
  for (int h = 1; h <= 5; ++h) {
    EXPECT_EQ(full_tree(h, cons, rng).height(), h);
    const auto g = grow_tree(2, h + 1, cons, rng);
    EXPECT_GE(g.height(), 2);
    EXPECT_LE(g.height(), h + 1);
  }
}

TEST(Generation, OperatorDraws) {
  Rng rng(1);
  std::set<Op> seen;
  for (int i = 0; i < 2000; ++i) {
    const Op op = random_operator(rng);
    EXPECT_TRUE(is_search_operator(op));
    seen.insert(op);
    EXPECT_EQ(arity(random_operator_of_arity(1, rng)), 1);
    EXPECT_EQ(arity(random_operator_of_arity(2, rng)), 2);
  }
  EXPECT_EQ(seen.size(), 9u);
}

TEST(Repair, RestoresMissingVariable) {
  const GenConstraints cons;
  Rng rng(4);
  const auto only_pred = bin(Op::Add, yp(), c(2.0));
  const auto fixed = repair_variables(only_pred, cons, rng);
  ASSERT_TRUE(fixed.has_value());
  EXPECT_TRUE(has_both_variables(*fixed));
  EXPECT_EQ(fixed->size(), only_pred.size());

  const auto dup = bin(Op::Mul, yr(), yr());
  const auto fixed2 = repair_variables(dup, cons, rng);
  ASSERT_TRUE(fixed2.has_value());
  EXPECT_TRUE(has_both_variables(*fixed2));

  // No constant or duplicate leaf to recycle: the leaf is widened.
  const auto lone = un(Op::Sin, yp());
  const auto fixed3 = repair_variables(lone, cons, rng);
  ASSERT_TRUE(fixed3.has_value());
  EXPECT_TRUE(has_both_variables(*fixed3));
  EXPECT_EQ(fixed3->size(), 4u);

  // Already valid: unchanged.
  const auto good = bin(Op::Sub, yr(), yp());
  EXPECT_EQ(*repair_variables(good, cons, rng), good);
}

TEST(Repair, NoRoomGivesNullopt) {
  GenConstraints cons;
  cons.max_size = 3;
  cons.min_height = 1;
  Rng rng(4);
  EXPECT_FALSE(repair_variables(un(Op::Sin, yp()), cons, rng).has_value());
}

}  // namespace
}  // namespace lossforge
