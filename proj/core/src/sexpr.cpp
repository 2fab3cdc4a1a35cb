#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <string>

#include "lossforge/expr.hpp"
#include "lossforge/format.hpp"

namespace lossforge {

namespace {

std::string format_constant(double value) {
  std::string text = format_shortest(value);
  // Keep a decimal point so the atom reads as a literal, not an integer.
  if (text.find_first_of(".eEn") == std::string::npos) text += ".0";
  return text;
}

void write(const ExprTree& tree, std::size_t at, std::string& out) {
  const Node& n = tree.node(at);
  switch (n.op) {
    case Op::VarPred:
    case Op::VarReal:
      out += op_name(n.op);
      return;
    case Op::Const:
      out += format_constant(n.value);
      return;
    default:
      break;
  }
  out += '(';
  out += op_name(n.op);
  std::size_t child = at + 1;
  for (int c = 0; c < arity(n.op); ++c) {
    out += ' ';
    write(tree, child, out);
    child = tree.subtree_end(child);
  }
  out += ')';
}

constexpr std::array kNamed{Op::Add, Op::Sub, Op::Mul, Op::Div, Op::Sqrt, Op::Log, Op::Exp,
                            Op::Sin, Op::Cos, Op::Neg, Op::Sign, Op::Abs, Op::Quot};

class Parser {
 public:
  explicit Parser(std::string_view text) : text_(text) {}

  ExprTree run() {
    skip_space();
    if (pos_ >= text_.size()) fail("empty expression", pos_);
    parse_expr();
    skip_space();
    if (pos_ < text_.size()) {
      if (text_[pos_] == ')') fail("unbalanced parenthesis", pos_);
      fail("unexpected trailing input", pos_);
    }
    return ExprTree(std::move(nodes_));
  }

 private:
  [[noreturn]] void fail(const std::string& what, std::size_t at) const {
    const std::size_t byte = at + 1;
    throw ParseError(what + " at byte " + std::to_string(byte), byte);
  }

  void skip_space() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
  }

  std::string_view token() {
    const std::size_t start = pos_;
    while (pos_ < text_.size()) {
      const char c = text_[pos_];
      if (c == '(' || c == ')' || std::isspace(static_cast<unsigned char>(c))) break;
      ++pos_;
    }
    return text_.substr(start, pos_ - start);
  }

  void parse_expr() {
    skip_space();
    if (pos_ >= text_.size()) fail("unbalanced parenthesis", pos_);
    if (text_[pos_] == ')') fail("unexpected ')'", pos_);
    if (text_[pos_] == '(') {
      parse_list();
    } else {
      parse_atom();
    }
  }

  void parse_list() {
    const std::size_t open_at = pos_;
    ++pos_;
    skip_space();
    const std::size_t name_at = pos_;
    const std::string_view name = token();
    if (name.empty()) fail("expected operator name", name_at);
    Op op{};
    bool found = false;
    for (const Op candidate : kNamed) {
      if (op_name(candidate) == name) {
        op = candidate;
        found = true;
        break;
      }
    }
    if (!found) fail("unknown operator '" + std::string(name) + "'", name_at);
    nodes_.push_back(Node{op});
    int given = 0;
    for (;;) {
      skip_space();
      if (pos_ >= text_.size()) fail("unbalanced parenthesis", pos_);
      if (text_[pos_] == ')') break;
      parse_expr();
      ++given;
    }
    if (given != arity(op)) {
      fail("operator '" + std::string(name) + "' takes " + std::to_string(arity(op)) +
               " argument(s), got " + std::to_string(given),
           open_at);
    }
    ++pos_;  // ')'
  }

  void parse_atom() {
    const std::size_t at = pos_;
    const std::string_view atom = token();
    if (atom == "yp") {
      nodes_.push_back(Node{Op::VarPred});
      return;
    }
    if (atom == "yr") {
      nodes_.push_back(Node{Op::VarReal});
      return;
    }
    double value = 0.0;
    const char* first = atom.data();
    const char* last = atom.data() + atom.size();
    if (!atom.empty() && *first == '+') ++first;
    const auto res = std::from_chars(first, last, value);
    if (res.ec != std::errc{} || res.ptr != last || !std::isfinite(value)) {
      fail("invalid atom '" + std::string(atom) + "'", at);
    }
    nodes_.push_back(Node{Op::Const, value});
  }

  std::string_view text_;
  std::size_t pos_ = 0;
  std::vector<Node> nodes_;
};

}  // namespace

std::string serialize(const ExprTree& tree) {
  std::string out;
  write(tree, 0, out);
  return out;
}

ExprTree parse_program(std::string_view text) { return Parser(text).run(); }

ExprTree parse(std::string_view text) {
  ExprTree tree = parse_program(text);
  for (const Node& n : tree.nodes()) {
    if (!is_search_operator(n.op) && !is_terminal(n.op)) {
      throw InvalidTree("operator '" + std::string(op_name(n.op)) + "' is not allowed in a loss");
    }
  }
  if (!tree.contains(Op::VarPred)) throw InvalidTree("loss must contain yp");
  if (!tree.contains(Op::VarReal)) throw InvalidTree("loss must contain yr");
  return tree;
}

}  // namespace lossforge
