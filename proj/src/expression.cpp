#include "windcone/expression.hpp"

#include <cctype>
#include <cmath>
#include <optional>
#include <vector>

namespace windcone {

struct FieldExpr::Node {
  enum class Op { num, var_x, var_y, add, sub, mul, divide, pow, neg, call };
  Op op = Op::num;
  double value = 0.0;
  int func = 0;  // index into kFuncs for Op::call
  std::shared_ptr<const Node> lhs, rhs;
};

namespace {

using Node = FieldExpr::Node;
using NodePtr = std::shared_ptr<const Node>;

constexpr const char* kFuncs[] = {"sin", "cos", "exp", "sqrt", "abs"};

double apply_func(int f, double a) {
  switch (f) {
    case 0: return std::sin(a);
    case 1: return std::cos(a);
    case 2: return std::exp(a);
    case 3: return std::sqrt(a);
    case 4: return std::abs(a);
  }
  return 0.0;
}

NodePtr make_num(double v) {
  auto n = std::make_shared<Node>();
  n->op = Node::Op::num;
  n->value = v;
  return n;
}

NodePtr make_node(Node::Op op, NodePtr lhs, NodePtr rhs = nullptr, int func = 0) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(lhs);
  n->rhs = std::move(rhs);
  n->func = func;
  return n;
}

std::optional<double> fold_constant(const NodePtr& n) {
  if (!n) return std::nullopt;
  switch (n->op) {
    case Node::Op::num: return n->value;
    case Node::Op::var_x:
    case Node::Op::var_y: return std::nullopt;
    case Node::Op::neg: {
      auto a = fold_constant(n->lhs);
      if (a) return -*a;
      return std::nullopt;
    }
    case Node::Op::call: {
      auto a = fold_constant(n->lhs);
      if (a) return apply_func(n->func, *a);
      return std::nullopt;
    }
    default: {
      auto a = fold_constant(n->lhs), b = fold_constant(n->rhs);
      if (!a || !b) return std::nullopt;
      switch (n->op) {
        case Node::Op::add: return *a + *b;
        case Node::Op::sub: return *a - *b;
        case Node::Op::mul: return *a * *b;
        case Node::Op::divide: return *a / *b;
        case Node::Op::pow: return std::pow(*a, *b);
        default: return std::nullopt;
      }
    }
  }
}

class Parser {
 public:
  explicit Parser(const std::string& text) : text_(text) {}

  NodePtr parse() {
    NodePtr e = parse_sum();
    skip_ws();
    if (pos_ != text_.size()) fail("unexpected trailing input");
    return e;
  }

 private:
  [[noreturn]] void fail(const std::string& msg) const {
    throw ExprError({static_cast<int>(pos_) + 1, msg});
  }

  void skip_ws() {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
  }

  bool consume(char c) {
    skip_ws();
    if (pos_ < text_.size() && text_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  char peek() {
    skip_ws();
    return pos_ < text_.size() ? text_[pos_] : '\0';
  }

  NodePtr parse_sum() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (consume('+'))
        lhs = make_node(Node::Op::add, lhs, parse_term());
      else if (consume('-'))
        lhs = make_node(Node::Op::sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (consume('*')) {
        lhs = make_node(Node::Op::mul, lhs, parse_unary());
      } else if (consume('/')) {
        size_t divisor_pos = pos_;
        NodePtr rhs = parse_unary();
        auto c = fold_constant(rhs);
        if (c && std::abs(*c) < 1e-12)
          throw ExprError({static_cast<int>(divisor_pos) + 1,
                           "division by a constant-zero expression"});
        lhs = make_node(Node::Op::divide, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (consume('-')) return make_node(Node::Op::neg, parse_unary());
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_atom();
    if (consume('^')) {
      // Right-associative; unary minus in the exponent handled by parse_unary.
      return make_node(Node::Op::pow, base, parse_unary());
    }
    return base;
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= text_.size()) fail("unexpected end of expression");
    char c = text_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_sum();
      if (!consume(')')) fail("expected ')'");
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c))) return parse_ident();
    fail(std::string("unexpected character '") + c + "'");
  }

  NodePtr parse_number() {
    size_t start = pos_;
    while (pos_ < text_.size() &&
           (std::isdigit(static_cast<unsigned char>(text_[pos_])) || text_[pos_] == '.'))
      ++pos_;
    if (pos_ < text_.size() && (text_[pos_] == 'e' || text_[pos_] == 'E')) {
      size_t mark = pos_++;
      if (pos_ < text_.size() && (text_[pos_] == '+' || text_[pos_] == '-')) ++pos_;
      if (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_]))) {
        while (pos_ < text_.size() && std::isdigit(static_cast<unsigned char>(text_[pos_])))
          ++pos_;
      } else {
        pos_ = mark;  // 'e' was the Euler constant or an error, not an exponent
      }
    }
    try {
      return make_num(std::stod(text_.substr(start, pos_ - start)));
    } catch (const std::exception&) {
      pos_ = start;
      fail("malformed number literal");
    }
  }

  NodePtr parse_ident() {
    size_t start = pos_;
    while (pos_ < text_.size() &&
           std::isalpha(static_cast<unsigned char>(text_[pos_])))
      ++pos_;
    std::string name = text_.substr(start, pos_ - start);
    if (name == "x") {
      auto n = std::make_shared<Node>();
      n->op = Node::Op::var_x;
      return n;
    }
    if (name == "y") {
      auto n = std::make_shared<Node>();
      n->op = Node::Op::var_y;
      return n;
    }
    if (name == "pi") return make_num(M_PI);
    if (name == "e") return make_num(M_E);
    for (int f = 0; f < 5; ++f) {
      if (name == kFuncs[f]) {
        if (!consume('(')) fail("expected '(' after function name");
        NodePtr arg = parse_sum();
        if (!consume(')')) fail("expected ')'");
        return make_node(Node::Op::call, arg, nullptr, f);
      }
    }
    pos_ = start;
    fail("unknown identifier '" + name + "'");
  }

  const std::string& text_;
  size_t pos_ = 0;
};

double eval_node(const Node& n, double x, double y) {
  switch (n.op) {
    case Node::Op::num: return n.value;
    case Node::Op::var_x: return x;
    case Node::Op::var_y: return y;
    case Node::Op::neg: return -eval_node(*n.lhs, x, y);
    case Node::Op::call: return apply_func(n.func, eval_node(*n.lhs, x, y));
    case Node::Op::add: return eval_node(*n.lhs, x, y) + eval_node(*n.rhs, x, y);
    case Node::Op::sub: return eval_node(*n.lhs, x, y) - eval_node(*n.rhs, x, y);
    case Node::Op::mul: return eval_node(*n.lhs, x, y) * eval_node(*n.rhs, x, y);
    case Node::Op::divide: {
      double d = eval_node(*n.rhs, x, y);
      if (std::abs(d) < 1e-12)
        throw Error(ErrorCode::numerical_failure, "expression divisor below 1e-12");
      return eval_node(*n.lhs, x, y) / d;
    }
    case Node::Op::pow:
      return std::pow(eval_node(*n.lhs, x, y), eval_node(*n.rhs, x, y));
  }
  return 0.0;
}

}  // namespace

FieldExpr FieldExpr::parse(const std::string& text) {
  FieldExpr e;
  e.root_ = Parser(text).parse();
  e.source_ = text;
  return e;
}

double FieldExpr::eval(double x, double y) const {
  if (!root_) throw Error(ErrorCode::internal, "evaluating an empty expression");
  return eval_node(*root_, x, y);
}

bool FieldExpr::is_constant(double* value) const {
  auto c = fold_constant(root_);
  if (c && value) *value = *c;
  return c.has_value();
}

}  // namespace windcone
