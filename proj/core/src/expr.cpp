#include "junction/expr.hpp"

#include <cctype>
#include <cmath>
#include <cstdio>
#include <map>
#include <optional>

namespace junction {
namespace detail {

enum class Kind : int {
  Number,
  Var,
  Add,
  Sub,
  Mul,
  Div,
  Pow,
  Neg,
  Sin,
  Cos,
  Tan,
  Exp,
  Log,
  Sqrt,
  SStep,   // sstep(x,a,b), arg = derivative order 0..6
};

struct ExprNode {
  Kind kind;
  double value = 0.0;       // Number
  int var = -1;             // Var index
  int sstep_order = 0;      // SStep
  NodePtr a, b, c;
};

namespace {

NodePtr make_num(double v) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::Number;
  n->value = v;
  return n;
}

NodePtr make_var(int idx) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::Var;
  n->var = idx;
  return n;
}

NodePtr make1(Kind k, NodePtr a) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->a = std::move(a);
  return n;
}

NodePtr make2(Kind k, NodePtr a, NodePtr b) {
  auto n = std::make_shared<ExprNode>();
  n->kind = k;
  n->a = std::move(a);
  n->b = std::move(b);
  return n;
}

NodePtr make_sstep(NodePtr x, NodePtr a, NodePtr b, int order) {
  auto n = std::make_shared<ExprNode>();
  n->kind = Kind::SStep;
  n->sstep_order = order;
  n->a = std::move(x);
  n->b = std::move(a);
  n->c = std::move(b);
  return n;
}

bool is_num(const NodePtr& n, double v) {
  return n->kind == Kind::Number && n->value == v;
}

bool is_const(const NodePtr& n) { return n->kind == Kind::Number; }

// Quintic smoothstep 10 s^3 - 15 s^4 + 6 s^5 and its derivatives in s.
double sstep_poly(double s, int order) {
  switch (order) {
    case 0: return ((6.0 * s - 15.0) * s + 10.0) * s * s * s;
    case 1: return ((30.0 * s - 60.0) * s + 30.0) * s * s;
    case 2: return ((120.0 * s - 180.0) * s + 60.0) * s;
    case 3: return (360.0 * s - 360.0) * s + 60.0;
    case 4: return 720.0 * s - 360.0;
    case 5: return 720.0;
    default: return 0.0;
  }
}

double eval_sstep(double x, double a, double b, int order) {
  if (b <= a) throw ExprDomainError("sstep bounds must satisfy a < b");
  if (x <= a) return order == 0 ? 0.0 : 0.0;
  if (x >= b) return order == 0 ? 1.0 : 0.0;
  double w = b - a;
  return sstep_poly((x - a) / w, order) / std::pow(w, order);
}

NodePtr simplify(NodePtr n);

NodePtr add(NodePtr a, NodePtr b) { return simplify(make2(Kind::Add, std::move(a), std::move(b))); }
NodePtr sub(NodePtr a, NodePtr b) { return simplify(make2(Kind::Sub, std::move(a), std::move(b))); }
NodePtr mul(NodePtr a, NodePtr b) { return simplify(make2(Kind::Mul, std::move(a), std::move(b))); }
NodePtr divi(NodePtr a, NodePtr b) { return simplify(make2(Kind::Div, std::move(a), std::move(b))); }
NodePtr powr(NodePtr a, NodePtr b) { return simplify(make2(Kind::Pow, std::move(a), std::move(b))); }
NodePtr neg(NodePtr a) { return simplify(make1(Kind::Neg, std::move(a))); }

double fold1(Kind k, double x) {
  switch (k) {
    case Kind::Neg: return -x;
    case Kind::Sin: return std::sin(x);
    case Kind::Cos: return std::cos(x);
    case Kind::Tan: return std::tan(x);
    case Kind::Exp: return std::exp(x);
    case Kind::Log: return std::log(x);
    case Kind::Sqrt: return std::sqrt(x);
    default: return 0.0;
  }
}

NodePtr simplify(NodePtr n) {
  switch (n->kind) {
    case Kind::Add:
      if (is_num(n->a, 0.0)) return n->b;
      if (is_num(n->b, 0.0)) return n->a;
      if (is_const(n->a) && is_const(n->b)) return make_num(n->a->value + n->b->value);
      return n;
    case Kind::Sub:
      if (is_num(n->b, 0.0)) return n->a;
      if (is_num(n->a, 0.0)) return simplify(make1(Kind::Neg, n->b));
      if (is_const(n->a) && is_const(n->b)) return make_num(n->a->value - n->b->value);
      return n;
    case Kind::Mul:
      if (is_num(n->a, 0.0) || is_num(n->b, 0.0)) return make_num(0.0);
      if (is_num(n->a, 1.0)) return n->b;
      if (is_num(n->b, 1.0)) return n->a;
      if (is_const(n->a) && is_const(n->b)) return make_num(n->a->value * n->b->value);
      return n;
    case Kind::Div:
      if (is_num(n->a, 0.0) && !is_num(n->b, 0.0)) return make_num(0.0);
      if (is_num(n->b, 1.0)) return n->a;
      if (is_const(n->a) && is_const(n->b) && n->b->value != 0.0)
        return make_num(n->a->value / n->b->value);
      return n;
    case Kind::Pow:
      if (is_num(n->b, 1.0)) return n->a;
      if (is_num(n->b, 0.0)) return make_num(1.0);
      if (is_num(n->a, 1.0)) return make_num(1.0);
      if (is_const(n->a) && is_const(n->b)) {
        double v = std::pow(n->a->value, n->b->value);
        if (std::isfinite(v)) return make_num(v);
      }
      return n;
    case Kind::Neg:
      if (is_const(n->a)) return make_num(-n->a->value);
      if (n->a->kind == Kind::Neg) return n->a->a;
      return n;
    case Kind::Sin:
    case Kind::Cos:
    case Kind::Tan:
    case Kind::Exp:
    case Kind::Log:
    case Kind::Sqrt:
      if (is_const(n->a)) {
        double v = fold1(n->kind, n->a->value);
        if (std::isfinite(v)) return make_num(v);
      }
      return n;
    default:
      return n;
  }
}

// ---------------------------------------------------------------------------
// Parser
// ---------------------------------------------------------------------------

struct Parser {
  std::string_view src;
  std::size_t pos = 0;
  const std::vector<std::string>& vars;

  void skip_ws() {
    while (pos < src.size() && std::isspace(static_cast<unsigned char>(src[pos]))) ++pos;
  }

  bool peek(char c) {
    skip_ws();
    return pos < src.size() && src[pos] == c;
  }

  bool accept(char c) {
    if (peek(c)) {
      ++pos;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) throw ExprError(std::string("expected '") + c + "'", pos);
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+')) lhs = add(lhs, parse_term());
      else if (accept('-')) lhs = sub(lhs, parse_term());
      else return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) lhs = mul(lhs, parse_unary());
      else if (accept('/')) lhs = divi(lhs, parse_unary());
      else return lhs;
    }
  }

  NodePtr parse_unary() {
    if (accept('-')) return neg(parse_unary());
    if (accept('+')) return parse_unary();
    return parse_power();
  }

  NodePtr parse_power() {
    NodePtr base = parse_primary();
    if (accept('^')) {
      // Right-associative; exponent may carry a sign.
      NodePtr expo = parse_unary();
      return powr(base, expo);
    }
    return base;
  }

  NodePtr parse_primary() {
    skip_ws();
    if (pos >= src.size()) throw ExprError("unexpected end of input", pos);
    char c = src[pos];
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_number();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') return parse_ident();
    if (accept('(')) {
      NodePtr e = parse_expr();
      expect(')');
      return e;
    }
    throw ExprError(std::string("unexpected character '") + c + "'", pos);
  }

  NodePtr parse_number() {
    std::size_t start = pos;
    while (pos < src.size() &&
           (std::isdigit(static_cast<unsigned char>(src[pos])) || src[pos] == '.'))
      ++pos;
    if (pos < src.size() && (src[pos] == 'e' || src[pos] == 'E')) {
      std::size_t mark = pos;
      ++pos;
      if (pos < src.size() && (src[pos] == '+' || src[pos] == '-')) ++pos;
      if (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) {
        while (pos < src.size() && std::isdigit(static_cast<unsigned char>(src[pos]))) ++pos;
      } else {
        pos = mark;
      }
    }
    std::string text(src.substr(start, pos - start));
    try {
      return make_num(std::stod(text));
    } catch (const std::exception&) {
      throw ExprError("malformed number '" + text + "'", start);
    }
  }

  NodePtr parse_ident() {
    std::size_t start = pos;
    while (pos < src.size() && (std::isalnum(static_cast<unsigned char>(src[pos])) || src[pos] == '_'))
      ++pos;
    std::string name(src.substr(start, pos - start));
    skip_ws();
    if (pos < src.size() && src[pos] == '(') return parse_call(name, start);

    if (name == "pi") return make_num(M_PI);
    if (name == "e") return make_num(M_E);
    for (std::size_t i = 0; i < vars.size(); ++i)
      if (vars[i] == name) return make_var(static_cast<int>(i));
    throw ExprError("unknown identifier '" + name + "'", start);
  }

  NodePtr parse_call(const std::string& name, std::size_t start) {
    expect('(');
    std::vector<NodePtr> args;
    if (!peek(')')) {
      args.push_back(parse_expr());
      while (accept(',')) args.push_back(parse_expr());
    }
    expect(')');

    auto need = [&](std::size_t n) {
      if (args.size() != n)
        throw ExprError("function '" + name + "' expects " + std::to_string(n) +
                            " argument(s), got " + std::to_string(args.size()),
                        start);
    };

    static const std::map<std::string, Kind> unary = {
        {"sin", Kind::Sin}, {"cos", Kind::Cos},   {"tan", Kind::Tan},
        {"exp", Kind::Exp}, {"log", Kind::Log},   {"sqrt", Kind::Sqrt}};
    if (auto it = unary.find(name); it != unary.end()) {
      need(1);
      return simplify(make1(it->second, args[0]));
    }
    int order = -1;
    if (name == "sstep") order = 0;
    else if (name.size() == 6 && name.starts_with("sstep") && name[5] >= '1' && name[5] <= '6')
      order = name[5] - '0';
    if (order >= 0) {
      need(3);
      if (!is_const(args[1]) || !is_const(args[2]))
        throw ExprError("sstep bounds must be constant", start);
      if (args[1]->value >= args[2]->value)
        throw ExprError("sstep bounds must satisfy a < b", start);
      return make_sstep(args[0], args[1], args[2], order);
    }
    throw ExprError("unknown function '" + name + "'", start);
  }
};

// ---------------------------------------------------------------------------
// Derivative
// ---------------------------------------------------------------------------

NodePtr diff(const NodePtr& n, int var) {
  switch (n->kind) {
    case Kind::Number: return make_num(0.0);
    case Kind::Var: return make_num(n->var == var ? 1.0 : 0.0);
    case Kind::Add: return add(diff(n->a, var), diff(n->b, var));
    case Kind::Sub: return sub(diff(n->a, var), diff(n->b, var));
    case Kind::Mul:
      return add(mul(diff(n->a, var), n->b), mul(n->a, diff(n->b, var)));
    case Kind::Div:
      return divi(sub(mul(diff(n->a, var), n->b), mul(n->a, diff(n->b, var))),
                  powr(n->b, make_num(2.0)));
    case Kind::Pow: {
      if (is_const(n->b)) {
        double c = n->b->value;
        return mul(mul(make_num(c), powr(n->a, make_num(c - 1.0))), diff(n->a, var));
      }
      // f^g = exp(g log f)
      NodePtr fg = powr(n->a, n->b);
      NodePtr t = add(mul(diff(n->b, var), make1(Kind::Log, n->a)),
                      divi(mul(n->b, diff(n->a, var)), n->a));
      return mul(fg, t);
    }
    case Kind::Neg: return neg(diff(n->a, var));
    case Kind::Sin: return mul(simplify(make1(Kind::Cos, n->a)), diff(n->a, var));
    case Kind::Cos: return neg(mul(simplify(make1(Kind::Sin, n->a)), diff(n->a, var)));
    case Kind::Tan: {
      NodePtr sec2 = divi(make_num(1.0), powr(simplify(make1(Kind::Cos, n->a)), make_num(2.0)));
      return mul(sec2, diff(n->a, var));
    }
    case Kind::Exp: return mul(simplify(make1(Kind::Exp, n->a)), diff(n->a, var));
    case Kind::Log: return divi(diff(n->a, var), n->a);
    case Kind::Sqrt:
      return divi(diff(n->a, var), mul(make_num(2.0), simplify(make1(Kind::Sqrt, n->a))));
    case Kind::SStep: {
      if (n->sstep_order >= 6) return make_num(0.0);
      NodePtr d = make_sstep(n->a, n->b, n->c, n->sstep_order + 1);
      return mul(d, diff(n->a, var));
    }
  }
  return make_num(0.0);
}

// ---------------------------------------------------------------------------
// Printer
// ---------------------------------------------------------------------------

int precedence(Kind k) {
  switch (k) {
    case Kind::Add:
    case Kind::Sub: return 1;
    case Kind::Mul:
    case Kind::Div: return 2;
    case Kind::Neg: return 3;
    case Kind::Pow: return 4;
    default: return 5;
  }
}

void print_node(const NodePtr& n, const std::vector<std::string>& vars, std::string& out);

void print_child(const NodePtr& child, int parent_prec, bool force_paren,
                 const std::vector<std::string>& vars, std::string& out) {
  bool paren = force_paren || precedence(child->kind) < parent_prec;
  if (paren) out += '(';
  print_node(child, vars, out);
  if (paren) out += ')';
}

void print_node(const NodePtr& n, const std::vector<std::string>& vars, std::string& out) {
  char buf[40];
  switch (n->kind) {
    case Kind::Number:
      if (n->value < 0) {
        std::snprintf(buf, sizeof buf, "(%.17g)", n->value);
      } else {
        std::snprintf(buf, sizeof buf, "%.17g", n->value);
      }
      out += buf;
      return;
    case Kind::Var: out += vars[static_cast<std::size_t>(n->var)]; return;
    case Kind::Add:
      print_child(n->a, 1, false, vars, out);
      out += " + ";
      print_child(n->b, 2, false, vars, out);
      return;
    case Kind::Sub:
      print_child(n->a, 1, false, vars, out);
      out += " - ";
      print_child(n->b, 2, false, vars, out);
      return;
    case Kind::Mul:
      print_child(n->a, 2, false, vars, out);
      out += "*";
      print_child(n->b, 3, false, vars, out);
      return;
    case Kind::Div:
      print_child(n->a, 2, false, vars, out);
      out += "/";
      print_child(n->b, 3, false, vars, out);
      return;
    case Kind::Pow:
      print_child(n->a, 5, false, vars, out);
      out += "^";
      print_child(n->b, 5, false, vars, out);
      return;
    case Kind::Neg:
      out += "-";
      print_child(n->a, 3, false, vars, out);
      return;
    case Kind::Sin: out += "sin("; print_node(n->a, vars, out); out += ')'; return;
    case Kind::Cos: out += "cos("; print_node(n->a, vars, out); out += ')'; return;
    case Kind::Tan: out += "tan("; print_node(n->a, vars, out); out += ')'; return;
    case Kind::Exp: out += "exp("; print_node(n->a, vars, out); out += ')'; return;
    case Kind::Log: out += "log("; print_node(n->a, vars, out); out += ')'; return;
    case Kind::Sqrt: out += "sqrt("; print_node(n->a, vars, out); out += ')'; return;
    case Kind::SStep:
      out += "sstep";
      if (n->sstep_order > 0) out += static_cast<char>('0' + n->sstep_order);
      out += '(';
      print_node(n->a, vars, out);
      out += ',';
      print_node(n->b, vars, out);
      out += ',';
      print_node(n->c, vars, out);
      out += ')';
      return;
  }
}

}  // namespace
}  // namespace detail

using detail::ExprNode;
using detail::Kind;
using detail::NodePtr;

ExprFn::ExprFn(NodePtr root, std::vector<std::string> vars, std::string source)
    : root_(std::move(root)), vars_(std::move(vars)), source_(std::move(source)) {
  compile();
}

ExprFn ExprFn::parse(std::string_view source, std::vector<std::string> vars) {
  detail::Parser p{source, 0, vars};
  NodePtr root = p.parse_expr();
  p.skip_ws();
  if (p.pos != source.size()) throw ExprError("trailing input", p.pos);
  return ExprFn(std::move(root), std::move(vars), std::string(source));
}

ExprFn ExprFn::constant(double value, std::vector<std::string> vars) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return ExprFn(detail::make_num(value), std::move(vars), buf);
}

ExprFn ExprFn::derivative(const std::string& var, int order) const {
  if (order < 0 || order > 4)
    throw std::invalid_argument("derivative order must lie in [0,4]");
  int idx = -1;
  for (std::size_t i = 0; i < vars_.size(); ++i)
    if (vars_[i] == var) idx = static_cast<int>(i);
  if (idx < 0) throw std::invalid_argument("derivative: unknown variable '" + var + "'");
  NodePtr d = root_;
  for (int i = 0; i < order; ++i) d = detail::diff(d, idx);
  ExprFn out(d, vars_, {});
  out.source_ = out.print();
  return out;
}

std::string ExprFn::print() const {
  std::string out;
  detail::print_node(root_, vars_, out);
  return out;
}

bool ExprFn::is_zero() const {
  return root_ && root_->kind == Kind::Number && root_->value == 0.0;
}

// Tape opcodes. Positive values push results of operations; see eval().
enum : int {
  OP_NUM = 0,
  OP_VAR,
  OP_ADD,
  OP_SUB,
  OP_MUL,
  OP_DIV,
  OP_POW,
  OP_NEG,
  OP_SIN,
  OP_COS,
  OP_TAN,
  OP_EXP,
  OP_LOG,
  OP_SQRT,
  OP_SSTEP  // arg = order, consumes 3
};

void ExprFn::compile() {
  tape_.clear();
  int depth = 0;
  stack_need_ = 0;
  auto note = [&](int delta) {
    depth += delta;
    stack_need_ = std::max(stack_need_, depth);
  };
  // Post-order walk.
  struct Item {
    const ExprNode* n;
    bool expanded;
  };
  std::vector<Item> stack{{root_.get(), false}};
  std::vector<const ExprNode*> order;
  while (!stack.empty()) {
    auto [n, expanded] = stack.back();
    stack.pop_back();
    if (expanded) {
      order.push_back(n);
      continue;
    }
    stack.push_back({n, true});
    if (n->c) stack.push_back({n->c.get(), false});
    if (n->b) stack.push_back({n->b.get(), false});
    if (n->a) stack.push_back({n->a.get(), false});
  }
  for (const ExprNode* n : order) {
    switch (n->kind) {
      case Kind::Number: tape_.push_back({OP_NUM, 0, n->value}); note(+1); break;
      case Kind::Var: tape_.push_back({OP_VAR, n->var, 0}); note(+1); break;
      case Kind::Add: tape_.push_back({OP_ADD, 0, 0}); note(-1); break;
      case Kind::Sub: tape_.push_back({OP_SUB, 0, 0}); note(-1); break;
      case Kind::Mul: tape_.push_back({OP_MUL, 0, 0}); note(-1); break;
      case Kind::Div: tape_.push_back({OP_DIV, 0, 0}); note(-1); break;
      case Kind::Pow: tape_.push_back({OP_POW, 0, 0}); note(-1); break;
      case Kind::Neg: tape_.push_back({OP_NEG, 0, 0}); break;
      case Kind::Sin: tape_.push_back({OP_SIN, 0, 0}); break;
      case Kind::Cos: tape_.push_back({OP_COS, 0, 0}); break;
      case Kind::Tan: tape_.push_back({OP_TAN, 0, 0}); break;
      case Kind::Exp: tape_.push_back({OP_EXP, 0, 0}); break;
      case Kind::Log: tape_.push_back({OP_LOG, 0, 0}); break;
      case Kind::Sqrt: tape_.push_back({OP_SQRT, 0, 0}); break;
      case Kind::SStep: tape_.push_back({OP_SSTEP, n->sstep_order, 0}); note(-2); break;
    }
  }
}

double ExprFn::eval(std::span<const double> values) const {
  if (!root_) throw std::logic_error("ExprFn: eval on empty function");
  if (values.size() != vars_.size())
    throw std::invalid_argument("ExprFn: expected " + std::to_string(vars_.size()) +
                                " bindings, got " + std::to_string(values.size()));
  double local[64];
  std::vector<double> heap;
  double* stack = local;
  if (stack_need_ > 60) {
    heap.resize(static_cast<std::size_t>(stack_need_) + 4);
    stack = heap.data();
  }
  int top = -1;
  for (const Op& op : tape_) {
    switch (op.kind) {
      case OP_NUM: stack[++top] = op.value; break;
      case OP_VAR: stack[++top] = values[static_cast<std::size_t>(op.arg)]; break;
      case OP_ADD: --top; stack[top] += stack[top + 1]; break;
      case OP_SUB: --top; stack[top] -= stack[top + 1]; break;
      case OP_MUL: --top; stack[top] *= stack[top + 1]; break;
      case OP_DIV:
        --top;
        if (stack[top + 1] == 0.0) throw ExprDomainError("division by zero");
        stack[top] /= stack[top + 1];
        break;
      case OP_POW: {
        --top;
        double v = std::pow(stack[top], stack[top + 1]);
        if (!std::isfinite(v))
          throw ExprDomainError("pow produced a non-finite value");
        stack[top] = v;
        break;
      }
      case OP_NEG: stack[top] = -stack[top]; break;
      case OP_SIN: stack[top] = std::sin(stack[top]); break;
      case OP_COS: stack[top] = std::cos(stack[top]); break;
      case OP_TAN: stack[top] = std::tan(stack[top]); break;
      case OP_EXP: stack[top] = std::exp(stack[top]); break;
      case OP_LOG:
        if (stack[top] <= 0.0) throw ExprDomainError("log of nonpositive value");
        stack[top] = std::log(stack[top]);
        break;
      case OP_SQRT:
        if (stack[top] < 0.0) throw ExprDomainError("sqrt of negative value");
        stack[top] = std::sqrt(stack[top]);
        break;
      case OP_SSTEP: {
        top -= 2;
        stack[top] = detail::eval_sstep(stack[top], stack[top + 1], stack[top + 2], op.arg);
        break;
      }
    }
  }
  return stack[0];
}

}  // namespace junction
