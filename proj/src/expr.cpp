#include "ahlfors/expr.hpp"

#include <algorithm>
#include <array>
#include <cctype>
#include <charconv>
#include <cmath>
#include <unordered_map>

#include "ahlfors/complex_ops.hpp"
#include "ahlfors/kernels.hpp"

namespace ahlfors {

ParseError::ParseError(std::size_t offset, const std::string& what)
    : Error("syntax error at offset " + std::to_string(offset) + ": " + what), offset_(offset) {}

NumericError::NumericError(std::string stage, const std::string& what)
    : Error(stage + ": " + what), stage_(std::move(stage)) {}

namespace {

bool finite_c(cplx z) { return std::isfinite(z.real()) && std::isfinite(z.imag()); }

NodePtr make(Op op, NodePtr a = nullptr, NodePtr b = nullptr, int exponent = 0, cplx c = {}) {
  auto n = std::make_shared<Node>();
  n->op = op;
  n->lhs = std::move(a);
  n->rhs = std::move(b);
  n->exponent = exponent;
  n->constant = c;
  return n;
}

bool is_const(const NodePtr& n) { return n->op == Op::constant; }
bool is_const_value(const NodePtr& n, cplx v) { return is_const(n) && n->constant == v; }

NodePtr folded(Value v, const char* what) {
  if (!v.is_finite() || !finite_c(v.z))
    throw NumericError("differentiate", std::string("constant folding overflow in ") + what);
  return build::constant(v.z);
}

}  // namespace

// ---------------------------------------------------------------------------
// Extended arithmetic

namespace extended {

Value add(Value a, Value b) {
  if (a.is_indeterminate() || b.is_indeterminate()) return Value::indeterminate();
  if (a.is_infinite() && b.is_infinite()) return Value::indeterminate();
  if (a.is_infinite() || b.is_infinite()) return Value::infinity();
  const cplx r(a.z.real() + b.z.real(), a.z.imag() + b.z.imag());
  return finite_c(r) ? Value::finite(r) : Value::infinity();
}

Value sub(Value a, Value b) {
  if (a.is_indeterminate() || b.is_indeterminate()) return Value::indeterminate();
  if (a.is_infinite() && b.is_infinite()) return Value::indeterminate();
  if (a.is_infinite() || b.is_infinite()) return Value::infinity();
  const cplx r(a.z.real() - b.z.real(), a.z.imag() - b.z.imag());
  return finite_c(r) ? Value::finite(r) : Value::infinity();
}

Value mul(Value a, Value b) {
  if (a.is_indeterminate() || b.is_indeterminate()) return Value::indeterminate();
  if (a.is_infinite() || b.is_infinite()) {
    const Value& other = a.is_infinite() ? b : a;
    if (other.is_finite() && other.z == cplx{}) return Value::indeterminate();
    return Value::infinity();
  }
  double re, im;
  ops::mul(a.z.real(), a.z.imag(), b.z.real(), b.z.imag(), re, im);
  const cplx r(re, im);
  return finite_c(r) ? Value::finite(r) : Value::infinity();
}

Value div(Value a, Value b) {
  if (a.is_indeterminate() || b.is_indeterminate()) return Value::indeterminate();
  if (a.is_infinite()) return b.is_infinite() ? Value::indeterminate() : Value::infinity();
  if (b.is_infinite()) return Value::finite({});
  if (b.z == cplx{}) return a.z == cplx{} ? Value::indeterminate() : Value::infinity();
  if (ops::is_pole_quotient(a.z.real(), a.z.imag(), b.z.real(), b.z.imag()))
    return Value::infinity();
  double re, im;
  ops::div(a.z.real(), a.z.imag(), b.z.real(), b.z.imag(), re, im);
  cplx r(re, im);
  if (finite_c(r)) return Value::finite(r);
  // Over/underflow in |b|^2; redo with scaling.
  const double s = std::max(std::abs(b.z.real()), std::abs(b.z.imag()));
  r = (a.z / s) / (b.z / s);
  return finite_c(r) ? Value::finite(r) : Value::infinity();
}

Value pow(Value a, int n) {
  if (a.is_indeterminate()) return a;
  if (n == 0) return Value::finite({1.0, 0.0});
  if (a.is_infinite()) return n > 0 ? Value::infinity() : Value::finite({});
  unsigned m = static_cast<unsigned>(n < 0 ? -n : n);
  Value base = a;
  std::optional<Value> result;
  while (m != 0) {
    if (m & 1u) result = result ? mul(*result, base) : base;
    m >>= 1u;
    if (m != 0) base = mul(base, base);
  }
  if (n < 0) return div(Value::finite({1.0, 0.0}), *result);
  return *result;
}

namespace {
template <class F>
Value transcendental(Value a, F f) {
  if (!a.is_finite()) return Value::indeterminate();
  double re, im;
  f(a.z.real(), a.z.imag(), re, im);
  const cplx r(re, im);
  return finite_c(r) ? Value::finite(r) : Value::infinity();
}
}  // namespace

Value exp(Value a) {
  return transcendental(a, [](double x, double y, double& r, double& i) { ops::exp(x, y, r, i); });
}
Value sin(Value a) {
  return transcendental(a, [](double x, double y, double& r, double& i) { ops::sin(x, y, r, i); });
}
Value cos(Value a) {
  return transcendental(a, [](double x, double y, double& r, double& i) { ops::cos(x, y, r, i); });
}

}  // namespace extended

// ---------------------------------------------------------------------------
// Builders

namespace build {

NodePtr var() { return make(Op::var); }
NodePtr constant(cplx c) { return make(Op::constant, nullptr, nullptr, 0, c); }

NodePtr add(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b))
    return folded(extended::add(Value::finite(a->constant), Value::finite(b->constant)), "sum");
  if (is_const_value(a, {})) return b;
  if (is_const_value(b, {})) return a;
  return make(Op::add, std::move(a), std::move(b));
}

NodePtr sub(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b))
    return folded(extended::sub(Value::finite(a->constant), Value::finite(b->constant)),
                  "difference");
  if (is_const_value(b, {})) return a;
  return make(Op::sub, std::move(a), std::move(b));
}

NodePtr mul(NodePtr a, NodePtr b) {
  if (is_const(a) && is_const(b))
    return folded(extended::mul(Value::finite(a->constant), Value::finite(b->constant)),
                  "product");
  if (is_const_value(a, {}) || is_const_value(b, {})) return constant({});
  if (is_const_value(a, {1.0, 0.0})) return b;
  if (is_const_value(b, {1.0, 0.0})) return a;
  // Keep constants on the left and merge c1 * (c2 * x).
  if (is_const(b)) std::swap(a, b);
  if (is_const(a) && b->op == Op::mul && is_const(b->lhs))
    return mul(mul(a, b->lhs), b->rhs);
  return make(Op::mul, std::move(a), std::move(b));
}

NodePtr div(NodePtr a, NodePtr b) {
  if (is_const_value(b, {}))
    throw NumericError("differentiate", "division by the zero constant");
  if (is_const(a) && is_const(b))
    return folded(extended::div(Value::finite(a->constant), Value::finite(b->constant)),
                  "quotient");
  if (is_const_value(a, {})) return constant({});
  if (is_const_value(b, {1.0, 0.0})) return a;
  return make(Op::div, std::move(a), std::move(b));
}

NodePtr pow(NodePtr a, int n) {
  if (n == 0) return constant({1.0, 0.0});
  if (n == 1) return a;
  if (is_const(a)) return folded(extended::pow(Value::finite(a->constant), n), "power");
  if (a->op == Op::pow) {
    const long long m = static_cast<long long>(a->exponent) * n;
    if (m >= -kMaxExponent && m <= kMaxExponent) return pow(a->lhs, static_cast<int>(m));
  }
  return make(Op::pow, std::move(a), nullptr, n);
}

NodePtr exp(NodePtr a) {
  if (is_const(a)) return folded(extended::exp(Value::finite(a->constant)), "exp");
  return make(Op::exp, std::move(a));
}
NodePtr sin(NodePtr a) {
  if (is_const(a)) return folded(extended::sin(Value::finite(a->constant)), "sin");
  return make(Op::sin, std::move(a));
}
NodePtr cos(NodePtr a) {
  if (is_const(a)) return folded(extended::cos(Value::finite(a->constant)), "cos");
  return make(Op::cos, std::move(a));
}

}  // namespace build

// ---------------------------------------------------------------------------
// Parser

namespace {

class Parser {
 public:
  explicit Parser(std::string_view s) : s_(s) {}

  NodePtr parse() {
    skip_ws();
    if (pos_ >= s_.size()) fail(pos_, "empty expression");
    NodePtr e = parse_expr();
    skip_ws();
    if (pos_ < s_.size()) fail(pos_, std::string("unexpected '") + s_[pos_] + "'");
    return e;
  }

 private:
  [[noreturn]] void fail(std::size_t pos, const std::string& what) const {
    throw ParseError(pos + 1, what);
  }

  void skip_ws() {
    while (pos_ < s_.size() && (s_[pos_] == ' ' || s_[pos_] == '\t' || s_[pos_] == '\n' ||
                                s_[pos_] == '\r'))
      ++pos_;
  }

  bool accept(char c) {
    skip_ws();
    if (pos_ < s_.size() && s_[pos_] == c) {
      ++pos_;
      return true;
    }
    return false;
  }

  void expect(char c) {
    if (!accept(c)) fail(pos_, std::string("expected '") + c + "'");
  }

  NodePtr parse_expr() {
    NodePtr lhs = parse_term();
    for (;;) {
      if (accept('+'))
        lhs = make(Op::add, lhs, parse_term());
      else if (accept('-'))
        lhs = make(Op::sub, lhs, parse_term());
      else
        return lhs;
    }
  }

  NodePtr parse_term() {
    NodePtr lhs = parse_unary();
    for (;;) {
      if (accept('*')) {
        lhs = make(Op::mul, lhs, parse_unary());
      } else if (accept('/')) {
        skip_ws();
        const std::size_t at = pos_;
        NodePtr rhs = parse_unary();
        if (rhs->op == Op::constant && rhs->constant == cplx{})
          fail(at, "division by the zero constant");
        lhs = make(Op::div, lhs, rhs);
      } else {
        return lhs;
      }
    }
  }

  NodePtr parse_unary() {
    if (accept('+')) return parse_unary();
    if (accept('-')) {
      NodePtr operand = parse_unary();
      if (operand->op == Op::constant) return build::constant(-operand->constant);
      return make(Op::sub, build::constant({}), operand);
    }
    return parse_factor();
  }

  NodePtr parse_factor() {
    NodePtr base = parse_atom();
    if (!accept('^')) return base;
    skip_ws();
    const bool paren = accept('(');
    skip_ws();
    const std::size_t at = pos_;
    bool negative = false;
    if (pos_ < s_.size() && (s_[pos_] == '-' || s_[pos_] == '+')) {
      negative = s_[pos_] == '-';
      ++pos_;
    }
    const std::size_t digits_at = pos_;
    long long value = 0;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) {
      value = value * 10 + (s_[pos_] - '0');
      if (value > 1'000'000) value = 1'000'000;
      ++pos_;
    }
    if (pos_ == digits_at) fail(pos_, "expected integer exponent");
    if (value > kMaxExponent) fail(at, "exponent overflow (|n| <= 64)");
    if (paren) expect(')');
    return make(Op::pow, base, nullptr, static_cast<int>(negative ? -value : value));
  }

  NodePtr parse_atom() {
    skip_ws();
    if (pos_ >= s_.size()) fail(pos_, "unexpected end of input");
    const char c = s_[pos_];
    if (c == '(') {
      ++pos_;
      NodePtr e = parse_expr();
      expect(')');
      return e;
    }
    if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return parse_literal();
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      const std::size_t at = pos_;
      while (pos_ < s_.size() &&
             (std::isalnum(static_cast<unsigned char>(s_[pos_])) || s_[pos_] == '_'))
        ++pos_;
      const std::string_view word = s_.substr(at, pos_ - at);
      if (word == "z") return make(Op::var);
      if (word == "i") return build::constant({0.0, 1.0});
      Op op;
      if (word == "exp")
        op = Op::exp;
      else if (word == "sin")
        op = Op::sin;
      else if (word == "cos")
        op = Op::cos;
      else
        fail(at, "unknown function or identifier '" + std::string(word) + "'");
      expect('(');
      NodePtr arg = parse_expr();
      expect(')');
      return make(op, arg);
    }
    fail(pos_, std::string("unexpected '") + c + "'");
  }

  NodePtr parse_literal() {
    const std::size_t at = pos_;
    auto digit = [&](std::size_t p) {
      return p < s_.size() && std::isdigit(static_cast<unsigned char>(s_[p]));
    };
    while (digit(pos_)) ++pos_;
    if (pos_ < s_.size() && s_[pos_] == '.') {
      ++pos_;
      while (digit(pos_)) ++pos_;
    }
    if (pos_ < s_.size() && (s_[pos_] == 'e' || s_[pos_] == 'E')) {
      std::size_t p = pos_ + 1;
      if (p < s_.size() && (s_[p] == '+' || s_[p] == '-')) ++p;
      if (digit(p)) {
        pos_ = p;
        while (digit(pos_)) ++pos_;
      }
    }
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(s_.data() + at, s_.data() + pos_, v);
    if (ec != std::errc() || ptr != s_.data() + pos_) fail(at, "malformed number");
    if (!std::isfinite(v)) fail(at, "number out of range");
    if (pos_ < s_.size() && s_[pos_] == 'i' &&
        !(pos_ + 1 < s_.size() && (std::isalnum(static_cast<unsigned char>(s_[pos_ + 1])) ||
                                   s_[pos_ + 1] == '_'))) {
      ++pos_;
      return build::constant({0.0, v});
    }
    return build::constant({v, 0.0});
  }

  std::string_view s_;
  std::size_t pos_ = 0;
};

std::string number(double v) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  (void)ec;
  return std::string(buf.data(), ptr);
}

std::string print_constant(cplx c) {
  const double re = c.real(), im = c.imag();
  if (im == 0.0) return re < 0.0 ? "(-" + number(-re) + ")" : number(re == 0.0 ? 0.0 : re);
  if (re == 0.0) return im < 0.0 ? "(-" + number(-im) + "i)" : number(im) + "i";
  std::string s = "(" + (re < 0.0 ? "(-" + number(-re) + ")" : number(re));
  s += im < 0.0 ? " - " + number(-im) + "i)" : " + " + number(im) + "i)";
  return s;
}

bool contains_var(const Node& n) {
  switch (n.op) {
    case Op::var:
      return true;
    case Op::constant:
      return false;
    default:
      return contains_var(*n.lhs) || (n.rhs && contains_var(*n.rhs));
  }
}

}  // namespace

std::string print(const Node& n) {
  switch (n.op) {
    case Op::var:
      return "z";
    case Op::constant:
      return print_constant(n.constant);
    case Op::add:
      return "(" + print(*n.lhs) + " + " + print(*n.rhs) + ")";
    case Op::sub:
      return "(" + print(*n.lhs) + " - " + print(*n.rhs) + ")";
    case Op::mul:
      return "(" + print(*n.lhs) + " * " + print(*n.rhs) + ")";
    case Op::div:
      return "(" + print(*n.lhs) + " / " + print(*n.rhs) + ")";
    case Op::pow:
    {
      const std::string base = print(*n.lhs);
      return (n.lhs->op == Op::pow ? "(" + base + ")" : base) + "^" +
             std::to_string(n.exponent);
    }
    case Op::exp:
      return "exp(" + print(*n.lhs) + ")";
    case Op::sin:
      return "sin(" + print(*n.lhs) + ")";
    case Op::cos:
      return "cos(" + print(*n.lhs) + ")";
  }
  return {};
}

bool structurally_equal(const Node& a, const Node& b) {
  if (a.op != b.op) return false;
  switch (a.op) {
    case Op::var:
      return true;
    case Op::constant:
      return a.constant == b.constant;
    case Op::pow:
      return a.exponent == b.exponent && structurally_equal(*a.lhs, *b.lhs);
    case Op::exp:
    case Op::sin:
    case Op::cos:
      return structurally_equal(*a.lhs, *b.lhs);
    default:
      return structurally_equal(*a.lhs, *b.lhs) && structurally_equal(*a.rhs, *b.rhs);
  }
}

MapExpr::MapExpr(NodePtr root, std::string source_text)
    : root_(std::move(root)), source_(std::move(source_text)) {}

std::string MapExpr::to_string() const { return print(*root_); }
bool MapExpr::is_constant() const { return !contains_var(*root_); }

MapExpr parse_map(std::string_view source) {
  return MapExpr(Parser(source).parse(), std::string(source));
}

// ---------------------------------------------------------------------------
// Differentiation

namespace {

class Differentiator {
 public:
  NodePtr d(const NodePtr& n) {
    if (auto it = memo_.find(n.get()); it != memo_.end()) return it->second;
    NodePtr r = derive(n);
    memo_.emplace(n.get(), r);
    return r;
  }

 private:
  NodePtr derive(const NodePtr& n) {
    using namespace build;
    switch (n->op) {
      case Op::var:
        return constant({1.0, 0.0});
      case Op::constant:
        return constant({});
      case Op::add:
        return add(d(n->lhs), d(n->rhs));
      case Op::sub:
        return sub(d(n->lhs), d(n->rhs));
      case Op::mul:
        return add(mul(d(n->lhs), n->rhs), mul(n->lhs, d(n->rhs)));
      case Op::div:
        return div(sub(mul(d(n->lhs), n->rhs), mul(n->lhs, d(n->rhs))), pow(n->rhs, 2));
      case Op::pow:
        return mul(mul(constant({static_cast<double>(n->exponent), 0.0}),
                       pow(n->lhs, n->exponent - 1)),
                   d(n->lhs));
      case Op::exp:
        return mul(n, d(n->lhs));
      case Op::sin:
        return mul(cos(n->lhs), d(n->lhs));
      case Op::cos:
        return mul(mul(constant({-1.0, 0.0}), sin(n->lhs)), d(n->lhs));
    }
    return constant({});
  }

  std::unordered_map<const Node*, NodePtr> memo_;
};

Value eval_node(const Node& n, cplx z, std::unordered_map<const Node*, Value>& memo) {
  if (auto it = memo.find(&n); it != memo.end()) return it->second;
  Value v;
  switch (n.op) {
    case Op::var:
      v = Value::finite(z);
      break;
    case Op::constant:
      v = Value::finite(n.constant);
      break;
    case Op::add:
      v = extended::add(eval_node(*n.lhs, z, memo), eval_node(*n.rhs, z, memo));
      break;
    case Op::sub:
      v = extended::sub(eval_node(*n.lhs, z, memo), eval_node(*n.rhs, z, memo));
      break;
    case Op::mul:
      v = extended::mul(eval_node(*n.lhs, z, memo), eval_node(*n.rhs, z, memo));
      break;
    case Op::div:
      v = extended::div(eval_node(*n.lhs, z, memo), eval_node(*n.rhs, z, memo));
      break;
    case Op::pow:
      v = extended::pow(eval_node(*n.lhs, z, memo), n.exponent);
      break;
    case Op::exp:
      v = extended::exp(eval_node(*n.lhs, z, memo));
      break;
    case Op::sin:
      v = extended::sin(eval_node(*n.lhs, z, memo));
      break;
    case Op::cos:
      v = extended::cos(eval_node(*n.lhs, z, memo));
      break;
  }
  memo.emplace(&n, v);
  return v;
}

}  // namespace

MapExpr differentiate(const MapExpr& m) {
  Differentiator diff;
  NodePtr root = diff.d(m.root_ptr());
  return MapExpr(root, print(*root));
}

Value evaluate(const MapExpr& m, cplx z) {
  std::unordered_map<const Node*, Value> memo;
  return eval_node(m.root(), z, memo);
}

// ---------------------------------------------------------------------------
// Entire fractions

namespace {

using Frac = std::pair<NodePtr, NodePtr>;

bool is_one(const NodePtr& n) { return is_const_value(n, {1.0, 0.0}); }

std::optional<Frac> fraction(const NodePtr& n) {
  using namespace build;
  switch (n->op) {
    case Op::var:
    case Op::constant:
      return Frac{n, constant({1.0, 0.0})};
    case Op::add:
    case Op::sub: {
      auto a = fraction(n->lhs), b = fraction(n->rhs);
      if (!a || !b) return std::nullopt;
      auto combine = [&](NodePtr x, NodePtr y) {
        return n->op == Op::add ? add(std::move(x), std::move(y)) : sub(std::move(x), std::move(y));
      };
      if (is_one(a->second) && is_one(b->second)) return Frac{combine(a->first, b->first), a->second};
      if (structurally_equal(*a->second, *b->second))
        return Frac{combine(a->first, b->first), a->second};
      return Frac{combine(mul(a->first, b->second), mul(b->first, a->second)),
                  mul(a->second, b->second)};
    }
    case Op::mul: {
      auto a = fraction(n->lhs), b = fraction(n->rhs);
      if (!a || !b) return std::nullopt;
      return Frac{mul(a->first, b->first), mul(a->second, b->second)};
    }
    case Op::div: {
      auto a = fraction(n->lhs), b = fraction(n->rhs);
      if (!a || !b) return std::nullopt;
      return Frac{mul(a->first, b->second), mul(a->second, b->first)};
    }
    case Op::pow: {
      auto a = fraction(n->lhs);
      if (!a) return std::nullopt;
      const int k = n->exponent < 0 ? -n->exponent : n->exponent;
      NodePtr num = pow(a->first, k), den = pow(a->second, k);
      if (n->exponent < 0) std::swap(num, den);
      return Frac{num, den};
    }
    case Op::exp:
    case Op::sin:
    case Op::cos: {
      auto a = fraction(n->lhs);
      if (!a || !is_one(a->second)) return std::nullopt;
      NodePtr g = n->op == Op::exp ? exp(a->first) : n->op == Op::sin ? sin(a->first)
                                                                       : cos(a->first);
      return Frac{g, constant({1.0, 0.0})};
    }
  }
  return std::nullopt;
}

}  // namespace

std::optional<EntireFraction> to_entire_fraction(const MapExpr& m) {
  auto f = fraction(m.root_ptr());
  if (!f) return std::nullopt;
  return EntireFraction{MapExpr(f->first, print(*f->first)), MapExpr(f->second, print(*f->second))};
}

// ---------------------------------------------------------------------------
// Compiled programs

namespace {

constexpr std::size_t kBlock = 64;

}  // namespace

Program::Program(const MapExpr& m) : expr_(m) {
  std::unordered_map<const Node*, int> slot;
  auto emit = [&](auto&& self, const NodePtr& n) -> int {
    if (auto it = slot.find(n.get()); it != slot.end()) return it->second;
    Instr ins{n->op};
    if (n->lhs) ins.a = self(self, n->lhs);
    if (n->rhs) ins.b = self(self, n->rhs);
    ins.exponent = n->exponent;
    ins.constant = n->constant;
    code_.push_back(ins);
    const int id = static_cast<int>(code_.size()) - 1;
    slot.emplace(n.get(), id);
    return id;
  };
  emit(emit, m.root_ptr());
}

Value Program::evaluate(cplx z) const {
  std::vector<Value> reg(code_.size());
  for (std::size_t k = 0; k < code_.size(); ++k) {
    const Instr& in = code_[k];
    switch (in.op) {
      case Op::var:
        reg[k] = Value::finite(z);
        break;
      case Op::constant:
        reg[k] = Value::finite(in.constant);
        break;
      case Op::add:
        reg[k] = extended::add(reg[in.a], reg[in.b]);
        break;
      case Op::sub:
        reg[k] = extended::sub(reg[in.a], reg[in.b]);
        break;
      case Op::mul:
        reg[k] = extended::mul(reg[in.a], reg[in.b]);
        break;
      case Op::div:
        reg[k] = extended::div(reg[in.a], reg[in.b]);
        break;
      case Op::pow:
        reg[k] = extended::pow(reg[in.a], in.exponent);
        break;
      case Op::exp:
        reg[k] = extended::exp(reg[in.a]);
        break;
      case Op::sin:
        reg[k] = extended::sin(reg[in.a]);
        break;
      case Op::cos:
        reg[k] = extended::cos(reg[in.a]);
        break;
    }
  }
  return reg.back();
}

void Program::evaluate(std::span<const double> zr, std::span<const double> zi,
                       std::span<double> outr, std::span<double> outi,
                       std::span<ValueKind> kinds) const {
  const std::size_t n = zr.size();
  if (zi.size() != n || outr.size() != n || outi.size() != n || kinds.size() != n)
    throw std::invalid_argument("Program::evaluate: span sizes differ");
  for (std::size_t off = 0; off < n; off += kBlock) {
    const std::size_t len = std::min(kBlock, n - off);
    run_block(zr.data() + off, zi.data() + off, len, outr.data() + off, outi.data() + off,
              kinds.data() + off);
  }
}

void Program::run_block(const double* zr, const double* zi, std::size_t n, double* outr,
                        double* outi, ValueKind* kinds) const {
  const kernels::KernelTable& kt = kernels::table();
  thread_local std::vector<double> scratch;
  const std::size_t nreg = code_.size();
  // Each register holds kBlock real parts then kBlock imaginary parts; the
  // trailing pair of slots is a temporary for powers.
  scratch.resize((nreg + 2) * 2 * kBlock);
  auto re = [&](std::size_t r) { return scratch.data() + r * 2 * kBlock; };
  auto im = [&](std::size_t r) { return scratch.data() + r * 2 * kBlock + kBlock; };
  std::array<std::uint8_t, kBlock> flag{};

  for (std::size_t k = 0; k < nreg; ++k) {
    const Instr& in = code_[k];
    double* dr = re(k);
    double* di = im(k);
    switch (in.op) {
      case Op::var:
        std::copy(zr, zr + n, dr);
        std::copy(zi, zi + n, di);
        break;
      case Op::constant:
        std::fill(dr, dr + n, in.constant.real());
        std::fill(di, di + n, in.constant.imag());
        break;
      case Op::add:
        kt.cadd(re(in.a), im(in.a), re(in.b), im(in.b), dr, di, n);
        break;
      case Op::sub:
        kt.csub(re(in.a), im(in.a), re(in.b), im(in.b), dr, di, n);
        break;
      case Op::mul:
        kt.cmul(re(in.a), im(in.a), re(in.b), im(in.b), dr, di, n);
        break;
      case Op::div:
        kt.cdiv(re(in.a), im(in.a), re(in.b), im(in.b), dr, di, flag.data(), n);
        break;
      case Op::pow: {
        // Same square-and-multiply sequence as extended::pow.
        unsigned m = static_cast<unsigned>(in.exponent < 0 ? -in.exponent : in.exponent);
        if (m == 0) {
          std::fill(dr, dr + n, 1.0);
          std::fill(di, di + n, 0.0);
          break;
        }
        double* br = re(nreg);
        double* bi = im(nreg);
        std::copy(re(in.a), re(in.a) + n, br);
        std::copy(im(in.a), im(in.a) + n, bi);
        bool have = false;
        while (m != 0) {
          if (m & 1u) {
            if (have) {
              kt.cmul(dr, di, br, bi, dr, di, n);
            } else {
              std::copy(br, br + n, dr);
              std::copy(bi, bi + n, di);
              have = true;
            }
          }
          m >>= 1u;
          if (m != 0) kt.cmul(br, bi, br, bi, br, bi, n);
        }
        if (in.exponent < 0) {
          double* onr = re(nreg + 1);
          double* oni = im(nreg + 1);
          std::fill(onr, onr + n, 1.0);
          std::fill(oni, oni + n, 0.0);
          kt.cdiv(onr, oni, dr, di, dr, di, flag.data(), n);
        }
        break;
      }
      case Op::exp:
      case Op::sin:
      case Op::cos: {
        const double* ar = re(in.a);
        const double* ai = im(in.a);
        for (std::size_t j = 0; j < n; ++j) {
          if (!std::isfinite(ar[j]) || !std::isfinite(ai[j])) {
            flag[j] |= 1;
            dr[j] = di[j] = 0.0;
            continue;
          }
          if (in.op == Op::exp)
            ops::exp(ar[j], ai[j], dr[j], di[j]);
          else if (in.op == Op::sin)
            ops::sin(ar[j], ai[j], dr[j], di[j]);
          else
            ops::cos(ar[j], ai[j], dr[j], di[j]);
        }
        break;
      }
    }
  }

  const double* rr = re(nreg - 1);
  const double* ri = im(nreg - 1);
  for (std::size_t j = 0; j < n; ++j) {
    if (flag[j] == 0 && std::isfinite(rr[j]) && std::isfinite(ri[j])) {
      outr[j] = rr[j];
      outi[j] = ri[j];
      kinds[j] = ValueKind::finite;
    } else {
      const Value v = evaluate(cplx(zr[j], zi[j]));
      outr[j] = v.z.real();
      outi[j] = v.z.imag();
      kinds[j] = v.kind;
    }
  }
}

CompiledMap::CompiledMap(MapExpr f)
    : f_(std::move(f)), df_(differentiate(f_)), pf_(f_), pdf_(df_) {}

}  // namespace ahlfors
