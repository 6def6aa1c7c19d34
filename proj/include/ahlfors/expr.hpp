#pragma once

// Holomorphic map definitions: a small expression language over one complex
// variable z, exact symbolic derivatives, and evaluation on the extended
// complex plane (finite values plus a single point at infinity).
//
// Grammar:
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := ('-' | '+') unary | factor
//   factor  := atom ('^' signed-integer)?
//   atom    := 'z' | literal | func '(' expr ')' | '(' expr ')'
//   literal := decimal 'i'? | 'i'
//   func    := exp | sin | cos
//
// Unary minus on a bare literal yields a negative literal; on anything else
// it yields (0 - operand).

#include <complex>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ahlfors {

using cplx = std::complex<double>;

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Thrown by parse_map. offset is 1-based; the end of input is size() + 1.
class ParseError : public Error {
 public:
  ParseError(std::size_t offset, const std::string& what);
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

// Numeric failure inside a computation (non-convergence, overflow, a point
// that has to be perturbed). stage names the pipeline step for reports.
class NumericError : public Error {
 public:
  NumericError(std::string stage, const std::string& what);
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

enum class ValueKind : std::uint8_t { finite, infinite, indeterminate };

struct Value {
  cplx z{};
  ValueKind kind = ValueKind::finite;

  static Value finite(cplx v) { return {v, ValueKind::finite}; }
  static Value infinity() { return {cplx{}, ValueKind::infinite}; }
  static Value indeterminate() { return {cplx{}, ValueKind::indeterminate}; }

  bool is_finite() const { return kind == ValueKind::finite; }
  bool is_infinite() const { return kind == ValueKind::infinite; }
  bool is_indeterminate() const { return kind == ValueKind::indeterminate; }
};

enum class Op : std::uint8_t { var, constant, add, sub, mul, div, pow, exp, sin, cos };

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct Node {
  Op op = Op::var;
  cplx constant{};
  int exponent = 0;
  NodePtr lhs;
  NodePtr rhs;
};

inline constexpr int kMaxExponent = 64;

// Node builders. Constant operands are folded, and the identities x+0, x*1,
// x*0, x/1, x^0, x^1 are applied. Folding that overflows throws NumericError.
namespace build {
NodePtr var();
NodePtr constant(cplx c);
NodePtr add(NodePtr a, NodePtr b);
NodePtr sub(NodePtr a, NodePtr b);
NodePtr mul(NodePtr a, NodePtr b);
NodePtr div(NodePtr a, NodePtr b);
NodePtr pow(NodePtr a, int n);
NodePtr exp(NodePtr a);
NodePtr sin(NodePtr a);
NodePtr cos(NodePtr a);
}  // namespace build

class MapExpr {
 public:
  MapExpr(NodePtr root, std::string source_text);

  const Node& root() const { return *root_; }
  const NodePtr& root_ptr() const { return root_; }
  const std::string& source_text() const { return source_; }

  // Canonical form: fully parenthesised binary operations, explicit '*'.
  std::string to_string() const;
  bool is_constant() const;

 private:
  NodePtr root_;
  std::string source_;
};

MapExpr parse_map(std::string_view source);
MapExpr differentiate(const MapExpr& m);
Value evaluate(const MapExpr& m, cplx z);

std::string print(const Node& n);
bool structurally_equal(const Node& a, const Node& b);
inline bool structurally_equal(const MapExpr& a, const MapExpr& b) {
  return structurally_equal(a.root(), b.root());
}

// Extended arithmetic used by every evaluation path.
namespace extended {
Value add(Value a, Value b);
Value sub(Value a, Value b);
Value mul(Value a, Value b);
Value div(Value a, Value b);
Value pow(Value a, int n);
Value exp(Value a);
Value sin(Value a);
Value cos(Value a);
}  // namespace extended

// f = numerator / denominator with both parts free of division, so both are
// entire. Not available when exp/sin/cos is applied to a non-entire argument.
struct EntireFraction {
  MapExpr numerator;
  MapExpr denominator;
};
std::optional<EntireFraction> to_entire_fraction(const MapExpr& m);

// Register program compiled from an expression DAG. Immutable and safe to
// share between threads.
class Program {
 public:
  explicit Program(const MapExpr& m);

  Value evaluate(cplx z) const;

  // Batch evaluation over structure-of-arrays input. Lanes whose fast-path
  // result is not a plain finite number are recomputed with extended
  // semantics, so results agree bit-for-bit with evaluate(z).
  void evaluate(std::span<const double> zr, std::span<const double> zi, std::span<double> outr,
                std::span<double> outi, std::span<ValueKind> kinds) const;

  const MapExpr& expr() const { return expr_; }

 private:
  struct Instr {
    Op op;
    int a = -1;
    int b = -1;
    int exponent = 0;
    cplx constant{};
  };

  void run_block(const double* zr, const double* zi, std::size_t n, double* outr, double* outi,
                 ValueKind* kinds) const;

  MapExpr expr_;
  std::vector<Instr> code_;  // instruction k writes register k
};

// A map bundled with its derivative, both compiled.
class CompiledMap {
 public:
  explicit CompiledMap(MapExpr f);
  explicit CompiledMap(std::string_view source) : CompiledMap(parse_map(source)) {}

  const MapExpr& expr() const { return f_; }
  const MapExpr& derivative_expr() const { return df_; }
  const Program& f() const { return pf_; }
  const Program& df() const { return pdf_; }
  const std::string& source() const { return f_.source_text(); }

 private:
  MapExpr f_;
  MapExpr df_;
  Program pf_;
  Program pdf_;
};

}  // namespace ahlfors
