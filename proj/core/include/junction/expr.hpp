#pragma once

#include <memory>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace junction {

/// Parse/eval error with byte offset into the source string.
class ExprError : public std::runtime_error {
 public:
  ExprError(const std::string& message, std::size_t offset)
      : std::runtime_error(message + " (offset " + std::to_string(offset) + ")"),
        offset_(offset) {}
  std::size_t offset() const { return offset_; }

 private:
  std::size_t offset_;
};

/// Evaluation-time domain error (log of nonpositive, division by zero, ...).
class ExprDomainError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {
struct ExprNode;
using NodePtr = std::shared_ptr<const ExprNode>;
}  // namespace detail

/// An immutable scalar function of named variables.
///
/// Grammar: infix arithmetic with + - * / and ^ for powers, function-call
/// syntax (sin, cos, tan, exp, log, sqrt, sstep and its derivatives
/// sstep1..sstep4), numeric literals, and the constants pi, e.
/// Juxtaposition is not multiplication. sstep(x,a,b) is the C^2 quintic
/// smoothstep, 0 for x<=a and 1 for x>=b; its bounds must be constant.
///
/// Instances are immutable after construction and safe to evaluate
/// concurrently.
class ExprFn {
 public:
  ExprFn() = default;

  static ExprFn parse(std::string_view source, std::vector<std::string> vars);

  /// Constant function (independent of all vars).
  static ExprFn constant(double value, std::vector<std::string> vars = {});

  /// values[i] binds vars()[i].
  double eval(std::span<const double> values) const;
  double eval(std::initializer_list<double> values) const {
    return eval(std::span<const double>(values.begin(), values.size()));
  }

  /// Symbolic derivative of the given order (order <= 4).
  ExprFn derivative(const std::string& var, int order = 1) const;

  const std::vector<std::string>& vars() const { return vars_; }
  const std::string& source() const { return source_; }

  /// Canonical printable form; parse(print(), vars()) evaluates identically.
  std::string print() const;

  /// Structurally zero after simplification.
  bool is_zero() const;
  bool valid() const { return root_ != nullptr; }

 private:
  ExprFn(detail::NodePtr root, std::vector<std::string> vars, std::string source);
  void compile();

  detail::NodePtr root_;
  std::vector<std::string> vars_;
  std::string source_;

  // Flat postfix tape for fast evaluation.
  struct Op {
    int kind;
    int arg;
    double value;
  };
  std::vector<Op> tape_;
  int stack_need_ = 0;
};

}  // namespace junction
