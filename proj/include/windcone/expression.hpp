#pragma once

#include <memory>
#include <string>

#include "windcone/error.hpp"

namespace windcone {

// Closed arithmetic expression over variables x, y; grammar restricted to
// {+, -, *, /, ^, unary -}, calls to sin/cos/exp/sqrt/abs and constants
// pi, e. Division by a statically-zero constant is rejected at parse time;
// a runtime divisor below 1e-12 in magnitude raises a numerical failure.
class FieldExpr {
 public:
  static FieldExpr parse(const std::string& text);

  double eval(double x, double y) const;
  const std::string& source() const { return source_; }
  bool is_constant(double* value = nullptr) const;

  FieldExpr() = default;

  struct Node;  // exposed for the implementation file only

 private:
  std::shared_ptr<const Node> root_;
  std::string source_;
};

struct ExprDiagnostic {
  int column = 0;  // 1-based position in the expression text
  std::string message;
};

class ExprError : public Error {
 public:
  ExprError(ExprDiagnostic diag)
      : Error(ErrorCode::configuration,
              "expression error at column " + std::to_string(diag.column) + ": " +
                  diag.message),
        diag_(std::move(diag)) {}
  const ExprDiagnostic& diagnostic() const { return diag_; }

 private:
  ExprDiagnostic diag_;
};

}  // namespace windcone
