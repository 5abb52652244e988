#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "sheetguard/address.hpp"
#include "sheetguard/value.hpp"

namespace sheetguard::formula {

// A1-style reference; an absent sheet means the host sheet.
struct CellRef {
  std::optional<std::string> sheet;
  int row = 1;
  int col = 1;
  bool row_abs = false;
  bool col_abs = false;

  bool operator==(const CellRef&) const = default;
};

// Both ends always carry the same sheet.
struct Range {
  CellRef start;
  CellRef end;

  bool operator==(const Range&) const = default;
};

enum class UnaryOp { Negate, Percent };

enum class BinaryOp { Eq, Ne, Lt, Le, Gt, Ge, Concat, Add, Sub, Mul, Div, Pow };

std::string_view op_text(BinaryOp op);

struct Node;
using NodePtr = std::shared_ptr<const Node>;

struct NumberLit {
  double value = 0.0;
};
struct TextLit {
  std::string value;
};
struct BoolLit {
  bool value = false;
};
struct ErrorLit {
  ErrorCode code = ErrorCode::Value;
};
struct Unary {
  UnaryOp op;
  NodePtr operand;
};
struct Binary {
  BinaryOp op;
  NodePtr lhs;
  NodePtr rhs;
};
// Function names are stored uppercase.
struct Call {
  std::string name;
  std::vector<NodePtr> args;
};

struct Node {
  std::variant<NumberLit, TextLit, BoolLit, ErrorLit, CellRef, Range, Unary, Binary, Call> kind;
};

// Structural equality over whole trees.
bool operator==(const Node& a, const Node& b);

NodePtr make_number(double v);
NodePtr make_text(std::string v);
NodePtr make_bool(bool v);
NodePtr make_error(ErrorCode code);
NodePtr make_ref(CellRef ref);
NodePtr make_range(CellRef start, CellRef end);
NodePtr make_unary(UnaryOp op, NodePtr operand);
NodePtr make_binary(BinaryOp op, NodePtr lhs, NodePtr rhs);
NodePtr make_call(std::string name, std::vector<NodePtr> args);

// Parses a formula beginning with '='. Precedence, lowest first:
// comparisons, &, + -, * /, ^, unary minus, postfix %. Binary operators are
// left-associative. Throws FormulaError (SyntaxError, UnbalancedParens or
// UnknownToken).
NodePtr parse_formula(std::string_view source);

// Canonical text: uppercase function names, no spaces, minimal parentheses.
std::string print_formula(const Node& ast);

struct NormalizedFormula {
  std::string text;
  bool operator==(const NormalizedFormula&) const = default;
};

// R1C1 rendering relative to `host`: relative axes become R[dr]/C[dc]
// (bare R/C for zero offset), absolute axes R{row}/C{col}.
NormalizedFormula normalize_relative(const Node& ast, const CellAddress& host);

using Reference = std::variant<CellRef, Range>;

// Every reference in left-to-right source order, duplicates kept.
std::vector<Reference> references_of(const Node& ast);

// Longest chain of IF calls nested inside one another (0 when none).
int max_if_depth(const Node& ast);

}  // namespace sheetguard::formula
