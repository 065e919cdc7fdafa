#pragma once

#include <cstddef>
#include <memory>
#include <stdexcept>
#include <string>
#include <string_view>

namespace confplane {

/// Closed-form expressions in the variables x and y: the DSL used for
/// conformal factors u(x,y), revolution profiles f(r) (written in x), and
/// metric components. ASTs are immutable after construction and safe to
/// share across threads.

enum class NodeKind { Constant, Variable, Unary, Binary };
enum class UnaryOp { Neg, Exp, Log, Sqrt, Sin, Cos, Atan };
enum class BinaryOp { Add, Sub, Mul, Div, Pow };

class ExprNode;
using ExprAst = std::shared_ptr<const ExprNode>;

class ExprNode {
public:
    NodeKind kind;
    double value = 0.0;   ///< payload when kind == Constant
    char var = 0;         ///< 'x' or 'y' when kind == Variable
    UnaryOp uop{};
    BinaryOp bop{};
    ExprAst a, b;         ///< children; unary nodes use only `a`

    explicit ExprNode(double c) : kind(NodeKind::Constant), value(c) {}
    explicit ExprNode(char v) : kind(NodeKind::Variable), var(v) {}
    ExprNode(UnaryOp op, ExprAst child)
        : kind(NodeKind::Unary), uop(op), a(std::move(child)) {}
    ExprNode(BinaryOp op, ExprAst lhs, ExprAst rhs)
        : kind(NodeKind::Binary), bop(op), a(std::move(lhs)), b(std::move(rhs)) {}
};

/// Guard rails for untrusted input; exceeding either limit raises ParseError.
struct ParseLimits {
    std::size_t max_tokens = 4096;
    std::size_t max_depth = 64;
};

/// Syntax or lexical failure; `offset` is the byte offset into the input.
class ParseError : public std::runtime_error {
public:
    std::size_t offset;
    ParseError(const std::string& what, std::size_t off)
        : std::runtime_error(what + " (at offset " + std::to_string(off) + ")"),
          offset(off) {}
};

/// Domain failure during evaluation (log of a nonpositive value, division by
/// zero, ...); `subexpr` is the offending subexpression, pretty-printed.
class EvalError : public std::runtime_error {
public:
    std::string subexpr;
    EvalError(const std::string& what, std::string sub)
        : std::runtime_error(what + " in: " + sub), subexpr(std::move(sub)) {}
};

/// Parse an expression. Precedence ^ > unary - > */÷ > +-, all binary
/// operators left-associative; functions require parentheses; ^ exponents
/// must fold to constants. Grammar published in docs/expression-grammar.md.
ExprAst parse(std::string_view text, const ParseLimits& limits = {});

/// Evaluate at (x, y). Throws EvalError on domain violations; overflow
/// propagates as ±infinity, but NaN is never returned silently (an
/// indeterminate result also throws).
double eval(const ExprAst& ast, double x, double y);

/// Symbolic partial derivative with respect to 'x' or 'y'.
ExprAst diff(const ExprAst& ast, char var);

/// Minimal-parentheses text form; reparsing yields a structurally identical
/// AST (both sides constant-folded).
std::string pretty_print(const ExprAst& ast);

/// Structural equality (same shape, same constants).
bool ast_equal(const ExprAst& lhs, const ExprAst& rhs);

/// Node factories. They perform constant folding and the 0/1 identities
/// (x+0, x*1, x*0, x^1, x^0, -(-x), x/1) and nothing beyond that; folding of
/// a constant subtree is skipped when it would raise a domain error, so the
/// error surfaces at eval time with the proper context.
ExprAst make_constant(double c);
ExprAst make_variable(char var);
ExprAst make_unary(UnaryOp op, ExprAst a);
ExprAst make_binary(BinaryOp op, ExprAst a, ExprAst b);

} // namespace confplane
