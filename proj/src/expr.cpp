#include "confplane/expr.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <vector>

namespace confplane {

namespace {

// ------------------------------------------------------------- evaluation --

double eval_impl(const ExprNode& n, double x, double y);

double eval_unary(const ExprNode& n, double v) {
    switch (n.uop) {
    case UnaryOp::Neg:  return -v;
    case UnaryOp::Exp:  return std::exp(v);
    case UnaryOp::Log:
        if (!(v > 0.0))
            throw EvalError("log of nonpositive value", pretty_print(n.a));
        return std::log(v);
    case UnaryOp::Sqrt:
        if (v < 0.0)
            throw EvalError("sqrt of negative value", pretty_print(n.a));
        return std::sqrt(v);
    case UnaryOp::Sin:  return std::sin(v);
    case UnaryOp::Cos:  return std::cos(v);
    case UnaryOp::Atan: return std::atan(v);
    }
    throw std::logic_error("unreachable unary op");
}

double eval_binary(const ExprNode& n, double l, double r) {
    switch (n.bop) {
    case BinaryOp::Add: return l + r;
    case BinaryOp::Sub: return l - r;
    case BinaryOp::Mul: return l * r;
    case BinaryOp::Div:
        if (r == 0.0)
            throw EvalError("division by zero", pretty_print(n.b));
        return l / r;
    case BinaryOp::Pow:
        if (l == 0.0 && r < 0.0)
            throw EvalError("zero raised to a negative power",
                            pretty_print(std::make_shared<ExprNode>(n)));
        if (l < 0.0 && r != std::nearbyint(r))
            throw EvalError("negative base with non-integer exponent",
                            pretty_print(std::make_shared<ExprNode>(n)));
        return std::pow(l, r);
    }
    throw std::logic_error("unreachable binary op");
}

double eval_impl(const ExprNode& n, double x, double y) {
    double v;
    switch (n.kind) {
    case NodeKind::Constant: return n.value;
    case NodeKind::Variable: return n.var == 'x' ? x : y;
    case NodeKind::Unary:
        v = eval_unary(n, eval_impl(*n.a, x, y));
        break;
    case NodeKind::Binary:
        v = eval_binary(n, eval_impl(*n.a, x, y), eval_impl(*n.b, x, y));
        break;
    default:
        throw std::logic_error("unreachable node kind");
    }
    // Overflow to ±inf is allowed to propagate; an indeterminate combination
    // (inf - inf, 0 * inf, sin of inf, ...) must never escape as silent NaN.
    if (std::isnan(v))
        throw EvalError("indeterminate value",
                        pretty_print(std::make_shared<ExprNode>(n)));
    return v;
}

// ---------------------------------------------------------------- folding --

bool is_const(const ExprAst& a, double c) {
    return a->kind == NodeKind::Constant && a->value == c;
}

} // namespace

double eval(const ExprAst& ast, double x, double y) {
    return eval_impl(*ast, x, y);
}

ExprAst make_constant(double c) { return std::make_shared<ExprNode>(c); }

ExprAst make_variable(char var) {
    if (var != 'x' && var != 'y')
        throw std::invalid_argument("variable must be 'x' or 'y'");
    return std::make_shared<ExprNode>(var);
}

ExprAst make_unary(UnaryOp op, ExprAst a) {
    if (op == UnaryOp::Neg && a->kind == NodeKind::Unary &&
        a->uop == UnaryOp::Neg)
        return a->a; // -(-x) = x
    auto node = std::make_shared<ExprNode>(op, std::move(a));
    if (node->a->kind == NodeKind::Constant) {
        try {
            double v = eval_impl(*node, 0.0, 0.0);
            if (std::isfinite(v)) return make_constant(v);
        } catch (const EvalError&) {
            // leave unfolded so the domain error surfaces at eval time
        }
    }
    return node;
}

ExprAst make_binary(BinaryOp op, ExprAst a, ExprAst b) {
    if (op == BinaryOp::Pow && b->kind != NodeKind::Constant)
        throw std::invalid_argument("exponent must be a constant");
    switch (op) {
    case BinaryOp::Add:
        if (is_const(a, 0.0)) return b;
        if (is_const(b, 0.0)) return a;
        break;
    case BinaryOp::Sub:
        if (is_const(b, 0.0)) return a;
        if (is_const(a, 0.0)) return make_unary(UnaryOp::Neg, std::move(b));
        break;
    case BinaryOp::Mul:
        if (is_const(a, 0.0) || is_const(b, 0.0)) return make_constant(0.0);
        if (is_const(a, 1.0)) return b;
        if (is_const(b, 1.0)) return a;
        break;
    case BinaryOp::Div:
        if (is_const(b, 1.0)) return a;
        break;
    case BinaryOp::Pow:
        if (is_const(b, 1.0)) return a;
        if (is_const(b, 0.0)) return make_constant(1.0);
        break;
    }
    auto node = std::make_shared<ExprNode>(op, std::move(a), std::move(b));
    if (node->a->kind == NodeKind::Constant &&
        node->b->kind == NodeKind::Constant) {
        try {
            double v = eval_impl(*node, 0.0, 0.0);
            if (std::isfinite(v)) return make_constant(v);
        } catch (const EvalError&) {
        }
    }
    return node;
}

// ------------------------------------------------------------------ diff --

ExprAst diff(const ExprAst& ast, char var) {
    if (var != 'x' && var != 'y')
        throw std::invalid_argument("differentiation variable must be 'x' or 'y'");
    const ExprNode& n = *ast;
    switch (n.kind) {
    case NodeKind::Constant:
        return make_constant(0.0);
    case NodeKind::Variable:
        return make_constant(n.var == var ? 1.0 : 0.0);
    case NodeKind::Unary: {
        ExprAst da = diff(n.a, var);
        switch (n.uop) {
        case UnaryOp::Neg:
            return make_unary(UnaryOp::Neg, da);
        case UnaryOp::Exp:
            return make_binary(BinaryOp::Mul, da,
                               make_unary(UnaryOp::Exp, n.a));
        case UnaryOp::Log:
            return make_binary(BinaryOp::Div, da, n.a);
        case UnaryOp::Sqrt:
            return make_binary(
                BinaryOp::Div, da,
                make_binary(BinaryOp::Mul, make_constant(2.0),
                            make_unary(UnaryOp::Sqrt, n.a)));
        case UnaryOp::Sin:
            return make_binary(BinaryOp::Mul, da,
                               make_unary(UnaryOp::Cos, n.a));
        case UnaryOp::Cos:
            return make_unary(
                UnaryOp::Neg,
                make_binary(BinaryOp::Mul, da,
                            make_unary(UnaryOp::Sin, n.a)));
        case UnaryOp::Atan:
            return make_binary(
                BinaryOp::Div, da,
                make_binary(BinaryOp::Add, make_constant(1.0),
                            make_binary(BinaryOp::Pow, n.a,
                                        make_constant(2.0))));
        }
        throw std::logic_error("unreachable unary op");
    }
    case NodeKind::Binary: {
        switch (n.bop) {
        case BinaryOp::Add:
            return make_binary(BinaryOp::Add, diff(n.a, var), diff(n.b, var));
        case BinaryOp::Sub:
            return make_binary(BinaryOp::Sub, diff(n.a, var), diff(n.b, var));
        case BinaryOp::Mul:
            return make_binary(
                BinaryOp::Add,
                make_binary(BinaryOp::Mul, diff(n.a, var), n.b),
                make_binary(BinaryOp::Mul, n.a, diff(n.b, var)));
        case BinaryOp::Div:
            return make_binary(
                BinaryOp::Div,
                make_binary(
                    BinaryOp::Sub,
                    make_binary(BinaryOp::Mul, diff(n.a, var), n.b),
                    make_binary(BinaryOp::Mul, n.a, diff(n.b, var))),
                make_binary(BinaryOp::Pow, n.b, make_constant(2.0)));
        case BinaryOp::Pow: {
            // exponent is constant by invariant: d(f^c) = c f^(c-1) f'
            double c = n.b->value;
            return make_binary(
                BinaryOp::Mul,
                make_binary(BinaryOp::Mul, make_constant(c),
                            make_binary(BinaryOp::Pow, n.a,
                                        make_constant(c - 1.0))),
                diff(n.a, var));
        }
        }
        throw std::logic_error("unreachable binary op");
    }
    }
    throw std::logic_error("unreachable node kind");
}

// --------------------------------------------------------- pretty printing --

namespace {

// Binding strength used for parenthesis placement: +- then */ then unary -
// then ^ then atoms. A negative constant prints as "-c" and binds like Neg.
int print_level(const ExprNode& n) {
    switch (n.kind) {
    case NodeKind::Constant: return n.value < 0 ? 3 : 5;
    case NodeKind::Variable: return 5;
    case NodeKind::Unary:    return n.uop == UnaryOp::Neg ? 3 : 5;
    case NodeKind::Binary:
        switch (n.bop) {
        case BinaryOp::Add: case BinaryOp::Sub: return 1;
        case BinaryOp::Mul: case BinaryOp::Div: return 2;
        case BinaryOp::Pow: return 4;
        }
    }
    return 5;
}

const char* unary_name(UnaryOp op) {
    switch (op) {
    case UnaryOp::Neg:  return "-";
    case UnaryOp::Exp:  return "exp";
    case UnaryOp::Log:  return "log";
    case UnaryOp::Sqrt: return "sqrt";
    case UnaryOp::Sin:  return "sin";
    case UnaryOp::Cos:  return "cos";
    case UnaryOp::Atan: return "atan";
    }
    return "?";
}

char binary_symbol(BinaryOp op) {
    switch (op) {
    case BinaryOp::Add: return '+';
    case BinaryOp::Sub: return '-';
    case BinaryOp::Mul: return '*';
    case BinaryOp::Div: return '/';
    case BinaryOp::Pow: return '^';
    }
    return '?';
}

std::string format_double(double v) {
    char buf[32];
    auto res = std::to_chars(buf, buf + sizeof(buf), v);
    return std::string(buf, res.ptr);
}

void print_impl(const ExprNode& n, std::string& out) {
    switch (n.kind) {
    case NodeKind::Constant:
        out += format_double(n.value);
        return;
    case NodeKind::Variable:
        out += n.var;
        return;
    case NodeKind::Unary:
        if (n.uop == UnaryOp::Neg) {
            out += '-';
            bool paren = print_level(*n.a) < 3;
            if (paren) out += '(';
            print_impl(*n.a, out);
            if (paren) out += ')';
        } else {
            out += unary_name(n.uop);
            out += '(';
            print_impl(*n.a, out);
            out += ')';
        }
        return;
    case NodeKind::Binary: {
        int lv = print_level(n);
        // Left child: parenthesize when it binds weaker. Right child: also
        // when it binds equally, so left-associative reparsing restores the
        // same tree (a-(b-c) keeps its parentheses, (a-b)-c drops them).
        bool lp = print_level(*n.a) < lv;
        bool rp = print_level(*n.b) <= lv;
        if (lp) out += '(';
        print_impl(*n.a, out);
        if (lp) out += ')';
        out += binary_symbol(n.bop);
        if (rp) out += '(';
        print_impl(*n.b, out);
        if (rp) out += ')';
        return;
    }
    }
}

} // namespace

std::string pretty_print(const ExprAst& ast) {
    std::string out;
    print_impl(*ast, out);
    return out;
}

bool ast_equal(const ExprAst& lhs, const ExprAst& rhs) {
    const ExprNode& a = *lhs;
    const ExprNode& b = *rhs;
    if (a.kind != b.kind) return false;
    switch (a.kind) {
    case NodeKind::Constant: return a.value == b.value;
    case NodeKind::Variable: return a.var == b.var;
    case NodeKind::Unary:
        return a.uop == b.uop && ast_equal(a.a, b.a);
    case NodeKind::Binary:
        return a.bop == b.bop && ast_equal(a.a, b.a) && ast_equal(a.b, b.b);
    }
    return false;
}

// ----------------------------------------------------------------- parser --

namespace {

enum class Tok { Number, Ident, Plus, Minus, Star, Slash, Caret, LParen, RParen, End };

struct Token {
    Tok kind;
    std::size_t offset;
    double value = 0.0;     // Number
    std::string text;       // Ident
};

std::vector<Token> lex(std::string_view s, const ParseLimits& limits) {
    std::vector<Token> toks;
    std::size_t i = 0;
    while (i < s.size()) {
        char c = s[i];
        if (c == ' ' || c == '\t' || c == '\n' || c == '\r') { ++i; continue; }
        std::size_t start = i;
        if (c >= '0' && c <= '9') {
            ++i;
            while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
            if (i < s.size() && s[i] == '.') {
                ++i;
                while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
            }
            if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
                std::size_t mark = i;
                ++i;
                if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
                if (i < s.size() && s[i] >= '0' && s[i] <= '9') {
                    while (i < s.size() && s[i] >= '0' && s[i] <= '9') ++i;
                } else {
                    i = mark; // "2e" with no digits: 'e' belongs to what follows
                }
            }
            double v = 0.0;
            auto res = std::from_chars(s.data() + start, s.data() + i, v);
            if (res.ec != std::errc())
                throw ParseError("malformed number", start);
            toks.push_back({Tok::Number, start, v, {}});
        } else if ((c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_') {
            ++i;
            while (i < s.size() &&
                   ((s[i] >= 'a' && s[i] <= 'z') || (s[i] >= 'A' && s[i] <= 'Z') ||
                    (s[i] >= '0' && s[i] <= '9') || s[i] == '_'))
                ++i;
            toks.push_back({Tok::Ident, start, 0.0,
                            std::string(s.substr(start, i - start))});
        } else {
            Tok k;
            switch (c) {
            case '+': k = Tok::Plus; break;
            case '-': k = Tok::Minus; break;
            case '*': k = Tok::Star; break;
            case '/': k = Tok::Slash; break;
            case '^': k = Tok::Caret; break;
            case '(': k = Tok::LParen; break;
            case ')': k = Tok::RParen; break;
            default:
                throw ParseError(std::string("unexpected character '") + c + "'", i);
            }
            toks.push_back({k, i, 0.0, {}});
            ++i;
        }
        if (toks.size() > limits.max_tokens)
            throw ParseError("token count exceeds limit of " +
                                 std::to_string(limits.max_tokens),
                             start);
    }
    toks.push_back({Tok::End, s.size(), 0.0, {}});
    return toks;
}

bool is_function(const std::string& name) {
    return name == "exp" || name == "log" || name == "sqrt" ||
           name == "sin" || name == "cos" || name == "atan";
}

UnaryOp function_op(const std::string& name) {
    if (name == "exp") return UnaryOp::Exp;
    if (name == "log") return UnaryOp::Log;
    if (name == "sqrt") return UnaryOp::Sqrt;
    if (name == "sin") return UnaryOp::Sin;
    if (name == "cos") return UnaryOp::Cos;
    return UnaryOp::Atan;
}

class Parser {
public:
    Parser(std::vector<Token> toks, const ParseLimits& limits)
        : toks_(std::move(toks)), limits_(limits) {}

    ExprAst run() {
        ExprAst e = parse_expr();
        if (peek().kind != Tok::End)
            throw ParseError("unexpected token", peek().offset);
        return e;
    }

private:
    std::vector<Token> toks_;
    const ParseLimits& limits_;
    std::size_t pos_ = 0;
    std::size_t depth_ = 0;

    const Token& peek() const { return toks_[pos_]; }
    const Token& advance() { return toks_[pos_++]; }

    struct DepthGuard {
        Parser& p;
        explicit DepthGuard(Parser& parser) : p(parser) {
            if (++p.depth_ > p.limits_.max_depth)
                throw ParseError("nesting depth exceeds limit of " +
                                     std::to_string(p.limits_.max_depth),
                                 p.peek().offset);
        }
        ~DepthGuard() { --p.depth_; }
    };

    ExprAst parse_expr() {
        DepthGuard guard(*this);
        ExprAst e = parse_term();
        while (peek().kind == Tok::Plus || peek().kind == Tok::Minus) {
            BinaryOp op = advance().kind == Tok::Plus ? BinaryOp::Add
                                                      : BinaryOp::Sub;
            e = make_binary(op, e, parse_term());
        }
        return e;
    }

    ExprAst parse_term() {
        ExprAst e = parse_factor();
        while (peek().kind == Tok::Star || peek().kind == Tok::Slash) {
            BinaryOp op = advance().kind == Tok::Star ? BinaryOp::Mul
                                                      : BinaryOp::Div;
            e = make_binary(op, e, parse_factor());
        }
        return e;
    }

    ExprAst parse_factor() {
        DepthGuard guard(*this);
        if (peek().kind == Tok::Minus) {
            advance();
            return make_unary(UnaryOp::Neg, parse_factor());
        }
        return parse_power();
    }

    ExprAst parse_power() {
        ExprAst e = parse_atom();
        while (peek().kind == Tok::Caret) {
            advance();
            std::size_t at = peek().offset;
            ExprAst ex = parse_exponent();
            if (ex->kind != NodeKind::Constant)
                throw ParseError("exponent must be constant", at);
            e = make_binary(BinaryOp::Pow, e, ex);
        }
        return e;
    }

    // Exponents allow a local unary minus ("x^-2") and must fold to a
    // constant; anything else is rejected at the exponent's offset.
    ExprAst parse_exponent() {
        DepthGuard guard(*this);
        if (peek().kind == Tok::Minus) {
            advance();
            return make_unary(UnaryOp::Neg, parse_exponent());
        }
        return parse_atom();
    }

    ExprAst parse_atom() {
        DepthGuard guard(*this);
        const Token& t = peek();
        switch (t.kind) {
        case Tok::Number:
            advance();
            return make_constant(t.value);
        case Tok::Ident: {
            advance();
            if (t.text == "x" || t.text == "y")
                return make_variable(t.text[0]);
            if (is_function(t.text)) {
                if (peek().kind != Tok::LParen)
                    throw ParseError("function '" + t.text +
                                         "' requires parentheses",
                                     peek().offset);
                advance();
                ExprAst arg = parse_expr();
                if (peek().kind != Tok::RParen)
                    throw ParseError("expected ')'", peek().offset);
                advance();
                return make_unary(function_op(t.text), arg);
            }
            throw ParseError("unknown identifier '" + t.text + "'", t.offset);
        }
        case Tok::LParen: {
            advance();
            ExprAst e = parse_expr();
            if (peek().kind != Tok::RParen)
                throw ParseError("expected ')'", peek().offset);
            advance();
            return e;
        }
        case Tok::End:
            throw ParseError("unexpected end of input", t.offset);
        default:
            throw ParseError("unexpected token", t.offset);
        }
    }
};

} // namespace

ExprAst parse(std::string_view text, const ParseLimits& limits) {
    if (text.empty())
        throw ParseError("empty input", 0);
    return Parser(lex(text, limits), limits).run();
}

} // namespace confplane
