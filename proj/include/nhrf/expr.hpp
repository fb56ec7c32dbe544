#pragma once

#include <cstdint>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

namespace nhrf {

// ---- errors -------------------------------------------------------------

struct ExprError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct SyntaxError : ExprError {
    std::size_t pos;
    std::string expected;
    SyntaxError(std::size_t p, std::string exp);
};

struct UnknownVariable : ExprError {
    std::string name;
    explicit UnknownVariable(std::string n);
};

// Anything raised while evaluating a tree numerically.
struct EvalError : ExprError {
    using ExprError::ExprError;
};
struct DivisionByZero : EvalError {
    DivisionByZero() : EvalError("division by zero") {}
};
struct DomainError : EvalError {
    using EvalError::EvalError;
};
struct UnboundVariable : EvalError {
    std::string name;
    explicit UnboundVariable(std::string n);
};
struct QuadratureError : EvalError {
    using EvalError::EvalError;
};

// ---- tree ---------------------------------------------------------------

enum class Kind {
    Const, Var, Sum, Product, Quotient, Power, Neg,
    Sin, Cos, Exp, Ln, Abs, Sqrt, Sign,
    Integral  // integral(F, v, v0) = int_{v0}^{v} F dv'
};

struct Rational {
    std::int64_t num = 1;
    std::int64_t den = 1;
    double value() const { return double(num) / double(den); }
    bool is_integer() const { return den == 1; }
};
Rational make_rational(std::int64_t n, std::int64_t d);

struct Node;

class Expr {
public:
    Expr();  // constant 0
    explicit Expr(std::shared_ptr<const Node> p) : p_(std::move(p)) {}

    const Node& node() const { return *p_; }
    const Node* get() const { return p_.get(); }
    Kind kind() const;
    bool is_const() const { return kind() == Kind::Const; }
    bool is_zero() const;
    bool is_one() const;
    double const_value() const;

private:
    std::shared_ptr<const Node> p_;
};

struct Node {
    Kind kind;
    double value = 0.0;     // Const; lower limit for Integral
    std::string name;       // Var; integration variable for Integral
    Rational exponent;      // Power
    std::vector<Expr> kids;
};

using Point = std::map<std::string, double>;

// Raw constructors: no folding, used by the parser.
namespace raw {
Expr constant(double c);
Expr variable(const std::string& name);
Expr node(Kind k, std::vector<Expr> kids);
Expr power(Expr base, Rational r);
Expr integral(Expr f, const std::string& var, double lower);
}  // namespace raw

// Folding constructors.
Expr num(double c);
Expr var(const std::string& name);
Expr add(std::vector<Expr> terms);
Expr mul(std::vector<Expr> factors);
Expr divide(const Expr& a, const Expr& b);
Expr pow(const Expr& base, Rational r);
Expr pow(const Expr& base, std::int64_t n);
Expr neg(const Expr& a);
Expr sin(const Expr& a);
Expr cos(const Expr& a);
Expr exp(const Expr& a);
Expr ln(const Expr& a);
Expr abs(const Expr& a);
Expr sqrt(const Expr& a);
Expr sign(const Expr& a);
Expr integral(const Expr& f, const std::string& var, double lower);

Expr operator+(const Expr& a, const Expr& b);
Expr operator-(const Expr& a, const Expr& b);
Expr operator*(const Expr& a, const Expr& b);
Expr operator/(const Expr& a, const Expr& b);
Expr operator-(const Expr& a);
inline Expr operator*(double c, const Expr& b) { return num(c) * b; }
inline Expr operator+(const Expr& a, double c) { return a + num(c); }

// ---- operations ---------------------------------------------------------

Expr parse(const std::string& src, const std::vector<std::string>& allowed_vars);
std::string to_string(const Expr& e);

bool equal(const Expr& a, const Expr& b);
std::set<std::string> free_vars(const Expr& e);
bool depends_on(const Expr& e, const std::string& v);
std::size_t dag_size(const Expr& e);

Expr simplify(const Expr& e);

// Memoized derivative; keep one instance alive across a batch so derivative
// subtrees are shared between results.
class Differentiator {
public:
    Expr operator()(const Expr& e, const std::string& v);

private:
    struct Entry {
        Expr src;
        Expr result;
    };
    std::map<std::string, std::unordered_map<const Node*, Entry>> memo_;
};

Expr diff(const Expr& e, const std::string& v);

struct QuadOptions {
    double abs_tol = 1e-13;
    int max_depth = 48;
};

// Memoized numeric evaluation at a single point. Not thread-safe; use one
// per worker.
class Evaluator {
public:
    explicit Evaluator(Point p, QuadOptions q = {});
    double operator()(const Expr& e);
    const Point& point() const { return pt_; }

private:
    double eval(const Node* n);
    double eval_integral(const Node* n);

    Point pt_;
    QuadOptions q_;
    std::unordered_map<const Node*, double> memo_;
};

double eval(const Expr& e, const Point& p);

}  // namespace nhrf
