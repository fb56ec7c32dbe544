#include "nhrf/expr.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <numeric>
#include <unordered_set>

#include "nhrf/quadrature.hpp"

namespace nhrf {

SyntaxError::SyntaxError(std::size_t p, std::string exp)
    : ExprError("syntax error at position " + std::to_string(p) + ": expected " + exp),
      pos(p),
      expected(std::move(exp)) {}

UnknownVariable::UnknownVariable(std::string n)
    : ExprError("unknown variable '" + n + "'"), name(std::move(n)) {}

UnboundVariable::UnboundVariable(std::string n)
    : EvalError("unbound variable '" + n + "'"), name(std::move(n)) {}

Rational make_rational(std::int64_t n, std::int64_t d) {
    if (d == 0) throw ExprError("rational with zero denominator");
    if (d < 0) {
        n = -n;
        d = -d;
    }
    std::int64_t g = std::gcd(n < 0 ? -n : n, d);
    if (g > 1) {
        n /= g;
        d /= g;
    }
    return Rational{n, d};
}

// ---- Expr basics -----------------------------------------------------------

Expr::Expr() : Expr(raw::constant(0.0)) {}

Kind Expr::kind() const { return p_->kind; }
bool Expr::is_zero() const { return p_->kind == Kind::Const && p_->value == 0.0; }
bool Expr::is_one() const { return p_->kind == Kind::Const && p_->value == 1.0; }
double Expr::const_value() const {
    if (p_->kind != Kind::Const) throw ExprError("not a constant");
    return p_->value;
}

namespace raw {

Expr constant(double c) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Const;
    n->value = c;
    return Expr(std::move(n));
}

Expr variable(const std::string& name) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Var;
    n->name = name;
    return Expr(std::move(n));
}

Expr node(Kind k, std::vector<Expr> kids) {
    auto n = std::make_shared<Node>();
    n->kind = k;
    n->kids = std::move(kids);
    return Expr(std::move(n));
}

Expr power(Expr base, Rational r) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Power;
    n->exponent = r;
    n->kids.push_back(std::move(base));
    return Expr(std::move(n));
}

Expr integral(Expr f, const std::string& var, double lower) {
    auto n = std::make_shared<Node>();
    n->kind = Kind::Integral;
    n->name = var;
    n->value = lower;
    n->kids.push_back(std::move(f));
    return Expr(std::move(n));
}

}  // namespace raw

// ---- folding constructors --------------------------------------------------

namespace {

// Real power with the rational-exponent domain rules. Used by both folding
// and evaluation so they agree bit for bit.
double rational_pow(double x, Rational r) {
    if (x == 0.0 && r.num < 0) throw DivisionByZero();
    if (r.den == 1) return std::pow(x, double(r.num));
    if (x < 0.0) {
        if (r.den % 2 == 0) throw DomainError("even root of negative value");
        double m = std::pow(-x, r.value());
        return (r.num % 2 == 0) ? m : -m;
    }
    return std::pow(x, r.value());
}

double apply_fn(Kind k, double x) {
    switch (k) {
        case Kind::Sin: return std::sin(x);
        case Kind::Cos: return std::cos(x);
        case Kind::Exp: return std::exp(x);
        case Kind::Ln:
            if (x <= 0.0) throw DomainError("ln of nonpositive value");
            return std::log(x);
        case Kind::Abs: return std::fabs(x);
        case Kind::Sqrt:
            if (x < 0.0) throw DomainError("sqrt of negative value");
            return std::sqrt(x);
        case Kind::Sign:
            if (x == 0.0) throw DomainError("sign(0)");
            return x > 0.0 ? 1.0 : -1.0;
        default: break;
    }
    throw ExprError("apply_fn: not a function kind");
}

Expr fn(Kind k, const Expr& a) {
    if (a.is_const()) {
        try {
            return num(apply_fn(k, a.const_value()));
        } catch (const EvalError&) {
            // keep unevaluated; the error resurfaces at evaluation time
        }
    }
    if (k == Kind::Abs && a.kind() == Kind::Abs) return a;
    return raw::node(k, {a});
}

void push_term(const Expr& t, std::vector<Expr>& out, double& c) {
    if (t.kind() == Kind::Sum) {
        for (const auto& k : t.node().kids) push_term(k, out, c);
    } else if (t.is_const()) {
        c += t.const_value();
    } else {
        out.push_back(t);
    }
}

void push_factor(const Expr& t, std::vector<Expr>& out, double& c) {
    switch (t.kind()) {
        case Kind::Product:
            for (const auto& k : t.node().kids) push_factor(k, out, c);
            break;
        case Kind::Neg:
            c = -c;
            push_factor(t.node().kids[0], out, c);
            break;
        case Kind::Const: c *= t.const_value(); break;
        default: out.push_back(t);
    }
}

}  // namespace

Expr num(double c) { return raw::constant(c); }
Expr var(const std::string& name) { return raw::variable(name); }

Expr add(std::vector<Expr> terms) {
    std::vector<Expr> out;
    double c = 0.0;
    for (const auto& t : terms) push_term(t, out, c);
    if (c != 0.0 || std::isnan(c)) out.push_back(num(c));
    if (out.empty()) return num(0.0);
    if (out.size() == 1) return out[0];
    return raw::node(Kind::Sum, std::move(out));
}

Expr mul(std::vector<Expr> factors) {
    std::vector<Expr> out;
    double c = 1.0;
    for (const auto& t : factors) push_factor(t, out, c);
    if (c == 0.0) return num(0.0);
    if (out.empty()) return num(c);
    if (c == 1.0) return out.size() == 1 ? out[0] : raw::node(Kind::Product, std::move(out));
    if (c == -1.0) {
        Expr body = out.size() == 1 ? out[0] : raw::node(Kind::Product, std::move(out));
        return raw::node(Kind::Neg, {body});
    }
    out.insert(out.begin(), num(c));
    return raw::node(Kind::Product, std::move(out));
}

Expr neg(const Expr& a) {
    switch (a.kind()) {
        case Kind::Const: return num(-a.const_value());
        case Kind::Neg: return a.node().kids[0];
        case Kind::Product:
            if (a.node().kids[0].is_const()) return mul({num(-1.0), a});
            break;
        default: break;
    }
    return raw::node(Kind::Neg, {a});
}

Expr divide(const Expr& a, const Expr& b) {
    if (b.is_const()) {
        double d = b.const_value();
        if (d == 1.0) return a;
        if (d == -1.0) return neg(a);
        if (d != 0.0 && a.is_const()) return num(a.const_value() / d);
    }
    if (a.is_zero() && !b.is_zero()) return num(0.0);
    return raw::node(Kind::Quotient, {a, b});
}

Expr pow(const Expr& base, Rational r) {
    if (r.num == 0) return num(1.0);
    if (r.num == 1 && r.den == 1) return base;
    if (base.is_const()) {
        try {
            return num(rational_pow(base.const_value(), r));
        } catch (const EvalError&) {
        }
    }
    if (base.kind() == Kind::Power && r.is_integer() && base.node().exponent.is_integer()) {
        return pow(base.node().kids[0], make_rational(base.node().exponent.num * r.num, 1));
    }
    return raw::power(base, r);
}

Expr pow(const Expr& base, std::int64_t n) { return pow(base, make_rational(n, 1)); }

Expr sin(const Expr& a) { return fn(Kind::Sin, a); }
Expr cos(const Expr& a) { return fn(Kind::Cos, a); }
Expr exp(const Expr& a) { return fn(Kind::Exp, a); }
Expr ln(const Expr& a) { return fn(Kind::Ln, a); }
Expr abs(const Expr& a) { return fn(Kind::Abs, a); }
Expr sqrt(const Expr& a) { return fn(Kind::Sqrt, a); }
Expr sign(const Expr& a) { return fn(Kind::Sign, a); }

Expr integral(const Expr& f, const std::string& v, double lower) {
    if (f.is_zero()) return num(0.0);
    return raw::integral(f, v, lower);
}

Expr operator+(const Expr& a, const Expr& b) { return add({a, b}); }
Expr operator-(const Expr& a, const Expr& b) { return add({a, neg(b)}); }
Expr operator*(const Expr& a, const Expr& b) { return mul({a, b}); }
Expr operator/(const Expr& a, const Expr& b) { return divide(a, b); }
Expr operator-(const Expr& a) { return neg(a); }

// ---- structure -------------------------------------------------------------

bool equal(const Expr& a, const Expr& b) {
    if (a.get() == b.get()) return true;
    const Node& x = a.node();
    const Node& y = b.node();
    if (x.kind != y.kind) return false;
    if (x.kind == Kind::Const || x.kind == Kind::Integral) {
        if (std::memcmp(&x.value, &y.value, sizeof(double)) != 0) return false;
    }
    if (x.name != y.name) return false;
    if (x.kind == Kind::Power &&
        (x.exponent.num != y.exponent.num || x.exponent.den != y.exponent.den))
        return false;
    if (x.kids.size() != y.kids.size()) return false;
    for (std::size_t i = 0; i < x.kids.size(); ++i)
        if (!equal(x.kids[i], y.kids[i])) return false;
    return true;
}

namespace {
void collect_vars(const Node* n, std::unordered_set<const Node*>& seen,
                  std::set<std::string>& out) {
    if (!seen.insert(n).second) return;
    if (n->kind == Kind::Var || n->kind == Kind::Integral) out.insert(n->name);
    for (const auto& k : n->kids) collect_vars(k.get(), seen, out);
}
void count_nodes(const Node* n, std::unordered_set<const Node*>& seen) {
    if (!seen.insert(n).second) return;
    for (const auto& k : n->kids) count_nodes(k.get(), seen);
}
}  // namespace

std::set<std::string> free_vars(const Expr& e) {
    std::unordered_set<const Node*> seen;
    std::set<std::string> out;
    collect_vars(e.get(), seen, out);
    return out;
}

bool depends_on(const Expr& e, const std::string& v) { return free_vars(e).count(v) > 0; }

std::size_t dag_size(const Expr& e) {
    std::unordered_set<const Node*> seen;
    count_nodes(e.get(), seen);
    return seen.size();
}

// ---- simplify ----------------------------------------------------------------

namespace {
// c * body, with c a plain number
std::pair<double, Expr> split_coeff(const Expr& t) {
    if (t.kind() == Kind::Neg) {
        auto [c, b] = split_coeff(t.node().kids[0]);
        return {-c, b};
    }
    if (t.kind() == Kind::Product && t.node().kids[0].is_const()) {
        std::vector<Expr> rest(t.node().kids.begin() + 1, t.node().kids.end());
        return {t.node().kids[0].const_value(), mul(std::move(rest))};
    }
    return {1.0, t};
}

// merges structurally equal terms of a sum: 2*a - a -> a, v - v -> 0
Expr collect(const Expr& sum) {
    if (sum.kind() != Kind::Sum) return sum;
    std::vector<std::pair<double, Expr>> groups;
    std::vector<Expr> consts;
    bool merged = false;
    for (const auto& t : sum.node().kids) {
        if (t.is_const()) {
            consts.push_back(t);
            continue;
        }
        auto [c, b] = split_coeff(t);
        auto it = std::find_if(groups.begin(), groups.end(),
                               [&](const auto& g) { return equal(g.second, b); });
        if (it == groups.end()) {
            groups.emplace_back(c, b);
        } else {
            it->first += c;
            merged = true;
        }
    }
    if (!merged) return sum;
    std::vector<Expr> terms;
    for (const auto& [c, b] : groups)
        if (c != 0.0) terms.push_back(mul({num(c), b}));
    for (const auto& k : consts) terms.push_back(k);
    return add(std::move(terms));
}

struct Simplifier {
    std::unordered_map<const Node*, Expr> memo;

    Expr run(const Expr& e) {
        auto it = memo.find(e.get());
        if (it != memo.end()) return it->second;
        Expr r = build(e);
        memo.emplace(e.get(), r);
        return r;
    }

    std::vector<Expr> kids(const Expr& e) {
        std::vector<Expr> out;
        for (const auto& k : e.node().kids) out.push_back(run(k));
        return out;
    }

    Expr build(const Expr& e) {
        const Node& n = e.node();
        switch (n.kind) {
            case Kind::Const:
            case Kind::Var: return e;
            case Kind::Sum: return collect(add(kids(e)));
            case Kind::Product: return mul(kids(e));
            case Kind::Quotient: return divide(run(n.kids[0]), run(n.kids[1]));
            case Kind::Power: return pow(run(n.kids[0]), n.exponent);
            case Kind::Neg: return neg(run(n.kids[0]));
            case Kind::Integral: return integral(run(n.kids[0]), n.name, n.value);
            default: return fn(n.kind, run(n.kids[0]));
        }
    }
};
}  // namespace

Expr simplify(const Expr& e) {
    Simplifier s;
    return s.run(e);
}

// ---- differentiation ---------------------------------------------------------

Expr Differentiator::operator()(const Expr& e, const std::string& v) {
    auto& memo = memo_[v];
    auto it = memo.find(e.get());
    if (it != memo.end()) return it->second.result;

    const Node& n = e.node();
    auto d = [&](const Expr& k) { return (*this)(k, v); };
    Expr r;
    switch (n.kind) {
        case Kind::Const: r = num(0.0); break;
        case Kind::Var: r = num(n.name == v ? 1.0 : 0.0); break;
        case Kind::Sum: {
            std::vector<Expr> terms;
            for (const auto& k : n.kids) terms.push_back(d(k));
            r = add(std::move(terms));
            break;
        }
        case Kind::Product: {
            std::vector<Expr> terms;
            for (std::size_t i = 0; i < n.kids.size(); ++i) {
                Expr di = d(n.kids[i]);
                if (di.is_zero()) continue;
                std::vector<Expr> f = n.kids;
                f[i] = di;
                terms.push_back(mul(std::move(f)));
            }
            r = add(std::move(terms));
            break;
        }
        case Kind::Quotient: {
            const Expr& a = n.kids[0];
            const Expr& b = n.kids[1];
            Expr da = d(a), db = d(b);
            if (db.is_zero())
                r = divide(da, b);
            else
                r = divide(da * b - a * db, pow(b, 2));
            break;
        }
        case Kind::Power: {
            Expr du = d(n.kids[0]);
            Rational rm = make_rational(n.exponent.num - n.exponent.den, n.exponent.den);
            r = du.is_zero() ? num(0.0)
                             : mul({num(n.exponent.value()), pow(n.kids[0], rm), du});
            break;
        }
        case Kind::Neg: r = neg(d(n.kids[0])); break;
        case Kind::Sin: r = cos(n.kids[0]) * d(n.kids[0]); break;
        case Kind::Cos: r = neg(sin(n.kids[0]) * d(n.kids[0])); break;
        case Kind::Exp: r = e * d(n.kids[0]); break;
        case Kind::Ln: r = divide(d(n.kids[0]), n.kids[0]); break;
        case Kind::Abs: r = sign(n.kids[0]) * d(n.kids[0]); break;
        case Kind::Sqrt: r = divide(d(n.kids[0]), num(2.0) * e); break;
        case Kind::Sign: r = num(0.0); break;
        case Kind::Integral:
            // fundamental theorem in the upper limit, differentiation under the
            // integral sign otherwise
            r = (n.name == v) ? n.kids[0] : integral(d(n.kids[0]), n.name, n.value);
            break;
    }
    memo.emplace(e.get(), Entry{e, r});
    return r;
}

Expr diff(const Expr& e, const std::string& v) {
    Differentiator d;
    return d(e, v);
}

// ---- evaluation --------------------------------------------------------------

Evaluator::Evaluator(Point p, QuadOptions q) : pt_(std::move(p)), q_(q) {}

double Evaluator::operator()(const Expr& e) { return eval(e.get()); }

double Evaluator::eval(const Node* n) {
    if (n->kind == Kind::Const) return n->value;
    auto it = memo_.find(n);
    if (it != memo_.end()) return it->second;
    double r = 0.0;
    switch (n->kind) {
        case Kind::Const: r = n->value; break;
        case Kind::Var: {
            auto p = pt_.find(n->name);
            if (p == pt_.end()) throw UnboundVariable(n->name);
            r = p->second;
            break;
        }
        case Kind::Sum:
            for (const auto& k : n->kids) r += eval(k.get());
            break;
        case Kind::Product:
            r = 1.0;
            for (const auto& k : n->kids) r *= eval(k.get());
            break;
        case Kind::Quotient: {
            double a = eval(n->kids[0].get());
            double b = eval(n->kids[1].get());
            if (b == 0.0) throw DivisionByZero();
            r = a / b;
            break;
        }
        case Kind::Power: r = rational_pow(eval(n->kids[0].get()), n->exponent); break;
        case Kind::Neg: r = -eval(n->kids[0].get()); break;
        case Kind::Integral: r = eval_integral(n); break;
        default: r = apply_fn(n->kind, eval(n->kids[0].get())); break;
    }
    memo_.emplace(n, r);
    return r;
}

double Evaluator::eval_integral(const Node* n) {
    auto p = pt_.find(n->name);
    if (p == pt_.end()) throw UnboundVariable(n->name);
    double upper = p->second;
    Evaluator inner(pt_, q_);
    const Expr& f = n->kids[0];
    auto g = [&](double t) {
        inner.pt_[n->name] = t;
        inner.memo_.clear();
        return inner(f);
    };
    return adaptive_simpson(g, n->value, upper, q_.abs_tol, q_.max_depth);
}

double eval(const Expr& e, const Point& p) {
    Evaluator ev(p);
    return ev(e);
}

}  // namespace nhrf
