// Recursive descent parser and printer for the expression language.
//
//   expr    := term (('+' | '-') term)*
//   term    := unary (('*' | '/') unary)*
//   unary   := '-' unary | power
//   power   := primary ('^' unary)?        exponent must fold to a rational
//   primary := number | name | name '(' args ')' | '(' expr ')'
//
// The parser builds raw trees (no folding) so print(parse(s)) reparses to the
// same structure. a - b is sum(a, neg(b)).

#include <cctype>
#include <cmath>
#include <cstdio>
#include <algorithm>

#include "nhrf/expr.hpp"

namespace nhrf {

namespace {

const std::map<std::string, Kind>& functions() {
    static const std::map<std::string, Kind> f = {
        {"sin", Kind::Sin}, {"cos", Kind::Cos},   {"exp", Kind::Exp},   {"ln", Kind::Ln},
        {"abs", Kind::Abs}, {"sqrt", Kind::Sqrt}, {"sign", Kind::Sign},
    };
    return f;
}

Rational to_rational(double x, std::size_t pos) {
    if (!std::isfinite(x)) throw SyntaxError(pos, "finite rational exponent");
    // continued fractions; exponents in practice are small fractions
    double a = x;
    std::int64_t h0 = 1, h1 = 0, k0 = 0, k1 = 1;
    for (int it = 0; it < 40; ++it) {
        double fl = std::floor(a);
        auto ai = static_cast<std::int64_t>(fl);
        std::int64_t h2 = ai * h0 + h1, k2 = ai * k0 + k1;
        h1 = h0;
        h0 = h2;
        k1 = k0;
        k0 = k2;
        if (k0 > 1000000) break;
        if (std::fabs(double(h0) / double(k0) - x) <= 1e-12 * std::max(1.0, std::fabs(x)))
            return make_rational(h0, k0);
        double frac = a - fl;
        if (frac == 0.0) break;
        a = 1.0 / frac;
    }
    throw SyntaxError(pos, "rational exponent");
}

class Parser {
public:
    Parser(const std::string& s, const std::vector<std::string>& vars) : s_(s), vars_(vars) {}

    Expr run() {
        skip();
        if (i_ >= s_.size()) throw SyntaxError(i_, "expression");
        Expr e = expr();
        skip();
        if (i_ != s_.size()) throw SyntaxError(i_, "end of input");
        return e;
    }

private:
    void skip() {
        while (i_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[i_]))) ++i_;
    }
    bool peek(char c) {
        skip();
        return i_ < s_.size() && s_[i_] == c;
    }
    void expect(char c) {
        if (!peek(c)) throw SyntaxError(i_, std::string("'") + c + "'");
        ++i_;
    }

    Expr expr() {
        std::vector<Expr> terms{term()};
        for (;;) {
            if (peek('+')) {
                ++i_;
                terms.push_back(term());
            } else if (peek('-')) {
                ++i_;
                terms.push_back(raw::node(Kind::Neg, {term()}));
            } else {
                break;
            }
        }
        return terms.size() == 1 ? terms[0] : raw::node(Kind::Sum, std::move(terms));
    }

    Expr term() {
        std::vector<Expr> factors{unary()};
        auto fold = [&]() {
            return factors.size() == 1 ? factors[0] : raw::node(Kind::Product, factors);
        };
        for (;;) {
            if (peek('*')) {
                ++i_;
                factors.push_back(unary());
            } else if (peek('/')) {
                ++i_;
                Expr q = raw::node(Kind::Quotient, {fold(), unary()});
                factors.assign(1, q);
            } else {
                break;
            }
        }
        return fold();
    }

    Expr unary() {
        if (peek('-')) {
            ++i_;
            return raw::node(Kind::Neg, {unary()});
        }
        return power();
    }

    Expr power() {
        Expr base = primary();
        if (peek('^')) {
            ++i_;
            skip();
            std::size_t at = i_;
            Expr ex = unary();
            double val;
            try {
                val = eval(ex, Point{});
            } catch (const EvalError&) {
                throw SyntaxError(at, "constant rational exponent");
            }
            return raw::power(base, to_rational(val, at));
        }
        return base;
    }

    double number_literal() {
        skip();
        std::size_t start = i_;
        while (i_ < s_.size() && (std::isdigit(static_cast<unsigned char>(s_[i_])) || s_[i_] == '.'))
            ++i_;
        if (i_ < s_.size() && (s_[i_] == 'e' || s_[i_] == 'E')) {
            std::size_t save = i_;
            ++i_;
            if (i_ < s_.size() && (s_[i_] == '+' || s_[i_] == '-')) ++i_;
            if (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) {
                while (i_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[i_]))) ++i_;
            } else {
                i_ = save;
            }
        }
        std::string tok = s_.substr(start, i_ - start);
        if (std::count(tok.begin(), tok.end(), '.') > 1 || tok == ".")
            throw SyntaxError(start, "number");
        return std::stod(tok);
    }

    std::string identifier() {
        std::size_t start = i_;
        while (i_ < s_.size() &&
               (std::isalnum(static_cast<unsigned char>(s_[i_])) || s_[i_] == '_'))
            ++i_;
        return s_.substr(start, i_ - start);
    }

    Expr primary() {
        skip();
        if (i_ >= s_.size()) throw SyntaxError(i_, "operand");
        char c = s_[i_];
        if (std::isdigit(static_cast<unsigned char>(c)) || c == '.') return raw::constant(number_literal());
        if (c == '(') {
            ++i_;
            Expr e = expr();
            expect(')');
            return e;
        }
        if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
            std::size_t start = i_;
            std::string name = identifier();
            if (peek('(')) {
                ++i_;
                if (name == "integral") return integral_call(start);
                auto f = functions().find(name);
                if (f == functions().end()) throw SyntaxError(start, "known function name");
                Expr arg = expr();
                expect(')');
                return raw::node(f->second, {arg});
            }
            if (std::find(vars_.begin(), vars_.end(), name) == vars_.end())
                throw UnknownVariable(name);
            return raw::variable(name);
        }
        throw SyntaxError(i_, "operand");
    }

    Expr integral_call(std::size_t start) {
        Expr f = expr();
        expect(',');
        skip();
        std::size_t at = i_;
        std::string v = identifier();
        if (v.empty()) throw SyntaxError(at, "integration variable");
        if (std::find(vars_.begin(), vars_.end(), v) == vars_.end()) throw UnknownVariable(v);
        expect(',');
        skip();
        at = i_;
        Expr lo = expr();
        expect(')');
        double lower;
        try {
            lower = eval(lo, Point{});
        } catch (const EvalError&) {
            throw SyntaxError(at, "constant lower limit");
        }
        (void)start;
        return raw::integral(f, v, lower);
    }

    const std::string& s_;
    const std::vector<std::string>& vars_;
    std::size_t i_ = 0;
};

// ---- printing ----------------------------------------------------------------

std::string fmt_number(double x) {
    char buf[64];
    if (std::fabs(x) < 1e15 && x == std::floor(x)) {
        std::snprintf(buf, sizeof buf, "%.0f", x);
    } else {
        std::snprintf(buf, sizeof buf, "%.17g", x);
    }
    return buf;
}

bool is_atom(const Expr& e) {
    switch (e.kind()) {
        case Kind::Const: return e.const_value() >= 0.0 && !std::signbit(e.const_value());
        case Kind::Var:
        case Kind::Sin:
        case Kind::Cos:
        case Kind::Exp:
        case Kind::Ln:
        case Kind::Abs:
        case Kind::Sqrt:
        case Kind::Sign:
        case Kind::Integral: return true;
        default: return false;
    }
}

void print(const Expr& e, std::string& out);

void print_wrapped(const Expr& e, bool paren, std::string& out) {
    if (paren) out += '(';
    print(e, out);
    if (paren) out += ')';
}

// neg(x) prints as "-x" only when "-x" reparses to exactly neg(x)
void print_neg_body(const Expr& x, std::string& out) {
    bool bare = (is_atom(x) && x.kind() != Kind::Const) || x.kind() == Kind::Power;
    if (x.kind() == Kind::Const) bare = true;
    print_wrapped(x, !bare, out);
}

void print(const Expr& e, std::string& out) {
    const Node& n = e.node();
    switch (n.kind) {
        case Kind::Const:
            if (n.value < 0.0 || std::signbit(n.value)) {
                out += "(-" + fmt_number(-n.value) + ")";
            } else {
                out += fmt_number(n.value);
            }
            return;
        case Kind::Var: out += n.name; return;
        case Kind::Sum:
            for (std::size_t i = 0; i < n.kids.size(); ++i) {
                const Expr& k = n.kids[i];
                if (i > 0 && k.kind() == Kind::Neg) {
                    out += " - ";
                    const Expr& body = k.node().kids[0];
                    // a term after binary minus is parsed by term(); a Sum needs parens
                    print_wrapped(body, body.kind() == Kind::Sum, out);
                } else {
                    if (i > 0) out += " + ";
                    print_wrapped(k, k.kind() == Kind::Sum, out);
                }
            }
            return;
        case Kind::Product:
            for (std::size_t i = 0; i < n.kids.size(); ++i) {
                const Expr& k = n.kids[i];
                if (i > 0) out += '*';
                bool paren = k.kind() == Kind::Sum || k.kind() == Kind::Product ||
                             k.kind() == Kind::Neg || (i > 0 && k.kind() == Kind::Quotient);
                print_wrapped(k, paren, out);
            }
            return;
        case Kind::Quotient: {
            const Expr& a = n.kids[0];
            const Expr& b = n.kids[1];
            print_wrapped(a, a.kind() == Kind::Sum || a.kind() == Kind::Neg, out);
            out += '/';
            bool pb = b.kind() == Kind::Sum || b.kind() == Kind::Product ||
                      b.kind() == Kind::Quotient || b.kind() == Kind::Neg;
            print_wrapped(b, pb, out);
            return;
        }
        case Kind::Power: {
            const Expr& b = n.kids[0];
            print_wrapped(b, !is_atom(b), out);
            const Rational& r = n.exponent;
            if (r.den == 1 && r.num >= 0) {
                out += "^" + std::to_string(r.num);
            } else if (r.den == 1) {
                out += "^(" + std::to_string(r.num) + ")";
            } else {
                out += "^(" + std::to_string(r.num) + "/" + std::to_string(r.den) + ")";
            }
            return;
        }
        case Kind::Neg:
            out += '-';
            print_neg_body(n.kids[0], out);
            return;
        case Kind::Integral:
            out += "integral(";
            print(n.kids[0], out);
            out += ", " + n.name + ", ";
            print(num(n.value), out);
            out += ')';
            return;
        default: break;
    }
    static const std::map<Kind, const char*> names = {
        {Kind::Sin, "sin"}, {Kind::Cos, "cos"},   {Kind::Exp, "exp"},   {Kind::Ln, "ln"},
        {Kind::Abs, "abs"}, {Kind::Sqrt, "sqrt"}, {Kind::Sign, "sign"},
    };
    out += names.at(n.kind);
    out += '(';
    print(n.kids[0], out);
    out += ')';
}

}  // namespace

Expr parse(const std::string& src, const std::vector<std::string>& allowed_vars) {
    Parser p(src, allowed_vars);
    return p.run();
}

std::string to_string(const Expr& e) {
    std::string out;
    print(e, out);
    return out;
}

}  // namespace nhrf
