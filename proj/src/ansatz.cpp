#include "nhrf/ansatz.hpp"

#include <cmath>
#include <stdexcept>

namespace nhrf {

namespace {

int index_of(const Chart& c, const std::string& name) {
    for (int i = 0; i < c.dim(); ++i)
        if (c.coords[std::size_t(i)] == name) return i;
    throw std::invalid_argument("chart has no coordinate " + name);
}

Expr sig(int e, const Expr& x) { return e < 0 ? neg(x) : x; }

std::string eps_string(const int* e, std::size_t n) {
    std::string s;
    for (std::size_t i = 0; i < n; ++i) s += e[i] < 0 ? '-' : '+';
    return s;
}

GeneratedMetric generate_general(const Chart& c, const SolutionRecipe& r, const Source& s,
                                const std::string& family) {
    const int n = c.n;
    auto pad = [&](std::vector<Expr> v, const char* what) {
        if (v.empty()) v.assign(std::size_t(n), num(0.0));
        if (int(v.size()) != n) throw std::invalid_argument(std::string(what) + ": need one entry per horizontal coordinate");
        return v;
    };
    std::vector<Expr> n1 = pad(r.n1, "n1"), n2 = pad(r.n2, "n2");

    if (c.n == 2) {
        std::vector<Expr> all{r.g2, r.g3, r.f, r.f0, r.h0, r.varsigma0, s.upsilon2(), s.upsilon4()};
        all.insert(all.end(), n1.begin(), n1.end());
        all.insert(all.end(), n2.begin(), n2.end());
        for (const auto& e : all)
            if (depends_on(e, "x1")) throw std::invalid_argument("4D recipe depends on x1");
    }

    Expr vs = build_varsigma(r, s);
    Expr fs = diff(r.f, "v");
    Expr F = r.f - r.f0;
    bool vac = s.y2_zero();

    GeneratedMetric out;
    out.chart = c;
    out.d = DMetric{ExprMatrix(n, n), ExprMatrix(2, 2)};
    int k2 = index_of(c, "x2"), k3 = index_of(c, "x3");
    if (n == 3) out.d.g(0, 0) = num(double(r.eps[0]));
    out.d.g(k2, k2) = sig(r.eps[1], r.g2);
    out.d.g(k3, k3) = sig(r.eps[2], r.g3);
    out.d.h(0, 0) = sig(r.eps[3], mul({pow(r.h0, 2), pow(fs, 2), abs(vs)}));
    out.d.h(1, 1) = sig(r.eps[4], pow(F, 2));

    out.N = NConnection::zero(c);
    Expr vs_v = diff(vs, "v");
    Expr nint = integral(pow(fs, 2) / pow(F, 3) * vs, "v", r.v0);
    for (int k = 0; k < n; ++k) {
        const std::string& xk = c.coords[std::size_t(k)];
        if (!vac) out.N.N(k, 0) = (diff(vs, xk) + mul({num(2.0), vs, diff(r.h0, xk)}) / r.h0) / vs_v;
        out.N.N(k, 1) = n2[std::size_t(k)].is_zero() ? n1[std::size_t(k)]
                                                     : n1[std::size_t(k)] + n2[std::size_t(k)] * nint;
    }

    out.excluded = {{"f_star", fs}, {"f_minus_f0", F}, {"varsigma", vs}, {"h0", r.h0}};
    if (!vac) out.excluded.push_back({"varsigma_v", vs_v});

    std::vector<std::string> parts{family, eps_string(r.eps.data(), 5), to_string(r.g2), to_string(r.g3),
                                   to_string(r.f), to_string(r.f0), to_string(r.h0),
                                   to_string(r.varsigma0), to_string(s.upsilon2()),
                                   to_string(s.upsilon4()), format_real(r.v0)};
    for (const auto& e : n1) parts.push_back(to_string(e));
    for (const auto& e : n2) parts.push_back(to_string(e));
    out.provenance = {family, recipe_hash(parts), {family}};
    return out;
}

Expr d(const Expr& e, const char* v) { return diff(e, v); }

}  // namespace

AuxCoeffs aux_coeffs(const Chart& c, const Expr& h4, const Expr& h5) {
    AuxCoeffs a;
    Expr h5s = diff(h5, "v"), h4s = diff(h4, "v");
    a.phi = ln(abs(h5s / sqrt(abs(h4 * h5))));
    for (int i = 0; i < c.n; ++i) a.alpha.push_back(h5s * diff(a.phi, c.coords[std::size_t(i)]));
    a.beta = h5s * diff(a.phi, "v");
    Expr t = num(1.5) * h5s / h5;
    a.gamma = t - h4s / h4;
    a.gamma_engine = t - num(0.5) * h4s / h4;
    return a;
}

Expr ricci_h_closed(const Expr& g2, const Expr& g3) {
    Expr g2b = d(g2, "x2"), g3b = d(g3, "x2"), g2p = d(g2, "x3"), g3p = d(g3, "x3");
    Expr br = add({g2b * g3b / (num(2) * g2), pow(g3b, 2) / (num(2) * g3), neg(d(g3b, "x2")),
                   g2p * g3p / (num(2) * g3), pow(g2p, 2) / (num(2) * g2), neg(d(g2p, "x3"))});
    return br / mul({num(2), g2, g3});
}

Expr s44_closed(const Expr& h4, const Expr& h5) {
    Expr h5s = d(h5, "v");
    Expr lns = d(ln(sqrt(abs(h4 * h5))), "v");
    return (h5s * lns - d(h5s, "v")) / mul({num(2), h4, h5});
}

Expr r4i_reference(const Expr& w_i, const Expr& alpha_i, const Expr& beta, const Expr& h5) {
    return neg(w_i * beta / (num(2) * h5)) - alpha_i / (num(2) * h5);
}

Expr r5i_reference(const Expr& n_i, const Expr& h4, const Expr& h5, const Expr& gamma) {
    Expr ns = d(n_i, "v");
    return neg(h5 / (num(2) * h4)) * (d(ns, "v") + gamma * ns);
}

ResidualReport check_h_equation(const Expr& g2, const Expr& g3, const Expr& Y4,
                                const std::vector<Point>& pts, double tol, unsigned jobs) {
    return max_abs_report("h_equation", {ricci_h_closed(g2, g3) + Y4}, pts, tol, jobs);
}

Expr build_varsigma(const SolutionRecipe& r, const Source& s) {
    Expr y2 = s.upsilon2();
    if (simplify(y2).is_zero()) return r.varsigma0;
    Expr integrand = mul({y2, diff(r.f, "v"), r.f - r.f0});
    return r.varsigma0 - mul({num(r.eps[3] / 8.0), pow(r.h0, 2), integral(integrand, "v", r.v0)});
}

GeneratedMetric generate_5d(const SolutionRecipe& r, const Source& s) {
    return generate_general(chart5d(), r, s, "general_5d");
}

GeneratedMetric generate_4d(const SolutionRecipe& r, const Source& s) {
    return generate_general(chart4d(), r, s, "general_4d");
}

std::vector<ResidualReport> recipe_checks(const GeneratedMetric& g, const Source& s,
                                          const std::vector<Point>& pts,
                                          double tol, unsigned jobs) {
    const Chart& c = g.chart;
    int k2 = index_of(c, "x2"), k3 = index_of(c, "x3");
    std::vector<ResidualReport> out{
        check_h_equation(g.d.g(k2, k2), g.d.g(k3, k3), s.upsilon4(), pts, tol, jobs)};
    if (s.y2_zero()) {
        AuxCoeffs a = aux_coeffs(c, g.d.h(0, 0), g.d.h(1, 1));
        out.push_back(max_abs_report("vacuum_alpha", a.alpha, pts, tol, jobs));
    }
    return out;
}

std::vector<ResidualReport> ansatz_ricci_reports(const GeneratedMetric& g, const Source& s,
                                                 const std::vector<Point>& pts, double tol,
                                                 unsigned jobs) {
    const Chart& c = g.chart;
    int n = c.n, D = c.dim();
    int k2 = index_of(c, "x2"), k3 = index_of(c, "x3");
    RicciD ric = curvature_ricci(canonical_dconnection(c, g.d, g.N));
    ExprMatrix M = ric.mixed();
    Expr y2 = s.upsilon2(), y4 = s.upsilon4();

    std::vector<Expr> r4, r5, rt, rest;
    for (int i = 0; i < n; ++i) {
        r4.push_back(ric.R(n, i));
        r5.push_back(ric.R(n + 1, i));
        rt.push_back(ric.R(i, n));
        rt.push_back(ric.R(i, n + 1));
    }
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b) {
            bool mixed_block = (a < n) != (b < n);
            if (a != b && !mixed_block) rest.push_back(M(a, b));
        }
    for (int i = 0; i < n; ++i)
        if (i != k2 && i != k3) rest.push_back(M(i, i));

    return {max_abs_report("ricci_22", {M(k2, k2) + y4}, pts, tol, jobs),
            max_abs_report("ricci_33", {M(k3, k3) + y4}, pts, tol, jobs),
            max_abs_report("ricci_44", {M(n, n) + y2}, pts, tol, jobs),
            max_abs_report("ricci_55", {M(n + 1, n + 1) + y2}, pts, tol, jobs),
            max_abs_report("ricci_4i", r4, pts, tol, jobs),
            max_abs_report("ricci_5i", r5, pts, tol, jobs),
            max_abs_report("ricci_ia", rt, pts, tol, jobs),
            max_abs_report("ricci_other", rest, pts, tol, jobs)};
}

Expr w_integrability(const Expr& w2, const Expr& w3) {
    return add({d(w3, "x2"), neg(w2 * d(w3, "v")), neg(d(w2, "x3")), w3 * d(w2, "v")});
}

LCResult generate_vacuum_lc(const VacuumLCRecipe& r, const std::vector<Point>& pts, double tol,
                            unsigned jobs) {
    Chart c = chart4d();
    LCResult out;
    GeneratedMetric& g = out.metric;
    g.chart = c;
    Expr ep = exp(r.psi);
    Expr bs = d(r.b, "v");
    Expr B = r.b + r.b0;
    g.d = diagonal_dmetric({sig(r.eps[0], ep), sig(r.eps[1], ep),
                            sig(r.eps[2], mul({num(r.h0 * r.h0), pow(bs, 2)})),
                            sig(r.eps[3], pow(B, 2))},
                           c);
    g.N = NConnection::zero(c);
    Expr w2 = d(B, "x2") / bs, w3 = d(B, "x3") / bs;
    g.N.N(0, 0) = w2;
    g.N.N(1, 0) = w3;
    g.N.N(0, 1) = r.n2;
    g.N.N(1, 1) = r.n3;
    g.excluded = {{"b_star", bs}, {"b_plus_b0", B}};
    std::vector<std::string> parts{"vacuum_lc", eps_string(r.eps.data(), 4), to_string(r.psi),
                                   to_string(r.b), to_string(r.b0), to_string(r.n2),
                                   to_string(r.n3), format_real(r.h0)};
    g.provenance = {"vacuum_lc", recipe_hash(parts), {"vacuum_lc"}};
    require_clear(g, pts);

    Expr lap = sig(r.eps[0], d(d(r.psi, "x2"), "x2")) + sig(r.eps[1], d(d(r.psi, "x3"), "x3"));
    out.reports = {max_abs_report("lc_vacuum_psi", {lap}, pts, tol, jobs),
                   max_abs_report("lc_vacuum_w", {w_integrability(w2, w3)}, pts, tol, jobs),
                   max_abs_report("lc_vacuum_n", {d(r.n2, "x3") - d(r.n3, "x2")}, pts, tol, jobs)};
    return out;
}

LCResult generate_sourced_lc(const SourcedLCRecipe& r, const std::vector<Point>& pts, double tol,
                             Line2Reading reading, unsigned jobs) {
    Chart c = chart4d();
    LCResult out;
    GeneratedMetric& g = out.metric;
    g.chart = c;
    Expr ep = exp(r.psi);
    g.d = diagonal_dmetric({sig(r.eps[0], ep), sig(r.eps[1], ep), r.h4, r.h5}, c);
    g.N = NConnection::zero(c);
    g.excluded = {{"h4", r.h4}, {"h5", r.h5}, {"h5_v", d(r.h5, "v")}};
    std::vector<std::string> parts{"sourced_lc", eps_string(r.eps.data(), 2), to_string(r.psi),
                                   to_string(r.h4), to_string(r.h5), to_string(r.n2),
                                   to_string(r.n3), to_string(r.source.upsilon2()),
                                   to_string(r.source.upsilon4())};
    g.provenance = {"sourced_lc", recipe_hash(parts), {"sourced_lc"}};
    require_clear(g, pts);

    AuxCoeffs a = aux_coeffs(c, r.h4, r.h5);
    Expr phis = d(a.phi, "v");
    bool vac = r.source.y2_zero();
    Expr w2, w3;
    if (!(vac && simplify(phis).is_zero())) {
        if (!vac) {
            for (const auto& p : pts) {
                double v;
                try {
                    v = eval(phis, p);
                } catch (const EvalError&) {
                    v = 0.0;
                }
                if (std::fabs(v) <= 1e-14)
                    throw PhiConstant("phi* vanishes with a nonzero source at " + describe(p));
            }
        }
        w2 = d(a.phi, "x2") / phis;
        w3 = d(a.phi, "x3") / phis;
    }
    g.N.N(0, 0) = w2;
    g.N.N(1, 0) = w3;
    g.N.N(0, 1) = r.n2;
    g.N.N(1, 1) = r.n3;

    Expr y2 = r.source.upsilon2();
    Expr lap = sig(r.eps[0], d(d(r.psi, "x2"), "x2")) + sig(r.eps[1], d(d(r.psi, "x3"), "x3"));
    Expr line2 = reading == Line2Reading::Default
                     ? s44_closed(r.h4, r.h5) + y2
                     : d(r.h5, "v") * a.phi / (r.h4 * r.h5) - y2;
    std::vector<Expr> c3a, c3b;
    Expr h4s = d(r.h4, "v"), h5s = d(r.h5, "v");
    for (const auto& [x, w] : {std::pair<const char*, Expr>{"x2", w2}, {"x3", w3}}) {
        c3a.push_back(add({d(r.h4, x), neg(w * h4s), neg(mul({num(2), d(w, "v"), r.h4}))}));
        c3b.push_back(d(r.h5, x) - w * h5s);
    }
    out.reports = {max_abs_report("sourced_psi", {lap - y2}, pts, tol, jobs),
                   max_abs_report("sourced_h", {line2}, pts, tol, jobs),
                   max_abs_report("sourced_w", {w_integrability(w2, w3)}, pts, tol, jobs),
                   max_abs_report("sourced_n", {d(r.n2, "x3") - d(r.n3, "x2")}, pts, tol, jobs),
                   max_abs_report("lc_cond_a", c3a, pts, tol, jobs),
                   max_abs_report("lc_cond_b", c3b, pts, tol, jobs),
                   check_h_equation(g.d.g(0, 0), g.d.g(1, 1), r.source.upsilon4(), pts, tol, jobs)};
    return out;
}

}  // namespace nhrf
