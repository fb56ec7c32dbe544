#include "nhrf/flow.hpp"

#include <stdexcept>

namespace nhrf {

namespace {

Expr dchi(const Expr& e) { return diff(e, "chi"); }
Expr d(const Expr& e, const char* v) { return diff(e, v); }
Expr sig(int e, const Expr& x) { return e < 0 ? neg(x) : x; }

void require_diagonal(const DMetric& m) {
    auto check = [](const ExprMatrix& a, const char* block) {
        for (int i = 0; i < a.rows(); ++i)
            for (int j = 0; j < a.cols(); ++j)
                if (i != j && !simplify(a(i, j)).is_zero())
                    throw NonDiagonalFamily(std::string("flow family has off-diagonal ") + block +
                                            " entries");
    };
    check(m.g, "g");
    check(m.h, "h");
}

Chart with_chi_param(Chart c) {
    for (const auto& p : c.params)
        if (p == "chi") return c;
    c.params.push_back("chi");
    return c;
}

}  // namespace

std::vector<double> chi_samples(const Axis& chi) {
    std::vector<double> out;
    if (chi.count <= 1) return {chi.min};
    for (int k = 0; k < chi.count; ++k)
        out.push_back(chi.min + (chi.max - chi.min) * k / (chi.count - 1));
    return out;
}

std::vector<Point> with_chi(const std::vector<Point>& pts, const std::vector<double>& chis) {
    std::vector<Point> out;
    out.reserve(pts.size() * chis.size());
    for (double c : chis)
        for (Point p : pts) {
            p["chi"] = c;
            out.push_back(std::move(p));
        }
    return out;
}

FlowEquations flow_equations(const FlowFamily& fam) {
    const GeneratedMetric& g = fam.metric;
    require_diagonal(g.d);
    Chart c = with_chi_param(g.chart);
    const int n = c.n, m = c.m;
    RicciD ric = curvature_ricci(canonical_dconnection(c, g.d, g.N));
    Expr lam = num(fam.lambda);

    FlowEquations out;
    for (int i = 0; i < n; ++i) {
        std::vector<Expr> terms{dchi(g.d.g(i, i)), num(2) * (ric.R(i, i) - lam * g.d.g(i, i))};
        for (int a = 0; a < m; ++a)
            if (!g.N.N(i, a).is_zero()) terms.push_back(g.d.h(a, a) * dchi(pow(g.N.N(i, a), 2)));
        out.eq1.push_back(add(terms));
    }
    for (int a = 0; a < m; ++a)
        out.eq2.push_back(dchi(g.d.h(a, a)) + num(2) * (ric.R(n + a, n + a) - lam * g.d.h(a, a)));
    for (int a = 0; a < n + m; ++a)
        for (int b = 0; b < n + m; ++b)
            if (a != b) out.eq3.push_back(ric.R(a, b));
    return out;
}

std::vector<ResidualReport> flow_residuals(const FlowFamily& fam, const std::vector<Point>& pts,
                                           double tol, unsigned jobs) {
    FlowEquations eq = flow_equations(fam);
    return {max_abs_report("flow_eq1", eq.eq1, pts, tol, jobs),
            max_abs_report("flow_eq2", eq.eq2, pts, tol, jobs),
            max_abs_report("flow_eq3", eq.eq3, pts, tol, jobs)};
}

ExprMatrix hamilton_equations(const FlowFamily& fam) {
    const GeneratedMetric& g = fam.metric;
    Chart c = with_chi_param(g.chart);
    ExprMatrix G = coordinate_metric(c, g.d, g.N);
    RicciD ric = curvature_ricci(levi_civita(coordinate_geometry(c, G)));
    const int D = c.dim();
    ExprMatrix out(D, D);
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b) out(a, b) = dchi(G(a, b)) + num(2) * ric.R(a, b);
    return out;
}

ResidualReport hamilton_residual(const FlowFamily& fam, const std::vector<Point>& pts, double tol,
                                 unsigned jobs) {
    return max_abs_report("hamilton", all_entries(hamilton_equations(fam)), pts, tol, jobs);
}

FlowBuild build_flow_solution(const FlowRecipe& r, const std::vector<Point>& pts, double tol,
                              unsigned jobs) {
    Chart c = chart5d({"chi"});
    FlowBuild out;
    FlowFamily& fam = out.family;
    fam.lambda = r.lambda;
    fam.chi = r.chi;
    GeneratedMetric& g = fam.metric;
    g.chart = c;

    Expr h5s = d(r.h5, "v");
    Expr root_h = r.h0 * d(sqrt(abs(r.h5)), "v");
    Expr h = pow(root_h, 2);
    Expr s4 = r.sigma40;
    if (r.lambda != 0.0)
        s4 = r.sigma40 - num(r.lambda / 4.0) * integral(h * r.h5 / h5s, "v", r.v0);
    Expr h4 = h * s4;

    g.d = diagonal_dmetric({num(double(r.eps[0])), sig(r.eps[1], r.varpi), sig(r.eps[2], r.varpi), h4, r.h5}, c);
    g.N = NConnection::zero(c);
    Expr phi = neg(ln(abs(sqrt(abs(h4 * r.h5)) / h5s)));
    if (r.lambda != 0.0) {
        Expr phis = d(phi, "v");
        g.N.N(1, 0) = d(phi, "x2") / phis;
        g.N.N(2, 0) = d(phi, "x3") / phis;
    }
    Expr kint = integral(h4 / pow(sqrt(abs(r.h5)), 3), "v", r.v0);
    Expr n23 = r.n2.is_zero() ? r.n1 : r.n1 + r.n2 * kint;
    g.N.N(1, 1) = n23;
    g.N.N(2, 1) = n23;
    g.excluded = {{"h5", r.h5}, {"h5_v", h5s}, {"varpi", r.varpi}, {"h4", h4}};
    std::vector<std::string> parts{"flow_solution", to_string(r.varpi), to_string(r.h5),
                                   to_string(r.h0), to_string(r.sigma40), to_string(r.n1),
                                   to_string(r.n2), format_real(r.lambda), format_real(r.v0)};
    for (int e : r.eps) parts.push_back(std::to_string(e));
    g.provenance = {"flow_solution", recipe_hash(parts), {"flow_solution"}};

    std::vector<Point> all = with_chi(pts, chi_samples(r.chi));
    require_clear(g, all);

    Expr lnw = ln(abs(r.varpi));
    Expr cls = add({sig(r.eps[1], d(d(lnw, "x2"), "x2")), sig(r.eps[2], d(d(lnw, "x3"), "x3")),
                     num(-2.0 * r.lambda), r.h5 * dchi(pow(n23, 2))});
    out.reports.push_back(max_abs_report("flow_class", {cls}, all, tol, jobs));
    if (!r.n2.is_zero())
        out.reports.push_back(
            max_abs_report("C_invariance", {d(r.h5 * kint, "v")}, all, tol, jobs));
    if (r.lambda == 0.0) {
        // w is set to zero, which needs d_i phi = 0
        out.reports.push_back(
            max_abs_report("vacuum_alpha", {d(phi, "x2"), d(phi, "x3")}, all, tol, jobs));
    }
    for (const auto& rep : out.reports)
        if (!rep.pass) throw FlowClassViolated("flow recipe fails " + rep.label, rep);
    return out;
}

LCFlowBuild build_lc_flow(const LCFlowRecipe& r, const std::vector<Point>& pts, double tol,
                          Line2Reading reading, unsigned jobs) {
    Chart c = chart4d({"chi"});
    LCFlowBuild out;
    FlowFamily& fam = out.family;
    fam.lambda = r.lambda;
    fam.chi = r.chi;
    GeneratedMetric& g = fam.metric;
    g.chart = c;
    Expr ep = exp(r.psi);
    g.d = diagonal_dmetric({sig(r.eps[0], ep), sig(r.eps[1], ep), r.h4, r.h5}, c);
    g.N = NConnection::zero(c);
    g.excluded = {{"h4", r.h4}, {"h5", r.h5}, {"h5_v", d(r.h5, "v")}};
    std::vector<std::string> parts{"lc_flow", to_string(r.psi), to_string(r.h4), to_string(r.h5),
                                   to_string(r.n2), format_real(r.lambda),
                                   std::to_string(r.eps[0]), std::to_string(r.eps[1])};
    if (r.w2) parts.push_back(to_string(*r.w2));
    if (r.w3) parts.push_back(to_string(*r.w3));
    g.provenance = {"lc_flow", recipe_hash(parts), {"lc_flow"}};

    std::vector<Point> all = with_chi(pts, chi_samples(r.chi));
    require_clear(g, all);

    AuxCoeffs a = aux_coeffs(c, r.h4, r.h5);
    Expr phis = d(a.phi, "v");
    Expr w2, w3;
    if (r.w2 && r.w3) {
        w2 = *r.w2;
        w3 = *r.w3;
    } else if (r.lambda != 0.0 || !simplify(phis).is_zero()) {
        w2 = d(a.phi, "x2") / phis;
        w3 = d(a.phi, "x3") / phis;
    }
    g.N.N(0, 0) = w2;
    g.N.N(1, 0) = w3;
    g.N.N(0, 1) = r.n2;
    g.N.N(1, 1) = r.n2;

    Expr lam = num(r.lambda);
    Expr lap = sig(r.eps[0], d(d(r.psi, "x2"), "x2")) + sig(r.eps[1], d(d(r.psi, "x3"), "x3"));
    Expr line2 = reading == Line2Reading::Default
                     ? s44_closed(r.h4, r.h5) + lam
                     : d(r.h5, "v") * a.phi / (r.h4 * r.h5) - lam;
    std::vector<Expr> c3a, c3b;
    Expr h4s = d(r.h4, "v"), h5s = d(r.h5, "v");
    for (const auto& [x, w] : {std::pair<const char*, Expr>{"x2", w2}, {"x3", w3}}) {
        c3a.push_back(add({d(r.h4, x), neg(w * h4s), neg(mul({num(2), d(w, "v"), r.h4}))}));
        c3b.push_back(d(r.h5, x) - w * h5s);
    }
    out.reports = {max_abs_report("lcflow_psi", {lap - lam}, all, tol, jobs),
                   max_abs_report("lcflow_h", {line2}, all, tol, jobs),
                   max_abs_report("lcflow_w", {w_integrability(w2, w3)}, all, tol, jobs),
                   max_abs_report("lcflow_n", {d(r.n2, "x3") - d(r.n2, "x2")}, all, tol, jobs),
                   max_abs_report("lc_cond_a", c3a, all, tol, jobs),
                   max_abs_report("lc_cond_b", c3b, all, tol, jobs)};
    return out;
}

}  // namespace nhrf
