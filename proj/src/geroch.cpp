#include "nhrf/geroch.hpp"

#include <array>
#include <cmath>

namespace nhrf {

namespace {

void require_4d(const Chart& c, const char* what) {
    if (c.dim() != 4)
        throw std::invalid_argument(std::string(what) + ": needs a 4D chart (use slice_4d)");
}

void require_size(const std::vector<Expr>& v, const char* what) {
    if (v.size() != 4) throw std::invalid_argument(std::string(what) + ": need 4 components");
}

int perm_sign(std::array<int, 4> p) {
    int s = 1;
    for (int i = 0; i < 4; ++i)
        for (int j = i + 1; j < 4; ++j) {
            if (p[std::size_t(i)] == p[std::size_t(j)]) return 0;
            if (p[std::size_t(i)] > p[std::size_t(j)]) s = -s;
        }
    return s;
}

// Covariant derivative data of xi in the coordinate frame.
struct KillingGeometry {
    ExprMatrix G, Ginv;
    std::vector<Expr> up;  // xi^a
    ExprMatrix dxi;        // nabla_a xi_b
    ExprMatrix Fup;        // nabla^a xi^b
    Expr sqrt_det;
    std::vector<std::string> x;

    Expr eps(int a, int b, int c, int d) const {
        int s = perm_sign({a, b, c, d});
        if (s == 0) return num(0.0);
        return s > 0 ? sqrt_det : neg(sqrt_det);
    }
    // eps_{ab cd} F^{cd}
    Expr eps_F(int a, int b) const {
        std::vector<Expr> t;
        for (int c = 0; c < 4; ++c)
            for (int d = 0; d < 4; ++d)
                if (perm_sign({a, b, c, d}) != 0 && !Fup(c, d).is_zero())
                    t.push_back(eps(a, b, c, d) * Fup(c, d));
        return add(std::move(t));
    }
};

KillingGeometry killing_geometry(const GeneratedMetric& g, const KillingData& k) {
    const Chart& c = g.chart;
    require_4d(c, "geroch");
    require_size(k.xi, "xi");
    KillingGeometry kg;
    kg.G = coordinate_metric(c, g.d, g.N);
    kg.Ginv = inverse(kg.G);
    kg.x = c.coords;
    LCConnection lc = levi_civita(coordinate_geometry(c, kg.G));
    kg.dxi = ExprMatrix(4, 4);
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b) {
            std::vector<Expr> t{diff(k.xi[std::size_t(b)], kg.x[std::size_t(a)])};
            for (int m = 0; m < 4; ++m)
                if (!lc.Gamma(m, b, a).is_zero()) t.push_back(neg(lc.Gamma(m, b, a) * k.xi[std::size_t(m)]));
            kg.dxi(a, b) = add(std::move(t));
        }
    for (int a = 0; a < 4; ++a) {
        std::vector<Expr> t;
        for (int b = 0; b < 4; ++b) t.push_back(kg.Ginv(a, b) * k.xi[std::size_t(b)]);
        kg.up.push_back(add(std::move(t)));
    }
    kg.Fup = matmul(matmul(kg.Ginv, kg.dxi), transpose(kg.Ginv));
    kg.sqrt_det = sqrt(abs(determinant(kg.G)));
    return kg;
}

Expr contract(const std::vector<Expr>& a, const std::vector<Expr>& b) {
    std::vector<Expr> t;
    for (std::size_t i = 0; i < a.size(); ++i) t.push_back(a[i] * b[i]);
    return add(std::move(t));
}

void check_nonzero(const Expr& e, const std::vector<Point>& pts, const std::string& what,
                   bool polarization) {
    for (const auto& p : pts) {
        double v = eval(e, p);
        if (std::fabs(v) <= 1e-14) {
            std::string msg = what + " vanishes at " + describe(p);
            if (polarization) throw ZeroPolarization(msg);
            throw DegenerateDenominator(msg);
        }
    }
}

// M = L D L^T; returns P = L sqrt|D| and the symbolic pivots D.
std::pair<ExprMatrix, std::vector<Expr>> ldlt(const ExprMatrix& M) {
    int k = M.rows();
    ExprMatrix L = ExprMatrix::identity(k);
    std::vector<Expr> D(std::size_t(k), num(0.0));
    for (int j = 0; j < k; ++j) {
        std::vector<Expr> t{M(j, j)};
        for (int q = 0; q < j; ++q)
            if (!L(j, q).is_zero()) t.push_back(neg(mul({L(j, q), L(j, q), D[std::size_t(q)]})));
        D[std::size_t(j)] = add(std::move(t));
        for (int i = j + 1; i < k; ++i) {
            std::vector<Expr> s{M(i, j)};
            for (int q = 0; q < j; ++q)
                if (!L(i, q).is_zero() && !L(j, q).is_zero())
                    s.push_back(neg(mul({L(i, q), L(j, q), D[std::size_t(q)]})));
            Expr num_ij = add(std::move(s));
            if (!num_ij.is_zero()) L(i, j) = num_ij / D[std::size_t(j)];
        }
    }
    ExprMatrix P(k, k);
    for (int i = 0; i < k; ++i)
        for (int j = 0; j <= i; ++j)
            if (!L(i, j).is_zero()) P(i, j) = L(i, j) * sqrt(abs(D[std::size_t(j)]));
    return {P, D};
}

std::string theta_tag(double theta) { return "geroch(theta=" + format_real(theta) + ")"; }

}  // namespace

GeneratedMetric slice_4d(const GeneratedMetric& g) {
    const Chart& c = g.chart;
    if (c.dim() == 4) return g;
    if (c.n != 3 || c.coords[0] != "x1")
        throw std::invalid_argument("slice_4d: expects a 5D chart starting with x1");
    Expr g11 = simplify(g.d.g(0, 0));
    if (!g11.is_const() || std::fabs(std::fabs(eval(g11, {})) - 1.0) > 0.0)
        throw std::invalid_argument("slice_4d: g_11 is not +-1");
    for (int j = 1; j < 3; ++j)
        if (!simplify(g.d.g(0, j)).is_zero()) throw std::invalid_argument("slice_4d: x1 couples to x" + std::to_string(j + 1));
    for (int a = 0; a < c.m; ++a)
        if (!simplify(g.N.N(0, a)).is_zero()) throw std::invalid_argument("slice_4d: N_1 is nonzero");

    Chart c4 = Chart::make(2, c.m, {c.coords.begin() + 1, c.coords.end()}, c.params, c.first_index + 1);
    GeneratedMetric out;
    out.chart = c4;
    out.d = DMetric{ExprMatrix(2, 2), g.d.h};
    out.N = NConnection::zero(c4);
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) out.d.g(i, j) = g.d.g(i + 1, j + 1);
        for (int a = 0; a < c.m; ++a) out.N.N(i, a) = g.N.N(i + 1, a);
    }
    std::vector<Expr> all = all_entries(out.d.g);
    for (const auto& e : all_entries(out.d.h)) all.push_back(e);
    for (const auto& e : all_entries(out.N.N)) all.push_back(e);
    for (const auto& e : all)
        if (depends_on(e, "x1")) throw std::invalid_argument("slice_4d: metric depends on x1");
    out.provenance = g.provenance;
    out.provenance.chain.push_back("slice_4d");
    out.excluded = g.excluded;
    return out;
}

Expr geroch_norm(const GeneratedMetric& g, const KillingData& k) {
    require_4d(g.chart, "geroch_norm");
    require_size(k.xi, "xi");
    ExprMatrix Ginv = inverse(coordinate_metric(g.chart, g.d, g.N));
    std::vector<Expr> t;
    for (int a = 0; a < 4; ++a)
        for (int b = 0; b < 4; ++b)
            if (!Ginv(a, b).is_zero())
                t.push_back(mul({k.xi[std::size_t(a)], k.xi[std::size_t(b)], Ginv(a, b)}));
    return add(std::move(t));
}

Expr volume_form(const ExprMatrix& G, int a, int b, int c, int d) {
    if (G.rows() != 4) throw std::invalid_argument("volume_form: 4D only");
    int s = perm_sign({a, b, c, d});
    if (s == 0) return num(0.0);
    Expr v = sqrt(abs(determinant(G)));
    return s > 0 ? v : neg(v);
}

ResidualReport killing_residual(const GeneratedMetric& g, const KillingData& k,
                                const std::vector<Point>& pts, double tol, unsigned jobs) {
    KillingGeometry kg = killing_geometry(g, k);
    std::vector<Expr> r;
    for (int a = 0; a < 4; ++a)
        for (int b = a; b < 4; ++b) r.push_back(kg.dxi(a, b) + kg.dxi(b, a));
    return max_abs_report("killing", r, pts, tol, jobs);
}

std::vector<ResidualReport> geroch_residuals(const GeneratedMetric& g, const KillingData& k,
                                             const GerochPotentials& pot,
                                             const std::vector<Point>& pts, double tol,
                                             unsigned jobs) {
    require_size(pot.alpha, "alpha");
    require_size(pot.mu, "mu");
    KillingGeometry kg = killing_geometry(g, k);
    Expr lam = contract(k.xi, kg.up);

    std::vector<Expr> r_om, r_al, r_mu;
    for (int a = 0; a < 4; ++a) {
        std::vector<Expr> t{diff(pot.omega, kg.x[std::size_t(a)])};
        for (int b = 0; b < 4; ++b)
            for (int c = 0; c < 4; ++c)
                for (int d = 0; d < 4; ++d)
                    if (perm_sign({a, b, c, d}) != 0 && !kg.Fup(c, d).is_zero() && !kg.up[std::size_t(b)].is_zero())
                        t.push_back(neg(mul({kg.eps(a, b, c, d), kg.up[std::size_t(b)], kg.Fup(c, d)})));
        r_om.push_back(add(std::move(t)));
    }
    auto curl = [&](const std::vector<Expr>& v, int a, int b) {
        return num(0.5) * (diff(v[std::size_t(b)], kg.x[std::size_t(a)]) - diff(v[std::size_t(a)], kg.x[std::size_t(b)]));
    };
    for (int a = 0; a < 4; ++a)
        for (int b = a + 1; b < 4; ++b) {
            Expr eF = kg.eps_F(a, b);
            r_al.push_back(curl(pot.alpha, a, b) - num(0.5) * eF);
            r_mu.push_back(add({curl(pot.mu, a, b), neg(mul({num(2), lam, kg.dxi(a, b)})), neg(pot.omega * eF)}));
        }
    Expr c_om = pot.omega - contract(kg.up, pot.alpha);
    Expr c_mu = contract(kg.up, pot.mu) - (pow(lam, 2) + pow(pot.omega, 2) - num(1));
    return {max_abs_report("geroch_omega", r_om, pts, tol, jobs),
            max_abs_report("geroch_alpha", r_al, pts, tol, jobs),
            max_abs_report("geroch_mu", r_mu, pts, tol, jobs),
            max_abs_report("constraint_omega", {c_om}, pts, tol, jobs),
            max_abs_report("constraint_mu", {c_mu}, pts, tol, jobs)};
}

GerochSeed verify_geroch(const GeneratedMetric& g, const KillingData& k,
                         const GerochPotentials& pot, const std::vector<Point>& pts, double tol,
                         unsigned jobs) {
    GerochSeed s{g, k, pot, pts, {}, false};
    s.reports.push_back(killing_residual(g, k, pts, tol, jobs));
    for (auto& r : geroch_residuals(g, k, pot, pts, tol, jobs)) s.reports.push_back(std::move(r));
    s.verified = true;
    for (const auto& r : s.reports) s.verified = s.verified && r.pass;
    return s;
}

GeneratedMetric split_coordinate_metric(const Chart& c, const ExprMatrix& G) {
    const int n = c.n, m = c.m;
    GeneratedMetric out;
    out.chart = c;
    out.d = DMetric{ExprMatrix(n, n), ExprMatrix(m, m)};
    out.N = NConnection::zero(c);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) out.d.h(a, b) = G(n + a, n + b);
    ExprMatrix hinv = inverse(out.d.h);
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < m; ++a) {
            std::vector<Expr> t;
            for (int b = 0; b < m; ++b)
                if (!G(i, n + b).is_zero() && !hinv(b, a).is_zero()) t.push_back(G(i, n + b) * hinv(b, a));
            out.N.N(i, a) = add(std::move(t));
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            std::vector<Expr> t{G(i, j)};
            for (int b = 0; b < m; ++b)
                if (!G(i, n + b).is_zero() && !out.N.N(j, b).is_zero()) t.push_back(neg(G(i, n + b) * out.N.N(j, b)));
            out.d.g(i, j) = add(std::move(t));
        }
    return out;
}

GeneratedMetric apply_geroch(const GerochSeed& seed, double theta) {
    if (!seed.verified) {
        std::string why = "potentials not verified";
        for (const auto& r : seed.reports)
            if (!r.pass) {
                why += ": " + r.summary();
                break;
            }
        throw PotentialsNotVerified(why);
    }
    const GeneratedMetric& g = seed.metric;
    const KillingData& k = seed.killing;
    const GerochPotentials& pot = seed.potentials;
    require_size(pot.beta, "beta");

    Expr lam = geroch_norm(g, k);
    check_nonzero(lam, seed.pts, "Killing norm", false);
    const double c = std::cos(theta), s = std::sin(theta);
    Expr den = pow(num(c) - pot.omega * num(s), 2) + pow(lam, 2) * num(s * s);
    check_nonzero(den, seed.pts, "geroch denominator", false);
    Expr lt = lam / den;  // lambda~
    std::vector<Expr> mu;
    for (int a = 0; a < 4; ++a)
        mu.push_back(add({k.xi[std::size_t(a)] / lt, pot.alpha[std::size_t(a)] * num(std::sin(2 * theta)),
                          neg(pot.beta[std::size_t(a)] * num(s * s))}));

    ExprMatrix G = coordinate_metric(g.chart, g.d, g.N);
    ExprMatrix Gt(4, 4);
    for (int a = 0; a < 4; ++a)
        for (int b = a; b < 4; ++b) {
            Expr xx = k.xi[std::size_t(a)] * k.xi[std::size_t(b)];
            Expr e = den * (G(a, b) - xx / lam) + mul({lt, mu[std::size_t(a)], mu[std::size_t(b)]});
            Gt(a, b) = Gt(b, a) = e;
        }
    GeneratedMetric out = split_coordinate_metric(g.chart, Gt);
    out.provenance = g.provenance;
    out.provenance.chain.push_back(theta_tag(theta));
    out.excluded = g.excluded;
    out.excluded.push_back({"geroch_denominator", den});
    return out;
}

ResidualReport lc_ricci_residual(const GeneratedMetric& g, const std::vector<Point>& pts,
                                 double tol, unsigned jobs) {
    ExprMatrix G = coordinate_metric(g.chart, g.d, g.N);
    RicciD ric = curvature_ricci(levi_civita(coordinate_geometry(g.chart, G)));
    return max_abs_report("lc_ricci", all_entries(ric.R), pts, tol, jobs);
}

ExprMatrix solve_vielbein(const GeneratedMetric& g, const std::vector<int>& eta,
                          const std::vector<Point>& pts) {
    const Chart& c = g.chart;
    const int n = c.n, m = c.m, D = c.dim();
    if (int(eta.size()) != D) throw std::invalid_argument("solve_vielbein: signature size");
    auto [P, Dh] = ldlt(g.d.g);
    auto [R, Dv] = ldlt(g.d.h);
    std::vector<Expr> piv = Dh;
    piv.insert(piv.end(), Dv.begin(), Dv.end());
    for (const auto& p : pts)
        for (int k = 0; k < D; ++k) {
            double v = eval(piv[std::size_t(k)], p);
            if (std::fabs(v) <= 1e-14)
                throw SingularMetric("metric degenerate (pivot " + std::to_string(k) + ") at " + describe(p));
            if ((v > 0) != (eta[std::size_t(k)] > 0))
                throw SignatureMismatch("signature mismatch in slot " + std::to_string(k) + " at " + describe(p));
        }
    ExprMatrix A(D, D);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) A(i, j) = P(i, j);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) A(n + a, n + b) = R(a, b);
    for (int i = 0; i < n; ++i)
        for (int b = 0; b < m; ++b) {
            std::vector<Expr> t;
            for (int a = 0; a < m; ++a)
                if (!g.N.N(i, a).is_zero() && !R(a, b).is_zero()) t.push_back(g.N.N(i, a) * R(a, b));
            A(i, n + b) = add(std::move(t));
        }
    return A;
}

std::vector<int> pivot_signature(const GeneratedMetric& g, const std::vector<Point>& pts) {
    if (pts.empty()) throw std::invalid_argument("pivot_signature: no points");
    std::vector<int> out;
    for (const ExprMatrix* M : {&g.d.g, &g.d.h})
        for (const auto& d : ldlt(*M).second) out.push_back(eval(d, pts.front()) < 0 ? -1 : 1);
    return out;
}

FrameMatrices frame_matrices(const GeneratedMetric& seed, const GeneratedMetric& target,
                             const std::vector<int>& eta, const std::vector<Point>& pts) {
    FrameMatrices f;
    f.signature = eta;
    f.A = solve_vielbein(seed, eta, pts);
    std::vector<int> et = pivot_signature(target, pts);
    ExprMatrix At = solve_vielbein(target, et, pts);
    const int D = At.rows();
    // column k of A_tilde goes to a slot with the same sign in eta
    std::vector<int> slot(std::size_t(D), -1);
    std::vector<bool> used(std::size_t(D), false);
    for (int k = 0; k < D; ++k)
        for (int j = 0; j < D; ++j)
            if (!used[std::size_t(j)] && eta[std::size_t(j)] == et[std::size_t(k)]) {
                slot[std::size_t(k)] = j;
                used[std::size_t(j)] = true;
                break;
            }
    for (int s : slot)
        if (s < 0) throw SignatureMismatch("target signature is not a permutation of eta");
    f.A_tilde = ExprMatrix(D, D);
    for (int r = 0; r < D; ++r)
        for (int k = 0; k < D; ++k) f.A_tilde(r, slot[std::size_t(k)]) = At(r, k);
    f.B = matmul(f.A_tilde, inverse(f.A));
    return f;
}

GeneratedMetric nonholonomic_deform(const GeneratedMetric& check, const Polarizations& pol,
                                    const std::vector<Point>& pts) {
    const Chart& c = check.chart;
    const int n = c.n, m = c.m;
    auto fill = [&](std::vector<Expr> v, int k, const char* what) {
        if (v.empty()) v.assign(std::size_t(k), num(1.0));
        if (int(v.size()) != k) throw std::invalid_argument(std::string(what) + ": wrong size");
        for (std::size_t i = 0; i < v.size(); ++i)
            check_nonzero(v[i], pts, std::string(what) + "[" + std::to_string(i) + "]", true);
        return v;
    };
    std::vector<Expr> eh = fill(pol.eta_h, n, "eta_h"), ev = fill(pol.eta_v, m, "eta_v");
    GeneratedMetric out = check;
    auto scale = [](ExprMatrix& M, const std::vector<Expr>& e) {
        for (int i = 0; i < M.rows(); ++i)
            for (int j = 0; j < M.cols(); ++j) {
                if (M(i, j).is_zero()) continue;
                M(i, j) = i == j ? e[std::size_t(i)] * M(i, j)
                                 : sqrt(e[std::size_t(i)] * e[std::size_t(j)]) * M(i, j);
            }
    };
    scale(out.d.g, eh);
    scale(out.d.h, ev);
    if (pol.eta_N.rows() != 0) {
        if (pol.eta_N.rows() != n || pol.eta_N.cols() != m)
            throw std::invalid_argument("eta_N: wrong size");
        for (int i = 0; i < n; ++i)
            for (int a = 0; a < m; ++a)
                if (!out.N.N(i, a).is_zero()) out.N.N(i, a) = pol.eta_N(i, a) * out.N.N(i, a);
    }
    out.provenance.chain.push_back("deform");
    return out;
}

GeneratedMetric superpose(const GeneratedMetric& base, const std::vector<TransformStep>& steps,
                          const std::vector<Point>& pts, unsigned jobs) {
    GeneratedMetric cur = base;
    for (const auto& step : steps) {
        if (const auto* gs = std::get_if<GerochStep>(&step)) {
            if (cur.chart.dim() != 4) cur = slice_4d(cur);
            GerochSeed seed = verify_geroch(cur, gs->killing, gs->potentials, pts, gs->tol, jobs);
            cur = apply_geroch(seed, gs->theta);
        } else {
            cur = nonholonomic_deform(cur, std::get<DeformStep>(step).pol, pts);
        }
    }
    return cur;
}

}  // namespace nhrf
