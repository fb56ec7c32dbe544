// One line per acceptance criterion; exit status is nonzero if any is red.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "commands.hpp"
#include "nhrf/serialize.hpp"
#include "random_expr.hpp"

using namespace nhrf;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void line(int n, bool ok, const std::string& what, const std::string& detail) {
    std::printf("criterion %d: %s  %s  [%s]\n", n, ok ? "PASS" : "FAIL", what.c_str(), detail.c_str());
    std::fflush(stdout);
    if (!ok) ++failures;
}

void info(const std::string& what, const std::string& detail) {
    std::printf("  info: %s  [%s]\n", what.c_str(), detail.c_str());
}

std::string sci(double x) {
    char b[32];
    std::snprintf(b, sizeof b, "%.3e", x);
    return b;
}

double worst(const std::vector<ResidualReport>& rs) {
    double m = 0.0;
    for (const auto& r : rs) m = std::max(m, r.max_abs);
    return m;
}

std::vector<Point> box_grid(const std::vector<std::string>& axes, int count, Point fixed = {}) {
    std::vector<Axis> ax;
    for (const auto& a : axes) ax.push_back({a, 0.5, 1.5, count});
    return Grid(ax, std::move(fixed)).points();
}

double max_table_diff(const Table3& a, const Table3& b, const std::vector<Point>& pts) {
    auto ea = evaluate_on(all_entries(a), pts), eb = evaluate_on(all_entries(b), pts);
    double m = 0.0;
    for (std::size_t p = 0; p < ea.size(); ++p)
        for (std::size_t k = 0; k < ea[p].size(); ++k) m = std::max(m, std::fabs(ea[p][k] - eb[p][k]));
    return m;
}

double max_matrix_diff(const ExprMatrix& a, const ExprMatrix& b, const std::vector<Point>& pts) {
    double m = 0.0;
    for (const auto& p : pts)
        for (int i = 0; i < a.rows(); ++i)
            for (int k = 0; k < a.cols(); ++k) m = std::max(m, std::fabs(eval(a(i, k), p) - eval(b(i, k), p)));
    return m;
}

ExprMatrix coord(const GeneratedMetric& g) { return coordinate_metric(g.chart, g.d, g.N); }

// |a - b| relative to the larger magnitude, with an absolute floor for values near 0
double rel(double a, double b) { return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), 1e-6}); }

void criterion1() {
    const Chart c = chart5d();
    auto P = [&](const char* s) { return parse(s, c.names()); };
    SolutionRecipe r;
    r.g2 = r.g3 = P("exp(x2)");
    r.f = P("v");
    r.f0 = num(0);
    r.h0 = num(1);
    r.varsigma0 = num(1);
    r.n1 = {num(0), num(0), num(0)};
    r.n2 = {num(1), num(1), num(1)};
    r.v0 = 1.0;
    auto t0 = std::chrono::steady_clock::now();
    GeneratedMetric g = generate_5d(r, Source::vacuum());
    auto pts = box_grid({"x1", "x2", "x3", "v"}, 4, {{"y5", 0.0}});
    require_clear(g, pts);
    auto reps = ansatz_ricci_reports(g, Source::vacuum(), pts, 1e-8);
    double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    bool ok = worst(reps) < 1e-8 && secs < 30.0;
    for (const auto& rep : reps) ok = ok && rep.pass;
    line(1, ok, "vacuum 5D generator: canonical Ricci blocks vanish on 4^4 grid",
         "max=" + sci(worst(reps)) + " tol=1e-8 time=" + sci(secs) + "s");
}

void criterion2() {
    const Chart c = chart5d();
    auto P = [&](const char* s) { return parse(s, c.names()); };
    GeneratedMetric g;
    g.chart = c;
    Expr g2 = P("exp(x2*x3/2) + 1"), g3 = P("2 + sin(x2) * x3");
    Expr h4 = P("-(1 + x1*v^2 + x2^2/4)"), h5 = P("v^3 + x3*v + 1");
    g.d = diagonal_dmetric({num(1), g2, g3, h4, h5}, c);
    g.N = NConnection::zero(c);
    g.N.N(0, 0) = P("x2*v");
    g.N.N(1, 0) = P("sin(v + x3)");
    g.N.N(2, 0) = P("x1 - v^2");
    g.N.N(0, 1) = P("v^2*x3");
    g.N.N(1, 1) = P("exp(v*x1/3)");
    g.N.N(2, 1) = P("x2*ln(v + 1)");
    auto ric = curvature_ricci(canonical_dconnection(c, g.d, g.N));
    ExprMatrix M = ric.mixed();
    AuxCoeffs a = aux_coeffs(c, h4, h5);
    Expr R22 = ricci_h_closed(g2, g3), S44 = s44_closed(h4, h5);
    auto pts = random_points({{"x1", 0.5, 1.5}, {"x2", 0.5, 1.5}, {"x3", 0.5, 1.5}, {"v", 0.5, 1.5}}, 50, 2024,
                             {{"y5", 0.0}});
    double e22 = 0, e44 = 0, e4i = 0, e5i = 0, e5i_engine = 0;
    for (const auto& p : pts) {
        e22 = std::max({e22, rel(eval(M(1, 1), p), eval(R22, p)), rel(eval(M(2, 2), p), eval(R22, p))});
        e44 = std::max({e44, rel(eval(M(3, 3), p), eval(S44, p)), rel(eval(M(4, 4), p), eval(S44, p))});
        for (int i = 0; i < 3; ++i) {
            // frame sign convention: the reference R_4i is written for e_i = d_i + w_i d_v
            Expr r4 = r4i_reference(neg(g.N.N(i, 0)), a.alpha[std::size_t(i)], a.beta, h5);
            e4i = std::max(e4i, rel(eval(ric.R(3, i), p), eval(r4, p)));
            double r5 = eval(ric.R(4, i), p);
            e5i = std::max(e5i, rel(r5, eval(r5i_reference(g.N.N(i, 1), h4, h5, a.gamma), p)));
            e5i_engine = std::max(e5i_engine, rel(r5, eval(r5i_reference(g.N.N(i, 1), h4, h5, a.gamma_engine), p)));
        }
    }
    bool ok = e22 < 1e-9 && e44 < 1e-9 && e4i < 1e-9 && e5i < 1e-9;
    line(2, ok, "engine vs closed forms R^2_2, S^4_4, R_4i, R_5i on 50 random points",
         "rel R22=" + sci(e22) + " S44=" + sci(e44) + " R4i=" + sci(e4i) + " R5i=" + sci(e5i) + " tol=1e-9");
    info("R_5i with gamma' = 3h5*/(2h5) - h4*/(2h4) instead of the reference gamma", "rel=" + sci(e5i_engine));
}

void criterion3() {
    const Chart c = chart4d();
    auto P = [&](const std::string& s) { return parse(s, c.names()); };
    std::mt19937_64 rng(31);
    std::uniform_real_distribution<double> U(0.2, 1.0);
    auto pts = box_grid({"x2", "x3", "v", "y5"}, 3);
    double tors = 0.0, diff = 0.0;
    bool ok = true;
    int used = 0;
    for (int k = 0; k < 5; ++k) {
        auto f = [&]() { return format_real(U(rng)); };
        std::string k1 = f(), k2 = f(), k3 = f();
        VacuumLCRecipe r;
        r.psi = P(f() + "*x2 - " + f() + "*x3");
        r.b = P("v^2 + " + f() + "*x2*v + " + f() + "*x3");
        r.b0 = P(f() + "*x2*x3");
        // n is the gradient of k1 x2 x3 + k2 x2^2 x3 + k3 x3^2
        r.n2 = P(k1 + "*x3 + 2*" + k2 + "*x2*x3");
        r.n3 = P(k1 + "*x2 + " + k2 + "*x2^2 + 2*" + k3 + "*x3");
        r.h0 = 0.5 + U(rng);
        r.eps = {1, (rng() & 1) ? 1 : -1, 1, -1};
        LCResult res = generate_vacuum_lc(r, pts, 1e-10);
        auto compat = check_lc_compatibility(res.metric.chart, res.metric.d, res.metric.N, pts, 1e-10);
        bool cond = true;
        for (const auto& rep : res.reports) cond = cond && rep.pass;
        for (const auto& rep : compat) cond = cond && rep.pass;
        ok = ok && cond;
        if (!cond) continue;
        ++used;
        const GeneratedMetric& g = res.metric;
        DConnection can = canonical_dconnection(g.chart, g.d, g.N);
        auto T = evaluate_on(all_entries(torsion(can).T), pts);
        for (const auto& row : T)
            for (double t : row) tors = std::max(tors, std::fabs(t));
        diff = std::max(diff, max_table_diff(can.Gamma, lc_decomposition(g.chart, g.d, g.N).Gamma, pts));
    }
    ok = ok && used == 5 && tors < 1e-9 && diff < 1e-9;
    line(3, ok, "torsion vanishes for 5 random vacuum-LC recipes; canonical = LC",
         "recipes=" + std::to_string(used) + " torsion=" + sci(tors) + " |canonical-LC|=" + sci(diff) + " tol=1e-9");
}

void criterion4() {
    const Chart c = chart4d();
    auto pts = box_grid({"x2", "x3", "v", "y5"}, 3);
    VacuumLCRecipe r{parse("x2", c.names()), parse("v", c.names()), num(0), num(0), num(0), 1.0, {1, 1, 1, -1}};
    LCResult res = generate_vacuum_lc(r, pts, 1e-10);
    ResidualReport rep = lc_ricci_residual(res.metric, pts, 1e-8);
    line(4, rep.pass, "LC Ricci of the psi=x2, b=v vacuum-LC metric", "max=" + sci(rep.max_abs) + " tol=1e-8");
}

void criterion5() {
    const double lam = 0.3;
    const Chart c = chart4d({"chi"});
    FlowFamily f;
    f.lambda = lam;
    f.chi = {"chi", 0.0, 1.0, 3};
    Expr conf = parse("4/(1+0.3*(x2^2+x3^2))^2", c.names());
    f.metric.chart = c;
    f.metric.d = diagonal_dmetric({conf, conf, num(1), parse("sin(sqrt(0.3)*v)^2/0.3", c.names())}, c);
    f.metric.N = NConnection::zero(c);
    auto pts = with_chi(box_grid({"x2", "x3", "v"}, 3, {{"y5", 0.0}}), chi_samples(f.chi));
    auto reps = flow_residuals(f, pts, 1e-10);
    bool ok = true;
    for (const auto& r : reps) ok = ok && r.pass;
    FlowEquations fe = flow_equations(f);
    ExprMatrix H = hamilton_equations(f);
    ExprMatrix G = f.metric.d.full();
    double dev = 0.0;
    for (const auto& p : pts)
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b) {
                double flow = 0.0;
                if (a == b) flow = a < 2 ? eval(fe.eq1[std::size_t(a)], p) : eval(fe.eq2[std::size_t(a - 2)], p);
                double expect = a == b ? 2 * lam * eval(G(a, b), p) : 0.0;
                dev = std::max(dev, std::fabs(eval(H(a, b), p) - flow - expect));
            }
    ok = ok && dev < 1e-12;
    line(5, ok, "Einstein fixed point (lambda=0.3) at chi in {0,0.5,1}; hamilton - flow = 2 lambda g",
         "flow max=" + sci(worst(reps)) + " tol=1e-10 |H-F-2lg|=" + sci(dev) + " tol=1e-12");
}

void criterion6() {
    const Chart c = chart5d({"chi"});
    FlowRecipe r;
    r.varpi = parse("exp(x2)", c.names());
    r.h5 = parse("v^2", c.names());
    r.h0 = num(1);
    r.sigma40 = num(1);
    r.n1 = parse("x2+x3", c.names());
    r.n2 = num(0);
    r.lambda = 0.0;
    r.chi = {"chi", 0.0, 1.0, 3};
    auto base = box_grid({"x1", "x2", "x3", "v"}, 3, {{"y5", 0.0}});
    FlowBuild b = build_flow_solution(r, base, 1e-10);
    auto reps = flow_residuals(b.family, with_chi(base, chi_samples(r.chi)), 1e-7);
    bool ok = true;
    for (const auto& x : reps) ok = ok && x.pass;
    line(6, ok, "flow solution class (lambda=0, n2=0) over 3 chi samples",
         "max=" + sci(worst(reps)) + " tol=1e-7");
}

void criterion7() {
    const Chart c = chart4d();
    auto P = [&](const std::string& s) { return parse(s, c.names()); };
    auto pts = box_grid({"x2", "x3", "v", "y5"}, 3);
    GeneratedMetric flat;
    flat.chart = c;
    flat.d = diagonal_dmetric({num(1), num(1), num(1), num(-1)}, c);
    flat.N = NConnection::zero(c);

    // constant timelike-normalised xi with constant potentials
    KillingData k{{num(0), num(0), num(0), num(1)}};
    GerochPotentials pot;
    pot.omega = num(-0.5);
    pot.alpha = {num(0.2), num(0), num(0), num(0.5)};
    pot.mu = {num(0.1), num(0), num(0.3), num(-0.25)};
    pot.beta = pot.mu;
    GerochSeed seed = verify_geroch(flat, k, pot, pts, 1e-10);
    double ident = max_matrix_diff(coord(apply_geroch(seed, 0.0)), coord(flat), pts);
    double ric = 0.0;
    bool ok = seed.verified && ident < 1e-12;
    if (seed.verified)
        for (double th : {0.1, 0.7}) {
            ResidualReport r = lc_ricci_residual(apply_geroch(seed, th), pts, 1e-6);
            ric = std::max(ric, r.max_abs);
            ok = ok && r.pass;
        }
    line(7, ok, "Geroch: theta=0 identity; flat seed with constant xi stays Ricci flat at theta 0.1, 0.7",
         "potentials=" + sci(worst(seed.reports)) + " identity=" + sci(ident) + " lc_ricci=" + sci(ric) +
             " tol=1e-6");

    // rotation Killing field: position-dependent potentials, non-flat-looking output
    KillingData kr{{P("-x3"), P("x2"), num(0), num(0)}};
    GerochPotentials pr;
    Expr f = P("(x2^2+x3^2) - 1/(x2^2+x3^2)");
    pr.omega = num(0);
    pr.alpha = {num(0), num(0), num(0), P("2*v")};
    pr.mu = {neg(P("x3")) * f, P("x2") * f, num(0), num(0)};
    pr.beta = pr.mu;
    GerochSeed rs = verify_geroch(flat, kr, pr, pts, 1e-10);
    double rr = 0.0, moved = 0.0;
    for (double th : {0.1, 0.7}) {
        GeneratedMetric gt = apply_geroch(rs, th);
        rr = std::max(rr, lc_ricci_residual(gt, pts, 1e-6).max_abs);
        moved = std::max(moved, max_matrix_diff(coord(gt), coord(flat), pts));
    }
    info("rotation Killing field seed, theta 0.1 and 0.7",
         std::string("verified=") + (rs.verified ? "yes" : "no") + " lc_ricci=" + sci(rr) + " |g~-g|=" + sci(moved));
}

void criterion8() {
    testing::RandomExpr gen(8);
    double fd_err = 0.0;
    int exprs = 0;
    while (exprs < 200) {
        Expr e = gen.smooth(4);
        Expr de = diff(e, "v");
        Point p = gen.point();
        double fd, ex;
        try {
            fd = testing::central_fd(e, "v", p, 1e-5);
            ex = eval(de, p);
        } catch (const EvalError&) {
            continue;
        }
        fd_err = std::max(fd_err, std::fabs(ex - fd) / (1 + std::fabs(fd)));
        ++exprs;
    }
    double quad = std::fabs(integrate_v(parse("v^2", {"v"}), {}, 0.0, 1.0) - 1.0 / 3.0);
    double simp = 0.0;
    int simp_n = 0;
    for (int i = 0; i < 200; ++i) {
        Expr e = gen.rawtree(4);
        Expr s = simplify(e);
        Point p = gen.point();
        double a, b;
        try {
            a = eval(e, p);
            b = eval(s, p);
        } catch (const EvalError&) {
            continue;
        }
        if (!std::isfinite(a)) continue;
        simp = std::max(simp, std::fabs(a - b) / std::max(1.0, std::fabs(a)));
        ++simp_n;
    }
    bool ok = fd_err < 1e-6 && quad < 1e-10 && simp < 1e-12;
    line(8, ok, "symbolic core: derivative vs central FD, quadrature, simplify",
         "fd rel=" + sci(fd_err) + " over " + std::to_string(exprs) + " exprs; |int v^2 - 1/3|=" + sci(quad) +
             "; simplify rel=" + sci(simp) + " over " + std::to_string(simp_n) + " exprs");
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

void criterion9() {
    fs::path dir = fs::temp_directory_path() / "nhrf_acceptance";
    fs::create_directories(dir);
    std::ostringstream sink;
    RunConfig gen;
    gen.config = (fs::path(NHRF_TEST_DATA) / "general_vacuum.json").string();
    gen.out = (dir / "metric.json").string();
    int g = cmd_generate(gen, sink, sink);

    json cfg = {{"metric", gen.out},
                {"checks", {"ricci"}},
                {"grid", {{"axes", {{"x1", {0.5, 1.5, 2}}, {"x2", {0.5, 1.5, 2}}, {"x3", {0.5, 1.5, 2}}, {"v", {0.5, 1.5, 2}}}},
                          {"random", 60}}}};
    std::ofstream(dir / "verify.json") << cfg.dump(2);
    RunConfig v;
    v.config = (dir / "verify.json").string();
    v.seed = 99;
    v.out = (dir / "run1.csv").string();
    int c1 = cmd_verify(v, sink, sink);
    v.out = (dir / "run2.csv").string();
    int c2 = cmd_verify(v, sink, sink);
    std::string a = slurp(dir / "run1.csv"), b = slurp(dir / "run2.csv");
    bool ok = g == 0 && c1 == c2 && !a.empty() && a == b;
    line(9, ok, "two cmd_verify runs with the same config and seed give byte-identical CSV",
         "bytes=" + std::to_string(a.size()) + " exit=" + std::to_string(c1) + "," + std::to_string(c2));
}

}  // namespace

int main() {
    void (*all[])() = {criterion1, criterion2, criterion3, criterion4, criterion5,
                       criterion6, criterion7, criterion8, criterion9};
    for (int n = 0; n < 9; ++n) {
        try {
            all[n]();
        } catch (const std::exception& e) {
            line(n + 1, false, "threw", e.what());
        }
    }
    std::printf("%d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
}
