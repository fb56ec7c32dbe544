#include <cmath>

#include "doctest.h"
#include "nhrf/flow.hpp"

using namespace nhrf;

namespace {

const Chart C5 = chart5d({"chi"});
const Chart C4 = chart4d({"chi"});

Expr P5(const std::string& s) { return parse(s, C5.names()); }
Expr P4(const std::string& s) { return parse(s, C4.names()); }

std::vector<Point> pts5(std::size_t count, unsigned long long seed) {
    return random_points({{"x1", 0.5, 1.5}, {"x2", 0.5, 1.5}, {"x3", 0.5, 1.5}, {"v", 0.5, 1.5}},
                         count, seed, {{"y5", 0.0}});
}

std::vector<Point> pts4(std::size_t count, unsigned long long seed) {
    return random_points({{"x2", 0.5, 1.5}, {"x3", 0.5, 1.5}, {"v", 0.5, 1.5}}, count, seed,
                         {{"y5", 0.0}});
}

bool all_pass(const std::vector<ResidualReport>& rs) {
    bool ok = true;
    for (const auto& r : rs) {
        INFO(r.summary());
        CHECK(r.pass);
        ok = ok && r.pass;
    }
    return ok;
}

FlowFamily einstein_family(double lam) {
    FlowFamily f;
    f.lambda = lam;
    f.chi = {"chi", 0.0, 1.0, 3};
    GeneratedMetric& g = f.metric;
    g.chart = C4;
    std::string l = format_real(lam);
    Expr conf = P4("4/(1+" + l + "*(x2^2+x3^2))^2");
    g.d = diagonal_dmetric({conf, conf, num(1), P4("sin(sqrt(" + l + ")*v)^2/" + l)}, C4);
    g.N = NConnection::zero(C4);
    return f;
}

}  // namespace

TEST_CASE("chi sampling") {
    CHECK(chi_samples({"chi", 0, 1, 3}) == std::vector<double>{0.0, 0.5, 1.0});
    CHECK(chi_samples({"chi", 0.2, 0.9, 1}) == std::vector<double>{0.2});
    auto all = with_chi(pts4(4, 1), {0.0, 1.0});
    REQUIRE(all.size() == 8);
    CHECK(all[0].at("chi") == 0.0);
    CHECK(all[7].at("chi") == 1.0);
}

TEST_CASE("static Einstein family is a fixed point") {
    const double lam = 0.3;
    FlowFamily f = einstein_family(lam);
    auto all = with_chi(pts4(30, 2), chi_samples(f.chi));
    for (const auto& r : flow_residuals(f, all, 1e-10)) {
        INFO(r.summary());
        CHECK(r.pass);
    }

    // hamilton - flow = 2 lambda g on the diagonal, 0 elsewhere
    FlowEquations fe = flow_equations(f);
    ExprMatrix H = hamilton_equations(f);
    ExprMatrix G = f.metric.d.full();
    for (const auto& p : all) {
        for (int a = 0; a < 2; ++a) {
            CHECK(std::fabs(eval(H(a, a), p) - eval(fe.eq1[std::size_t(a)], p) -
                            2 * lam * eval(G(a, a), p)) < 1e-12);
            CHECK(std::fabs(eval(H(2 + a, 2 + a), p) - eval(fe.eq2[std::size_t(a)], p) -
                            2 * lam * eval(G(2 + a, 2 + a), p)) < 1e-12);
        }
        for (int a = 0; a < 4; ++a)
            for (int b = 0; b < 4; ++b)
                if (a != b) CHECK(std::fabs(eval(H(a, b), p)) < 1e-12);
    }
    CHECK_FALSE(hamilton_residual(f, all, 1e-6).pass);
}

TEST_CASE("flat family") {
    FlowFamily f;
    f.metric.chart = C5;
    f.metric.d = diagonal_dmetric({num(1), num(-1), num(1), num(1), num(-1)}, C5);
    f.metric.N = NConnection::zero(C5);
    auto all = with_chi(pts5(10, 3), chi_samples(f.chi));
    all_pass(flow_residuals(f, all, 1e-12));
    CHECK(hamilton_residual(f, all, 1e-12).pass);
}

TEST_CASE("off-diagonal family is refused") {
    FlowFamily f;
    f.metric.chart = C4;
    f.metric.d = diagonal_dmetric({num(1), num(1), num(1), num(1)}, C4);
    f.metric.d.g(0, 1) = f.metric.d.g(1, 0) = P4("x3");
    f.metric.N = NConnection::zero(C4);
    CHECK_THROWS_AS(flow_residuals(f, pts4(2, 1), 1e-8), NonDiagonalFamily);
}

TEST_CASE("shrinking product of round spheres") {
    // g0 = S^2 x S^2 with unit radii, Ric(g0) = g0
    FlowFamily f;
    f.chi = {"chi", 0.0, 0.3, 3};
    f.metric.chart = C4;
    f.metric.d = diagonal_dmetric(
        {P4("1-2*chi"), P4("(1-2*chi)*sin(x2)^2"), P4("1-2*chi"), P4("(1-2*chi)*sin(v)^2")}, C4);
    f.metric.N = NConnection::zero(C4);
    auto all = with_chi(pts4(20, 4), chi_samples(f.chi));
    CHECK(hamilton_residual(f, all, 1e-10).pass);
    all_pass(flow_residuals(f, all, 1e-10));  // N = 0, lambda = 0: same system
}

TEST_CASE("build_flow_solution, vacuum static family") {
    FlowRecipe r;
    r.varpi = P5("exp(x2)");
    r.h5 = P5("v^2");
    r.h0 = num(1);
    r.sigma40 = num(1);
    r.n1 = P5("x2+x3");
    r.n2 = num(0);
    auto pts = pts5(25, 5);
    FlowBuild b = build_flow_solution(r, pts, 1e-10);
    all_pass(b.reports);
    auto all = with_chi(pts, chi_samples(r.chi));
    for (const auto& p : all) CHECK(eval(b.family.metric.d.h(0, 0), p) == doctest::Approx(1.0));
    for (const auto& rep : flow_residuals(b.family, all, 1e-7)) {
        INFO(rep.summary());
        CHECK(rep.pass);
    }
    // S^4_4 closed form with Y2 = lambda = 0
    auto& g = b.family.metric;
    CHECK(max_abs_report("s44", {s44_closed(g.d.h(0, 0), g.d.h(1, 1))}, all, 1e-8).pass);
}

TEST_CASE("build_flow_solution, hand-evaluated h4") {
    FlowRecipe r;
    r.varpi = num(1);
    r.h5 = P5("v^2");
    r.h0 = num(1);
    r.sigma40 = num(3);
    r.n1 = num(0);
    r.n2 = num(0);
    auto pts = pts5(10, 6);
    FlowBuild b = build_flow_solution(r, pts, 1e-10);
    for (const auto& p : with_chi(pts, chi_samples(r.chi)))
        CHECK(eval(b.family.metric.d.h(0, 0), p) == doctest::Approx(3.0));
    // varsigma_4[0] depending on x2 leaves d_i phi != 0 with w := 0
    r.sigma40 = P5("2+x2");
    CHECK_THROWS_AS(build_flow_solution(r, pts5(5, 6), 1e-10), FlowClassViolated);
}

TEST_CASE("build_flow_solution, C-invariance failure") {
    FlowRecipe r;
    r.varpi = P5("exp(x2)");
    r.h5 = P5("v^2");
    r.h0 = num(1);
    r.sigma40 = num(1);
    r.n1 = num(0);
    r.n2 = num(1);
    auto pts = pts5(10, 7);
    try {
        build_flow_solution(r, pts, 1e-10);
        FAIL("expected FlowClassViolated");
    } catch (const FlowClassViolated& e) {
        // C = v^2 int_1^v v'^-3 dv' = (v^2 - 1)/2, so dC/dv = v
        CHECK(e.report.label == "C_invariance");
        for (std::size_t k = 0; k < e.report.points.size(); ++k)
            CHECK(e.report.residuals[k] == doctest::Approx(e.report.points[k].at("v")).epsilon(1e-9));
    }
}

TEST_CASE("build_flow_solution, flow_class failure") {
    FlowRecipe r;
    r.varpi = P5("exp(x2^2)");
    r.h5 = P5("v^2");
    r.h0 = num(1);
    r.sigma40 = num(1);
    r.n1 = num(0);
    r.n2 = num(0);
    try {
        build_flow_solution(r, pts5(10, 8), 1e-10);
        FAIL("expected FlowClassViolated");
    } catch (const FlowClassViolated& e) {
        CHECK(e.report.label == "flow_class");
        for (double res : e.report.residuals) CHECK(res == doctest::Approx(2.0));
    }
}

TEST_CASE("build_flow_solution with lambda: S^4_4 off by the varsigma_4 normalization") {
    // h5 = v^2, h0 = 1, sigma40 = 1: h4 = A = 1 - (lambda/16)(v^2 - 1), and the
    // closed form gives S^4_4 = -lambda / (16 A^2) rather than -lambda.
    const double lam = 0.5;
    FlowRecipe r;
    r.varpi = P5("exp(0.5*x2^2)");
    r.h5 = P5("v^2");
    r.h0 = num(1);
    r.sigma40 = num(1);
    r.n1 = num(0);
    r.n2 = num(0);
    r.lambda = lam;
    auto pts = pts5(15, 9);
    FlowBuild b = build_flow_solution(r, pts, 1e-10);
    auto& g = b.family.metric;
    Expr s44 = s44_closed(g.d.h(0, 0), g.d.h(1, 1));
    for (const auto& p : with_chi(pts, chi_samples(r.chi))) {
        double v = p.at("v");
        double A = 1 - lam / 16 * (v * v - 1);
        CHECK(eval(g.d.h(0, 0), p) == doctest::Approx(A).epsilon(1e-10));
        CHECK(eval(s44, p) == doctest::Approx(-lam / (16 * A * A)).epsilon(1e-8));
    }
}

TEST_CASE("LC flow family") {
    auto pts = pts4(20, 10);
    SUBCASE("static vacuum limit") {
        LCFlowRecipe r;
        r.psi = P4("x2");
        r.h4 = num(4);
        r.h5 = P4("v^2");
        r.n2 = num(2);
        LCFlowBuild b = build_lc_flow(r, pts, 1e-10);
        all_pass(b.reports);
        auto all = with_chi(pts, chi_samples(r.chi));
        all_pass(check_lc_compatibility(C4, b.family.metric.d, b.family.metric.N, all, 1e-9));
        DTorsion T = torsion(canonical_dconnection(C4, b.family.metric.d, b.family.metric.N));
        CHECK(max_abs_report("torsion", all_entries(T.T), all, 1e-9).pass);
    }
    SUBCASE("line 1 with psi linear in x2") {
        LCFlowRecipe r;
        r.psi = P4("x2*(1+chi^2)");
        r.h4 = num(4);
        r.h5 = P4("v^2");
        r.n2 = P4("x2+x3");
        all_pass(build_lc_flow(r, pts, 1e-10).reports);
    }
    SUBCASE("line 4 fails for n2 = x2 c(chi)") {
        LCFlowRecipe r;
        r.psi = num(0);
        r.h4 = num(4);
        r.h5 = P4("v^2");
        r.n2 = P4("x2*(1+chi)");
        auto b = build_lc_flow(r, pts, 1e-10);
        const ResidualReport& l4 = b.reports[3];
        CHECK(l4.label == "lcflow_n");
        CHECK_FALSE(l4.pass);
        for (std::size_t k = 0; k < l4.points.size(); ++k)
            CHECK(l4.residuals[k] == doctest::Approx(1 + l4.points[k].at("chi")));
    }
    SUBCASE("sourced pair") {
        // e^{2 phi} = 4 lambda (h5 + c)
        const double lam = 0.6;
        LCFlowRecipe r;
        r.lambda = lam;
        r.psi = P4("0.3*x2^2");
        r.h5 = P4("(v+x2)^2");
        r.h4 = P4("1/(0.6*((v+x2)^2+1))");
        r.n2 = P4("x2+x3");
        auto b = build_lc_flow(r, pts, 1e-9);
        all_pass(b.reports);
        auto lit = build_lc_flow(r, pts, 1e-9, Line2Reading::Literal);
        CHECK_FALSE(lit.reports[1].pass);
    }
    SUBCASE("degenerate h5") {
        LCFlowRecipe r;
        r.psi = num(0);
        r.h4 = num(1);
        r.h5 = num(1);
        r.n2 = num(0);
        CHECK_THROWS_AS(build_lc_flow(r, pts, 1e-10), DegenerateRecipe);
    }
}
