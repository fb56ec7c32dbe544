#include <cmath>

#include "doctest.h"
#include "nhrf/ansatz.hpp"
#include "nhrf/geroch.hpp"

using namespace nhrf;

namespace {

const Chart C4 = chart4d();
const Chart C5 = chart5d();

Expr P(const std::string& s) { return parse(s, C4.names()); }

std::vector<Point> grid4(std::size_t count, unsigned long long seed) {
    return random_points({{"x2", 0.5, 1.5}, {"x3", 0.5, 1.5}, {"v", 0.5, 1.5}, {"y5", 0.5, 1.5}},
                         count, seed);
}

GeneratedMetric diag_metric(std::vector<double> d) {
    GeneratedMetric g;
    g.chart = C4;
    std::vector<Expr> e;
    for (double x : d) e.push_back(num(x));
    g.d = diagonal_dmetric(e, C4);
    g.N = NConnection::zero(C4);
    return g;
}

std::vector<Expr> consts(std::vector<double> d) {
    std::vector<Expr> e;
    for (double x : d) e.push_back(num(x));
    return e;
}

double max_diff(const ExprMatrix& a, const ExprMatrix& b, const std::vector<Point>& pts) {
    double m = 0;
    for (const auto& p : pts)
        for (int i = 0; i < a.rows(); ++i)
            for (int j = 0; j < a.cols(); ++j)
                m = std::max(m, std::fabs(eval(a(i, j), p) - eval(b(i, j), p)));
    return m;
}

ExprMatrix coord(const GeneratedMetric& g) { return coordinate_metric(g.chart, g.d, g.N); }

// Flat Minkowski space with the rotation Killing field in the (x2, x3) plane:
// lambda = r^2, omega = 0, alpha_y5 = 2v, mu = (r^2 - 1/r^2)(-x3, x2, 0, 0).
struct RotationSeed {
    GeneratedMetric g = diag_metric({1, 1, 1, -1});
    KillingData k{{P("-x3"), P("x2"), num(0), num(0)}};
    GerochPotentials pot;
    RotationSeed() {
        Expr f = P("(x2^2+x3^2) - 1/(x2^2+x3^2)");
        pot.omega = num(0);
        pot.alpha = {num(0), num(0), num(0), P("2*v")};
        pot.mu = {neg(P("x3")) * f, P("x2") * f, num(0), num(0)};
        pot.beta = pot.mu;
    }
};

bool all_pass(const std::vector<ResidualReport>& rs) {
    bool ok = true;
    for (const auto& r : rs) {
        INFO(r.summary());
        CHECK(r.pass);
        ok = ok && r.pass;
    }
    return ok;
}

}  // namespace

TEST_CASE("volume form") {
    ExprMatrix G = coord(diag_metric({1, 4, 1, -9}));
    Point p;
    CHECK(eval(volume_form(G, 0, 1, 2, 3), p) == doctest::Approx(6));
    CHECK(eval(volume_form(G, 1, 0, 2, 3), p) == doctest::Approx(-6));
    CHECK(eval(volume_form(G, 2, 3, 0, 1), p) == doctest::Approx(6));
    CHECK(volume_form(G, 0, 0, 2, 3).is_zero());
}

TEST_CASE("Killing residual") {
    auto pts = grid4(20, 1);
    SUBCASE("ansatz-type metric, xi = e_5") {
        GeneratedMetric g;
        g.chart = C4;
        g.d = diagonal_dmetric({P("exp(x2)"), P("exp(x2)"), P("v^2"), P("-(v+x3)^2")}, C4);
        g.N = NConnection::zero(C4);
        g.N.N(0, 0) = P("x3*v");
        g.N.N(1, 1) = P("x2+v");
        ExprMatrix G = coord(g);
        KillingData k{{G(0, 3), G(1, 3), G(2, 3), G(3, 3)}};
        CHECK(killing_residual(g, k, pts, 1e-10).pass);
        KillingData kv{{G(0, 2), G(1, 2), G(2, 2), G(3, 2)}};  // d_v is not Killing
        CHECK_FALSE(killing_residual(g, kv, pts, 1e-10).pass);
    }
    SUBCASE("flat, constant covector") {
        CHECK(killing_residual(diag_metric({1, 1, 1, -1}), {consts({1, 2, 3, 4})}, pts, 1e-12).pass);
    }
    SUBCASE("flat, xi_2 = x2") {
        auto r = killing_residual(diag_metric({1, 1, 1, 1}), {{P("x2"), num(0), num(0), num(0)}}, pts, 1e-12);
        for (double x : r.residuals) CHECK(x == doctest::Approx(2.0));
    }
    SUBCASE("rotation in flat space") {
        RotationSeed s;
        CHECK(killing_residual(s.g, s.k, pts, 1e-12).pass);
    }
    SUBCASE("5D input needs a slice") {
        GeneratedMetric g;
        g.chart = C5;
        g.d = diagonal_dmetric(consts({1, 1, 1, 1, 1}), C5);
        g.N = NConnection::zero(C5);
        CHECK_THROWS_AS(killing_residual(g, {consts({0, 0, 0, 1})}, pts, 1e-8), std::invalid_argument);
        GeneratedMetric s = slice_4d(g);
        CHECK(s.chart.coords == std::vector<std::string>{"x2", "x3", "v", "y5"});
        CHECK(killing_residual(s, {consts({0, 0, 0, 1})}, pts, 1e-12).pass);
        g.d.g(1, 1) = parse("exp(x1)", C5.names());
        CHECK_THROWS_AS(slice_4d(g), std::invalid_argument);
    }
}

TEST_CASE("Geroch residuals in flat space") {
    auto pts = grid4(20, 2);
    GeneratedMetric g = diag_metric({1, 1, 1, -1});
    KillingData k{consts({0, 0, 2, 0})};  // lambda = 4
    GerochPotentials pot;
    pot.omega = num(0);
    pot.alpha = consts({0, 0, 0, 0});
    pot.mu = {P("x3"), P("x2"), num(7.5), num(0)};  // closed, xi.mu = 15
    pot.beta = consts({0, 0, 0, 0});
    all_pass(geroch_residuals(g, k, pot, pts, 1e-10));

    SUBCASE("omega = x2 breaks the first equation") {
        GerochPotentials q = pot;
        q.omega = P("x2");
        q.alpha = {num(0), num(0), P("x2/2"), num(0)};  // keep omega = xi.alpha
        auto r = geroch_residuals(g, k, q, pts, 1e-10);
        CHECK(r[0].label == "geroch_omega");
        for (double x : r[0].residuals) CHECK(x == doctest::Approx(1.0));
        CHECK(r[3].pass);
    }
    SUBCASE("constraint mismatch") {
        GerochPotentials q = pot;
        q.alpha = consts({0, 0, 0.25, 0});  // xi.alpha = 0.5 but omega = 0
        auto r = geroch_residuals(g, k, q, pts, 1e-10);
        for (double x : r[3].residuals) CHECK(x == doctest::Approx(0.5));
        q = pot;
        q.mu[2] = num(7.0);
        r = geroch_residuals(g, k, q, pts, 1e-10);
        for (double x : r[4].residuals) CHECK(x == doctest::Approx(1.0));
    }
    SUBCASE("rotation seed") {
        RotationSeed s;
        all_pass(geroch_residuals(s.g, s.k, s.pot, pts, 1e-10));
        GerochPotentials q = s.pot;
        q.alpha[3] = P("-2*v");  // wrong orientation
        CHECK_FALSE(geroch_residuals(s.g, s.k, q, pts, 1e-10)[1].pass);
    }
}

TEST_CASE("apply_geroch") {
    auto pts = grid4(15, 3);
    GeneratedMetric g = diag_metric({1, 1, 1, -1});
    KillingData k{consts({0, 0, 2, 0})};
    GerochPotentials pot{num(0), consts({0, 0, 0, 0}), consts({0, 0, 0, 0}), {P("x3"), P("x2"), num(7.5), num(0)}};
    GerochSeed seed = verify_geroch(g, k, pot, pts, 1e-10);
    REQUIRE(seed.verified);

    SUBCASE("theta = 0 is the identity") {
        CHECK(max_diff(coord(apply_geroch(seed, 0.0)), coord(g), pts) < 1e-12);
        RotationSeed r;
        GerochSeed rs = verify_geroch(r.g, r.k, r.pot, pts, 1e-10);
        REQUIRE(rs.verified);
        CHECK(max_diff(coord(apply_geroch(rs, 0.0)), coord(r.g), pts) < 1e-12);
    }
    SUBCASE("omega = alpha = beta = 0: conformal factor lambda/lambda~") {
        for (double th : {0.2, 1.1}) {
            double fac = std::cos(th) * std::cos(th) + 16 * std::sin(th) * std::sin(th);
            ExprMatrix G = coord(apply_geroch(seed, th));
            ExprMatrix G0 = coord(g);
            for (const auto& p : pts)
                for (int a = 0; a < 4; ++a)
                    for (int b = 0; b < 4; ++b)
                        CHECK(eval(G(a, b), p) == doctest::Approx(fac * eval(G0(a, b), p)).epsilon(1e-12));
        }
    }
    SUBCASE("continuity in theta") {
        RotationSeed r;
        GerochSeed rs = verify_geroch(r.g, r.k, r.pot, pts, 1e-10);
        double d = max_diff(coord(apply_geroch(rs, 1e-4)), coord(r.g), pts);
        CHECK(d > 0);
        CHECK(d < 1e-2);
    }
    SUBCASE("unverified potentials are refused") {
        GerochPotentials bad = pot;
        bad.omega = P("x2");
        GerochSeed bs = verify_geroch(g, k, bad, pts, 1e-10);
        CHECK_FALSE(bs.verified);
        CHECK_THROWS_AS(apply_geroch(bs, 0.3), PotentialsNotVerified);
        GerochSeed unchecked{g, k, pot, pts, {}, false};
        CHECK_THROWS_AS(apply_geroch(unchecked, 0.3), PotentialsNotVerified);
    }
    SUBCASE("null Killing vector") {
        KillingData kn{consts({0, 0, 1, 1})};  // lambda = 0
        GerochPotentials pn{num(0), consts({0, 0, 0, 0}), consts({0, 0, 0, 0}), consts({0, 0, -1, 0})};
        GerochSeed ns = verify_geroch(g, kn, pn, pts, 1e-10);
        REQUIRE(ns.verified);
        CHECK_THROWS_AS(apply_geroch(ns, 0.3), DegenerateDenominator);
    }
}

TEST_CASE("Geroch transform of a rotation Killing field preserves Ricci flatness") {
    auto pts = grid4(15, 4);
    RotationSeed r;
    GerochSeed rs = verify_geroch(r.g, r.k, r.pot, pts, 1e-10);
    REQUIRE(rs.verified);
    for (double th : {0.1, 0.7}) {
        GeneratedMetric gt = apply_geroch(rs, th);
        // genuinely off-diagonal and not flat-looking
        CHECK(max_diff(coord(gt), coord(r.g), pts) > 1e-3);
        auto rep = lc_ricci_residual(gt, pts, 1e-6);
        INFO(rep.summary());
        CHECK(rep.pass);
    }
    // beta = 0 instead of beta = mu: the potential equations do not fix beta, and
    // this choice does not give a vacuum metric
    GerochPotentials q = r.pot;
    q.beta = consts({0, 0, 0, 0});
    GerochSeed qs = verify_geroch(r.g, r.k, q, pts, 1e-10);
    REQUIRE(qs.verified);
    CHECK_FALSE(lc_ricci_residual(apply_geroch(qs, 0.3), pts, 1e-6).pass);
}

TEST_CASE("solve_vielbein") {
    auto pts = grid4(10, 5);
    SUBCASE("unit diagonal") {
        GeneratedMetric g = diag_metric({1, 1, 1, -1});
        ExprMatrix A = solve_vielbein(g, {1, 1, 1, -1}, pts);
        CHECK(max_diff(A, ExprMatrix::identity(4), pts) == 0.0);
    }
    SUBCASE("N block") {
        GeneratedMetric g = diag_metric({1, 1, 1, 1});
        g.N.N(0, 0) = P("v");
        ExprMatrix A = solve_vielbein(g, {1, 1, 1, 1}, pts);
        for (const auto& p : pts) CHECK(eval(A(0, 2), p) == doctest::Approx(p.at("v")));
    }
    SUBCASE("generic blocks reproduce the coordinate metric") {
        GeneratedMetric g;
        g.chart = C4;
        g.d = DMetric{ExprMatrix(2, 2), ExprMatrix(2, 2)};
        g.d.g(0, 0) = P("2+x2^2");
        g.d.g(0, 1) = g.d.g(1, 0) = P("x3");
        g.d.g(1, 1) = P("-1-v^2");
        g.d.h(0, 0) = P("exp(v)");
        g.d.h(0, 1) = g.d.h(1, 0) = P("0.3*x2");
        g.d.h(1, 1) = P("-2");
        g.N = NConnection::zero(C4);
        g.N.N(0, 1) = P("x3*v");
        g.N.N(1, 0) = P("sin(x2)");
        std::vector<int> eta{1, -1, 1, -1};
        ExprMatrix A = solve_vielbein(g, eta, pts);
        ExprMatrix E(4, 4);
        for (int a = 0; a < 4; ++a) E(a, a) = num(double(eta[std::size_t(a)]));
        CHECK(max_diff(matmul(matmul(A, E), transpose(A)), coord(g), pts) < 1e-10);
        CHECK_THROWS_AS(solve_vielbein(g, {1, 1, 1, -1}, pts), SignatureMismatch);
    }
    SUBCASE("degenerate h4") {
        GeneratedMetric g = diag_metric({1, 1, 1, 1});
        g.d.h(0, 0) = P("v-1");
        std::vector<Point> on{{{"x2", 1.0}, {"x3", 1.0}, {"v", 1.0}, {"y5", 0.0}}};
        CHECK_THROWS_AS(solve_vielbein(g, {1, 1, 1, 1}, on), SingularMetric);
    }
    SUBCASE("parametric frame matrix reproduces the Geroch metric") {
        RotationSeed r;
        GerochSeed rs = verify_geroch(r.g, r.k, r.pot, pts, 1e-10);
        GeneratedMetric gt = apply_geroch(rs, 0.1);
        std::vector<int> eta{1, 1, 1, -1};
        FrameMatrices f = frame_matrices(r.g, gt, eta, pts);
        CHECK(max_diff(matmul(matmul(f.B, coord(r.g)), transpose(f.B)), coord(gt), pts) < 1e-10);
    }
}

TEST_CASE("nonholonomic deformations") {
    auto pts = grid4(10, 6);
    GeneratedMetric chk = diag_metric({1, 2, 1, -1});
    chk.N.N(0, 0) = P("x3");
    chk.N.N(1, 1) = num(1);

    SUBCASE("identity") {
        GeneratedMetric out = nonholonomic_deform(chk, {}, pts);
        CHECK(max_diff(coord(out), coord(chk), pts) == 0.0);
        CHECK(out.provenance.chain.back() == "deform");
    }
    SUBCASE("eta_4 = v^2") {
        Polarizations pol;
        pol.eta_v = {P("v^2"), num(1)};
        GeneratedMetric out = nonholonomic_deform(chk, pol, pts);
        for (const auto& p : pts) CHECK(eval(out.d.h(0, 0), p) == doctest::Approx(p.at("v") * p.at("v")));
    }
    SUBCASE("round trip") {
        Polarizations pol, inv;
        pol.eta_h = {P("1+x2^2"), P("exp(v)")};
        pol.eta_v = {P("v^2"), P("2+x3")};
        pol.eta_N = ExprMatrix(2, 2);
        pol.eta_N(0, 0) = P("v");
        pol.eta_N(1, 1) = P("x2");
        inv.eta_N = ExprMatrix(2, 2);
        for (const auto& e : pol.eta_h) inv.eta_h.push_back(num(1) / e);
        for (const auto& e : pol.eta_v) inv.eta_v.push_back(num(1) / e);
        for (int i = 0; i < 2; ++i)
            for (int a = 0; a < 2; ++a) inv.eta_N(i, a) = pol.eta_N(i, a).is_zero() ? num(1) : num(1) / pol.eta_N(i, a);
        GeneratedMetric back = nonholonomic_deform(nonholonomic_deform(chk, pol, pts), inv, pts);
        CHECK(max_diff(coord(back), coord(chk), pts) < 1e-12);
    }
    SUBCASE("zero polarization") {
        Polarizations pol;
        pol.eta_h = {P("x2-1"), num(1)};
        std::vector<Point> on{{{"x2", 1.0}, {"x3", 1.0}, {"v", 1.0}, {"y5", 0.0}}};
        CHECK_THROWS_AS(nonholonomic_deform(chk, pol, on), ZeroPolarization);
    }
    SUBCASE("polarizations onto a generated ansatz metric") {
        SolutionRecipe r;
        r.g2 = r.g3 = P("exp(x2)");
        r.f = P("v");
        r.f0 = num(0);
        r.h0 = num(1);
        r.varsigma0 = num(1);
        r.n1 = {P("x3"), num(0)};
        r.n2 = {num(1), num(1)};
        r.v0 = 1.0;
        GeneratedMetric target = generate_4d(r, Source::vacuum());
        GeneratedMetric unit = diag_metric({1, 1, 1, 1});
        unit.N.N(0, 1) = unit.N.N(1, 1) = num(1);
        Polarizations pol;
        pol.eta_h = {target.d.g(0, 0), target.d.g(1, 1)};
        pol.eta_v = {target.d.h(0, 0), target.d.h(1, 1)};
        pol.eta_N = ExprMatrix(2, 2);
        pol.eta_N(0, 1) = target.N.N(0, 1);
        pol.eta_N(1, 1) = target.N.N(1, 1);
        GeneratedMetric out = nonholonomic_deform(unit, pol, pts);
        all_pass(ansatz_ricci_reports(out, Source::vacuum(), pts, 1e-8));
    }
}

TEST_CASE("superposition of transforms") {
    auto pts = grid4(10, 7);
    GeneratedMetric g = diag_metric({1, 1, 1, -1});
    KillingData k{consts({0, 0, 2, 0})};
    GerochPotentials pot{num(0), consts({0, 0, 0, 0}), consts({0, 0, 0, 0}), {P("x3"), P("x2"), num(7.5), num(0)}};

    SUBCASE("empty chain") {
        CHECK(max_diff(coord(superpose(g, {}, pts)), coord(g), pts) == 0.0);
    }
    SUBCASE("geroch(0) then deform(1)") {
        GeneratedMetric out = superpose(g, {GerochStep{k, pot, 0.0, 1e-10}, DeformStep{}}, pts);
        CHECK(max_diff(coord(out), coord(g), pts) < 1e-12);
        CHECK(out.provenance.chain == std::vector<std::string>{"geroch(theta=0)", "deform"});
    }
    SUBCASE("two Geroch steps compose the lambda~ maps") {
        const double t1 = 0.3, t2 = 0.8;
        double k1 = std::cos(t1) * std::cos(t1) + 16 * std::sin(t1) * std::sin(t1);
        double l2 = 4 / k1;  // norm of xi after the first step
        double k2 = std::cos(t2) * std::cos(t2) + l2 * l2 * std::sin(t2) * std::sin(t2);
        GerochPotentials pot2 = pot;
        pot2.mu[2] = num((l2 * l2 - 1) * k1 / 2);
        GeneratedMetric out =
            superpose(g, {GerochStep{k, pot, t1, 1e-10}, GerochStep{k, pot2, t2, 1e-10}}, pts);
        ExprMatrix G = coord(out), G0 = coord(g);
        for (const auto& p : pts)
            for (int a = 0; a < 4; ++a)
                CHECK(eval(G(a, a), p) == doctest::Approx(k1 * k2 * eval(G0(a, a), p)).epsilon(1e-12));
        // stale potentials for the second step are refused
        CHECK_THROWS_AS(superpose(g, {GerochStep{k, pot, t1, 1e-10}, GerochStep{k, pot, t2, 1e-10}}, pts),
                        PotentialsNotVerified);
    }
}
