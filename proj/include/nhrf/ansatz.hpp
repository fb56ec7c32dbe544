#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "nhrf/dgeometry.hpp"

namespace nhrf {

// phi* vanishes on the grid while the recipe carries a nonzero Upsilon_2.
struct PhiConstant : DegenerateRecipe {
    using DegenerateRecipe::DegenerateRecipe;
};

struct Source {
    Expr Y2;  // (x2, x3, v)
    Expr Y4;  // (x2, x3)
    std::optional<double> lambda;  // overrides: Y2 = Y4 = lambda

    static Source vacuum() { return {}; }
    static Source cosmological(double l) { return {num(l), num(l), l}; }
    Expr upsilon2() const { return lambda ? num(*lambda) : Y2; }
    Expr upsilon4() const { return lambda ? num(*lambda) : Y4; }
    bool y2_zero() const { return simplify(upsilon2()).is_zero(); }
};

// Generating data for the 5D class and its 4D reduction. n1/n2 carry one
// entry per horizontal coordinate of the target chart.
struct SolutionRecipe {
    std::array<int, 5> eps{1, 1, 1, 1, 1};  // eps_1..eps_5; eps_1 unused in 4D
    Expr g2, g3;
    Expr f, f0, h0, varsigma0;
    std::vector<Expr> n1, n2;
    double v0 = 0.0;
};

struct AuxCoeffs {
    Expr phi;
    std::vector<Expr> alpha;  // per horizontal coordinate
    Expr beta;
    Expr gamma;         // reference form: 3h5*/(2h5) - h4*/h4
    Expr gamma_engine;  // 3h5*/(2h5) - h4*/(2h4), what the curvature engine gives
};

AuxCoeffs aux_coeffs(const Chart& c, const Expr& h4, const Expr& h5);

// Closed forms for the ansatz. g2, g3, h4, h5 are the metric components as
// they appear in the d-metric (signatures included).
Expr ricci_h_closed(const Expr& g2, const Expr& g3);
Expr s44_closed(const Expr& h4, const Expr& h5);
Expr r4i_reference(const Expr& w_i, const Expr& alpha_i, const Expr& beta, const Expr& h5);
Expr r5i_reference(const Expr& n_i, const Expr& h4, const Expr& h5, const Expr& gamma);

ResidualReport check_h_equation(const Expr& g2, const Expr& g3, const Expr& Y4,
                                const std::vector<Point>& pts, double tol, unsigned jobs = 0);

Expr build_varsigma(const SolutionRecipe& r, const Source& s);

GeneratedMetric generate_5d(const SolutionRecipe& r, const Source& s);
GeneratedMetric generate_4d(const SolutionRecipe& r, const Source& s);

// h-equation for the recipe's 2D block, plus "vacuum_alpha" when Y2 = 0:
// setting w_i = 0 needs alpha_i = h5* d_i phi = 0.
std::vector<ResidualReport> recipe_checks(const GeneratedMetric& g, const Source& s,
                                          const std::vector<Point>& pts,
                                          double tol, unsigned jobs = 0);

// Canonical-connection Ricci of an ansatz metric against the diagonal
// source layout: R^2_2 = R^3_3 = -Y4, S^4_4 = S^5_5 = -Y2, mixed blocks 0.
std::vector<ResidualReport> ansatz_ricci_reports(const GeneratedMetric& g, const Source& s,
                                                 const std::vector<Point>& pts, double tol,
                                                 unsigned jobs = 0);

struct LCResult {
    GeneratedMetric metric;
    std::vector<ResidualReport> reports;
};

struct VacuumLCRecipe {
    Expr psi, b, b0, n2, n3;
    double h0 = 1.0;
    std::array<int, 4> eps{1, 1, 1, 1};  // eps_2..eps_5
};

struct SourcedLCRecipe {
    Expr psi, h4, h5, n2, n3;
    std::array<int, 2> eps{1, 1};  // eps_2, eps_3
    Source source;
};

// How the second line "h5* phi / h4 h5 = Y2" is read. Default: the form
// consistent with S^4_4 = -Y2, i.e. h5* phi* / (2 h4 h5) = Y2.
enum class Line2Reading { Default, Literal };

LCResult generate_vacuum_lc(const VacuumLCRecipe& r, const std::vector<Point>& pts, double tol,
                            unsigned jobs = 0);
LCResult generate_sourced_lc(const SourcedLCRecipe& r, const std::vector<Point>& pts, double tol,
                             Line2Reading reading = Line2Reading::Default, unsigned jobs = 0);

// e_2 w_3 - e_3 w_2 with e_i = d_i - w_i d_v; zero iff the (w) distribution integrates.
Expr w_integrability(const Expr& w2, const Expr& w3);

}  // namespace nhrf
