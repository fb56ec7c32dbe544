#pragma once

#include <array>
#include <optional>
#include <stdexcept>
#include <vector>

#include "nhrf/ansatz.hpp"

namespace nhrf {

struct NonDiagonalFamily : std::invalid_argument {
    using std::invalid_argument::invalid_argument;
};

// A recipe failed one of the flow-class compatibility conditions.
struct FlowClassViolated : std::runtime_error {
    ResidualReport report;
    FlowClassViolated(const std::string& what, ResidualReport r)
        : std::runtime_error(what), report(std::move(r)) {}
};

// Metric coefficients may contain the parameter "chi".
struct FlowFamily {
    GeneratedMetric metric;
    double lambda = 0.0;
    Axis chi{"chi", 0.0, 1.0, 3};
};

std::vector<double> chi_samples(const Axis& chi);
// Cartesian product, chi varying slowest.
std::vector<Point> with_chi(const std::vector<Point>& pts, const std::vector<double>& chis);

struct FlowEquations {
    std::vector<Expr> eq1;  // one per horizontal index
    std::vector<Expr> eq2;  // one per vertical index
    std::vector<Expr> eq3;  // off-diagonal canonical Ricci entries
};

// LHS - RHS of the diagonal N-adapted flow system:
//   d_chi g_ii + 2 (R_ii - lambda g_ii) + h_cc d_chi (N_i^c)^2
//   d_chi h_aa + 2 (R_aa - lambda h_aa)
//   R_ab for a != b
FlowEquations flow_equations(const FlowFamily& fam);
std::vector<ResidualReport> flow_residuals(const FlowFamily& fam, const std::vector<Point>& pts,
                                           double tol, unsigned jobs = 0);

// d_chi g + 2 Ric for the coordinate metric and its Levi-Civita connection.
ExprMatrix hamilton_equations(const FlowFamily& fam);
ResidualReport hamilton_residual(const FlowFamily& fam, const std::vector<Point>& pts, double tol,
                                 unsigned jobs = 0);

struct FlowRecipe {
    std::array<int, 3> eps{1, 1, 1};  // eps_1..eps_3
    Expr varpi;     // (x2, x3, chi)
    Expr h5;        // (x2, x3, v)
    Expr h0;        // h_[0]
    Expr sigma40;   // varsigma_4[0]
    Expr n1, n2;    // n_[1], n_[2]: (x2, x3, chi)
    double lambda = 0.0;
    double v0 = 1.0;
    Axis chi{"chi", 0.0, 1.0, 3};
};

struct FlowBuild {
    FlowFamily family;
    std::vector<ResidualReport> reports;  // flow_class, C_invariance, vacuum_alpha
};

// Assembles the solution class and checks its preconditions on pts x chi
// samples; throws FlowClassViolated if one fails.
FlowBuild build_flow_solution(const FlowRecipe& r, const std::vector<Point>& pts, double tol,
                              unsigned jobs = 0);

struct LCFlowRecipe {
    Expr psi;              // (x2, x3, chi)
    Expr h4, h5;           // (x2, x3, v[, chi])
    std::optional<Expr> w2, w3;  // default: d_i phi / phi*
    Expr n2;               // (x2, x3, chi); n3 = n2
    double lambda = 0.0;
    std::array<int, 2> eps{1, 1};
    Axis chi{"chi", 0.0, 1.0, 3};
};

struct LCFlowBuild {
    FlowFamily family;
    std::vector<ResidualReport> reports;
};

LCFlowBuild build_lc_flow(const LCFlowRecipe& r, const std::vector<Point>& pts, double tol,
                          Line2Reading reading = Line2Reading::Default, unsigned jobs = 0);

}  // namespace nhrf
