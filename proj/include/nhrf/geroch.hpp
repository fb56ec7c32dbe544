#pragma once

#include <stdexcept>
#include <variant>
#include <vector>

#include "nhrf/dgeometry.hpp"

namespace nhrf {

struct DegenerateDenominator : DegenerateRecipe {
    using DegenerateRecipe::DegenerateRecipe;
};
struct PotentialsNotVerified : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct SignatureMismatch : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct ZeroPolarization : DegenerateRecipe {
    using DegenerateRecipe::DegenerateRecipe;
};

// All Killing/Geroch objects are covariant components in the coordinate
// frame of a 4D chart.
struct KillingData {
    std::vector<Expr> xi;
};

struct GerochPotentials {
    Expr omega;
    std::vector<Expr> alpha, beta, mu;  // beta only enters the transformed metric
};

// Drops x1 from a 5D metric whose x1 direction is trivial (g_11 = +-1, no
// coupling, nothing depends on x1). Throws invalid_argument otherwise.
GeneratedMetric slice_4d(const GeneratedMetric& g);

Expr geroch_norm(const GeneratedMetric& g, const KillingData& k);  // xi_a xi_b g^ab

// Metric volume form: permutation sign * sqrt|det g| (4D only).
Expr volume_form(const ExprMatrix& G, int a, int b, int c, int d);

ResidualReport killing_residual(const GeneratedMetric& g, const KillingData& k,
                                const std::vector<Point>& pts, double tol, unsigned jobs = 0);

// geroch_omega, geroch_alpha, geroch_mu, constraint_omega, constraint_mu
std::vector<ResidualReport> geroch_residuals(const GeneratedMetric& g, const KillingData& k,
                                             const GerochPotentials& pot,
                                             const std::vector<Point>& pts, double tol,
                                             unsigned jobs = 0);

// Seed whose Killing and Geroch residuals were evaluated on `pts`.
struct GerochSeed {
    GeneratedMetric metric;
    KillingData killing;
    GerochPotentials potentials;
    std::vector<Point> pts;
    std::vector<ResidualReport> reports;
    bool verified = false;
};

GerochSeed verify_geroch(const GeneratedMetric& g, const KillingData& k,
                         const GerochPotentials& pot, const std::vector<Point>& pts, double tol,
                         unsigned jobs = 0);

// g~ = lambda/lambda~ (g - xi xi / lambda) + lambda~ mu~ mu~ with
// mu~ = xi / lambda~ + alpha sin(2 theta) - beta sin^2(theta).
GeneratedMetric apply_geroch(const GerochSeed& seed, double theta);

// Inverse of coordinate_metric: splits G into (g, h, N) with h = G_vv.
GeneratedMetric split_coordinate_metric(const Chart& c, const ExprMatrix& G);

ResidualReport lc_ricci_residual(const GeneratedMetric& g, const std::vector<Point>& pts,
                                 double tol, unsigned jobs = 0);

struct FrameMatrices {
    ExprMatrix A;        // G = A eta A^T, block [[P, N R], [0, R]]
    ExprMatrix A_tilde;  // same for the target metric
    ExprMatrix B;        // A_tilde A^-1, so G~ = B G B^T
    std::vector<int> signature;
};

// Signature-aware LDL^T of the h and v blocks; eta is the flat signature in
// chart order.
ExprMatrix solve_vielbein(const GeneratedMetric& g, const std::vector<int>& eta,
                          const std::vector<Point>& pts);
// Pivot signs of that factorization at pts[0] (in chart order).
std::vector<int> pivot_signature(const GeneratedMetric& g, const std::vector<Point>& pts);

// The target's pivot signature may be a permutation of eta; A_tilde's columns
// are then reordered so both frames share eta.
FrameMatrices frame_matrices(const GeneratedMetric& seed, const GeneratedMetric& target,
                             const std::vector<int>& eta, const std::vector<Point>& pts);

struct Polarizations {
    std::vector<Expr> eta_h;  // one per horizontal coordinate; empty = 1
    std::vector<Expr> eta_v;  // one per vertical coordinate; empty = 1
    ExprMatrix eta_N;         // n x m; empty = 1
};

// g_ij -> sqrt(eta_i eta_j) g_ij (so g_i -> eta_i g_i on the diagonal),
// likewise for h, and N_i^a -> eta_i^a N_i^a.
GeneratedMetric nonholonomic_deform(const GeneratedMetric& check, const Polarizations& pol,
                                    const std::vector<Point>& pts);

struct GerochStep {
    KillingData killing;
    GerochPotentials potentials;
    double theta = 0.0;
    double tol = 1e-8;
};
struct DeformStep {
    Polarizations pol;
};
using TransformStep = std::variant<GerochStep, DeformStep>;

// Left to right; each Geroch step is verified against the metric it acts on.
GeneratedMetric superpose(const GeneratedMetric& base, const std::vector<TransformStep>& steps,
                          const std::vector<Point>& pts, unsigned jobs = 0);

}  // namespace nhrf
