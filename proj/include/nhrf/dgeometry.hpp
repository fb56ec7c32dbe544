#pragma once

#include <memory>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <vector>

#include "nhrf/expr.hpp"
#include "nhrf/numerics.hpp"

namespace nhrf {

struct SingularMetric : EvalError {
    using EvalError::EvalError;
};

// Recipe that hits one of its excluded loci on the requested grid.
struct DegenerateRecipe : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// u = (x^i, y^a): n horizontal names, then m vertical names.
struct Chart {
    int n = 0;
    int m = 0;
    std::vector<std::string> coords;
    std::vector<std::string> params;  // theta components, chi
    int first_index = 1;              // label of coords[0] in exported index tuples

    int dim() const { return n + m; }
    std::vector<std::string> names() const;  // coords then params
    static Chart make(int n, int m, std::vector<std::string> coords,
                      std::vector<std::string> params = {}, int first_index = 1);
};

Chart chart5d(std::vector<std::string> params = {});  // x1 x2 x3 | v y5
Chart chart4d(std::vector<std::string> params = {});  // x2 x3 | v y5

class ExprMatrix {
public:
    ExprMatrix() = default;
    ExprMatrix(int r, int c) : r_(r), c_(c), a_(std::size_t(r * c), num(0.0)) {}
    static ExprMatrix identity(int n);
    int rows() const { return r_; }
    int cols() const { return c_; }
    Expr& operator()(int i, int j) { return a_[std::size_t(i * c_ + j)]; }
    const Expr& operator()(int i, int j) const { return a_[std::size_t(i * c_ + j)]; }
    const std::vector<Expr>& data() const { return a_; }

private:
    int r_ = 0, c_ = 0;
    std::vector<Expr> a_;
};

// Cofactor inverse for small symbolic matrices (zero entries skipped).
ExprMatrix inverse(const ExprMatrix& a);
Expr determinant(const ExprMatrix& a);
ExprMatrix transpose(const ExprMatrix& a);
ExprMatrix matmul(const ExprMatrix& a, const ExprMatrix& b);

// T(a,b,c) for a D x D x D coefficient table.
class Table3 {
public:
    Table3() = default;
    explicit Table3(int d) : d_(d), a_(std::size_t(d * d * d), num(0.0)) {}
    int dim() const { return d_; }
    Expr& operator()(int a, int b, int c) { return a_[std::size_t((a * d_ + b) * d_ + c)]; }
    const Expr& operator()(int a, int b, int c) const {
        return a_[std::size_t((a * d_ + b) * d_ + c)];
    }
    const std::vector<Expr>& data() const { return a_; }

private:
    int d_ = 0;
    std::vector<Expr> a_;
};

struct NConnection {
    ExprMatrix N;  // N(i, a): n x m
    static NConnection zero(const Chart& c) { return {ExprMatrix(c.n, c.m)}; }
};

struct DMetric {
    ExprMatrix g;  // n x n
    ExprMatrix h;  // m x m
    ExprMatrix full() const;  // block diagonal D x D in the N-adapted frame
};

DMetric diagonal_dmetric(const std::vector<Expr>& diag, const Chart& c);

struct Provenance {
    std::string family;
    std::string recipe_hash;
    std::vector<std::string> chain;
};

struct GeneratedMetric {
    Chart chart;
    DMetric d;
    NConnection N;
    Provenance provenance;
    std::vector<ExcludedLocus> excluded;
};

// Throws DegenerateRecipe naming the first locus hit and the point.
void require_clear(const GeneratedMetric& g, const std::vector<Point>& pts);

std::string recipe_hash(const std::vector<std::string>& parts);  // FNV-1a, hex

// Off-diagonal coordinate-frame metric equivalent to (d, N).
ExprMatrix coordinate_metric(const Chart& c, const DMetric& d, const NConnection& N);

// N-elongated derivatives e_i = d_i - N_i^a d_a, e_a = d_a, memoized.
class Frame {
public:
    Frame(Chart c, NConnection N);
    const Chart& chart() const { return chart_; }
    const NConnection& N() const { return N_; }
    Expr e(int alpha, const Expr& f);
    Expr partial(int alpha, const Expr& f);  // plain coordinate derivative
    Differentiator& differentiator() { return diff_; }

private:
    Chart chart_;
    NConnection N_;
    Differentiator diff_;
    std::vector<std::unordered_map<const Node*, std::pair<Expr, Expr>>> memo_;
};

struct Anholonomy {
    Table3 W;                   // [e_alpha, e_beta] = W(gamma, alpha, beta) e_gamma
    std::vector<Expr> Omega;    // Omega^a_ij at [(a * n + i) * n + j]
    int n = 0, m = 0;
    const Expr& omega(int a, int i, int j) const { return Omega[std::size_t((a * n + i) * n + j)]; }
};

Anholonomy anholonomy(const Chart& c, const NConnection& N);
Anholonomy anholonomy(Frame& f);

// Geometry in a frame: chart, N, frame metric G and its inverse, commutators.
struct FrameGeometry {
    std::shared_ptr<Frame> frame;
    ExprMatrix G;
    ExprMatrix Ginv;
    Anholonomy anh;
    const Chart& chart() const { return frame->chart(); }
};

FrameGeometry adapted_geometry(const Chart& c, const DMetric& d, const NConnection& N);
FrameGeometry coordinate_geometry(const Chart& c, const ExprMatrix& g);

// D_{e_gamma} e_beta = Gamma(alpha, beta, gamma) e_alpha
struct DConnection {
    FrameGeometry geo;
    Table3 Gamma;
    int n() const { return geo.chart().n; }
    Expr L_h(int i, int j, int k) const { return Gamma(i, j, k); }                  // L^i_jk
    Expr L_v(int a, int b, int k) const { return Gamma(n() + a, n() + b, k); }      // L^a_bk
    Expr C_h(int i, int j, int c) const { return Gamma(i, j, n() + c); }            // C^i_jc
    Expr C_v(int a, int b, int c) const { return Gamma(n() + a, n() + b, n() + c); }  // C^a_bc
};

struct LCConnection {
    FrameGeometry geo;
    Table3 Gamma;
    int n() const { return geo.chart().n; }
    // the eight blocks, indices block-local
    Expr L_ijk(int i, int j, int k) const { return Gamma(i, j, k); }
    Expr L_ajk(int a, int j, int k) const { return Gamma(n() + a, j, k); }
    Expr L_ibk(int i, int b, int k) const { return Gamma(i, n() + b, k); }
    Expr L_abk(int a, int b, int k) const { return Gamma(n() + a, n() + b, k); }
    Expr C_ijb(int i, int j, int b) const { return Gamma(i, j, n() + b); }
    Expr C_ajb(int a, int j, int b) const { return Gamma(n() + a, j, n() + b); }
    Expr C_ibc(int i, int b, int c) const { return Gamma(i, n() + b, n() + c); }
    Expr C_abc(int a, int b, int c) const { return Gamma(n() + a, n() + b, n() + c); }
};

struct DTorsion {
    Table3 T;  // T(alpha, beta, gamma) = T^alpha_{beta gamma}, filled from the block formulas
};

struct RicciD {
    FrameGeometry geo;
    ExprMatrix R;  // R(beta, delta) = R^alpha_{beta alpha delta}; not assumed symmetric
    Expr scalar;
    ExprMatrix E;  // Einstein tensor R - g R / 2
    ExprMatrix mixed() const;  // R^alpha_beta = G^{alpha mu} R_{mu beta}
};

DConnection canonical_dconnection(const Chart& c, const DMetric& d, const NConnection& N);
LCConnection lc_decomposition(const Chart& c, const DMetric& d, const NConnection& N);
LCConnection levi_civita(const FrameGeometry& geo);  // Koszul formula in the given frame
DTorsion torsion(const DConnection& conn);
Table3 generic_torsion(const FrameGeometry& geo, const Table3& Gamma);
RicciD curvature_ricci(const FrameGeometry& geo, const Table3& Gamma);
inline RicciD curvature_ricci(const DConnection& c) { return curvature_ricci(c.geo, c.Gamma); }
inline RicciD curvature_ricci(const LCConnection& c) { return curvature_ricci(c.geo, c.Gamma); }

// (D_gamma g)_{alpha beta} as a table indexed (gamma, alpha, beta).
Table3 nonmetricity(const FrameGeometry& geo, const Table3& Gamma);

// Residual helpers over a point set.
ResidualReport max_abs_report(const std::string& label, const std::vector<Expr>& exprs,
                              const std::vector<Point>& pts, double tol, unsigned jobs = 0);

std::vector<ResidualReport> check_lc_compatibility(const Chart& c, const DMetric& d,
                                                   const NConnection& N,
                                                   const std::vector<Point>& pts, double tol,
                                                   unsigned jobs = 0);

std::vector<Expr> all_entries(const ExprMatrix& m);
std::vector<Expr> all_entries(const Table3& t);

}  // namespace nhrf
