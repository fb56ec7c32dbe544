#include "nhrf/dgeometry.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <map>
#include <set>
#include <stdexcept>

namespace nhrf {

// ---- charts ---------------------------------------------------------------

std::vector<std::string> Chart::names() const {
    std::vector<std::string> out = coords;
    out.insert(out.end(), params.begin(), params.end());
    return out;
}

Chart Chart::make(int n, int m, std::vector<std::string> coords, std::vector<std::string> params,
                  int first_index) {
    if (n < 2 || m < 1) throw std::invalid_argument("chart needs n >= 2 and m >= 1");
    if (int(coords.size()) != n + m) throw std::invalid_argument("chart: wrong number of names");
    std::set<std::string> seen;
    for (const auto& s : coords)
        if (!seen.insert(s).second) throw std::invalid_argument("chart: duplicate name " + s);
    for (const auto& s : params)
        if (!seen.insert(s).second) throw std::invalid_argument("chart: duplicate name " + s);
    Chart c;
    c.n = n;
    c.m = m;
    c.coords = std::move(coords);
    c.params = std::move(params);
    c.first_index = first_index;
    return c;
}

Chart chart5d(std::vector<std::string> params) {
    return Chart::make(3, 2, {"x1", "x2", "x3", "v", "y5"}, std::move(params), 1);
}

Chart chart4d(std::vector<std::string> params) {
    return Chart::make(2, 2, {"x2", "x3", "v", "y5"}, std::move(params), 2);
}

// ---- small symbolic linear algebra ---------------------------------------------

ExprMatrix ExprMatrix::identity(int n) {
    ExprMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = num(1.0);
    return m;
}

ExprMatrix transpose(const ExprMatrix& a) {
    ExprMatrix t(a.cols(), a.rows());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

ExprMatrix matmul(const ExprMatrix& a, const ExprMatrix& b) {
    if (a.cols() != b.rows()) throw std::invalid_argument("matmul: shape mismatch");
    ExprMatrix c(a.rows(), b.cols());
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < b.cols(); ++j) {
            std::vector<Expr> t;
            for (int k = 0; k < a.cols(); ++k) t.push_back(a(i, k) * b(k, j));
            c(i, j) = add(std::move(t));
        }
    return c;
}

namespace {

struct Minors {
    const ExprMatrix& a;
    std::map<std::pair<unsigned, unsigned>, Expr> memo;

    // determinant of the submatrix on the given row and column bitmasks
    Expr det(unsigned rows, unsigned cols) {
        if (rows == 0) return num(1.0);
        auto key = std::make_pair(rows, cols);
        auto it = memo.find(key);
        if (it != memo.end()) return it->second;
        int r = 0;
        while (!(rows & (1u << r))) ++r;
        std::vector<Expr> terms;
        int sgn = 1;
        for (int c = 0; c < a.cols(); ++c) {
            if (!(cols & (1u << c))) continue;
            if (!a(r, c).is_zero()) {
                Expr sub = det(rows & ~(1u << r), cols & ~(1u << c));
                if (!sub.is_zero()) terms.push_back(sgn > 0 ? a(r, c) * sub : neg(a(r, c) * sub));
            }
            sgn = -sgn;
        }
        Expr d = add(std::move(terms));
        memo.emplace(key, d);
        return d;
    }
};

bool is_diagonal(const ExprMatrix& a) {
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            if (i != j && !a(i, j).is_zero()) return false;
    return true;
}

}  // namespace

Expr determinant(const ExprMatrix& a) {
    if (a.rows() != a.cols()) throw std::invalid_argument("determinant: not square");
    Minors m{a, {}};
    unsigned all = (1u << a.rows()) - 1u;
    return m.det(all, all);
}

ExprMatrix inverse(const ExprMatrix& a) {
    int n = a.rows();
    if (n != a.cols()) throw std::invalid_argument("inverse: not square");
    ExprMatrix inv(n, n);
    if (is_diagonal(a)) {
        for (int i = 0; i < n; ++i) inv(i, i) = divide(num(1.0), a(i, i));
        return inv;
    }
    Minors m{a, {}};
    unsigned all = (1u << n) - 1u;
    Expr det = m.det(all, all);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            Expr cof = m.det(all & ~(1u << i), all & ~(1u << j));
            if (cof.is_zero()) continue;
            if ((i + j) % 2) cof = neg(cof);
            inv(j, i) = divide(cof, det);
        }
    return inv;
}

// ---- metrics ------------------------------------------------------------------

ExprMatrix DMetric::full() const {
    int n = g.rows(), m = h.rows();
    ExprMatrix G(n + m, n + m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) G(i, j) = g(i, j);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) G(n + a, n + b) = h(a, b);
    return G;
}

DMetric diagonal_dmetric(const std::vector<Expr>& diag, const Chart& c) {
    if (int(diag.size()) != c.dim()) throw std::invalid_argument("diagonal_dmetric: size");
    DMetric d{ExprMatrix(c.n, c.n), ExprMatrix(c.m, c.m)};
    for (int i = 0; i < c.n; ++i) d.g(i, i) = diag[std::size_t(i)];
    for (int a = 0; a < c.m; ++a) d.h(a, a) = diag[std::size_t(c.n + a)];
    return d;
}

void require_clear(const GeneratedMetric& g, const std::vector<Point>& pts) {
    for (const auto& p : pts) {
        auto hit = Grid::violations(p, g.excluded);
        if (!hit.empty()) throw DegenerateRecipe("recipe degenerate (" + hit.front() + ") at " + describe(p));
    }
}

std::string recipe_hash(const std::vector<std::string>& parts) {
    std::uint64_t h = 1469598103934665603ull;
    for (const auto& s : parts) {
        for (unsigned char c : s) {
            h ^= c;
            h *= 1099511628211ull;
        }
        h ^= 0xff;
        h *= 1099511628211ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

ExprMatrix coordinate_metric(const Chart& c, const DMetric& d, const NConnection& N) {
    int n = c.n, m = c.m;
    ExprMatrix G(n + m, n + m);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            std::vector<Expr> t{d.g(i, j)};
            for (int a = 0; a < m; ++a)
                for (int b = 0; b < m; ++b) t.push_back(mul({N.N(i, a), N.N(j, b), d.h(a, b)}));
            G(i, j) = add(std::move(t));
        }
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < m; ++a) {
            std::vector<Expr> t;
            for (int b = 0; b < m; ++b) t.push_back(N.N(i, b) * d.h(a, b));
            G(i, n + a) = G(n + a, i) = add(std::move(t));
        }
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b) G(n + a, n + b) = d.h(a, b);
    return G;
}

// ---- frames -------------------------------------------------------------------

Frame::Frame(Chart c, NConnection N)
    : chart_(std::move(c)), N_(std::move(N)), memo_(std::size_t(chart_.dim())) {}

Expr Frame::partial(int alpha, const Expr& f) {
    return diff_(f, chart_.coords[std::size_t(alpha)]);
}

Expr Frame::e(int alpha, const Expr& f) {
    if (f.is_const()) return num(0.0);
    auto& memo = memo_[std::size_t(alpha)];
    auto it = memo.find(f.get());
    if (it != memo.end()) return it->second.second;
    Expr r = partial(alpha, f);
    if (alpha < chart_.n) {
        std::vector<Expr> t{r};
        for (int a = 0; a < chart_.m; ++a) {
            const Expr& Nia = N_.N(alpha, a);
            if (Nia.is_zero()) continue;
            Expr da = partial(chart_.n + a, f);
            if (!da.is_zero()) t.push_back(neg(Nia * da));
        }
        r = add(std::move(t));
    }
    memo.emplace(f.get(), std::make_pair(f, r));
    return r;
}

Anholonomy anholonomy(Frame& f) {
    const Chart& c = f.chart();
    const auto& N = f.N().N;
    int n = c.n, m = c.m, D = c.dim();
    Anholonomy A;
    A.n = n;
    A.m = m;
    A.W = Table3(D);
    A.Omega.assign(std::size_t(m * n * n), num(0.0));
    for (int a = 0; a < m; ++a)
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                if (i == j) continue;
                Expr om = f.e(i, N(j, a)) - f.e(j, N(i, a));
                A.Omega[std::size_t((a * n + i) * n + j)] = om;
                // [e_i, e_j] = (e_j N_i^a - e_i N_j^a) e_a
                A.W(n + a, i, j) = neg(om);
            }
    for (int i = 0; i < n; ++i)
        for (int a = 0; a < m; ++a)
            for (int b = 0; b < m; ++b) {
                Expr w = f.partial(n + a, N(i, b));  // [e_i, e_a] = d_a N_i^b e_b
                A.W(n + b, i, n + a) = w;
                A.W(n + b, n + a, i) = neg(w);
            }
    return A;
}

Anholonomy anholonomy(const Chart& c, const NConnection& N) {
    Frame f(c, N);
    return anholonomy(f);
}

FrameGeometry adapted_geometry(const Chart& c, const DMetric& d, const NConnection& N) {
    FrameGeometry geo;
    geo.frame = std::make_shared<Frame>(c, N);
    geo.G = d.full();
    ExprMatrix gi = inverse(d.g), hi = inverse(d.h);
    geo.Ginv = DMetric{gi, hi}.full();
    geo.anh = anholonomy(*geo.frame);
    return geo;
}

FrameGeometry coordinate_geometry(const Chart& c, const ExprMatrix& g) {
    FrameGeometry geo;
    geo.frame = std::make_shared<Frame>(c, NConnection::zero(c));
    geo.G = g;
    geo.Ginv = inverse(g);
    geo.anh = anholonomy(*geo.frame);
    return geo;
}

// ---- connections -----------------------------------------------------------------

DConnection canonical_dconnection(const Chart& c, const DMetric& d, const NConnection& N) {
    DConnection out;
    out.geo = adapted_geometry(c, d, N);
    Frame& f = *out.geo.frame;
    int n = c.n, m = c.m;
    const ExprMatrix& g = d.g;
    const ExprMatrix& h = d.h;
    ExprMatrix gi = inverse(g), hi = inverse(h);
    Table3 G(c.dim());
    Expr half = num(0.5);

    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) {
                std::vector<Expr> t;
                for (int r = 0; r < n; ++r) {
                    if (gi(i, r).is_zero()) continue;
                    t.push_back(gi(i, r) * add({f.e(k, g(j, r)), f.e(j, g(k, r)), neg(f.e(r, g(j, k)))}));
                }
                G(i, j, k) = half * add(std::move(t));
            }
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int k = 0; k < n; ++k) {
                std::vector<Expr> t;
                for (int cc = 0; cc < m; ++cc) {
                    if (hi(a, cc).is_zero()) continue;
                    std::vector<Expr> in{f.e(k, h(b, cc))};
                    for (int dd = 0; dd < m; ++dd) {
                        in.push_back(neg(h(dd, cc) * f.partial(n + b, N.N(k, dd))));
                        in.push_back(neg(h(dd, b) * f.partial(n + cc, N.N(k, dd))));
                    }
                    t.push_back(hi(a, cc) * add(std::move(in)));
                }
                G(n + a, n + b, k) = f.partial(n + b, N.N(k, a)) + half * add(std::move(t));
            }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int cc = 0; cc < m; ++cc) {
                std::vector<Expr> t;
                for (int k = 0; k < n; ++k)
                    if (!gi(i, k).is_zero()) t.push_back(gi(i, k) * f.e(n + cc, g(j, k)));
                G(i, j, n + cc) = half * add(std::move(t));
            }
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int cc = 0; cc < m; ++cc) {
                std::vector<Expr> t;
                for (int dd = 0; dd < m; ++dd) {
                    if (hi(a, dd).is_zero()) continue;
                    t.push_back(hi(a, dd) * add({f.e(n + cc, h(b, dd)), f.e(n + b, h(cc, dd)),
                                                 neg(f.e(n + dd, h(b, cc)))}));
                }
                G(n + a, n + b, n + cc) = half * add(std::move(t));
            }
    out.Gamma = std::move(G);
    return out;
}

LCConnection levi_civita(const FrameGeometry& geo) {
    LCConnection out;
    out.geo = geo;
    Frame& f = *geo.frame;
    int D = geo.chart().dim();
    const ExprMatrix& G = geo.G;
    const Table3& W = geo.anh.W;
    // lowered: low(delta, beta, gamma) = g(D_{e_gamma} e_beta, e_delta)
    Table3 low(D);
    for (int dl = 0; dl < D; ++dl)
        for (int b = 0; b < D; ++b)
            for (int gm = 0; gm < D; ++gm) {
                std::vector<Expr> t{f.e(gm, G(b, dl)), f.e(b, G(gm, dl)), neg(f.e(dl, G(gm, b)))};
                for (int mu = 0; mu < D; ++mu) {
                    if (!W(mu, gm, b).is_zero()) t.push_back(W(mu, gm, b) * G(mu, dl));
                    if (!W(mu, gm, dl).is_zero()) t.push_back(neg(W(mu, gm, dl) * G(mu, b)));
                    if (!W(mu, b, dl).is_zero()) t.push_back(neg(W(mu, b, dl) * G(mu, gm)));
                }
                low(dl, b, gm) = num(0.5) * add(std::move(t));
            }
    Table3 up(D);
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
            for (int gm = 0; gm < D; ++gm) {
                std::vector<Expr> t;
                for (int dl = 0; dl < D; ++dl)
                    if (!geo.Ginv(a, dl).is_zero()) t.push_back(geo.Ginv(a, dl) * low(dl, b, gm));
                up(a, b, gm) = add(std::move(t));
            }
    out.Gamma = std::move(up);
    return out;
}

LCConnection lc_decomposition(const Chart& c, const DMetric& d, const NConnection& N) {
    return levi_civita(adapted_geometry(c, d, N));
}

DTorsion torsion(const DConnection& conn) {
    const Chart& c = conn.geo.chart();
    Frame& f = *conn.geo.frame;
    const auto& N = f.N().N;
    const Table3& G = conn.Gamma;
    int n = c.n, m = c.m;
    DTorsion out{Table3(c.dim())};
    Table3& T = out.T;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int k = 0; k < n; ++k) T(i, j, k) = G(i, j, k) - G(i, k, j);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            for (int a = 0; a < m; ++a) {
                T(i, j, n + a) = G(i, j, n + a);
                T(i, n + a, j) = neg(G(i, j, n + a));
            }
    for (int a = 0; a < m; ++a)
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) T(n + a, j, i) = conn.geo.anh.omega(a, j, i);
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int i = 0; i < n; ++i) {
                Expr t = f.partial(n + b, N(i, a)) - G(n + a, n + b, i);
                T(n + a, n + b, i) = t;
                T(n + a, i, n + b) = neg(t);
            }
    for (int a = 0; a < m; ++a)
        for (int b = 0; b < m; ++b)
            for (int cc = 0; cc < m; ++cc)
                T(n + a, n + b, n + cc) = G(n + a, n + b, n + cc) - G(n + a, n + cc, n + b);
    return out;
}

Table3 generic_torsion(const FrameGeometry& geo, const Table3& Gamma) {
    int D = geo.chart().dim();
    Table3 T(D);
    for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
            for (int c = 0; c < D; ++c)
                T(a, b, c) = add({Gamma(a, c, b), neg(Gamma(a, b, c)), neg(geo.anh.W(a, b, c))});
    return T;
}

RicciD curvature_ricci(const FrameGeometry& geo, const Table3& Gam) {
    Frame& f = *geo.frame;
    int D = geo.chart().dim();
    const Table3& W = geo.anh.W;
    std::vector<Expr> trace(static_cast<std::size_t>(D));
    for (int mu = 0; mu < D; ++mu) {
        std::vector<Expr> t;
        for (int a = 0; a < D; ++a) t.push_back(Gam(a, mu, a));
        trace[std::size_t(mu)] = add(std::move(t));
    }
    RicciD out;
    out.geo = geo;
    out.R = ExprMatrix(D, D);
    for (int b = 0; b < D; ++b)
        for (int d = 0; d < D; ++d) {
            std::vector<Expr> t;
            for (int a = 0; a < D; ++a) t.push_back(f.e(a, Gam(a, b, d)));
            t.push_back(neg(f.e(d, trace[std::size_t(b)])));
            for (int mu = 0; mu < D; ++mu) {
                if (!Gam(mu, b, d).is_zero()) t.push_back(Gam(mu, b, d) * trace[std::size_t(mu)]);
                for (int a = 0; a < D; ++a) {
                    if (!Gam(mu, b, a).is_zero() && !Gam(a, mu, d).is_zero())
                        t.push_back(neg(Gam(mu, b, a) * Gam(a, mu, d)));
                    if (!W(mu, a, d).is_zero() && !Gam(a, b, mu).is_zero())
                        t.push_back(neg(W(mu, a, d) * Gam(a, b, mu)));
                }
            }
            out.R(b, d) = add(std::move(t));
        }
    std::vector<Expr> s;
    for (int b = 0; b < D; ++b)
        for (int d = 0; d < D; ++d)
            if (!geo.Ginv(b, d).is_zero()) s.push_back(geo.Ginv(b, d) * out.R(b, d));
    out.scalar = add(std::move(s));
    out.E = ExprMatrix(D, D);
    for (int b = 0; b < D; ++b)
        for (int d = 0; d < D; ++d) out.E(b, d) = out.R(b, d) - mul({num(0.5), geo.G(b, d), out.scalar});
    return out;
}

ExprMatrix RicciD::mixed() const { return matmul(geo.Ginv, R); }

Table3 nonmetricity(const FrameGeometry& geo, const Table3& Gam) {
    Frame& f = *geo.frame;
    int D = geo.chart().dim();
    Table3 Q(D);
    for (int gm = 0; gm < D; ++gm)
        for (int a = 0; a < D; ++a)
            for (int b = 0; b < D; ++b) {
                std::vector<Expr> t{f.e(gm, geo.G(a, b))};
                for (int mu = 0; mu < D; ++mu) {
                    t.push_back(neg(Gam(mu, a, gm) * geo.G(mu, b)));
                    t.push_back(neg(Gam(mu, b, gm) * geo.G(a, mu)));
                }
                Q(gm, a, b) = add(std::move(t));
            }
    return Q;
}

// ---- residual checks ----------------------------------------------------------------

std::vector<Expr> all_entries(const ExprMatrix& m) { return m.data(); }
std::vector<Expr> all_entries(const Table3& t) { return t.data(); }

ResidualReport max_abs_report(const std::string& label, const std::vector<Expr>& exprs,
                              const std::vector<Point>& pts, double tol, unsigned jobs) {
    std::vector<Expr> live;
    for (const auto& e : exprs)
        if (!e.is_zero()) live.push_back(e);
    auto vals = evaluate_on(live, pts, jobs);
    std::vector<double> res(pts.size(), 0.0);
    for (std::size_t p = 0; p < pts.size(); ++p)
        for (double v : vals[p]) {
            double a = std::fabs(v);
            if (!(a <= res[p])) res[p] = a;  // NaN propagates
        }
    return make_report(label, pts, std::move(res), tol);
}

std::vector<ResidualReport> check_lc_compatibility(const Chart& c, const DMetric& d,
                                                   const NConnection& N,
                                                   const std::vector<Point>& pts, double tol,
                                                   unsigned jobs) {
    Frame f(c, N);
    Anholonomy A = anholonomy(f);
    int n = c.n, m = c.m;
    ExprMatrix gi = inverse(d.g);

    std::vector<Expr> chv;
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < n; ++k)
            for (int b = 0; b < m; ++b) {
                std::vector<Expr> t;
                for (int j = 0; j < n; ++j)
                    if (!gi(i, j).is_zero()) t.push_back(gi(i, j) * f.e(n + b, d.g(k, j)));
                chv.push_back(num(0.5) * add(std::move(t)));
            }

    std::vector<Expr> cond_c;
    for (int k = 0; k < n; ++k)
        for (int b = 0; b < m; ++b)
            for (int cc = 0; cc < m; ++cc) {
                std::vector<Expr> t{f.e(k, d.h(b, cc))};
                for (int dd = 0; dd < m; ++dd) {
                    t.push_back(neg(d.h(dd, cc) * f.partial(n + b, N.N(k, dd))));
                    t.push_back(neg(d.h(dd, b) * f.partial(n + cc, N.N(k, dd))));
                }
                cond_c.push_back(add(std::move(t)));
            }

    return {max_abs_report("lc_omega", A.Omega, pts, tol, jobs),
            max_abs_report("lc_C_hv", chv, pts, tol, jobs),
            max_abs_report("lc_cond_c", cond_c, pts, tol, jobs)};
}

}  // namespace nhrf
