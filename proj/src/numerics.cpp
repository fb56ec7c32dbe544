#include <charconv>
#include "nhrf/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <exception>
#include <ostream>
#include <random>
#include <thread>

#include "nhrf/quadrature.hpp"

namespace nhrf {

double integrate_v(const Expr& e, const Point& fixed, double v0, double v1, const Quadrature& q,
                   const std::string& v) {
    Point p = fixed;
    auto f = [&](double t) {
        p[v] = t;
        Evaluator local(p, QuadOptions{q.abs_tol, q.max_depth});
        return local(e);
    };
    try {
        return adaptive_simpson(f, v0, v1, q.abs_tol, q.max_depth);
    } catch (const QuadratureError& err) {
        throw MaxDepthExceeded(err.what());
    }
}

std::vector<std::pair<double, double>> antiderivative_profile(const Expr& e, const Point& fixed,
                                                              double v0,
                                                              std::vector<double> samples,
                                                              const Quadrature& q,
                                                              const std::string& v) {
    std::sort(samples.begin(), samples.end());
    std::vector<std::pair<double, double>> out;
    out.reserve(samples.size());
    double prev = v0, acc = 0.0;
    for (double s : samples) {
        acc += integrate_v(e, fixed, prev, s, q, v);
        prev = s;
        out.emplace_back(s, acc);
    }
    return out;
}

// ---- grid ----------------------------------------------------------------

Grid::Grid(std::vector<Axis> axes, Point fixed) : axes_(std::move(axes)), fixed_(std::move(fixed)) {
    for (const auto& a : axes_)
        if (a.count < 2) throw std::invalid_argument("grid axis '" + a.name + "' needs count >= 2");
}

std::size_t Grid::size() const {
    std::size_t n = 1;
    for (const auto& a : axes_) n *= static_cast<std::size_t>(a.count);
    return axes_.empty() ? 1 : n;
}

Point Grid::point(std::size_t idx) const {
    Point p = fixed_;
    // last axis varies fastest
    for (std::size_t k = axes_.size(); k-- > 0;) {
        const Axis& a = axes_[k];
        std::size_t i = idx % static_cast<std::size_t>(a.count);
        idx /= static_cast<std::size_t>(a.count);
        p[a.name] = a.min + (a.max - a.min) * double(i) / double(a.count - 1);
    }
    return p;
}

std::vector<Point> Grid::points() const {
    std::vector<Point> out;
    out.reserve(size());
    for (std::size_t i = 0; i < size(); ++i) out.push_back(point(i));
    return out;
}

std::vector<std::string> Grid::violations(const Point& p, const std::vector<ExcludedLocus>& loci) {
    std::vector<std::string> out;
    for (const auto& l : loci) {
        double val;
        try {
            val = eval(l.f, p);
        } catch (const EvalError&) {
            out.push_back(l.label);
            continue;
        }
        if (std::fabs(val) <= l.margin) out.push_back(l.label);
    }
    return out;
}

std::vector<Point> random_points(const std::vector<Axis>& box, std::size_t count,
                                 unsigned long long seed, Point fixed) {
    std::mt19937_64 rng(seed);
    std::vector<Point> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        Point p = fixed;
        for (const auto& a : box) {
            // explicit mapping keeps results identical across standard libraries
            double u = double(rng() >> 11) * (1.0 / 9007199254740992.0);
            p[a.name] = a.min + (a.max - a.min) * u;
        }
        out.push_back(std::move(p));
    }
    return out;
}

// ---- reports --------------------------------------------------------------

void ResidualReport::finalize() {
    max_abs = 0.0;
    double sum = 0.0;
    bool finite = true;
    for (double r : residuals) {
        double a = std::fabs(r);
        if (!std::isfinite(a)) finite = false;
        max_abs = std::max(max_abs, a);
        sum += a;
    }
    mean_abs = residuals.empty() ? 0.0 : sum / double(residuals.size());
    if (!finite) max_abs = INFINITY;
    pass = finite && max_abs <= tolerance;
}

// shortest text that reads back to the same double
std::string format_real(double x) {
    char buf[40];
    auto r = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, r.ptr);
}

std::string ResidualReport::summary() const {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6e", max_abs);
    return "EQ " + label + " max=" + buf + " pass=" + (pass ? "true" : "false");
}

ResidualReport make_report(std::string label, std::vector<Point> pts, std::vector<double> res,
                           double tol) {
    ResidualReport r;
    r.label = std::move(label);
    r.points = std::move(pts);
    r.residuals = std::move(res);
    r.tolerance = tol;
    r.finalize();
    return r;
}

const std::vector<std::string>& csv_columns() {
    static const std::vector<std::string> cols = {"x1", "x2", "x3", "v", "y5", "chi"};
    return cols;
}

void write_csv_header(std::ostream& os) { os << "equation,x1,x2,x3,v,y5,chi,residual\n"; }

void write_csv_rows(std::ostream& os, const ResidualReport& r) {
    for (std::size_t i = 0; i < r.residuals.size(); ++i) {
        os << r.label;
        for (const auto& c : csv_columns()) {
            os << ',';
            if (i < r.points.size()) {
                auto it = r.points[i].find(c);
                if (it != r.points[i].end()) os << format_real(it->second);
            }
        }
        os << ',' << format_real(r.residuals[i]) << '\n';
    }
}

PointEvalError::PointEvalError(const std::string& what, Point p)
    : EvalError(what + " at " + describe(p)), point(std::move(p)) {}

std::string describe(const Point& p) {
    std::string s = "{";
    bool first = true;
    for (const auto& [k, v] : p) {
        if (!first) s += ", ";
        first = false;
        s += k + "=" + format_real(v);
    }
    return s + "}";
}

// ---- parallel evaluation ----------------------------------------------------

unsigned default_jobs() {
    unsigned h = std::thread::hardware_concurrency();
    return h == 0 ? 1 : h;
}

void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body) {
    if (jobs == 0) jobs = default_jobs();
    jobs = static_cast<unsigned>(std::min<std::size_t>(jobs, std::max<std::size_t>(n, 1)));
    if (jobs <= 1) {
        for (std::size_t i = 0; i < n; ++i) body(i);
        return;
    }
    std::vector<std::exception_ptr> errs(jobs);
    std::vector<std::thread> pool;
    std::size_t chunk = (n + jobs - 1) / jobs;
    for (unsigned t = 0; t < jobs; ++t) {
        std::size_t lo = t * chunk, hi = std::min(n, lo + chunk);
        pool.emplace_back([&, t, lo, hi]() {
            for (std::size_t i = lo; i < hi; ++i) {
                try {
                    body(i);
                } catch (...) {
                    errs[t] = std::current_exception();
                    return;
                }
            }
        });
    }
    for (auto& th : pool) th.join();
    for (unsigned t = 0; t < jobs; ++t)
        if (errs[t]) std::rethrow_exception(errs[t]);
}

std::vector<std::vector<double>> evaluate_on(const std::vector<Expr>& exprs,
                                             const std::vector<Point>& pts, unsigned jobs) {
    std::vector<std::vector<double>> out(pts.size());
    parallel_for(pts.size(), jobs, [&](std::size_t i) {
        Evaluator ev(pts[i]);
        std::vector<double> row;
        row.reserve(exprs.size());
        try {
            for (const auto& e : exprs) row.push_back(ev(e));
        } catch (const PointEvalError&) {
            throw;
        } catch (const EvalError& err) {
            throw PointEvalError(err.what(), pts[i]);
        }
        out[i] = std::move(row);
    });
    return out;
}

}  // namespace nhrf
