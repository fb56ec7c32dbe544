#pragma once

#include <functional>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "nhrf/expr.hpp"

namespace nhrf {

struct Quadrature {
    double abs_tol = 1e-12;
    int max_depth = 48;
};

struct MaxDepthExceeded : QuadratureError {
    using QuadratureError::QuadratureError;
};

double integrate_v(const Expr& e, const Point& fixed, double v0, double v1,
                   const Quadrature& q = {}, const std::string& v = "v");

// Cumulative F(v) = int_{v0}^{v} e dv over sorted samples, panel by panel.
std::vector<std::pair<double, double>> antiderivative_profile(const Expr& e, const Point& fixed,
                                                              double v0,
                                                              std::vector<double> samples,
                                                              const Quadrature& q = {},
                                                              const std::string& v = "v");

struct Axis {
    std::string name;
    double min = 0.0;
    double max = 1.0;
    int count = 2;
};

// Hypersurface f(u) = 0 that grid points must stay away from.
struct ExcludedLocus {
    std::string label;
    Expr f;
    double margin = 1e-9;
};

class Grid {
public:
    Grid() = default;
    explicit Grid(std::vector<Axis> axes, Point fixed = {});

    const std::vector<Axis>& axes() const { return axes_; }
    const Point& fixed() const { return fixed_; }
    std::size_t size() const;
    Point point(std::size_t idx) const;
    std::vector<Point> points() const;

    // Returns the labels of loci the point lies on (empty if clean).
    static std::vector<std::string> violations(const Point& p,
                                               const std::vector<ExcludedLocus>& loci);

private:
    std::vector<Axis> axes_;
    Point fixed_;
};

// Uniform random points in a box, deterministic for a given seed.
std::vector<Point> random_points(const std::vector<Axis>& box, std::size_t count,
                                 unsigned long long seed, Point fixed = {});

struct ResidualReport {
    std::string label;
    std::vector<Point> points;
    std::vector<double> residuals;
    double max_abs = 0.0;
    double mean_abs = 0.0;
    double tolerance = 0.0;
    bool pass = true;

    void finalize();  // recompute max/mean/pass from residuals
    std::string summary() const;  // "EQ <label> max=<..> pass=<..>"
};

ResidualReport make_report(std::string label, std::vector<Point> pts, std::vector<double> res,
                           double tol);

// Column set used for CSV output.
const std::vector<std::string>& csv_columns();
void write_csv_header(std::ostream& os);
void write_csv_rows(std::ostream& os, const ResidualReport& r);
std::string format_real(double x);

// Grid point of an evaluation failure.
struct PointEvalError : EvalError {
    Point point;
    PointEvalError(const std::string& what, Point p);
};

std::string describe(const Point& p);

unsigned default_jobs();

// Static partition of [0, n) into `jobs` contiguous slices. The first
// exception (lowest index) is rethrown after all threads join.
void parallel_for(std::size_t n, unsigned jobs, const std::function<void(std::size_t)>& body);

// Evaluate `exprs` at every point; result[p][k]. Evaluation errors are wrapped
// into PointEvalError identifying the point.
std::vector<std::vector<double>> evaluate_on(const std::vector<Expr>& exprs,
                                             const std::vector<Point>& pts, unsigned jobs = 0);

}  // namespace nhrf
