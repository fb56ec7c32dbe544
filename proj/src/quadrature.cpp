#include "nhrf/quadrature.hpp"

#include <cmath>
#include <string>

#include "nhrf/expr.hpp"

namespace nhrf {

namespace {

struct Simpson {
    const std::function<double(double)>& f;
    int max_depth;
    mutable long budget = 1000000;  // evaluations; deep bisection is exponential

    double step(double a, double fa, double m, double fm, double b, double fb, double whole,
                double tol, int depth) const {
        double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
        double flm = f(lm), frm = f(rm);
        double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        double both = left + right;
        if (!std::isfinite(both))
            throw QuadratureError("non-finite integrand near v=" + std::to_string(m));
        if ((budget -= 2) < 0)
            throw QuadratureError("adaptive Simpson ran out of evaluations near v=" +
                                  std::to_string(m));
        double delta = both - whole;
        if (std::fabs(delta) <= 15.0 * tol ||
            std::fabs(delta) <= 1e-15 * std::fabs(both) ||
            std::fabs(m - a) <= 1e-14 * (std::fabs(a) + std::fabs(b)))
            return both + delta / 15.0;
        if (depth >= max_depth)
            throw QuadratureError("adaptive Simpson exceeded max depth near v=" +
                                  std::to_string(m));
        return step(a, fa, lm, flm, m, fm, left, 0.5 * tol, depth + 1) +
               step(m, fm, rm, frm, b, fb, right, 0.5 * tol, depth + 1);
    }
};

}  // namespace

double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth) {
    if (a == b) return 0.0;
    double fa = f(a), fb = f(b);
    double m = 0.5 * (a + b);
    double fm = f(m);
    Simpson s{f, max_depth};
    // Split once up front so symmetric integrands cannot fool the first estimate.
    double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    double flm = f(lm), frm = f(rm);
    double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    double r = s.step(a, fa, lm, flm, m, fm, left, 0.5 * abs_tol, 1) +
               s.step(m, fm, rm, frm, b, fb, right, 0.5 * abs_tol, 1);
    if (!std::isfinite(r)) throw QuadratureError("non-finite quadrature result");
    return r;
}

}  // namespace nhrf
