#pragma once

#include <functional>

namespace nhrf {

// Adaptive Simpson with a Richardson-corrected panel estimate. Throws
// QuadratureError when the tolerance cannot be met within max_depth.
double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                        double abs_tol, int max_depth);

}  // namespace nhrf
