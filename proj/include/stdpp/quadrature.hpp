#pragma once

#include <cstddef>
#include <functional>

namespace stdpp::quad {

struct Estimate {
    double value = 0.0;
    double error = 0.0;          // absolute error estimate
    std::size_t evaluations = 0;
    std::size_t panels = 0;
    bool converged = false;
};

using Fn1 = std::function<double(double)>;
using Fn2 = std::function<double(double, double)>;

/// Adaptive Gauss-Kronrod 7/15 on [a, b]. Stops when the summed error
/// estimate is below max(abs_tol, rel_tol * |value|) or max_panels is hit.
Estimate integrate(const Fn1& f, double a, double b, double abs_tol, double rel_tol = 0.0,
                   std::size_t max_panels = 4096);

/// Same on [a, inf) through the map x = a + s / (1 - s).
Estimate integrate_to_infinity(const Fn1& f, double a, double abs_tol, double rel_tol = 0.0,
                               std::size_t max_panels = 4096);

/// Fixed composite Gauss-Kronrod 15 on `panels` equal panels; error is the
/// summed |K15 - G7| of the panels.
Estimate integrate_panels(const Fn1& f, double a, double b, std::size_t panels);

/// Adaptive tensor Gauss-Kronrod cubature on [ax, bx] x [ay, by]. Regions are
/// bisected along the axis with the larger embedded-rule error.
Estimate integrate_rectangle(const Fn2& f, double ax, double bx, double ay, double by,
                             double abs_tol, double rel_tol = 0.0,
                             std::size_t max_panels = std::size_t{1} << 14);

}  // namespace stdpp::quad
