#pragma once
// Test-only reference computations. Nothing here calls into the library, so
// the values they produce are independent of the code under test.

#include <cmath>
#include <functional>
#include <numbers>

namespace oracle {

/// K_nu(x) = \int_0^inf exp(-x cosh s) cosh(nu s) ds, trapezoid rule. The
/// integrand is analytic and decays double-exponentially, so a fine uniform
/// trapezoid converges to machine precision.
inline double bessel_k_integral(double nu, double x, double step = 1e-3) {
    double upper = 1.0;
    while (x * std::cosh(upper) - nu * upper < 750.0) upper += 0.5;
    double sum = 0.5 * std::exp(-x);
    for (double s = step; s < upper; s += step) {
        sum += std::exp(-x * std::cosh(s)) * std::cosh(nu * s);
    }
    return sum * step;
}

/// Composite Gauss-Legendre (10 nodes per panel) on [a, b].
inline double gauss_legendre(const std::function<double(double)>& f, double a, double b,
                             int panels) {
    static constexpr double x[5] = {0.1488743389816312, 0.4333953941292472,
                                    0.6794095682990244, 0.8650633666889845,
                                    0.9739065285171717};
    static constexpr double w[5] = {0.2955242247147529, 0.2692667193099963,
                                    0.2190863625159820, 0.1494513491505806,
                                    0.0666713443086881};
    const double h = (b - a) / panels;
    double total = 0.0;
    for (int p = 0; p < panels; ++p) {
        const double mid = a + (p + 0.5) * h;
        const double half = 0.5 * h;
        double s = 0.0;
        for (int i = 0; i < 5; ++i) {
            s += w[i] * (f(mid - half * x[i]) + f(mid + half * x[i]));
        }
        total += s * half;
    }
    return total;
}

/// Tensor-product composite Gauss-Legendre on [0,a]x[0,b].
inline double gauss_legendre_2d(const std::function<double(double, double)>& f, double a,
                                double b, int panels) {
    return gauss_legendre(
        [&](double y) {
            return gauss_legendre([&](double x) { return f(x, y); }, 0.0, a, panels);
        },
        0.0, b, panels);
}

}  // namespace oracle
