#pragma once

namespace stdpp::special {

/// Modified Bessel function of the second kind K_order(x) for real order >= 0
/// and x > 0. Temme's series for x <= 2, Steed's continued fraction above,
/// then upward recurrence in the order. Returns 0 once the value underflows.
/// Throws DomainError for x <= 0, negative order, or non-finite input.
double bessel_k(double order, double x);

/// x * K_1(x), with the continuous extension 1 at x = 0.
double x_times_k1(double x);

/// x^order * K_order(x) for order > 0, extended continuously at x = 0 by
/// Gamma(order) * 2^(order - 1). This is the shape of every Matern-type
/// covariance and stays finite where K itself blows up.
double x_pow_bessel_k(double order, double x);

}  // namespace stdpp::special
