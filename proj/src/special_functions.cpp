#include "stdpp/special_functions.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "stdpp/error.hpp"

namespace stdpp::special {
namespace {

constexpr double kEps = 1e-16;
constexpr int kMaxIter = 10000;

// Coefficients of 1/Gamma(z) = sum_k c[k] z^(k+1) (Abramowitz & Stegun 6.1.34).
constexpr std::array<double, 26> kInvGammaSeries = {
    1.0,
    0.5772156649015329,
    -0.6558780715202538,
    -0.0420026350340952,
    0.1665386113822915,
    -0.0421977345555443,
    -0.0096219715278770,
    0.0072189432466630,
    -0.0011651675918591,
    -0.0002152416741149,
    0.0001280502823882,
    -0.0000201348547807,
    -0.0000012504934821,
    0.0000011330272320,
    -0.0000002056338417,
    0.0000000061160950,
    0.0000000050020075,
    -0.0000000011812746,
    0.0000000001043427,
    0.0000000000077823,
    -0.0000000000036968,
    0.0000000000005100,
    -0.0000000000000206,
    -0.0000000000000054,
    0.0000000000000014,
    0.0000000000000001,
};

struct TemmeGammas {
    double gam1;    // (1/G(1-mu) - 1/G(1+mu)) / (2 mu)
    double gam2;    // (1/G(1-mu) + 1/G(1+mu)) / 2
    double gampl;   // 1/G(1+mu)
    double gammi;   // 1/G(1-mu)
};

// 1/Gamma(1+z) = sum_k c[k] z^k; split into even/odd parts to avoid the
// cancellation in gam1 for small mu.
TemmeGammas temme_gammas(double mu) {
    double even = 0.0;
    double odd = 0.0;
    double power = 1.0;
    for (std::size_t k = 0; k < kInvGammaSeries.size(); ++k) {
        if (k % 2 == 0) {
            even += kInvGammaSeries[k] * power;
        } else {
            odd += kInvGammaSeries[k] * power;
        }
        if (k % 2 == 1) power *= mu * mu;
    }
    // even = sum c[2j] mu^(2j), odd = sum c[2j+1] mu^(2j)
    TemmeGammas g{};
    g.gam2 = even;
    g.gam1 = -odd;
    g.gampl = even + mu * odd;
    g.gammi = even - mu * odd;
    return g;
}

void check_args(double order, double x, bool allow_zero) {
    if (!std::isfinite(order) || order < 0.0) {
        throw DomainError("bessel_k: order must be finite and non-negative, got " +
                          std::to_string(order));
    }
    if (!std::isfinite(x) || x < 0.0 || (!allow_zero && x == 0.0)) {
        throw DomainError("bessel_k: argument out of domain, got " + std::to_string(x));
    }
}

struct KPair {
    double k_nu;
    double k_nu1;
    double log_scale;  // true values are k * exp(-log_scale)
};

// K_nu(x) and K_{nu+1}(x), with an exp(-x) factor held back for large x so
// the caller can decide when to underflow.
KPair bessel_k_pair(double nu, double x) {
    const int nl = static_cast<int>(nu + 0.5);
    const double mu = nu - nl;
    const double mu2 = mu * mu;
    const double xi = 1.0 / x;
    const double xi2 = 2.0 * xi;
    double rkmu = 0.0;
    double rk1 = 0.0;
    double log_scale = 0.0;

    if (x <= 2.0) {
        const double x2 = 0.5 * x;
        const double pimu = std::numbers::pi * mu;
        const double fact = std::abs(pimu) < kEps ? 1.0 : pimu / std::sin(pimu);
        double d = -std::log(x2);
        double e = mu * d;
        const double fact2 = std::abs(e) < kEps ? 1.0 : std::sinh(e) / e;
        const TemmeGammas g = temme_gammas(mu);
        double ff = fact * (g.gam1 * std::cosh(e) + g.gam2 * fact2 * d);
        double sum = ff;
        e = std::exp(e);
        double p = 0.5 * e / g.gampl;
        double q = 0.5 / (e * g.gammi);
        double c = 1.0;
        d = x2 * x2;
        double sum1 = p;
        int i = 1;
        for (; i <= kMaxIter; ++i) {
            ff = (i * ff + p + q) / (i * static_cast<double>(i) - mu2);
            c *= d / i;
            p /= i - mu;
            q /= i + mu;
            const double del = c * ff;
            sum += del;
            const double del1 = c * (p - i * ff);
            sum1 += del1;
            if (std::abs(del) < std::abs(sum) * kEps) break;
        }
        if (i > kMaxIter) throw Error("bessel_k: series failed to converge");
        rkmu = sum;
        rk1 = sum1 * xi2;
    } else {
        double b = 2.0 * (1.0 + x);
        double d = 1.0 / b;
        double h = d;
        double delh = d;
        double q1 = 0.0;
        double q2 = 1.0;
        const double a1 = 0.25 - mu2;
        double q = a1;
        double c = a1;
        double a = -a1;
        double s = 1.0 + q * delh;
        int i = 2;
        for (; i <= kMaxIter; ++i) {
            a -= 2 * (i - 1);
            c = -a * c / i;
            const double qnew = (q1 - b * q2) / a;
            q1 = q2;
            q2 = qnew;
            q += c * qnew;
            b += 2.0;
            d = 1.0 / (b + a * d);
            delh = (b * d - 1.0) * delh;
            h += delh;
            const double dels = q * delh;
            s += dels;
            if (std::abs(dels / s) < kEps) break;
        }
        if (i > kMaxIter) throw Error("bessel_k: continued fraction failed to converge");
        h = a1 * h;
        rkmu = std::sqrt(std::numbers::pi / (2.0 * x)) / s;
        rk1 = rkmu * (mu + x + 0.5 - h) * xi;
        log_scale = x;
    }
    for (int i = 1; i <= nl; ++i) {
        const double next = (mu + i) * xi2 * rk1 + rkmu;
        rkmu = rk1;
        rk1 = next;
    }
    return {rkmu, rk1, log_scale};
}

double unscale(double value, double log_scale) {
    if (log_scale == 0.0) return value;
    const double r = value * std::exp(-log_scale);
    // Flush anything below the normal range to zero.
    return r < std::numeric_limits<double>::min() ? 0.0 : r;
}

}  // namespace

double bessel_k(double order, double x) {
    check_args(order, x, false);
    const KPair k = bessel_k_pair(order, x);
    return unscale(k.k_nu, k.log_scale);
}

double x_times_k1(double x) {
    check_args(1.0, x, true);
    if (x == 0.0) return 1.0;
    const double v = x * bessel_k(1.0, x);
    return v > 1.0 ? 1.0 : v;
}

double x_pow_bessel_k(double order, double x) {
    check_args(order, x, true);
    if (order == 0.0) {
        throw DomainError("x_pow_bessel_k: order must be positive");
    }
    if (x == 0.0 || x < 1e-300) {
        return std::tgamma(order) * std::pow(2.0, order - 1.0);
    }
    const KPair k = bessel_k_pair(order, x);
    // x^order e^{-x} can be combined in log space for large x.
    if (k.log_scale != 0.0) {
        const double log_v = order * std::log(x) - k.log_scale + std::log(k.k_nu);
        const double r = std::exp(log_v);
        return r < std::numeric_limits<double>::min() ? 0.0 : r;
    }
    return std::pow(x, order) * k.k_nu;
}

}  // namespace stdpp::special
