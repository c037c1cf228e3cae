#include "stdpp/quadrature.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <queue>
#include <vector>

namespace stdpp::quad {
namespace {

// QUADPACK qk15 nodes; odd indices are the embedded 7-point Gauss nodes.
constexpr std::array<double, 8> kXgk = {
    0.991455371120812639206854697526329, 0.949107912342758524526189684047851,
    0.864864423359769072789712788640926, 0.741531185599394439863864773280788,
    0.586087235467691130294144845693013, 0.405845151377397166906606412076961,
    0.207784955007898467600689403773245, 0.000000000000000000000000000000000};
constexpr std::array<double, 8> kWgk = {
    0.022935322010529224963732008058970, 0.063092092629978553290700663189204,
    0.104790010322250183839876322541518, 0.140653259715525918745189590510238,
    0.169004726639267902826583426598550, 0.190350578064785409913256402421014,
    0.204432940075298892414161999234649, 0.209482141084727828012999174891714};
constexpr std::array<double, 4> kWg = {
    0.129484966168869693270611432679082, 0.279705391489276667901467771423780,
    0.381830050505118944950369775488975, 0.417959183673469387755102040816327};

// 15 nodes on [-1, 1] with Kronrod and Gauss weights (Gauss weight 0 off the
// embedded rule).
struct Rule15 {
    std::array<double, 15> x{};
    std::array<double, 15> wk{};
    std::array<double, 15> wg{};
};

constexpr Rule15 make_rule() {
    Rule15 r{};
    for (int i = 0; i < 7; ++i) {
        r.x[i] = -kXgk[i];
        r.x[14 - i] = kXgk[i];
        r.wk[i] = r.wk[14 - i] = kWgk[i];
        r.wg[i] = r.wg[14 - i] = (i % 2 == 1) ? kWg[i / 2] : 0.0;
    }
    r.x[7] = 0.0;
    r.wk[7] = kWgk[7];
    r.wg[7] = kWg[3];
    return r;
}

constexpr Rule15 kRule = make_rule();

struct Panel1 {
    double a, b, value, error;
    bool operator<(const Panel1& o) const { return error < o.error; }
};

Panel1 gk15(const Fn1& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double k = 0.0;
    double g = 0.0;
    for (int i = 0; i < 15; ++i) {
        const double v = f(c + h * kRule.x[i]);
        k += kRule.wk[i] * v;
        g += kRule.wg[i] * v;
    }
    return {a, b, k * h, std::abs((k - g) * h)};
}

struct Panel2 {
    double ax, bx, ay, by, value, error;
    bool split_x;
    bool operator<(const Panel2& o) const { return error < o.error; }
};

Panel2 gk15x15(const Fn2& f, double ax, double bx, double ay, double by) {
    const double cx = 0.5 * (ax + bx);
    const double hx = 0.5 * (bx - ax);
    const double cy = 0.5 * (ay + by);
    const double hy = 0.5 * (by - ay);
    double kk = 0.0;  // Kronrod x Kronrod
    double gk = 0.0;  // Gauss in x, Kronrod in y
    double kg = 0.0;  // Kronrod in x, Gauss in y
    for (int j = 0; j < 15; ++j) {
        const double y = cy + hy * kRule.x[j];
        double row_k = 0.0;
        double row_g = 0.0;
        for (int i = 0; i < 15; ++i) {
            const double v = f(cx + hx * kRule.x[i], y);
            row_k += kRule.wk[i] * v;
            row_g += kRule.wg[i] * v;
        }
        kk += kRule.wk[j] * row_k;
        gk += kRule.wk[j] * row_g;
        kg += kRule.wg[j] * row_k;
    }
    const double scale = hx * hy;
    const double ex = std::abs(kk - gk) * scale;
    const double ey = std::abs(kk - kg) * scale;
    return {ax, bx, ay, by, kk * scale, ex + ey, ex >= ey};
}

}  // namespace

Estimate integrate(const Fn1& f, double a, double b, double abs_tol, double rel_tol,
                   std::size_t max_panels) {
    Estimate est;
    if (a == b) {
        est.converged = true;
        return est;
    }
    std::priority_queue<Panel1> heap;
    Panel1 first = gk15(f, a, b);
    heap.push(first);
    double total = first.value;
    double error = first.error;
    est.evaluations = 15;
    while (error > std::max(abs_tol, rel_tol * std::abs(total)) && heap.size() < max_panels) {
        const Panel1 worst = heap.top();
        heap.pop();
        const double mid = 0.5 * (worst.a + worst.b);
        const Panel1 left = gk15(f, worst.a, mid);
        const Panel1 right = gk15(f, mid, worst.b);
        est.evaluations += 30;
        total += left.value + right.value - worst.value;
        error += left.error + right.error - worst.error;
        heap.push(left);
        heap.push(right);
    }
    // Re-sum to shed the drift of the running updates.
    total = 0.0;
    error = 0.0;
    est.panels = heap.size();
    while (!heap.empty()) {
        total += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    est.value = total;
    est.error = error;
    est.converged = error <= std::max(abs_tol, rel_tol * std::abs(total));
    return est;
}

Estimate integrate_to_infinity(const Fn1& f, double a, double abs_tol, double rel_tol,
                               std::size_t max_panels) {
    const auto mapped = [&](double s) {
        if (s >= 1.0) return 0.0;
        const double one_minus = 1.0 - s;
        const double x = a + s / one_minus;
        const double v = f(x);
        return v == 0.0 ? 0.0 : v / (one_minus * one_minus);
    };
    return integrate(mapped, 0.0, 1.0, abs_tol, rel_tol, max_panels);
}

Estimate integrate_panels(const Fn1& f, double a, double b, std::size_t panels) {
    Estimate est;
    panels = std::max<std::size_t>(panels, 1);
    const double h = (b - a) / static_cast<double>(panels);
    for (std::size_t p = 0; p < panels; ++p) {
        const double lo = a + h * static_cast<double>(p);
        const Panel1 r = gk15(f, lo, p + 1 == panels ? b : lo + h);
        est.value += r.value;
        est.error += r.error;
    }
    est.evaluations = 15 * panels;
    est.panels = panels;
    est.converged = true;
    return est;
}

Estimate integrate_rectangle(const Fn2& f, double ax, double bx, double ay, double by,
                             double abs_tol, double rel_tol, std::size_t max_panels) {
    Estimate est;
    if (ax == bx || ay == by) {
        est.converged = true;
        return est;
    }
    std::priority_queue<Panel2> heap;
    Panel2 first = gk15x15(f, ax, bx, ay, by);
    heap.push(first);
    double total = first.value;
    double error = first.error;
    est.evaluations = 225;
    while (error > std::max(abs_tol, rel_tol * std::abs(total)) && heap.size() < max_panels) {
        const Panel2 worst = heap.top();
        heap.pop();
        Panel2 lo{};
        Panel2 hi{};
        if (worst.split_x) {
            const double mid = 0.5 * (worst.ax + worst.bx);
            lo = gk15x15(f, worst.ax, mid, worst.ay, worst.by);
            hi = gk15x15(f, mid, worst.bx, worst.ay, worst.by);
        } else {
            const double mid = 0.5 * (worst.ay + worst.by);
            lo = gk15x15(f, worst.ax, worst.bx, worst.ay, mid);
            hi = gk15x15(f, worst.ax, worst.bx, mid, worst.by);
        }
        est.evaluations += 450;
        total += lo.value + hi.value - worst.value;
        error += lo.error + hi.error - worst.error;
        heap.push(lo);
        heap.push(hi);
    }
    total = 0.0;
    error = 0.0;
    est.panels = heap.size();
    while (!heap.empty()) {
        total += heap.top().value;
        error += heap.top().error;
        heap.pop();
    }
    est.value = total;
    est.error = error;
    est.converged = error <= std::max(abs_tol, rel_tol * std::abs(total));
    return est;
}

}  // namespace stdpp::quad
