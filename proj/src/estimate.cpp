#include "stdpp/estimate.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numbers>

#include "stdpp/error.hpp"
#include "stdpp/parallel.hpp"
#include "stdpp/random.hpp"

namespace stdpp {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kInf = std::numeric_limits<double>::infinity();
// Fixed chunk count so that floating-point reduction order does not depend
// on the number of workers.
constexpr std::size_t kChunks = 64;

void check_grid_fits(const LagGrid& grid, const Box& window, const char* who) {
    grid.validate();
    if (grid.spatial.back() > 0.5 * std::min(window.x_extent, window.y_extent) ||
        grid.temporal.back() > 0.5 * window.t_extent) {
        throw InvalidParameter(std::string(who) +
                               ": lag grid exceeds half of the window extents");
    }
}

double overlap_volume(const Box& w, double dx, double dy, double dt) {
    return (w.x_extent - std::abs(dx)) * (w.y_extent - std::abs(dy)) * (w.t_extent - std::abs(dt));
}

/// Calls visit(r, |dt|, 1 / |W cap W_shift|, accumulator) for every unordered
/// pair with spatial distance <= r_max and time lag <= t_max, reducing the
/// per-chunk accumulators in a fixed order.
template <class Visit>
std::vector<double> pair_sums(const PointPattern& pattern, std::size_t cells, double r_max,
                              double t_max, Visit visit) {
    std::vector<SpaceTimePoint> pts = pattern.points;
    std::sort(pts.begin(), pts.end(), [](const auto& a, const auto& b) {
        return a.t != b.t ? a.t < b.t : (a.x != b.x ? a.x < b.x : a.y < b.y);
    });
    const std::size_t n = pts.size();
    std::vector<std::vector<double>> partial(kChunks, std::vector<double>(cells, 0.0));
    parallel_for(kChunks, [&](std::size_t c) {
        auto& acc = partial[c];
        const std::size_t lo = c * n / kChunks, hi = (c + 1) * n / kChunks;
        for (std::size_t i = lo; i < hi; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                const double dt = pts[j].t - pts[i].t;
                if (dt > t_max) break;
                const double dx = pts[j].x - pts[i].x, dy = pts[j].y - pts[i].y;
                const double r = std::hypot(dx, dy);
                if (r > r_max) continue;
                const double v = overlap_volume(pattern.window, dx, dy, dt);
                if (!(v > 0.0)) continue;
                visit(r, dt, 1.0 / v, acc);
            }
        }
    });
    std::vector<double> total(cells, 0.0);
    for (const auto& acc : partial) {
        for (std::size_t k = 0; k < cells; ++k) total[k] += acc[k];
    }
    return total;
}

std::vector<double> kfun_raw(const PointPattern& pattern, const LagGrid& grid) {
    const std::size_t ns = grid.spatial.size(), nt = grid.temporal.size();
    auto h = pair_sums(pattern, grid.size(), grid.spatial.back(), grid.temporal.back(),
                       [&](double r, double dt, double w, std::vector<double>& acc) {
                           const auto a = std::lower_bound(grid.spatial.begin(), grid.spatial.end(), r) -
                                          grid.spatial.begin();
                           const auto b = std::lower_bound(grid.temporal.begin(), grid.temporal.end(), dt) -
                                          grid.temporal.begin();
                           acc[std::size_t(a) * nt + std::size_t(b)] += w;
                       });
    for (std::size_t i = 0; i < ns; ++i) {
        for (std::size_t j = 0; j < nt; ++j) {
            double& v = h[i * nt + j];
            if (i > 0) v += h[(i - 1) * nt + j];
            if (j > 0) v += h[i * nt + j - 1];
            if (i > 0 && j > 0) v -= h[(i - 1) * nt + j - 1];
        }
    }
    for (std::size_t i = 0; i < ns; ++i) {
        for (std::size_t j = 0; j < nt; ++j) {
            if (grid.spatial[i] == 0.0 || grid.temporal[j] == 0.0) h[i * nt + j] = 0.0;
        }
    }
    return h;
}

double epanechnikov(double x, double h) {
    const double z = x / h;
    return std::abs(z) < 1.0 ? 0.75 * (1.0 - z * z) / h : 0.0;
}

/// \int_0^inf k(u - r) 2 pi r dr.
double spatial_mass(double u, double h) {
    const double a = std::max(-1.0, -u / h);
    const auto prim = [&](double z) {
        return u * (z - z * z * z / 3.0) + h * (z * z / 2.0 - z * z * z * z / 4.0);
    };
    return 2.0 * kPi * 0.75 * (prim(1.0) - prim(a));
}

/// \int_{-inf}^{inf} k(t - |s|) ds.
double temporal_mass(double t, double h) {
    const double a = std::max(-1.0, -t / h);
    const auto prim = [](double z) { return z - z * z * z / 3.0; };
    return 2.0 * 0.75 * (prim(1.0) - prim(a));
}

std::vector<double> pcf_raw(const PointPattern& pattern, const LagGrid& grid,
                            const BandwidthSpec& bw) {
    const std::size_t nt = grid.temporal.size();
    return pair_sums(
        pattern, grid.size(), grid.spatial.back() + bw.spatial, grid.temporal.back() + bw.temporal,
        [&](double r, double dt, double w, std::vector<double>& acc) {
            const auto s0 = std::upper_bound(grid.spatial.begin(), grid.spatial.end(), r - bw.spatial);
            const auto t0 = std::upper_bound(grid.temporal.begin(), grid.temporal.end(), dt - bw.temporal);
            for (auto si = s0; si != grid.spatial.end() && *si < r + bw.spatial; ++si) {
                const double ks = epanechnikov(*si - r, bw.spatial);
                const std::size_t row = std::size_t(si - grid.spatial.begin()) * nt;
                for (auto ti = t0; ti != grid.temporal.end() && *ti < dt + bw.temporal; ++ti) {
                    acc[row + std::size_t(ti - grid.temporal.begin())] +=
                        2.0 * w * ks * epanechnikov(*ti - dt, bw.temporal);
                }
            }
        });
}

double pair_weight(const PointPattern& p) {
    const double n = double(p.points.size());
    return n * (n - 1.0);
}

SummaryCurve empty_curve(const LagGrid& grid, Statistic s, std::string provenance) {
    SummaryCurve c;
    c.grid = grid;
    c.statistic = s;
    c.provenance = std::move(provenance);
    c.values.assign(grid.size(), 0.0);
    return c;
}

std::string pooled_provenance(std::span<const PointPattern> patterns) {
    if (patterns.size() == 1) return patterns[0].seed_provenance;
    return "pooled " + std::to_string(patterns.size()) + " patterns";
}

}  // namespace

double estimate_intensity(const PointPattern& pattern) {
    pattern.window.validate();
    return double(pattern.points.size()) / pattern.window.volume();
}

double estimate_intensity(std::span<const PointPattern> patterns) {
    if (patterns.empty()) throw InvalidParameter("estimate_intensity: no patterns");
    double n = 0.0, v = 0.0;
    for (const auto& p : patterns) {
        p.window.validate();
        n += double(p.points.size());
        v += p.window.volume();
    }
    return n / v;
}

SummaryCurve estimate_kfun(std::span<const PointPattern> patterns, const LagGrid& grid) {
    if (patterns.empty()) throw InvalidParameter("estimate_kfun: no patterns");
    SummaryCurve c = empty_curve(grid, Statistic::KEmpirical, pooled_provenance(patterns));
    double weight = 0.0;
    for (const auto& p : patterns) {
        check_grid_fits(grid, p.window, "estimate_kfun");
        if (p.points.size() < 2) continue;
        const auto raw = kfun_raw(p, grid);
        const double v2 = p.window.volume() * p.window.volume();
        for (std::size_t k = 0; k < raw.size(); ++k) c.values[k] += raw[k] * v2;
        weight += pair_weight(p);
    }
    if (weight > 0.0) {
        // Unordered pairs only: the one-sided time lag absorbs the factor 2.
        for (double& v : c.values) v /= weight;
    }
    return c;
}

SummaryCurve estimate_kfun(const PointPattern& pattern, const LagGrid& grid) {
    return estimate_kfun(std::span<const PointPattern>(&pattern, 1), grid);
}

void BandwidthSpec::validate(const Box& window) const {
    if (!(spatial > 0.0) || !(temporal > 0.0) || !std::isfinite(spatial) || !std::isfinite(temporal)) {
        throw InvalidParameter("bandwidths must be finite and positive");
    }
    if (spatial >= 0.5 * std::min(window.x_extent, window.y_extent) ||
        temporal >= 0.5 * window.t_extent) {
        throw InvalidParameter("bandwidth too large: must be below half of the window extent");
    }
}

BandwidthSpec default_bandwidth(const PointPattern& pattern) {
    const double rho = estimate_intensity(pattern);
    const double base = rho > 0.0 ? 0.15 / std::cbrt(rho) : kInf;
    const Box& w = pattern.window;
    return {std::min(base, 0.25 * std::min(w.x_extent, w.y_extent)),
            std::min(base, 0.25 * w.t_extent)};
}

SummaryCurve estimate_pcf(std::span<const PointPattern> patterns, const LagGrid& grid,
                          std::optional<BandwidthSpec> bw) {
    if (patterns.empty()) throw InvalidParameter("estimate_pcf: no patterns");
    grid.validate();
    const BandwidthSpec h = bw ? *bw : default_bandwidth(patterns[0]);
    SummaryCurve c = empty_curve(grid, Statistic::GEmpirical, pooled_provenance(patterns));
    double weight = 0.0;
    for (const auto& p : patterns) {
        h.validate(p.window);
        check_grid_fits(grid, p.window, "estimate_pcf");
        if (p.points.size() < 2) continue;
        const auto raw = pcf_raw(p, grid, h);
        const double v2 = p.window.volume() * p.window.volume();
        for (std::size_t k = 0; k < raw.size(); ++k) c.values[k] += raw[k] * v2;
        weight += pair_weight(p);
    }
    if (weight > 0.0) {
        const std::size_t nt = grid.temporal.size();
        for (std::size_t i = 0; i < grid.spatial.size(); ++i) {
            const double ds = spatial_mass(grid.spatial[i], h.spatial);
            for (std::size_t j = 0; j < nt; ++j) {
                c.values[i * nt + j] /= weight * ds * temporal_mass(grid.temporal[j], h.temporal);
            }
        }
    }
    return c;
}

SummaryCurve estimate_pcf(const PointPattern& pattern, const LagGrid& grid,
                          std::optional<BandwidthSpec> bw) {
    return estimate_pcf(std::span<const PointPattern>(&pattern, 1), grid, bw);
}

void ParameterBounds::validate() const {
    const std::array<double, 4> v{alpha_s_min, alpha_s_max, alpha_t_min, alpha_t_max};
    for (double x : v) {
        if (!(x > 0.0) || !std::isfinite(x)) {
            throw InvalidParameter("parameter bounds must be finite and positive");
        }
    }
    if (alpha_s_min > alpha_s_max || alpha_t_min > alpha_t_max) {
        throw InvalidParameter("parameter bounds: min exceeds max");
    }
}

MinContrastObjective::MinContrastObjective(std::span<const PointPattern> patterns, Family family,
                                           LagGrid grid, const FitOptions& options)
    : family_(family), grid_(std::move(grid)), options_(options) {
    if (family == Family::Fuentes) {
        throw Unsupported("minimum-contrast fitting supports sep_gauss_exp and the Matern families");
    }
    if (!(options.exponent > 0.0)) throw InvalidParameter("contrast exponent must be positive");
    rho_ = estimate_intensity(patterns);
    if (!(rho_ > 0.0)) throw InvalidParameter("minimum contrast: patterns contain no points");
    empirical_ = options.statistic == ContrastStatistic::K
                     ? estimate_kfun(patterns, grid_)
                     : estimate_pcf(patterns, grid_, options.bandwidth);
}

KernelModel MinContrastObjective::model_at(double alpha_s, double alpha_t) const {
    switch (family_) {
        case Family::SepGaussExp:
            return KernelModel(SeparableGaussExpParams{rho_, 1.0, 1.0, alpha_s, alpha_t});
        case Family::MaternSep: {
            const double unit = intensity(KernelModel(MaternSeparableParams{1.0, alpha_s, alpha_t}));
            return KernelModel(MaternSeparableParams{rho_ / unit, alpha_s, alpha_t});
        }
        case Family::MaternNonSep: {
            const double unit = intensity(KernelModel(MaternNonSeparableParams{1.0, alpha_s, alpha_t}));
            return KernelModel(MaternNonSeparableParams{rho_ / unit, alpha_s, alpha_t});
        }
        case Family::Fuentes: break;
    }
    throw Unsupported("minimum-contrast fitting: unsupported family");
}

bool MinContrastObjective::feasible(double alpha_s, double alpha_t) const {
    return validate_existence(model_at(alpha_s, alpha_t)).valid;
}

double MinContrastObjective::operator()(double alpha_s, double alpha_t) const {
    if (!feasible(alpha_s, alpha_t)) return kInf;
    const KernelModel m = model_at(alpha_s, alpha_t);
    SummaryCurve theory;
    if (options_.statistic == ContrastStatistic::G) {
        theory = pcf_theoretical(m, grid_);
    } else if (family_ == Family::SepGaussExp) {
        theory = kfun_theoretical(m, grid_, KMethod::ClosedForm);
    } else {
        theory = kfun_theoretical(m, grid_, KMethod::Quadrature, {1e-8, std::size_t{1} << 12});
    }
    const std::size_t nt = grid_.temporal.size();
    double sum = 0.0;
    for (std::size_t k = 0; k < theory.values.size(); ++k) {
        if (grid_.spatial[k / nt] == 0.0 || grid_.temporal[k % nt] == 0.0) continue;
        const double d = std::pow(std::max(empirical_.values[k], 0.0), options_.exponent) -
                         std::pow(std::max(theory.values[k], 0.0), options_.exponent);
        sum += d * d;
    }
    return sum;
}

namespace {

using Vec2 = std::array<double, 2>;

struct SearchState {
    const MinContrastObjective& f;
    Vec2 lo, hi;  // log-space box
    std::size_t budget;
    std::size_t evaluations = 0;
    std::size_t iterations = 0;
    Vec2 best_x{};
    double best_f = kInf;

    double eval(Vec2& x) {
        for (int i = 0; i < 2; ++i) x[i] = std::clamp(x[i], lo[i], hi[i]);
        ++evaluations;
        const double v = f(std::exp(x[0]), std::exp(x[1]));
        if (v < best_f) {
            best_f = v;
            best_x = x;
        }
        return v;
    }
    [[nodiscard]] bool exhausted() const { return evaluations >= budget; }
};

/// Nelder-Mead with standard coefficients; returns true on convergence.
bool nelder_mead(SearchState& s, Vec2 start, std::size_t budget) {
    const std::size_t stop_at = std::min(s.budget, s.evaluations + budget);
    std::array<Vec2, 3> x{};
    std::array<double, 3> fx{};
    x[0] = start;
    for (int i = 0; i < 2; ++i) {
        x[i + 1] = start;
        const double step = 0.1 * std::max(s.hi[i] - s.lo[i], 1e-3);
        x[i + 1][i] += (start[i] + step <= s.hi[i]) ? step : -step;
    }
    for (int i = 0; i < 3; ++i) fx[i] = s.eval(x[i]);
    while (s.evaluations < stop_at) {
        std::array<int, 3> order{0, 1, 2};
        std::sort(order.begin(), order.end(), [&](int a, int b) { return fx[a] < fx[b]; });
        const int b = order[0], m = order[1], w = order[2];
        double diam = 0.0;
        for (int i = 0; i < 3; ++i) {
            for (int d = 0; d < 2; ++d) diam = std::max(diam, std::abs(x[i][d] - x[b][d]));
        }
        const double spread = fx[w] - fx[b];
        if (std::isfinite(spread) && spread <= 1e-12 * (std::abs(fx[b]) + 1e-300) + 1e-300 &&
            diam <= 1e-6) {
            return true;
        }
        if (diam <= 1e-10) return true;
        ++s.iterations;
        const Vec2 c{0.5 * (x[b][0] + x[m][0]), 0.5 * (x[b][1] + x[m][1])};
        const auto along = [&](double t) {
            return Vec2{c[0] + t * (x[w][0] - c[0]), c[1] + t * (x[w][1] - c[1])};
        };
        Vec2 xr = along(-1.0);
        const double fr = s.eval(xr);
        if (fr < fx[b]) {
            Vec2 xe = along(-2.0);
            const double fe = s.eval(xe);
            if (fe < fr) {
                x[w] = xe, fx[w] = fe;
            } else {
                x[w] = xr, fx[w] = fr;
            }
        } else if (fr < fx[m]) {
            x[w] = xr, fx[w] = fr;
        } else {
            Vec2 xc = fr < fx[w] ? along(-0.5) : along(0.5);
            const double fc = s.eval(xc);
            if (fc < std::min(fr, fx[w])) {
                x[w] = xc, fx[w] = fc;
            } else {
                for (int i : {m, w}) {
                    x[i] = {x[b][0] + 0.5 * (x[i][0] - x[b][0]), x[b][1] + 0.5 * (x[i][1] - x[b][1])};
                    fx[i] = s.eval(x[i]);
                }
            }
        }
    }
    return false;
}

}  // namespace

FitResult fit_min_contrast(std::span<const PointPattern> patterns, Family family,
                           const ParameterBounds& bounds, const LagGrid& grid,
                           const FitOptions& options) {
    bounds.validate();
    if (options.max_evaluations < 16) throw InvalidParameter("fit budget must be at least 16");
    const MinContrastObjective f(patterns, family, grid, options);
    const std::array<Vec2, 4> corners{Vec2{bounds.alpha_s_min, bounds.alpha_t_min},
                                      Vec2{bounds.alpha_s_min, bounds.alpha_t_max},
                                      Vec2{bounds.alpha_s_max, bounds.alpha_t_min},
                                      Vec2{bounds.alpha_s_max, bounds.alpha_t_max}};
    if (std::none_of(corners.begin(), corners.end(),
                     [&](const Vec2& c) { return f.feasible(c[0], c[1]); })) {
        throw InfeasibleBounds("no valid model at any vertex of the parameter bounds");
    }

    SearchState s{f,
                  {std::log(bounds.alpha_s_min), std::log(bounds.alpha_t_min)},
                  {std::log(bounds.alpha_s_max), std::log(bounds.alpha_t_max)},
                  options.max_evaluations};
    for (auto c : corners) {
        Vec2 x{std::log(c[0]), std::log(c[1])};
        s.eval(x);
    }
    Vec2 centre{0.5 * (s.lo[0] + s.hi[0]), 0.5 * (s.lo[1] + s.hi[1])};
    Vec2 probe = centre;
    s.eval(probe);
    Philox4x32 rng(options.seed);
    for (int k = 0; k < 8; ++k) {
        Vec2 x{s.lo[0] + rng.uniform() * (s.hi[0] - s.lo[0]),
               s.lo[1] + rng.uniform() * (s.hi[1] - s.lo[1])};
        s.eval(x);
    }

    const std::size_t remaining = s.budget - s.evaluations;
    bool converged = nelder_mead(s, s.best_x, remaining / 2);
    const Vec2 first_best = s.best_x;
    const bool restart_converged = nelder_mead(s, centre, s.budget - s.evaluations);
    if (s.best_x != first_best) converged = restart_converged;

    FitResult r{f.model_at(std::exp(s.best_x[0]), std::exp(s.best_x[1])), s.best_f, s.iterations,
                s.evaluations, converged, bounds};
    return r;
}

FitResult fit_min_contrast(const PointPattern& pattern, Family family,
                           const ParameterBounds& bounds, const LagGrid& grid,
                           const FitOptions& options) {
    return fit_min_contrast(std::span<const PointPattern>(&pattern, 1), family, bounds, grid,
                            options);
}

nlohmann::json to_json(const ParameterBounds& b) {
    return {{"alpha_s", {b.alpha_s_min, b.alpha_s_max}}, {"alpha_t", {b.alpha_t_min, b.alpha_t_max}}};
}

ParameterBounds bounds_from_json(const nlohmann::json& j) {
    ParameterBounds b;
    try {
        const auto s = j.at("alpha_s").get<std::array<double, 2>>();
        const auto t = j.at("alpha_t").get<std::array<double, 2>>();
        b = {s[0], s[1], t[0], t[1]};
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter(std::string("parameter bounds: ") + e.what());
    }
    b.validate();
    return b;
}

nlohmann::json to_json(const FitResult& r) {
    const nlohmann::json m = to_json(r.model);
    nlohmann::json params = m;
    params.erase("family");
    return {{"family", m.at("family")},
            {"parameters", params},
            {"contrast", r.contrast},
            {"iterations", r.iterations},
            {"evaluations", r.evaluations},
            {"converged", r.converged},
            {"bounds", to_json(r.bounds_used)}};
}

}  // namespace stdpp
