#include "stdpp/moments.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <charconv>
#include <cmath>
#include <numbers>
#include <ostream>
#include <sstream>

#include "stdpp/error.hpp"
#include "stdpp/log.hpp"
#include "stdpp/parallel.hpp"
#include "stdpp/quadrature.hpp"

namespace stdpp {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr std::size_t kMaxProductOrder = 12;

void check_axis(const std::vector<double>& axis, const char* name) {
    if (axis.empty()) throw InvalidParameter(std::string("lag grid: ") + name + " axis is empty");
    for (std::size_t i = 0; i < axis.size(); ++i) {
        if (!std::isfinite(axis[i])) {
            throw InvalidParameter(std::string("lag grid: ") + name + " lags must be finite");
        }
        if (i == 0 ? axis[i] < 0.0 : axis[i] <= axis[i - 1]) {
            throw InvalidParameter(std::string("lag grid: ") + name +
                                   " lags must be non-negative and strictly ascending");
        }
    }
}

std::string model_tag(const KernelModel& model) { return to_json(model).dump(); }

void append_number(std::string& out, double v) {
    char buf[32];
    const auto res = std::to_chars(buf, buf + sizeof(buf), v);
    out.append(buf, res.ptr);
}

}  // namespace

void LagGrid::validate() const {
    check_axis(spatial, "spatial");
    check_axis(temporal, "temporal");
}

LagGrid LagGrid::uniform(double first, double step, std::size_t n) {
    return uniform(first, step, n, first, step, n);
}

LagGrid LagGrid::uniform(double s_first, double s_step, std::size_t ns, double t_first,
                         double t_step, std::size_t nt) {
    LagGrid g;
    for (std::size_t i = 0; i < ns; ++i) g.spatial.push_back(s_first + s_step * static_cast<double>(i));
    for (std::size_t j = 0; j < nt; ++j) g.temporal.push_back(t_first + t_step * static_cast<double>(j));
    g.validate();
    return g;
}

std::string_view statistic_name(Statistic s) {
    switch (s) {
        case Statistic::GTheoretical: return "g_theoretical";
        case Statistic::KTheoretical: return "K_theoretical";
        case Statistic::GEmpirical: return "g_empirical";
        case Statistic::KEmpirical: return "K_empirical";
    }
    return "unknown";
}

Statistic statistic_from_name(std::string_view name) {
    for (auto s : {Statistic::GTheoretical, Statistic::KTheoretical, Statistic::GEmpirical,
                   Statistic::KEmpirical}) {
        if (statistic_name(s) == name) return s;
    }
    throw InvalidParameter("unknown statistic '" + std::string(name) + "'");
}

double product_density(const KernelModel& model, std::span<const SpaceTimePoint> points) {
    const std::size_t n = points.size();
    if (n == 0) throw InvalidParameter("product_density: need at least one point");
    if (n > kMaxProductOrder) {
        throw SizeLimitError("product_density: order " + std::to_string(n) +
                             " exceeds the limit of " + std::to_string(kMaxProductOrder));
    }
    require_valid(model);
    Eigen::MatrixXd c(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            const double r = std::hypot(points[i].x - points[j].x, points[i].y - points[j].y);
            const double v = kernel_value_unchecked(model, r, points[i].t - points[j].t);
            c(i, j) = v;
            c(j, i) = v;
        }
    }
    if (n == 1) return c(0, 0);
    const Eigen::LDLT<Eigen::MatrixXd> ldlt(c);
    const double det = ldlt.vectorD().prod();
    const double slack = 1e-9 * std::pow(intensity(model), static_cast<double>(n));
    if (det < 0.0 && det >= -slack) {
        std::ostringstream os;
        os << "product_density: clamped round-off determinant " << det << " to 0";
        log::debug(os.str());
        return 0.0;
    }
    return det;
}

double pcf_value(const KernelModel& model, double r, double t) {
    if (r == 0.0 && t == 0.0) return 0.0;
    const double rr = correlation(model, r, t);
    return std::clamp(1.0 - rr * rr, 0.0, 1.0);
}

SummaryCurve pcf_theoretical(const KernelModel& model, const LagGrid& grid,
                             std::optional<InversionGrid> numeric_budget) {
    grid.validate();
    require_valid(model);
    SummaryCurve curve;
    curve.grid = grid;
    curve.statistic = Statistic::GTheoretical;
    curve.provenance = model_tag(model);
    curve.values.assign(grid.size(), 0.0);
    const std::size_t nt = grid.temporal.size();

    if (model.has_closed_form()) {
        const double c0 = intensity(model);
        parallel_for(grid.size(), [&](std::size_t k) {
            const double r = grid.spatial[k / nt];
            const double t = grid.temporal[k % nt];
            if (r == 0.0 && t == 0.0) return;
            const double rr = kernel_value_unchecked(model, r, t) / c0;
            curve.values[k] = std::clamp(1.0 - rr * rr, 0.0, 1.0);
        });
        return curve;
    }
    if (!numeric_budget) {
        throw Unsupported(
            "pcf_theoretical: Fuentes family with 0 < epsilon < 1 needs a numeric-inversion budget");
    }
    const auto& params = *model.get_if<FuentesSpectralParams>();
    const NumericKernelValue origin = kernel_value_numeric(params, {0.0, 0.0}, 0.0, *numeric_budget);
    curve.errors.assign(grid.size(), 0.0);
    parallel_for(grid.size(), [&](std::size_t k) {
        const double r = grid.spatial[k / nt];
        const double t = grid.temporal[k % nt];
        if (r == 0.0 && t == 0.0) return;
        const NumericKernelValue v = kernel_value_numeric(params, {r, 0.0}, t, *numeric_budget);
        const double rr = v.value / origin.value;
        curve.values[k] = std::clamp(1.0 - rr * rr, 0.0, 1.0);
        // First-order propagation of both inversion errors into g.
        curve.errors[k] = 2.0 * std::abs(rr) *
                          (v.error_estimate + std::abs(rr) * origin.error_estimate) / origin.value;
    });
    return curve;
}

SummaryCurve kfun_theoretical(const KernelModel& model, const LagGrid& grid, KMethod method,
                              const KQuadratureOptions& options) {
    grid.validate();
    require_valid(model);
    SummaryCurve curve;
    curve.grid = grid;
    curve.statistic = Statistic::KTheoretical;
    curve.provenance = model_tag(model);
    curve.values.assign(grid.size(), 0.0);
    const std::size_t nt = grid.temporal.size();

    if (method == KMethod::ClosedForm) {
        const auto* p = model.get_if<SeparableGaussExpParams>();
        if (p == nullptr) {
            throw Unsupported("kfun_theoretical: closed form is only available for sep_gauss_exp");
        }
        const double as2 = p->alpha_s * p->alpha_s;
        for (std::size_t k = 0; k < grid.size(); ++k) {
            const double u = grid.spatial[k / nt];
            const double t = grid.temporal[k % nt];
            curve.values[k] = kPi * u * u * t - kPi * as2 * p->alpha_t / 4.0 *
                                                     std::expm1(-2.0 * u * u / as2) *
                                                     std::expm1(-2.0 * t / p->alpha_t);
        }
        return curve;
    }

    if (!model.has_closed_form()) {
        throw Unsupported(
            "kfun_theoretical: quadrature needs a closed-form kernel (Fuentes 0 < eps < 1 is not "
            "supported)");
    }
    const double c0 = intensity(model);
    const auto deficit = [&](double r, double s) {
        const double rr = kernel_value_unchecked(model, r, s) / c0;
        return 2.0 * kPi * rr * rr * r;
    };
    curve.errors.assign(grid.size(), 0.0);
    parallel_for(grid.size(), [&](std::size_t k) {
        const double u = grid.spatial[k / nt];
        const double t = grid.temporal[k % nt];
        const double poisson = kPi * u * u * t;
        if (poisson == 0.0) return;
        const double tol = std::min(options.abs_tol, 0.5e-8 * poisson);
        const quad::Estimate e =
            quad::integrate_rectangle(deficit, 0.0, u, 0.0, t, tol, 0.0, options.max_panels);
        curve.values[k] = poisson - e.value;
        curve.errors[k] = e.error;
    });
    return curve;
}

OrderingReport pcf_ordering_check(const MaternSeparableParams& sep,
                                  const MaternNonSeparableParams& nonsep, const LagGrid& grid,
                                  double tolerance) {
    grid.validate();
    if (sep.alpha_s != nonsep.alpha_s || sep.alpha_t != nonsep.alpha_t) {
        throw InvalidParameter("pcf_ordering_check: alpha_s and alpha_t must match");
    }
    const KernelModel ms(sep);
    const KernelModel mn(nonsep);
    OrderingReport rep;
    rep.grid = grid;
    rep.ordered.assign(grid.size(), 1);
    rep.max_excess = -std::numeric_limits<double>::infinity();
    const std::size_t nt = grid.temporal.size();
    for (std::size_t k = 0; k < grid.size(); ++k) {
        const double r = grid.spatial[k / nt];
        const double t = grid.temporal[k % nt];
        const double excess = pcf_value(ms, r, t) - pcf_value(mn, r, t);
        rep.max_excess = std::max(rep.max_excess, excess);
        if (excess > tolerance) {
            rep.ordered[k] = 0;
            rep.all_ordered = false;
            ++rep.violations;
        }
    }
    return rep;
}

void write_curve_csv(std::ostream& os, const SummaryCurve& curve) {
    const std::size_t nt = curve.grid.temporal.size();
    const std::string stat(statistic_name(curve.statistic));
    std::string out = "u,t,value,statistic\n";
    for (std::size_t k = 0; k < curve.values.size(); ++k) {
        append_number(out, curve.grid.spatial[k / nt]);
        out += ',';
        append_number(out, curve.grid.temporal[k % nt]);
        out += ',';
        append_number(out, curve.values[k]);
        out += ',';
        out += stat;
        out += '\n';
    }
    os << out;
}

nlohmann::json to_json(const LagGrid& grid) {
    return {{"spatial", grid.spatial}, {"temporal", grid.temporal}};
}

namespace {

std::vector<double> axis_from_json(const nlohmann::json& j, const char* name) {
    if (j.is_array()) return j.get<std::vector<double>>();
    if (j.is_object()) {
        const double first = j.at("first").get<double>();
        const double step = j.at("step").get<double>();
        const auto n = j.at("n").get<std::size_t>();
        std::vector<double> axis;
        for (std::size_t i = 0; i < n; ++i) axis.push_back(first + step * static_cast<double>(i));
        return axis;
    }
    throw InvalidParameter(std::string("lag grid: '") + name +
                           "' must be an array or {first, step, n}");
}

}  // namespace

LagGrid lag_grid_from_json(const nlohmann::json& j) {
    LagGrid g;
    try {
        g.spatial = axis_from_json(j.at("spatial"), "spatial");
        g.temporal = axis_from_json(j.at("temporal"), "temporal");
    } catch (const nlohmann::json::exception& e) {
        throw InvalidParameter(std::string("lag grid: ") + e.what());
    }
    g.validate();
    return g;
}

nlohmann::json to_json(const SummaryCurve& curve) {
    nlohmann::json j;
    j["grid"] = to_json(curve.grid);
    j["statistic"] = std::string(statistic_name(curve.statistic));
    j["provenance"] = curve.provenance;
    const std::size_t nt = curve.grid.temporal.size();
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t i = 0; i < curve.grid.spatial.size(); ++i) {
        rows.push_back(std::vector<double>(curve.values.begin() + static_cast<std::ptrdiff_t>(i * nt),
                                           curve.values.begin() + static_cast<std::ptrdiff_t>((i + 1) * nt)));
    }
    j["values"] = rows;
    if (!curve.errors.empty()) j["errors"] = curve.errors;
    return j;
}

SummaryCurve curve_from_json(const nlohmann::json& j) {
    SummaryCurve c;
    c.grid = lag_grid_from_json(j.at("grid"));
    c.statistic = statistic_from_name(j.at("statistic").get<std::string>());
    c.provenance = j.value("provenance", "");
    const auto& rows = j.at("values");
    if (rows.size() != c.grid.spatial.size()) {
        throw InvalidParameter("summary curve: value rows do not match the spatial axis");
    }
    for (const auto& row : rows) {
        const auto v = row.get<std::vector<double>>();
        if (v.size() != c.grid.temporal.size()) {
            throw InvalidParameter("summary curve: value columns do not match the temporal axis");
        }
        c.values.insert(c.values.end(), v.begin(), v.end());
    }
    if (j.contains("errors")) c.errors = j.at("errors").get<std::vector<double>>();
    return c;
}

}  // namespace stdpp
