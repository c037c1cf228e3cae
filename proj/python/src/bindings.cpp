#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <optional>
#include <string>
#include <vector>

#include "stdpp/error.hpp"
#include "stdpp/estimate.hpp"
#include "stdpp/kernels.hpp"
#include "stdpp/moments.hpp"
#include "stdpp/pattern.hpp"
#include "stdpp/simulate.hpp"
#include "stdpp/version.hpp"

namespace py = pybind11;
using namespace stdpp;

namespace {

using Array = py::array_t<double, py::array::c_style | py::array::forcecast>;

// Models, grids and results cross the boundary as JSON text; the Python
// package converts to and from dicts.
KernelModel model_of(const std::string& text) { return model_from_json(nlohmann::json::parse(text)); }

Box box_of(const std::tuple<double, double, double>& w) {
    Box b{std::get<0>(w), std::get<1>(w), std::get<2>(w)};
    b.validate();
    return b;
}

LagGrid grid_of(const std::vector<double>& spatial, const std::vector<double>& temporal) {
    LagGrid g{spatial, temporal};
    g.validate();
    return g;
}

Array points_array(const PointPattern& p) {
    Array out({static_cast<py::ssize_t>(p.points.size()), py::ssize_t{3}});
    auto m = out.mutable_unchecked<2>();
    for (std::size_t i = 0; i < p.points.size(); ++i) {
        m(i, 0) = p.points[i].x;
        m(i, 1) = p.points[i].y;
        m(i, 2) = p.points[i].t;
    }
    return out;
}

PointPattern pattern_of(const Array& a, const Box& window) {
    if (a.ndim() != 2 || (a.shape(0) > 0 && a.shape(1) != 3)) {
        throw InvalidParameter("points must be an (n, 3) array of x, y, t");
    }
    PointPattern p;
    p.window = window;
    auto r = a.unchecked<2>();
    p.points.reserve(a.shape(0));
    for (py::ssize_t i = 0; i < a.shape(0); ++i) p.points.push_back({r(i, 0), r(i, 1), r(i, 2)});
    p.validate();
    return p;
}

std::vector<PointPattern> patterns_of(const std::vector<Array>& arrays, const Box& window) {
    std::vector<PointPattern> out;
    out.reserve(arrays.size());
    for (const auto& a : arrays) out.push_back(pattern_of(a, window));
    return out;
}

Array curve_values(const SummaryCurve& c) {
    Array out({static_cast<py::ssize_t>(c.grid.spatial.size()),
               static_cast<py::ssize_t>(c.grid.temporal.size())});
    std::copy(c.values.begin(), c.values.end(), out.mutable_data());
    return out;
}

py::list pattern_list(const std::vector<PointPattern>& ps) {
    py::list out;
    for (const auto& p : ps) out.append(points_array(p));
    return out;
}

}  // namespace

PYBIND11_MODULE(_stdpp, m) {
    m.doc() = "Spatio-temporal determinantal point processes (native core)";

    auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
    py::register_exception<InvalidParameter>(m, "InvalidParameter", PyExc_ValueError);
    py::register_exception<DomainError>(m, "DomainError", PyExc_ValueError);
    py::register_exception<ParseError>(m, "ParseError", PyExc_ValueError);
    py::register_exception<Unsupported>(m, "Unsupported", base.ptr());
    py::register_exception<SizeLimitError>(m, "SizeLimitError", base.ptr());
    py::register_exception<GridTooCoarse>(m, "GridTooCoarse", base.ptr());
    py::register_exception<TruncationError>(m, "TruncationError", base.ptr());
    py::register_exception<RejectionBudgetExceeded>(m, "RejectionBudgetExceeded", base.ptr());
    py::register_exception<InfeasibleBounds>(m, "InfeasibleBounds", base.ptr());

    m.def("version", [] { return std::string(version()); });

    m.def("normalize_model", [](const std::string& model) { return to_json(model_of(model)).dump(); },
          py::arg("model_json"));

    m.def(
        "validate",
        [](const std::string& model) {
            const ExistenceReport r = validate_existence(model_of(model));
            py::dict d;
            d["valid"] = r.valid;
            d["rho"] = r.rho;
            d["rho_max"] = r.rho_max;
            d["phi_max"] = r.phi_max;
            d["intensity"] = r.intensity;
            return d;
        },
        py::arg("model_json"));

    m.def(
        "kernel_value",
        [](const std::string& model, double r, double t) { return kernel_value_radial(model_of(model), r, t); },
        py::arg("model_json"), py::arg("r"), py::arg("t"));

    m.def(
        "spectral_density",
        [](const std::string& model, double omega, double tau) {
            return spectral_density_radial(model_of(model), omega, tau);
        },
        py::arg("model_json"), py::arg("omega"), py::arg("tau"));

    m.def(
        "product_density",
        [](const std::string& model, const Array& points) {
            const KernelModel km = model_of(model);
            std::vector<SpaceTimePoint> pts;
            if (points.ndim() != 2 || points.shape(1) != 3) throw InvalidParameter("points must be (n, 3)");
            auto r = points.unchecked<2>();
            for (py::ssize_t i = 0; i < points.shape(0); ++i) pts.push_back({r(i, 0), r(i, 1), r(i, 2)});
            return product_density(km, pts);
        },
        py::arg("model_json"), py::arg("points"));

    m.def(
        "pcf",
        [](const std::string& model, const std::vector<double>& u, const std::vector<double>& t) {
            const KernelModel km = model_of(model);
            const LagGrid g = grid_of(u, t);
            SummaryCurve c;
            {
                py::gil_scoped_release release;
                c = pcf_theoretical(km, g, InversionGrid{});
            }
            return curve_values(c);
        },
        py::arg("model_json"), py::arg("spatial"), py::arg("temporal"));

    m.def(
        "kfun",
        [](const std::string& model, const std::vector<double>& u, const std::vector<double>& t,
           const std::string& method) {
            if (method != "quadrature" && method != "closed_form") {
                throw InvalidParameter("method must be 'quadrature' or 'closed_form'");
            }
            const KernelModel km = model_of(model);
            const LagGrid g = grid_of(u, t);
            SummaryCurve c;
            {
                py::gil_scoped_release release;
                c = kfun_theoretical(km, g, method == "closed_form" ? KMethod::ClosedForm : KMethod::Quadrature);
            }
            return curve_values(c);
        },
        py::arg("model_json"), py::arg("spatial"), py::arg("temporal"), py::arg("method") = "quadrature");

    m.def(
        "suggest_cutoff",
        [](const std::string& model, const std::tuple<double, double, double>& window, double tol,
           double enlargement) {
            const ModeCutoff c = suggest_cutoff(model_of(model), box_of(window), tol, enlargement);
            return std::make_tuple(c.x, c.y, c.t);
        },
        py::arg("model_json"), py::arg("window"), py::arg("tolerance") = kDefaultTruncationTolerance,
        py::arg("enlargement") = kDefaultEnlargement);

    m.def(
        "simulate",
        [](const std::string& model, const std::tuple<double, double, double>& window, std::uint64_t seed,
           std::size_t replicates, std::optional<std::tuple<int, int, int>> cutoff, double tol,
           double enlargement) {
            const KernelModel km = model_of(model);
            const Box w = box_of(window);
            if (replicates < 1) throw InvalidParameter("replicates must be >= 1");
            std::vector<PointPattern> ps;
            {
                py::gil_scoped_release release;
                const ModeCutoff c = cutoff ? ModeCutoff{std::get<0>(*cutoff), std::get<1>(*cutoff),
                                                         std::get<2>(*cutoff)}
                                            : suggest_cutoff(km, w, tol, enlargement);
                const SpectralApproximation approx = build_spectral_approx(km, w, c, tol, enlargement);
                ps = sample_stdpp_replicates(approx, seed, replicates);
            }
            return pattern_list(ps);
        },
        py::arg("model_json"), py::arg("window"), py::arg("seed"), py::arg("replicates") = 1,
        py::arg("cutoff") = py::none(), py::arg("tolerance") = kDefaultTruncationTolerance,
        py::arg("enlargement") = kDefaultEnlargement);

    m.def(
        "simulate_poisson",
        [](double rho, const std::tuple<double, double, double>& window, std::uint64_t seed,
           std::size_t replicates) {
            const Box w = box_of(window);
            if (replicates < 1) throw InvalidParameter("replicates must be >= 1");
            return pattern_list(sample_poisson_replicates(rho, w, seed, replicates));
        },
        py::arg("rho"), py::arg("window"), py::arg("seed"), py::arg("replicates") = 1);

    m.def(
        "estimate_intensity",
        [](const std::vector<Array>& patterns, const std::tuple<double, double, double>& window) {
            return estimate_intensity(patterns_of(patterns, box_of(window)));
        },
        py::arg("patterns"), py::arg("window"));

    m.def(
        "estimate_kfun",
        [](const std::vector<Array>& patterns, const std::tuple<double, double, double>& window,
           const std::vector<double>& u, const std::vector<double>& t) {
            const auto ps = patterns_of(patterns, box_of(window));
            const LagGrid g = grid_of(u, t);
            SummaryCurve c;
            {
                py::gil_scoped_release release;
                c = estimate_kfun(ps, g);
            }
            return curve_values(c);
        },
        py::arg("patterns"), py::arg("window"), py::arg("spatial"), py::arg("temporal"));

    m.def(
        "estimate_pcf",
        [](const std::vector<Array>& patterns, const std::tuple<double, double, double>& window,
           const std::vector<double>& u, const std::vector<double>& t,
           std::optional<std::tuple<double, double>> bandwidth) {
            const auto ps = patterns_of(patterns, box_of(window));
            const LagGrid g = grid_of(u, t);
            std::optional<BandwidthSpec> bw;
            if (bandwidth) bw = BandwidthSpec{std::get<0>(*bandwidth), std::get<1>(*bandwidth)};
            SummaryCurve c;
            {
                py::gil_scoped_release release;
                c = estimate_pcf(ps, g, bw);
            }
            return curve_values(c);
        },
        py::arg("patterns"), py::arg("window"), py::arg("spatial"), py::arg("temporal"),
        py::arg("bandwidth") = py::none());

    m.def(
        "fit",
        [](const std::vector<Array>& patterns, const std::tuple<double, double, double>& window,
           const std::string& family, const std::tuple<double, double, double, double>& bounds,
           const std::vector<double>& u, const std::vector<double>& t, const std::string& statistic,
           std::size_t max_evaluations, std::uint64_t seed) {
            const auto ps = patterns_of(patterns, box_of(window));
            const LagGrid g = grid_of(u, t);
            if (statistic != "K" && statistic != "g") throw InvalidParameter("statistic must be 'K' or 'g'");
            const ParameterBounds b{std::get<0>(bounds), std::get<1>(bounds), std::get<2>(bounds),
                                    std::get<3>(bounds)};
            FitOptions opts;
            opts.statistic = statistic == "K" ? ContrastStatistic::K : ContrastStatistic::G;
            opts.max_evaluations = max_evaluations;
            opts.seed = seed;
            const Family fam = family_from_name(family);
            nlohmann::json out;
            {
                py::gil_scoped_release release;
                out = to_json(fit_min_contrast(ps, fam, b, g, opts));
            }
            return out.dump();
        },
        py::arg("patterns"), py::arg("window"), py::arg("family"), py::arg("bounds"), py::arg("spatial"),
        py::arg("temporal"), py::arg("statistic") = "K", py::arg("max_evaluations") = 2000,
        py::arg("seed") = 1);
}
