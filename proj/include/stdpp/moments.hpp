#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "stdpp/kernels.hpp"
#include "stdpp/pattern.hpp"

namespace stdpp {

/// Evaluation grid of spatial distances and temporal lags. Both axes are
/// strictly ascending, start at >= 0, and are finite.
struct LagGrid {
    std::vector<double> spatial;
    std::vector<double> temporal;

    void validate() const;
    [[nodiscard]] std::size_t size() const { return spatial.size() * temporal.size(); }

    /// n equally spaced lags first, first + step, ... on each axis.
    static LagGrid uniform(double first, double step, std::size_t n);
    static LagGrid uniform(double s_first, double s_step, std::size_t ns, double t_first,
                           double t_step, std::size_t nt);
};

enum class Statistic { GTheoretical, KTheoretical, GEmpirical, KEmpirical };

std::string_view statistic_name(Statistic s);
Statistic statistic_from_name(std::string_view name);

/// Values on a LagGrid, row-major with the spatial lag as the slow index.
struct SummaryCurve {
    LagGrid grid;
    std::vector<double> values;
    /// Absolute error estimates per cell; empty when not applicable.
    std::vector<double> errors;
    Statistic statistic = Statistic::GTheoretical;
    std::string provenance;

    [[nodiscard]] double at(std::size_t i_space, std::size_t j_time) const {
        return values[i_space * grid.temporal.size() + j_time];
    }
    double& at(std::size_t i_space, std::size_t j_time) {
        return values[i_space * grid.temporal.size() + j_time];
    }
};

/// Determinant of the kernel matrix [C(x_i - x_j)], 1 <= n <= 12. Negative
/// round-off within 1e-9 rho^n is clamped to 0.
double product_density(const KernelModel& model, std::span<const SpaceTimePoint> points);

/// Theoretical pair correlation g = 1 - (C / C(0,0))^2. The Fuentes family
/// with 0 < eps < 1 needs a numeric-inversion budget.
SummaryCurve pcf_theoretical(const KernelModel& model, const LagGrid& grid,
                             std::optional<InversionGrid> numeric_budget = std::nullopt);

/// Pair correlation at a single lag (no validity check, closed forms only).
double pcf_value(const KernelModel& model, double r, double t);

enum class KMethod { ClosedForm, Quadrature };

struct KQuadratureOptions {
    double abs_tol = 1e-10;
    std::size_t max_panels = std::size_t{1} << 14;
};

/// Space-time K-function K(u, t) = 2 pi \int_0^t \int_0^u g(u', t') u' du' dt'.
/// The closed form exists for the separable Gauss-exp family only; quadrature
/// works for every closed-form kernel and fills SummaryCurve::errors.
SummaryCurve kfun_theoretical(const KernelModel& model, const LagGrid& grid,
                              KMethod method = KMethod::Quadrature,
                              const KQuadratureOptions& options = {});

struct OrderingReport {
    LagGrid grid;
    /// Per cell (same layout as SummaryCurve): g_sep <= g_nonsep + tolerance.
    std::vector<char> ordered;
    bool all_ordered = true;
    /// max over cells of g_sep - g_nonsep (negative when strictly ordered).
    double max_excess = 0.0;
    std::size_t violations = 0;
};

/// Compares the eps = 1 and eps = 0 Matern pcfs cell by cell. The alpha
/// parameters must match exactly; gamma does not enter g.
OrderingReport pcf_ordering_check(const MaternSeparableParams& sep,
                                  const MaternNonSeparableParams& nonsep, const LagGrid& grid,
                                  double tolerance = 1e-12);

/// "u,t,value,statistic" rows, one per grid cell.
void write_curve_csv(std::ostream& os, const SummaryCurve& curve);
nlohmann::json to_json(const SummaryCurve& curve);
SummaryCurve curve_from_json(const nlohmann::json& j);
nlohmann::json to_json(const LagGrid& grid);
LagGrid lag_grid_from_json(const nlohmann::json& j);

}  // namespace stdpp
