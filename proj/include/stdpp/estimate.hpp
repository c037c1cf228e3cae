#pragma once

#include <cstdint>
#include <optional>
#include <span>

#include "json.hpp"
#include "stdpp/kernels.hpp"
#include "stdpp/moments.hpp"
#include "stdpp/pattern.hpp"

namespace stdpp {

/// n / |W|.
double estimate_intensity(const PointPattern& pattern);
/// Total count over total volume.
double estimate_intensity(std::span<const PointPattern> patterns);

/// Translation-corrected K estimate normalized by n(n-1)/|W|^2. The time lag
/// is one-sided, so a Poisson pattern gives pi u^2 t in expectation. Lags
/// must not exceed half of the window extents.
SummaryCurve estimate_kfun(const PointPattern& pattern, const LagGrid& grid);
/// Replicates pooled with weights n_k (n_k - 1).
SummaryCurve estimate_kfun(std::span<const PointPattern> patterns, const LagGrid& grid);

struct BandwidthSpec {
    double spatial = 0.0;
    double temporal = 0.0;

    /// Both positive and below half of the corresponding window extent.
    void validate(const Box& window) const;
};

/// 0.15 / rho_hat^(1/3) per axis, capped at a quarter of the window extent.
BandwidthSpec default_bandwidth(const PointPattern& pattern);

/// Product-Epanechnikov pcf estimate with translation weights. The kernel
/// mass falling below lag 0 is renormalized, so small-lag cells are not
/// biased toward 0 by the boundary.
SummaryCurve estimate_pcf(const PointPattern& pattern, const LagGrid& grid,
                          std::optional<BandwidthSpec> bw = std::nullopt);
SummaryCurve estimate_pcf(std::span<const PointPattern> patterns, const LagGrid& grid,
                          std::optional<BandwidthSpec> bw = std::nullopt);

enum class ContrastStatistic { K, G };

struct ParameterBounds {
    double alpha_s_min = 0.0;
    double alpha_s_max = 0.0;
    double alpha_t_min = 0.0;
    double alpha_t_max = 0.0;

    void validate() const;
};

struct FitOptions {
    ContrastStatistic statistic = ContrastStatistic::K;
    double exponent = 0.5;
    std::size_t max_evaluations = 2000;
    std::uint64_t seed = 1;
    /// Only used with ContrastStatistic::G; defaults per pattern otherwise.
    std::optional<BandwidthSpec> bandwidth;
};

/// Discretized contrast sum over the grid of (T_hat^q - T_theta^q)^2 for
/// (alpha_s, alpha_t), with rho plugged in from the patterns. Infeasible
/// parameters give +infinity.
class MinContrastObjective {
public:
    MinContrastObjective(std::span<const PointPattern> patterns, Family family, LagGrid grid,
                         const FitOptions& options = {});

    [[nodiscard]] double operator()(double alpha_s, double alpha_t) const;
    /// The model with the given ranges and the plugged-in intensity; throws
    /// InvalidParameter when it does not exist.
    [[nodiscard]] KernelModel model_at(double alpha_s, double alpha_t) const;
    [[nodiscard]] bool feasible(double alpha_s, double alpha_t) const;
    [[nodiscard]] const SummaryCurve& empirical() const { return empirical_; }
    [[nodiscard]] double rho_hat() const { return rho_; }

private:
    Family family_;
    LagGrid grid_;
    FitOptions options_;
    double rho_ = 0.0;
    SummaryCurve empirical_;
};

struct FitResult {
    KernelModel model;
    double contrast = 0.0;
    std::size_t iterations = 0;
    std::size_t evaluations = 0;
    bool converged = false;
    ParameterBounds bounds_used;
};

/// Nelder-Mead in log-parameters from the best of the box vertices, the
/// centre and seeded random points, followed by a restart at the box centre.
/// Throws InfeasibleBounds when no vertex of the box gives a valid model.
FitResult fit_min_contrast(std::span<const PointPattern> patterns, Family family,
                           const ParameterBounds& bounds, const LagGrid& grid,
                           const FitOptions& options = {});
FitResult fit_min_contrast(const PointPattern& pattern, Family family,
                           const ParameterBounds& bounds, const LagGrid& grid,
                           const FitOptions& options = {});

nlohmann::json to_json(const FitResult& result);
nlohmann::json to_json(const ParameterBounds& bounds);
ParameterBounds bounds_from_json(const nlohmann::json& j);

}  // namespace stdpp
