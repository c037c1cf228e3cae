#pragma once

#include <array>
#include <string>
#include <string_view>
#include <variant>

#include "json.hpp"

namespace stdpp {

/// Separable Gaussian (space) x exponential (time) kernel
///   C(u, t) = rho sigma2_s sigma2_t exp(-|u|^2 / alpha_s^2 - |t| / alpha_t).
/// alpha_s and alpha_t are ranges: larger means longer correlation.
struct SeparableGaussExpParams {
    double rho = 0.0;
    double sigma2_s = 1.0;
    double sigma2_t = 1.0;
    double alpha_s = 1.0;
    double alpha_t = 1.0;
};

/// Fuentes spectral family at epsilon = 1, nu = 2 (product of Matern
/// densities). Here alpha_s and alpha_t are *inverse* ranges.
struct MaternSeparableParams {
    double gamma = 0.0;
    double alpha_s = 1.0;
    double alpha_t = 1.0;
};

/// Fuentes spectral family at epsilon = 0, nu = 2; the kernel is an
/// exponential in the scaled space-time distance.
struct MaternNonSeparableParams {
    double gamma = 0.0;
    double alpha_s = 1.0;
    double alpha_t = 1.0;
};

/// General Fuentes spectral density
///   phi(w, tau) = gamma (as^2 at^2 + at^2 |w|^2 + as^2 tau^2 + eps |w|^2 tau^2)^(-nu).
/// Closed-form kernels exist for eps in {0, 1}; otherwise use
/// kernel_value_numeric.
struct FuentesSpectralParams {
    double gamma = 0.0;
    double alpha_s = 1.0;
    double alpha_t = 1.0;
    double nu = 2.0;
    double epsilon = 0.0;
};

enum class Family { SepGaussExp, MaternSep, MaternNonSep, Fuentes };

std::string_view family_name(Family family);
/// Throws InvalidParameter for an unknown tag.
Family family_from_name(std::string_view name);

/// Immutable tagged parameterization. Construction checks that parameters are
/// finite and in range; the existence condition is checked separately by
/// validate_existence so that invalid models can still be reported on.
class KernelModel {
public:
    using Params = std::variant<SeparableGaussExpParams, MaternSeparableParams,
                                MaternNonSeparableParams, FuentesSpectralParams>;

    KernelModel(SeparableGaussExpParams p);
    KernelModel(MaternSeparableParams p);
    KernelModel(MaternNonSeparableParams p);
    KernelModel(FuentesSpectralParams p);

    [[nodiscard]] Family family() const { return static_cast<Family>(params_.index()); }
    [[nodiscard]] const Params& params() const { return params_; }

    template <class P>
    [[nodiscard]] const P* get_if() const {
        return std::get_if<P>(&params_);
    }

    /// Spatial and temporal "alpha" parameters in the family's own convention.
    [[nodiscard]] double alpha_s() const;
    [[nodiscard]] double alpha_t() const;

    /// True when a closed-form kernel is available (everything except Fuentes
    /// with 0 < epsilon < 1).
    [[nodiscard]] bool has_closed_form() const;

private:
    Params params_;
};

using SpatialVector = std::array<double, 2>;

struct ExistenceReport {
    bool valid = false;
    double phi_max = 0.0;    // phi(0, 0)
    double rho = 0.0;        // the family's intensity parameter
    double rho_max = 0.0;    // supremum of rho keeping phi(0, 0) < 1
    double intensity = 0.0;  // C(0, 0)
};

ExistenceReport validate_existence(const KernelModel& model);

/// Throws InvalidParameter unless validate_existence(model).valid.
void require_valid(const KernelModel& model);

/// Intensity C(0, 0). For Fuentes with 0 < eps < 1 this is a 1-D quadrature.
double intensity(const KernelModel& model);

/// Stationary isotropic kernel C(u, t).
double kernel_value(const KernelModel& model, SpatialVector u, double t);
double kernel_value_radial(const KernelModel& model, double r, double t);
/// Same as kernel_value_radial without the existence check, for inner loops
/// over a model that has already been validated.
double kernel_value_unchecked(const KernelModel& model, double r, double t);

/// C(r, t) / C(0, 0); the pair correlation is 1 - correlation^2.
double correlation(const KernelModel& model, double r, double t);

double spectral_density(const KernelModel& model, SpatialVector omega, double tau);
double spectral_density_radial(const KernelModel& model, double omega_norm, double tau);

/// Discretisation controls for kernel_value_numeric. The spatial frequency
/// integral is done exactly (Hankel transform of the Matern factor); the
/// temporal frequency axis is integrated with composite Gauss-Kronrod on
/// [0, tau_cutoff] plus an asymptotic tail, and the error is estimated by
/// doubling the cutoff at fixed panel width.
struct InversionGrid {
    double tau_cutoff = 0.0;  // 0 selects 32 alpha_t
    std::size_t panels = 256;
    double tolerance = 1e-6;  // relative, on the returned value
};

struct NumericKernelValue {
    double value = 0.0;
    double error_estimate = 0.0;
    double tau_cutoff = 0.0;
    std::size_t panels = 0;
};

/// Inverse Fourier transform of the Fuentes spectral density at (u, t).
/// Throws GridTooCoarse when the error estimate exceeds
/// grid.tolerance * |value|.
NumericKernelValue kernel_value_numeric(const FuentesSpectralParams& params, SpatialVector u,
                                        double t, const InversionGrid& grid = {});

nlohmann::json to_json(const KernelModel& model);
/// Throws InvalidParameter on a missing/unknown family or malformed fields.
KernelModel model_from_json(const nlohmann::json& j);

}  // namespace stdpp
