#include "stdpp/kernels.hpp"

#include <cmath>
#include <numbers>
#include <optional>
#include <set>
#include <sstream>

#include "stdpp/error.hpp"
#include "stdpp/quadrature.hpp"
#include "stdpp/special_functions.hpp"

namespace stdpp {
namespace {

constexpr double kPi = std::numbers::pi;

template <class... Ts>
struct Overloaded : Ts... {
    using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_positive(double v, const char* name) {
    if (!std::isfinite(v) || v <= 0.0) {
        std::ostringstream os;
        os << name << " must be finite and strictly positive (got " << v << ")";
        throw InvalidParameter(os.str());
    }
}

double sq(double x) { return x * x; }

// Closed-form Fuentes kernels for general nu.
double fuentes_sep_kernel(const FuentesSpectralParams& p, double r, double t) {
    const double nu = p.nu;
    const double gnu = std::tgamma(nu);
    const double spatial = 2.0 * kPi * special::x_pow_bessel_k(nu - 1.0, 2.0 * kPi * p.alpha_s * r) /
                           (std::pow(2.0, nu - 1.0) * std::pow(p.alpha_s, 2.0 * nu - 2.0) * gnu);
    const double temporal =
        2.0 * std::sqrt(kPi) *
        special::x_pow_bessel_k(nu - 0.5, 2.0 * kPi * p.alpha_t * std::abs(t)) /
        (std::pow(2.0, nu - 0.5) * std::pow(p.alpha_t, 2.0 * nu - 1.0) * gnu);
    return p.gamma * spatial * temporal;
}

double fuentes_nonsep_kernel(const FuentesSpectralParams& p, double r, double t) {
    const double nu = p.nu;
    const double z = 2.0 * kPi * std::sqrt(sq(p.alpha_s * r) + sq(p.alpha_t * t));
    const double prefactor = p.gamma * std::pow(p.alpha_s, 2.0 - 2.0 * nu) *
                             std::pow(p.alpha_t, 1.0 - 2.0 * nu) * 2.0 * std::pow(kPi, 1.5) /
                             (std::tgamma(nu) * std::pow(2.0, nu - 1.5));
    return prefactor * special::x_pow_bessel_k(nu - 1.5, z);
}

// Intensity of the Fuentes family for any eps: the spatial frequency integral
// is done in closed form, leaving
//   rho = 2 gamma pi / (nu - 1) as^(2 - 2 nu) \int_0^inf (at^2 + tau^2)^(1 - nu) / (at^2 + eps tau^2) dtau.
double fuentes_intensity_quadrature(const FuentesSpectralParams& p) {
    const double at2 = sq(p.alpha_t);
    const auto integrand = [&](double tau) {
        const double tau2 = tau * tau;
        return std::pow(at2 + tau2, 1.0 - p.nu) / (at2 + p.epsilon * tau2);
    };
    const quad::Estimate e = quad::integrate_to_infinity(integrand, 0.0, 0.0, 1e-13);
    return 2.0 * p.gamma * kPi / (p.nu - 1.0) * std::pow(p.alpha_s, 2.0 - 2.0 * p.nu) * e.value;
}

double fuentes_phi(const FuentesSpectralParams& p, double w2, double tau2) {
    const double as2 = sq(p.alpha_s);
    const double at2 = sq(p.alpha_t);
    return p.gamma * std::pow(as2 * at2 + at2 * w2 + as2 * tau2 + p.epsilon * w2 * tau2, -p.nu);
}

double fuentes_phi_max(const FuentesSpectralParams& p) {
    return p.gamma * std::pow(sq(p.alpha_s) * sq(p.alpha_t), -p.nu);
}

double fuentes_gamma_bound(double alpha_s, double alpha_t, double nu) {
    return std::pow(sq(alpha_s) * sq(alpha_t), nu);
}

bool fuentes_closed_form(const FuentesSpectralParams& p) {
    return p.epsilon == 0.0 || p.epsilon == 1.0;
}

double raw_kernel(const KernelModel& model, double r, double t) {
    return std::visit(
        Overloaded{
            [&](const SeparableGaussExpParams& p) {
                return p.rho * p.sigma2_s * p.sigma2_t *
                       std::exp(-sq(r) / sq(p.alpha_s) - std::abs(t) / p.alpha_t);
            },
            [&](const MaternSeparableParams& p) {
                const double x = 2.0 * kPi * p.alpha_t * std::abs(t);
                return p.gamma * kPi * kPi / (2.0 * sq(p.alpha_s) * std::pow(p.alpha_t, 3)) *
                       (1.0 + x) * std::exp(-x) *
                       special::x_times_k1(2.0 * kPi * p.alpha_s * r);
            },
            [&](const MaternNonSeparableParams& p) {
                return p.gamma * kPi * kPi / (sq(p.alpha_s) * std::pow(p.alpha_t, 3)) *
                       std::exp(-2.0 * kPi * std::sqrt(sq(p.alpha_t * t) + sq(p.alpha_s * r)));
            },
            [&](const FuentesSpectralParams& p) {
                if (p.epsilon == 1.0) return fuentes_sep_kernel(p, r, t);
                if (p.epsilon == 0.0) return fuentes_nonsep_kernel(p, r, t);
                throw Unsupported(
                    "kernel_value: Fuentes family with 0 < epsilon < 1 has no closed form; "
                    "use kernel_value_numeric");
            },
        },
        model.params());
}

}  // namespace

std::string_view family_name(Family family) {
    switch (family) {
        case Family::SepGaussExp: return "sep_gauss_exp";
        case Family::MaternSep: return "matern_sep";
        case Family::MaternNonSep: return "matern_nonsep";
        case Family::Fuentes: return "fuentes";
    }
    return "unknown";
}

Family family_from_name(std::string_view name) {
    if (name == "sep_gauss_exp") return Family::SepGaussExp;
    if (name == "matern_sep") return Family::MaternSep;
    if (name == "matern_nonsep") return Family::MaternNonSep;
    if (name == "fuentes") return Family::Fuentes;
    throw InvalidParameter("unknown model family '" + std::string(name) + "'");
}

KernelModel::KernelModel(SeparableGaussExpParams p) : params_(p) {
    require_positive(p.rho, "rho");
    require_positive(p.sigma2_s, "sigma2_s");
    require_positive(p.sigma2_t, "sigma2_t");
    require_positive(p.alpha_s, "alpha_s");
    require_positive(p.alpha_t, "alpha_t");
}

KernelModel::KernelModel(MaternSeparableParams p) : params_(p) {
    require_positive(p.gamma, "gamma");
    require_positive(p.alpha_s, "alpha_s");
    require_positive(p.alpha_t, "alpha_t");
}

KernelModel::KernelModel(MaternNonSeparableParams p) : params_(p) {
    require_positive(p.gamma, "gamma");
    require_positive(p.alpha_s, "alpha_s");
    require_positive(p.alpha_t, "alpha_t");
}

KernelModel::KernelModel(FuentesSpectralParams p) : params_(p) {
    require_positive(p.gamma, "gamma");
    require_positive(p.alpha_s, "alpha_s");
    require_positive(p.alpha_t, "alpha_t");
    if (!std::isfinite(p.nu) || p.nu <= 1.5) {
        throw InvalidParameter("nu must exceed (d + 1) / 2 = 1.5");
    }
    if (!std::isfinite(p.epsilon) || p.epsilon < 0.0 || p.epsilon > 1.0) {
        throw InvalidParameter("epsilon must lie in [0, 1]");
    }
}

double KernelModel::alpha_s() const {
    return std::visit([](const auto& p) { return p.alpha_s; }, params_);
}

double KernelModel::alpha_t() const {
    return std::visit([](const auto& p) { return p.alpha_t; }, params_);
}

bool KernelModel::has_closed_form() const {
    const auto* f = get_if<FuentesSpectralParams>();
    return f == nullptr || fuentes_closed_form(*f);
}

double intensity(const KernelModel& model) {
    return std::visit(
        Overloaded{
            [](const SeparableGaussExpParams& p) { return p.rho * p.sigma2_s * p.sigma2_t; },
            [](const MaternSeparableParams& p) {
                return p.gamma * kPi * kPi / (2.0 * sq(p.alpha_s) * std::pow(p.alpha_t, 3));
            },
            [](const MaternNonSeparableParams& p) {
                return p.gamma * kPi * kPi / (sq(p.alpha_s) * std::pow(p.alpha_t, 3));
            },
            [](const FuentesSpectralParams& p) {
                if (p.epsilon == 1.0) return fuentes_sep_kernel(p, 0.0, 0.0);
                if (p.epsilon == 0.0) return fuentes_nonsep_kernel(p, 0.0, 0.0);
                return fuentes_intensity_quadrature(p);
            },
        },
        model.params());
}

ExistenceReport validate_existence(const KernelModel& model) {
    ExistenceReport r;
    r.intensity = intensity(model);
    std::visit(Overloaded{
                   [&](const SeparableGaussExpParams& p) {
                       r.rho = p.rho;
                       r.rho_max = 1.0 / (2.0 * kPi * sq(p.alpha_s) * p.alpha_t * p.sigma2_s *
                                          p.sigma2_t);
                       r.phi_max = 2.0 * kPi * p.rho * sq(p.alpha_s) * p.alpha_t * p.sigma2_s *
                                   p.sigma2_t;
                       r.valid = p.rho < r.rho_max;
                   },
                   [&](const MaternSeparableParams& p) {
                       r.rho = r.intensity;
                       r.rho_max = kPi * kPi * sq(p.alpha_s) * p.alpha_t / 2.0;
                       r.phi_max = p.gamma / (sq(sq(p.alpha_s)) * sq(sq(p.alpha_t)));
                       r.valid = p.gamma < fuentes_gamma_bound(p.alpha_s, p.alpha_t, 2.0);
                   },
                   [&](const MaternNonSeparableParams& p) {
                       r.rho = r.intensity;
                       r.rho_max = kPi * kPi * sq(p.alpha_s) * p.alpha_t;
                       r.phi_max = p.gamma / (sq(sq(p.alpha_s)) * sq(sq(p.alpha_t)));
                       r.valid = p.gamma < fuentes_gamma_bound(p.alpha_s, p.alpha_t, 2.0);
                   },
                   [&](const FuentesSpectralParams& p) {
                       r.rho = r.intensity;
                       r.phi_max = fuentes_phi_max(p);
                       r.rho_max = r.intensity / r.phi_max;
                       r.valid = p.gamma < fuentes_gamma_bound(p.alpha_s, p.alpha_t, p.nu);
                   },
               },
               model.params());
    return r;
}

void require_valid(const KernelModel& model) {
    const ExistenceReport r = validate_existence(model);
    if (!r.valid) {
        std::ostringstream os;
        os << family_name(model.family()) << " model violates the existence condition "
           << "(phi(0,0) = " << r.phi_max << ", must be < 1)";
        throw InvalidParameter(os.str());
    }
}

double kernel_value_radial(const KernelModel& model, double r, double t) {
    if (!std::isfinite(r) || !std::isfinite(t)) {
        throw InvalidParameter("kernel_value: lags must be finite");
    }
    require_valid(model);
    return raw_kernel(model, std::abs(r), t);
}

double kernel_value_unchecked(const KernelModel& model, double r, double t) {
    return raw_kernel(model, std::abs(r), t);
}

double kernel_value(const KernelModel& model, SpatialVector u, double t) {
    return kernel_value_radial(model, std::hypot(u[0], u[1]), t);
}

double correlation(const KernelModel& model, double r, double t) {
    if (std::abs(r) == 0.0 && t == 0.0) return 1.0;
    const double c0 = intensity(model);
    return raw_kernel(model, std::abs(r), t) / c0;
}

double spectral_density_radial(const KernelModel& model, double omega_norm, double tau) {
    const double w2 = sq(omega_norm);
    const double tau2 = sq(tau);
    return std::visit(
        Overloaded{
            [&](const SeparableGaussExpParams& p) {
                return 2.0 * kPi * p.rho * sq(p.alpha_s) * p.alpha_t * p.sigma2_s * p.sigma2_t /
                       (1.0 + 4.0 * kPi * kPi * sq(p.alpha_t) * tau2) *
                       std::exp(-kPi * kPi * sq(p.alpha_s) * w2);
            },
            [&](const MaternSeparableParams& p) {
                return fuentes_phi({p.gamma, p.alpha_s, p.alpha_t, 2.0, 1.0}, w2, tau2);
            },
            [&](const MaternNonSeparableParams& p) {
                return fuentes_phi({p.gamma, p.alpha_s, p.alpha_t, 2.0, 0.0}, w2, tau2);
            },
            [&](const FuentesSpectralParams& p) { return fuentes_phi(p, w2, tau2); },
        },
        model.params());
}

double spectral_density(const KernelModel& model, SpatialVector omega, double tau) {
    return spectral_density_radial(model, std::hypot(omega[0], omega[1]), tau);
}

// omega * T beyond which the oscillatory tail uses the asymptotic expansion.
constexpr double kAsymptoticPhase = 64.0 * kPi;

NumericKernelValue kernel_value_numeric(const FuentesSpectralParams& params, SpatialVector u,
                                        double t, const InversionGrid& grid) {
    const KernelModel model(params);
    require_valid(model);
    if (!std::isfinite(u[0]) || !std::isfinite(u[1]) || !std::isfinite(t)) {
        throw InvalidParameter("kernel_value_numeric: lags must be finite");
    }
    if (grid.panels == 0 || !(grid.tolerance > 0.0) || grid.tau_cutoff < 0.0) {
        throw InvalidParameter("kernel_value_numeric: malformed inversion grid");
    }
    const double r = std::hypot(u[0], u[1]);
    const double omega = 2.0 * kPi * std::abs(t);
    const double nu = params.nu;
    const double mu = nu - 1.0;
    const double as2 = sq(params.alpha_s);
    const double at2 = sq(params.alpha_t);
    const double norm = 2.0 * kPi * params.gamma / (std::pow(2.0, mu) * std::tgamma(nu));

    // Spatial frequency integral of phi at fixed tau, in closed form:
    // 2 pi \int_0^inf phi(w, tau) J0(2 pi w r) w dw.
    const auto spatial = [&](double tau) {
        const double tau2 = tau * tau;
        const double q = at2 + params.epsilon * tau2;
        const double p = as2 * (at2 + tau2);
        const double a = std::sqrt(p / q);
        return norm * special::x_pow_bessel_k(mu, 2.0 * kPi * a * r) / (q * std::pow(p, nu - 1.0));
    };
    const auto integrand = [&](double tau) { return std::cos(omega * tau) * spatial(tau); };

    const auto tail = [&](double cutoff) -> double {
        if (omega == 0.0) {
            return quad::integrate_to_infinity(spatial, cutoff, 0.0, 1e-12).value;
        }
        if (omega * cutoff >= kAsymptoticPhase) {
            // Two terms of integration by parts on \int_T^inf f cos(omega tau).
            const double h = 1e-3 * cutoff;
            const double f = spatial(cutoff);
            const double df = (spatial(cutoff + h) - spatial(cutoff - h)) / (2.0 * h);
            return -f * std::sin(omega * cutoff) / omega - df * std::cos(omega * cutoff) / sq(omega);
        }
        return quad::integrate_to_infinity(integrand, cutoff, 0.0, 1e-12, 1 << 14).value;
    };

    double cutoff = grid.tau_cutoff > 0.0 ? grid.tau_cutoff : 32.0 * params.alpha_t;
    double panels = static_cast<double>(grid.panels);
    if (omega > 0.0 && omega * cutoff < kAsymptoticPhase) {
        const double wanted = kAsymptoticPhase / omega;
        if (wanted <= 64.0 * cutoff) {
            panels *= wanted / cutoff;
            cutoff = wanted;
        }
    }
    // At least two panels per oscillation period.
    panels = std::max(panels, std::ceil(2.0 * cutoff * std::abs(t)));
    const auto n = static_cast<std::size_t>(std::ceil(panels));

    // Cutoff doubling with halved panel width: the difference measures both
    // the truncation and the discretization error of the coarse result.
    const quad::Estimate coarse = quad::integrate_panels(integrand, 0.0, cutoff, n);
    const quad::Estimate fine = quad::integrate_panels(integrand, 0.0, 2.0 * cutoff, 4 * n);
    const double coarse_value = 2.0 * (coarse.value + tail(cutoff));
    const double fine_value = 2.0 * (fine.value + tail(2.0 * cutoff));

    NumericKernelValue out;
    out.value = fine_value;
    out.error_estimate = std::abs(fine_value - coarse_value);
    out.tau_cutoff = 2.0 * cutoff;
    out.panels = 4 * n;
    const double scale = std::max(std::abs(out.value), 1e-10 * intensity(model));
    if (out.error_estimate > grid.tolerance * scale) {
        std::ostringstream os;
        os << "kernel_value_numeric: estimated error " << out.error_estimate
           << " exceeds tolerance " << grid.tolerance * scale
           << "; increase tau_cutoff or panels";
        throw GridTooCoarse(os.str(), out.error_estimate);
    }
    return out;
}

nlohmann::json to_json(const KernelModel& model) {
    nlohmann::json j;
    j["family"] = std::string(family_name(model.family()));
    std::visit(Overloaded{
                   [&](const SeparableGaussExpParams& p) {
                       j["rho"] = p.rho;
                       j["sigma2_s"] = p.sigma2_s;
                       j["sigma2_t"] = p.sigma2_t;
                       j["alpha_s"] = p.alpha_s;
                       j["alpha_t"] = p.alpha_t;
                   },
                   [&](const MaternSeparableParams& p) {
                       j["gamma"] = p.gamma;
                       j["alpha_s"] = p.alpha_s;
                       j["alpha_t"] = p.alpha_t;
                   },
                   [&](const MaternNonSeparableParams& p) {
                       j["gamma"] = p.gamma;
                       j["alpha_s"] = p.alpha_s;
                       j["alpha_t"] = p.alpha_t;
                   },
                   [&](const FuentesSpectralParams& p) {
                       j["gamma"] = p.gamma;
                       j["alpha_s"] = p.alpha_s;
                       j["alpha_t"] = p.alpha_t;
                       j["nu"] = p.nu;
                       j["epsilon"] = p.epsilon;
                   },
               },
               model.params());
    return j;
}

namespace {

double number_field(const nlohmann::json& j, const char* key, std::optional<double> fallback) {
    const auto it = j.find(key);
    if (it == j.end()) {
        if (fallback) return *fallback;
        throw InvalidParameter(std::string("model: missing field '") + key + "'");
    }
    if (!it->is_number()) {
        throw InvalidParameter(std::string("model: field '") + key + "' must be a number");
    }
    return it->get<double>();
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> allowed) {
    std::set<std::string> ok{"family"};
    for (const char* a : allowed) ok.insert(a);
    for (const auto& item : j.items()) {
        if (!ok.contains(item.key())) {
            throw InvalidParameter("model: unexpected field '" + item.key() + "'");
        }
    }
}

}  // namespace

KernelModel model_from_json(const nlohmann::json& j) {
    if (!j.is_object()) throw InvalidParameter("model: expected a JSON object");
    const auto fam = j.find("family");
    if (fam == j.end() || !fam->is_string()) {
        throw InvalidParameter("model: missing string field 'family'");
    }
    switch (family_from_name(fam->get<std::string>())) {
        case Family::SepGaussExp:
            reject_unknown(j, {"rho", "sigma2_s", "sigma2_t", "alpha_s", "alpha_t"});
            return SeparableGaussExpParams{number_field(j, "rho", std::nullopt),
                                           number_field(j, "sigma2_s", 1.0),
                                           number_field(j, "sigma2_t", 1.0),
                                           number_field(j, "alpha_s", std::nullopt),
                                           number_field(j, "alpha_t", std::nullopt)};
        case Family::MaternSep:
        case Family::MaternNonSep: {
            reject_unknown(j, {"gamma", "alpha_s", "alpha_t", "nu", "epsilon"});
            if (number_field(j, "nu", 2.0) != 2.0) {
                throw InvalidParameter("model: closed-form Matern families fix nu = 2; use 'fuentes'");
            }
            const bool sep = fam->get<std::string>() == "matern_sep";
            if (number_field(j, "epsilon", sep ? 1.0 : 0.0) != (sep ? 1.0 : 0.0)) {
                throw InvalidParameter("model: epsilon is fixed by the Matern family tag");
            }
            const double g = number_field(j, "gamma", std::nullopt);
            const double as = number_field(j, "alpha_s", std::nullopt);
            const double at = number_field(j, "alpha_t", std::nullopt);
            if (sep) return MaternSeparableParams{g, as, at};
            return MaternNonSeparableParams{g, as, at};
        }
        case Family::Fuentes:
            reject_unknown(j, {"gamma", "alpha_s", "alpha_t", "nu", "epsilon"});
            return FuentesSpectralParams{number_field(j, "gamma", std::nullopt),
                                         number_field(j, "alpha_s", std::nullopt),
                                         number_field(j, "alpha_t", std::nullopt),
                                         number_field(j, "nu", std::nullopt),
                                         number_field(j, "epsilon", std::nullopt)};
    }
    throw InvalidParameter("model: unknown family");
}

}  // namespace stdpp
