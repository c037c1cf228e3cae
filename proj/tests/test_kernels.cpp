#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>

#include "doctest.h"
#include "oracles.hpp"
#include "stdpp/error.hpp"
#include "stdpp/kernels.hpp"

using namespace stdpp;

namespace {

constexpr double kPi = std::numbers::pi;

double rel_err(double got, double want) { return std::abs(got - want) / std::abs(want); }

SeparableGaussExpParams sep_default() { return {0.1, 1.0, 1.0, 1.0, 1.0}; }

std::vector<KernelModel> valid_models() {
    return {
        KernelModel(SeparableGaussExpParams{0.1, 1.0, 1.0, 1.0, 1.0}),
        KernelModel(SeparableGaussExpParams{0.01, 1.5, 0.8, 1.7, 2.3}),
        KernelModel(MaternSeparableParams{0.5, 1.0, 1.0}),
        KernelModel(MaternSeparableParams{1.5, 1.3, 0.9}),
        KernelModel(MaternNonSeparableParams{0.5, 1.0, 1.0}),
        KernelModel(MaternNonSeparableParams{0.1, 0.7, 1.4}),
        KernelModel(FuentesSpectralParams{0.3, 1.2, 0.8, 2.5, 1.0}),
        KernelModel(FuentesSpectralParams{0.3, 1.2, 0.8, 2.5, 0.0}),
    };
}

}  // namespace

TEST_CASE("kernel value at the origin is the intensity") {
    CHECK(kernel_value(KernelModel(sep_default()), {0.0, 0.0}, 0.0) == doctest::Approx(0.1));

    // Fourier dual of phi_0 (see decisions): gamma pi^2 / (as^2 at^3).
    const MaternNonSeparableParams ns{0.4, 1.1, 0.9};
    CHECK(rel_err(kernel_value(KernelModel(ns), {0.0, 0.0}, 0.0),
                  0.4 * kPi * kPi / (1.1 * 1.1 * std::pow(0.9, 3))) < 1e-14);

    for (const auto& m : valid_models()) {
        CHECK(rel_err(kernel_value(m, {0.0, 0.0}, 0.0), intensity(m)) < 1e-12);
    }
}

TEST_CASE("Matern separable kernel at |u| = 1") {
    // mpmath: (pi^2 / 2) * 2 pi * K_1(2 pi)
    const KernelModel m(MaternSeparableParams{1.0 - 1e-12, 1.0, 1.0});
    const double want = 0.0306030728468236456118037802665804063227 * (1.0 - 1e-12);
    CHECK(rel_err(kernel_value(m, {0.6, 0.8}, 0.0), want) < 1e-12);
}

TEST_CASE("general-nu Fuentes closed forms against high-precision Fourier inversion") {
    // mpmath quadosc of the 2-D (eps=1) and 3-D radial (eps=0) inverse transforms.
    const KernelModel sep(FuentesSpectralParams{0.3, 1.2, 0.8, 2.5, 1.0});
    const KernelModel nonsep(FuentesSpectralParams{0.3, 1.2, 0.8, 2.5, 0.0});
    CHECK(rel_err(kernel_value(sep, {0.3, 0.0}, 0.4), 0.202884278034759791957814453544) < 1e-12);
    CHECK(rel_err(kernel_value(nonsep, {0.0, 0.3}, -0.4), 0.209057004929968451407607132405) <
          1e-12);
    CHECK(rel_err(intensity(sep), 1.18362715114632810935037622646) < 1e-12);
    CHECK(rel_err(intensity(nonsep), 1.77544072671949216402556277805) < 1e-12);
    const KernelModel mid(FuentesSpectralParams{0.3, 1.2, 0.8, 2.5, 0.5});
    CHECK(rel_err(intensity(mid), 1.33788250690998256562817229414) < 1e-10);
}

TEST_CASE("Fuentes at nu = 2 reduces to the Matern families") {
    for (double r : {0.0, 0.05, 0.3, 1.0}) {
        for (double t : {0.0, 0.1, 0.7}) {
            const KernelModel a(MaternSeparableParams{0.7, 1.3, 0.9});
            const KernelModel b(FuentesSpectralParams{0.7, 1.3, 0.9, 2.0, 1.0});
            CHECK(kernel_value_radial(a, r, t) ==
                  doctest::Approx(kernel_value_radial(b, r, t)).epsilon(1e-12));
            const KernelModel c(MaternNonSeparableParams{0.7, 1.3, 0.9});
            const KernelModel d(FuentesSpectralParams{0.7, 1.3, 0.9, 2.0, 0.0});
            CHECK(kernel_value_radial(c, r, t) ==
                  doctest::Approx(kernel_value_radial(d, r, t)).epsilon(1e-12));
        }
    }
}

TEST_CASE("spectral density examples") {
    SeparableGaussExpParams p = sep_default();
    p.rho = 1.0 / (2.0 * kPi);
    CHECK(spectral_density(KernelModel(p), {0.0, 0.0}, 0.0) == doctest::Approx(1.0).epsilon(1e-15));

    for (double eps : {0.0, 0.3, 1.0}) {
        const KernelModel f(FuentesSpectralParams{1.0, 1.0, 1.0, 2.0, eps});
        CHECK(spectral_density(f, {0.0, 0.0}, 0.0) == 1.0);
    }
    const KernelModel f1(FuentesSpectralParams{1.0, 1.0, 1.0, 2.0, 1.0});
    CHECK(spectral_density(f1, {1.0, 0.0}, 1.0) == doctest::Approx(0.0625).epsilon(1e-15));
    CHECK(spectral_density(f1, {0.6, 0.8}, -1.0) == doctest::Approx(0.0625).epsilon(1e-15));
}

TEST_CASE("spectral density is maximal at the origin and factorises at eps = 1") {
    std::mt19937_64 rng(7);
    std::uniform_real_distribution<double> freq(-3.0, 3.0);
    const KernelModel f1(FuentesSpectralParams{0.8, 1.3, 0.7, 2.3, 1.0});
    const KernelModel ms(MaternSeparableParams{0.8, 1.3, 0.7});
    for (const auto& m : valid_models()) {
        const double top = spectral_density(m, {0.0, 0.0}, 0.0);
        for (int i = 0; i < 200; ++i) {
            CHECK(spectral_density(m, {freq(rng), freq(rng)}, freq(rng)) <= top);
        }
    }
    for (const auto& m : {f1, ms}) {
        const double origin = spectral_density(m, {0.0, 0.0}, 0.0);
        for (int i = 0; i < 200; ++i) {
            const SpatialVector w{freq(rng), freq(rng)};
            const double tau = freq(rng);
            const double joint = spectral_density(m, w, tau);
            const double product =
                spectral_density(m, w, 0.0) * spectral_density(m, {0.0, 0.0}, tau) / origin;
            CHECK(rel_err(joint, product) < 1e-12);
        }
    }
}

TEST_CASE("kernel and spectral density are Fourier duals (separable Gauss-exp)") {
    // C(0,0) = \int phi: Gaussian part in closed form, Lorentzian in time.
    const SeparableGaussExpParams p{0.03, 1.2, 0.9, 1.7, 0.6};
    const KernelModel m(p);
    const double spatial = oracle::gauss_legendre(
        [&](double w) { return 2.0 * kPi * w * spectral_density_radial(m, w, 0.0); }, 0.0, 3.0, 200);
    const double temporal_shape = oracle::gauss_legendre(
        [&](double tau) {
            return spectral_density_radial(m, 0.0, tau) / spectral_density_radial(m, 0.0, 0.0);
        },
        -2000.0, 2000.0, 20000);
    // Lorentzian tail beyond |tau| = 2000: 2 / (4 pi^2 at^2 * 2000) * 1/(2 pi^2 ...) approx
    const double tail = 2.0 / (4.0 * kPi * kPi * p.alpha_t * p.alpha_t * 2000.0);
    CHECK(rel_err(spatial * (temporal_shape + tail), intensity(m)) < 1e-6);
}

TEST_CASE("existence validation") {
    SUBCASE("separable Gauss-exp reproduces rho_max") {
        const auto r = validate_existence(KernelModel(sep_default()));
        CHECK(r.valid);
        CHECK(r.rho_max == doctest::Approx(1.0 / (2.0 * kPi)).epsilon(1e-15));
        CHECK(r.rho_max == doctest::Approx(0.15915494309189535));
        CHECK(r.phi_max == doctest::Approx(0.1 * 2.0 * kPi));
        CHECK(r.intensity == doctest::Approx(0.1));

        SeparableGaussExpParams above = sep_default();
        above.rho = 1.0 / (2.0 * kPi) + 1e-9;
        CHECK_FALSE(validate_existence(KernelModel(above)).valid);
        above.rho = 1.0 / (2.0 * kPi);
        CHECK_FALSE(validate_existence(KernelModel(above)).valid);
        above.rho = 1.0 / (2.0 * kPi) * (1.0 - 1e-12);
        CHECK(validate_existence(KernelModel(above)).valid);
    }
    SUBCASE("Matern gamma bound is strict") {
        CHECK_FALSE(validate_existence(KernelModel(MaternNonSeparableParams{1.0, 1.0, 1.0})).valid);
        CHECK_FALSE(validate_existence(KernelModel(MaternSeparableParams{1.0, 1.0, 1.0})).valid);
        const double bound = std::pow(1.3, 4) * std::pow(0.8, 4);
        CHECK(validate_existence(KernelModel(MaternSeparableParams{bound * (1 - 1e-12), 1.3, 0.8}))
                  .valid);
        CHECK_FALSE(
            validate_existence(KernelModel(MaternSeparableParams{bound * (1 + 1e-12), 1.3, 0.8}))
                .valid);
    }
    SUBCASE("rho_max per family") {
        const auto s = validate_existence(KernelModel(MaternSeparableParams{0.5, 1.3, 0.8}));
        CHECK(s.rho_max == doctest::Approx(kPi * kPi * 1.3 * 1.3 * 0.8 / 2.0));
        CHECK(s.rho / s.rho_max == doctest::Approx(s.phi_max));
        const auto n = validate_existence(KernelModel(MaternNonSeparableParams{0.5, 1.3, 0.8}));
        CHECK(n.rho_max == doctest::Approx(kPi * kPi * 1.3 * 1.3 * 0.8));
        CHECK(n.rho / n.rho_max == doctest::Approx(n.phi_max));
        const auto f = validate_existence(KernelModel(FuentesSpectralParams{0.3, 1.2, 0.8, 2.5, 0.5}));
        CHECK(f.valid);
        CHECK(f.rho / f.rho_max == doctest::Approx(f.phi_max));
    }
}

TEST_CASE("kernel bounds, symmetry and positive semidefiniteness") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> lag(-2.0, 2.0);
    for (const auto& m : valid_models()) {
        const double c0 = kernel_value(m, {0.0, 0.0}, 0.0);
        for (int i = 0; i < 100; ++i) {
            const SpatialVector u{lag(rng), lag(rng)};
            const double t = lag(rng);
            const double c = kernel_value(m, u, t);
            CHECK(std::abs(c) <= c0);
            CHECK(c == kernel_value(m, {-u[0], -u[1]}, -t));
        }
        for (int trial = 0; trial < 50; ++trial) {
            const int n = 2 + trial % 5;
            std::vector<std::array<double, 3>> pts(n);
            for (auto& p : pts) p = {lag(rng), lag(rng), lag(rng)};
            Eigen::MatrixXd k(n, n);
            for (int i = 0; i < n; ++i) {
                for (int j = 0; j < n; ++j) {
                    k(i, j) = kernel_value(m, {pts[i][0] - pts[j][0], pts[i][1] - pts[j][1]},
                                           pts[i][2] - pts[j][2]);
                }
            }
            Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(k);
            CHECK(es.eigenvalues().minCoeff() >= -1e-9 * k.trace());
        }
    }
}

TEST_CASE("invalid models and lags are rejected") {
    CHECK_THROWS_AS(KernelModel(SeparableGaussExpParams{-0.1, 1, 1, 1, 1}), InvalidParameter);
    CHECK_THROWS_AS(KernelModel(MaternSeparableParams{1.0, 0.0, 1.0}), InvalidParameter);
    CHECK_THROWS_AS(KernelModel(FuentesSpectralParams{0.1, 1, 1, 1.5, 0.0}), InvalidParameter);
    CHECK_THROWS_AS(KernelModel(FuentesSpectralParams{0.1, 1, 1, 2.0, 1.5}), InvalidParameter);
    CHECK_THROWS_AS(kernel_value(KernelModel(MaternNonSeparableParams{1.0, 1.0, 1.0}), {0, 0}, 0),
                    InvalidParameter);
    CHECK_THROWS_AS(kernel_value(KernelModel(sep_default()), {NAN, 0}, 0), InvalidParameter);
    CHECK_THROWS_AS(
        kernel_value(KernelModel(FuentesSpectralParams{0.1, 1, 1, 2.0, 0.5}), {0, 0}, 0),
        Unsupported);
}

TEST_CASE("numeric spectral inversion") {
    SUBCASE("eps = 0 at the origin") {
        const FuentesSpectralParams p{0.5, 1.0, 1.0, 2.0, 0.0};
        const auto v = kernel_value_numeric(p, {0.0, 0.0}, 0.0);
        CHECK(rel_err(v.value, 0.5 * kPi * kPi) < 1e-4);
        CHECK(v.error_estimate < 1e-6 * v.value);
    }
    SUBCASE("eps = 1 off the origin matches the Bessel closed form") {
        const FuentesSpectralParams p{0.5, 1.0, 1.0, 2.0, 1.0};
        const auto v = kernel_value_numeric(p, {0.3, 0.4}, 0.5);
        const double closed = kernel_value(KernelModel(MaternSeparableParams{0.5, 1.0, 1.0}),
                                           {0.3, 0.4}, 0.5);
        CHECK(rel_err(v.value, closed) < 1e-4);
    }
    SUBCASE("general nu agrees with the closed forms") {
        for (double eps : {0.0, 1.0}) {
            const FuentesSpectralParams p{0.3, 1.2, 0.8, 2.5, eps};
            for (double r : {0.0, 0.2, 0.6}) {
                for (double t : {0.0, 0.15, 0.9}) {
                    const double closed = kernel_value_radial(KernelModel(p), r, t);
                    const auto v = kernel_value_numeric(p, {r, 0.0}, t);
                    CAPTURE(eps);
                    CAPTURE(r);
                    CAPTURE(t);
                    CHECK(rel_err(v.value, closed) < 1e-6);
                }
            }
        }
    }
    SUBCASE("eps in (0,1) is available numerically") {
        const FuentesSpectralParams p{0.3, 1.2, 0.8, 2.5, 0.5};
        const auto v = kernel_value_numeric(p, {0.0, 0.0}, 0.0);
        CHECK(rel_err(v.value, 1.33788250690998256562817229414) < 1e-6);
        const auto off = kernel_value_numeric(p, {0.2, 0.1}, 0.3);
        CHECK(off.value < v.value);
        CHECK(off.value > 0.0);
    }
    SUBCASE("coarse grid is reported") {
        const FuentesSpectralParams p{0.5, 1.0, 1.0, 2.0, 1.0};
        InversionGrid g;
        g.tau_cutoff = 0.5;
        g.panels = 1;
        g.tolerance = 1e-10;
        CHECK_THROWS_AS(kernel_value_numeric(p, {0.3, 0.0}, 2.5, g), GridTooCoarse);
    }
}

TEST_CASE("model JSON") {
    for (const auto& m : valid_models()) {
        const KernelModel back = model_from_json(to_json(m));
        CHECK(to_json(back) == to_json(m));
        CHECK(back.family() == m.family());
    }
    const auto j = nlohmann::json::parse(R"({"family":"sep_gauss_exp","rho":0.1,"alpha_s":1,"alpha_t":1})");
    const auto m = model_from_json(j);
    REQUIRE(m.get_if<SeparableGaussExpParams>() != nullptr);
    CHECK(m.get_if<SeparableGaussExpParams>()->sigma2_s == 1.0);
    CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(R"({"rho":0.1})")), InvalidParameter);
    CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(R"({"family":"gauss"})")), InvalidParameter);
    CHECK_THROWS_AS(
        model_from_json(nlohmann::json::parse(R"({"family":"matern_sep","gamma":0.1,"alpha_s":1})")),
        InvalidParameter);
    CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(
                        R"({"family":"matern_nonsep","gamma":0.1,"alpha_s":1,"alpha_t":1,"nu":3})")),
                    InvalidParameter);
    CHECK_THROWS_AS(model_from_json(nlohmann::json::parse(
                        R"({"family":"sep_gauss_exp","rho":0.1,"alpha_s":1,"alpha_t":1,"beta":2})")),
                    InvalidParameter);
}
