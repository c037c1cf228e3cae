#include <Eigen/Dense>
#include <cmath>
#include <numbers>
#include <random>
#include <sstream>

#include "doctest.h"
#include "oracles.hpp"
#include "stdpp/error.hpp"
#include "stdpp/moments.hpp"

using namespace stdpp;

namespace {

constexpr double kPi = std::numbers::pi;

std::vector<KernelModel> closed_form_models() {
    return {
        KernelModel(SeparableGaussExpParams{0.1, 1.0, 1.0, 1.0, 1.0}),
        KernelModel(SeparableGaussExpParams{0.01, 1.5, 0.8, 1.7, 2.3}),
        KernelModel(MaternSeparableParams{0.5, 1.0, 1.0}),
        KernelModel(MaternNonSeparableParams{0.1, 0.7, 1.4}),
        KernelModel(FuentesSpectralParams{0.3, 1.2, 0.8, 2.5, 1.0}),
        KernelModel(FuentesSpectralParams{0.3, 1.2, 0.8, 2.5, 0.0}),
    };
}

LagGrid lag_plane_grid() { return LagGrid::uniform(0.05, 0.05, 20); }

}  // namespace

TEST_CASE("lag grid validation") {
    CHECK_NOTHROW(LagGrid::uniform(0.0, 0.1, 5));
    CHECK_THROWS_AS((LagGrid{{0.0, 0.0}, {1.0}}).validate(), InvalidParameter);
    CHECK_THROWS_AS((LagGrid{{-1.0}, {1.0}}).validate(), InvalidParameter);
    CHECK_THROWS_AS((LagGrid{{}, {1.0}}).validate(), InvalidParameter);
    CHECK_THROWS_AS((LagGrid{{0.2, 0.1}, {1.0}}).validate(), InvalidParameter);
    const auto g = lag_grid_from_json(nlohmann::json::parse(
        R"({"spatial": {"first": 0.5, "step": 0.5, "n": 2}, "temporal": [0, 1]})"));
    CHECK(g.spatial == std::vector<double>{0.5, 1.0});
    CHECK(g.temporal == std::vector<double>{0.0, 1.0});
}

TEST_CASE("product density examples") {
    const KernelModel sep(SeparableGaussExpParams{0.1, 1.0, 1.0, 1.0, 1.0});
    const std::vector<SpaceTimePoint> one{{0.3, 0.4, 0.5}};
    CHECK(product_density(sep, one) == doctest::Approx(0.1).epsilon(1e-15));

    const std::vector<SpaceTimePoint> twin{{0.3, 0.4, 0.5}, {0.3, 0.4, 0.5}};
    CHECK(std::abs(product_density(sep, twin)) <= 1e-9 * 0.01);

    const std::vector<SpaceTimePoint> pair{{0.0, 0.0, 0.0}, {1.0, 0.0, 0.0}};
    // mpmath: 0.01 (1 - e^-2)
    CHECK(product_density(sep, pair) ==
          doctest::Approx(0.00864664716763387326105450701247).epsilon(1e-12));

    std::vector<SpaceTimePoint> many(13);
    for (std::size_t i = 0; i < many.size(); ++i) many[i] = {0.1 * i, 0.0, 0.0};
    CHECK_THROWS_AS(product_density(sep, many), SizeLimitError);
    CHECK_THROWS_AS(product_density(sep, std::span<const SpaceTimePoint>{}), InvalidParameter);
}

TEST_CASE("two-point product density equals rho^2 - C^2") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> unif(-1.5, 1.5);
    for (const auto& m : closed_form_models()) {
        const double rho = intensity(m);
        for (int k = 0; k < 50; ++k) {
            const std::vector<SpaceTimePoint> pts{{unif(rng), unif(rng), unif(rng)},
                                                  {unif(rng), unif(rng), unif(rng)}};
            const double c = kernel_value(m, {pts[0].x - pts[1].x, pts[0].y - pts[1].y},
                                          pts[0].t - pts[1].t);
            const double want = rho * rho - c * c;
            CHECK(std::abs(product_density(m, pts) - want) <= 1e-12 * rho * rho);
        }
    }
}

TEST_CASE("product density is non-negative on random configurations") {
    std::mt19937_64 rng(5);
    std::uniform_real_distribution<double> unif(0.0, 2.0);
    for (const auto& m : closed_form_models()) {
        const double rho = intensity(m);
        for (int k = 0; k < 40; ++k) {
            const std::size_t n = 1 + k % 6;
            std::vector<SpaceTimePoint> pts(n);
            for (auto& p : pts) p = {unif(rng), unif(rng), unif(rng)};
            CHECK(product_density(m, pts) >= -1e-9 * std::pow(rho, double(n)));
        }
    }
}

TEST_CASE("pcf examples") {
    const KernelModel sep(SeparableGaussExpParams{0.1, 1.0, 1.0, 1.0, 1.0});
    const KernelModel ns(MaternNonSeparableParams{0.5, 1.0, 1.0});
    const LagGrid grid{{0.0, 1.0}, {0.0, 0.1}};
    const auto gs = pcf_theoretical(sep, grid);
    const auto gn = pcf_theoretical(ns, grid);
    CHECK(gs.at(0, 0) == 0.0);
    CHECK(gn.at(0, 0) == 0.0);
    // mpmath: 1 - e^-2 and 1 - e^(-0.4 pi)
    CHECK(gs.at(1, 0) == doctest::Approx(0.8646647167633873).epsilon(1e-14));
    CHECK(gn.at(0, 1) == doctest::Approx(0.7153904566639707).epsilon(1e-13));
    CHECK(gs.statistic == Statistic::GTheoretical);
    CHECK(gs.errors.empty());
}

TEST_CASE("pcf matches 1 - (C/rho)^2 and stays in [0, 1]") {
    const LagGrid grid = LagGrid::uniform(0.0, 0.15, 20);
    for (const auto& m : closed_form_models()) {
        const auto g = pcf_theoretical(m, grid);
        const double rho = intensity(m);
        for (std::size_t i = 0; i < grid.spatial.size(); ++i) {
            for (std::size_t j = 0; j < grid.temporal.size(); ++j) {
                const double c = kernel_value(m, {grid.spatial[i], 0.0}, grid.temporal[j]);
                const double want = 1.0 - (c / rho) * (c / rho);
                CHECK(std::abs(g.at(i, j) - want) <= 1e-12 * std::max(want, 1e-300));
                CHECK(g.at(i, j) >= 0.0);
                CHECK(g.at(i, j) <= 1.0);
            }
        }
        CHECK(pcf_theoretical(m, LagGrid{{40.0}, {40.0}}).at(0, 0) == doctest::Approx(1.0));
    }
}

TEST_CASE("pcf of the numeric Fuentes family needs a budget") {
    const KernelModel mid(FuentesSpectralParams{0.3, 1.2, 0.8, 2.5, 0.5});
    const LagGrid grid{{0.0, 0.4}, {0.0, 0.3}};
    CHECK_THROWS_AS(pcf_theoretical(mid, grid), Unsupported);
    const auto g = pcf_theoretical(mid, grid, InversionGrid{});
    CHECK(g.at(0, 0) == 0.0);
    CHECK(g.at(1, 1) > 0.0);
    CHECK(g.at(1, 1) < 1.0);
    CHECK(g.errors.size() == grid.size());
    CHECK(g.errors[3] < 1e-5);

    // Sandwiched between the eps = 0 and eps = 1 members is not guaranteed,
    // but at eps -> endpoints the numeric route must agree with closed forms.
    const KernelModel one(FuentesSpectralParams{0.3, 1.2, 0.8, 2.5, 1.0});
    const auto gn = pcf_theoretical(one, grid, InversionGrid{});
    const auto gc = pcf_theoretical(one, grid);
    CHECK(gn.at(1, 1) == doctest::Approx(gc.at(1, 1)).epsilon(1e-12));
}

TEST_CASE("separable closed-form K agrees with an independent oracle") {
    const SeparableGaussExpParams p{0.05, 1.0, 1.0, 1.3, 0.7};
    const KernelModel m(p);
    const LagGrid grid = LagGrid::uniform(0.0, 0.5, 5);
    const auto closed = kfun_theoretical(m, grid, KMethod::ClosedForm);
    const auto quad = kfun_theoretical(m, grid, KMethod::Quadrature);
    for (std::size_t i = 0; i < 5; ++i) {
        for (std::size_t j = 0; j < 5; ++j) {
            const double u = grid.spatial[i];
            const double t = grid.temporal[j];
            const double want = 2.0 * kPi *
                                 oracle::gauss_legendre_2d(
                                     [&](double r, double s) {
                                         return r * (1.0 - std::exp(-2.0 * r * r / (1.3 * 1.3) -
                                                                    2.0 * s / 0.7));
                                     },
                                     u, t, 8);
            CHECK(std::abs(closed.at(i, j) - want) <= 1e-12);
            CHECK(std::abs(quad.at(i, j) - want) <= 1e-9);
            CHECK(quad.errors[i * 5 + j] <= 1e-8 * kPi * u * u * t + 1e-300);
        }
    }
    CHECK(closed.at(0, 3) == 0.0);
    CHECK(closed.at(3, 0) == 0.0);
}

TEST_CASE("Matern K quadrature matches frozen high-precision values") {
    const LagGrid grid{{0.5, 1.0}, {0.3, 1.0}};
    const auto k0 = kfun_theoretical(KernelModel(MaternNonSeparableParams{0.5, 1.0, 1.0}), grid);
    // mpmath: 2 pi \int\int r (1 - exp(-4 pi sqrt(r^2 + t^2)))
    CHECK(k0.at(1, 1) == doctest::Approx(3.1352609504130413498645094624).epsilon(1e-10));
    CHECK(k0.at(0, 0) == doctest::Approx(0.229831207546613050307622557673).epsilon(1e-10));
    CHECK(k0.at(1, 1) < kPi);

    const auto k1 = kfun_theoretical(KernelModel(MaternSeparableParams{0.5, 1.0, 1.0}), grid);
    CHECK(k1.at(1, 1) == doctest::Approx(3.12049031060362217900767098993).epsilon(1e-10));

    CHECK_THROWS_AS(
        kfun_theoretical(KernelModel(MaternSeparableParams{0.5, 1.0, 1.0}), grid, KMethod::ClosedForm),
        Unsupported);
}

TEST_CASE("K is bounded by the Poisson value and refines consistently") {
    const LagGrid grid = LagGrid::uniform(0.2, 0.2, 5);
    for (const auto& m : closed_form_models()) {
        const auto k = kfun_theoretical(m, grid);
        KQuadratureOptions fine;
        fine.abs_tol = 1e-12;
        const auto kf = kfun_theoretical(m, grid, KMethod::Quadrature, fine);
        for (std::size_t i = 0; i < 5; ++i) {
            for (std::size_t j = 0; j < 5; ++j) {
                const double poisson = kPi * grid.spatial[i] * grid.spatial[i] * grid.temporal[j];
                CHECK(k.at(i, j) >= 0.0);
                CHECK(k.at(i, j) <= poisson);
                CHECK(std::abs(k.at(i, j) - kf.at(i, j)) <= k.errors[i * 5 + j] + 1e-15);
            }
        }
    }
}

TEST_CASE("separable Gauss-exp pcf decreases with the ranges") {
    const LagGrid grid = lag_plane_grid();
    const auto base = pcf_theoretical(KernelModel(SeparableGaussExpParams{0.01, 1, 1, 1.0, 1.0}), grid);
    const auto wide_s = pcf_theoretical(KernelModel(SeparableGaussExpParams{0.01, 1, 1, 1.5, 1.0}), grid);
    const auto wide_t = pcf_theoretical(KernelModel(SeparableGaussExpParams{0.01, 1, 1, 1.0, 1.5}), grid);
    for (std::size_t k = 0; k < grid.size(); ++k) {
        CHECK(wide_s.values[k] <= base.values[k]);
        CHECK(wide_t.values[k] <= base.values[k]);
    }
}

TEST_CASE("Matern pcf increases with alpha") {
    const LagGrid grid = lag_plane_grid();
    const auto check = [&](const KernelModel& lo, const KernelModel& hi) {
        const auto a = pcf_theoretical(lo, grid);
        const auto b = pcf_theoretical(hi, grid);
        for (std::size_t k = 0; k < grid.size(); ++k) CHECK(b.values[k] >= a.values[k]);
    };
    check(KernelModel(MaternSeparableParams{0.1, 1.0, 1.0}), KernelModel(MaternSeparableParams{0.1, 1.5, 1.0}));
    check(KernelModel(MaternSeparableParams{0.1, 1.0, 1.0}), KernelModel(MaternSeparableParams{0.1, 1.0, 1.5}));
    check(KernelModel(MaternNonSeparableParams{0.1, 1.0, 1.0}), KernelModel(MaternNonSeparableParams{0.1, 1.5, 1.0}));
    check(KernelModel(MaternNonSeparableParams{0.1, 1.0, 1.0}), KernelModel(MaternNonSeparableParams{0.1, 1.0, 1.5}));
}

TEST_CASE("pcf ordering check") {
    const LagGrid origin{{0.0}, {0.0}};
    const auto r0 = pcf_ordering_check({0.5, 1.0, 1.0}, {0.5, 1.0, 1.0}, origin);
    CHECK(r0.all_ordered);
    CHECK(r0.max_excess == 0.0);

    const LagGrid far{{30.0}, {30.0}};
    CHECK(pcf_ordering_check({0.5, 1.0, 1.0}, {0.5, 1.0, 1.0}, far).all_ordered);

    // Small lags: the separable member is the more repulsive one.
    const LagGrid small = LagGrid::uniform(0.05, 0.05, 10);
    CHECK(pcf_ordering_check({0.5, 1.0, 1.0}, {0.5, 1.0, 1.0}, small).all_ordered);
    CHECK(pcf_ordering_check({0.1, 0.5, 0.5}, {0.1, 0.5, 0.5}, lag_plane_grid()).all_ordered);

    // In the far tail of the alpha = 1 lag grid both pcfs are within 1e-6
    // of 1 and the separable one overtakes by up to ~1e-7.
    const auto tail = pcf_ordering_check({0.5, 1.0, 1.0}, {0.5, 1.0, 1.0}, lag_plane_grid());
    CHECK_FALSE(tail.all_ordered);
    CHECK(tail.violations == 40);
    CHECK(tail.max_excess < 1e-7);
    CHECK(tail.ordered.size() == 400);

    CHECK_THROWS_AS(pcf_ordering_check({0.5, 1.0, 1.0}, {0.5, 1.0, 1.1}, small), InvalidParameter);
}

TEST_CASE("curve serialization") {
    const KernelModel m(SeparableGaussExpParams{0.1, 1.0, 1.0, 1.0, 1.0});
    const auto g = pcf_theoretical(m, LagGrid{{0.0, 0.5}, {0.0, 0.25, 1.0}});
    std::ostringstream os;
    write_curve_csv(os, g);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "u,t,value,statistic");
    int rows = 0;
    while (std::getline(is, line)) {
        ++rows;
        CHECK(line.ends_with(",g_theoretical"));
    }
    CHECK(rows == 6);

    const auto back = curve_from_json(nlohmann::json::parse(to_json(g).dump()));
    CHECK(back.values == g.values);
    CHECK(back.grid.spatial == g.grid.spatial);
    CHECK(back.statistic == g.statistic);
    CHECK(back.provenance == g.provenance);
}
