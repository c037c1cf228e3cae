#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

#include "stdpp/kernels.hpp"
#include "stdpp/pattern.hpp"

namespace stdpp {

/// Largest |k| per axis of the retained lattice frequencies k / L.
struct ModeCutoff {
    int x = 48;
    int y = 48;
    int t = 48;

    friend bool operator==(const ModeCutoff&, const ModeCutoff&) = default;
};

/// Periodized spectral representation of a kernel on a box that contains the
/// target window (enlarged by `enlargement` per axis, window centered).
/// Mode (kx, ky, kt) has inclusion probability phi(kx/Lx, ky/Ly, kt/Lt);
/// probabilities are stored in mixed-radix order with kx slowest.
struct SpectralApproximation {
    Box window;
    Box periodic_box;
    ModeCutoff cutoff;
    std::vector<double> probabilities;
    /// Trace of the full periodized kernel, |V| * sum_m C(m L).
    double total_mass = 0.0;
    /// total_mass minus the retained sum of probabilities.
    double truncation_mass = 0.0;

    [[nodiscard]] std::size_t mode_count() const { return probabilities.size(); }
    [[nodiscard]] std::array<int, 3> mode(std::size_t index) const;
    /// Expected number of points on the periodic box (sum of probabilities).
    [[nodiscard]] double expected_modes() const;
    /// Expected number of points inside the window.
    [[nodiscard]] double expected_count() const;
    /// Lower-left corner of the window in periodic-box coordinates.
    [[nodiscard]] std::array<double, 3> window_offset() const;
};

inline constexpr double kDefaultTruncationTolerance = 1e-3;
inline constexpr double kDefaultEnlargement = 0.2;

/// Throws TruncationError if truncation_mass / total_mass > tolerance, and
/// SizeLimitError beyond 2^25 modes. Fuentes models with 0 < eps < 1 are
/// Unsupported (no closed-form kernel for the periodization sum).
SpectralApproximation build_spectral_approx(const KernelModel& model, const Box& window,
                                            ModeCutoff cutoff = {},
                                            double tolerance = kDefaultTruncationTolerance,
                                            double enlargement = kDefaultEnlargement);

/// Smallest cutoff found by geometric growth of the axis with the heaviest
/// boundary layer such that the discarded fraction is within tolerance.
ModeCutoff suggest_cutoff(const KernelModel& model, const Box& window,
                          double tolerance = kDefaultTruncationTolerance,
                          double enlargement = kDefaultEnlargement);

struct SamplerOptions {
    /// Proposals allowed for a point: factor * n / (points still to place).
    double proposal_factor = 500.0;
};

/// One realization: Bernoulli mode selection, then the sequential projection
/// sampler with uniform rejection proposals on the periodic box. Points are
/// cropped to `window`, which must equal approx.window. `stream` selects an
/// independent Philox sequence for the same seed.
PointPattern sample_stdpp(const SpectralApproximation& approx, const Box& window,
                          std::uint64_t seed, std::uint64_t stream = 0,
                          const SamplerOptions& options = {});

/// Homogeneous Poisson pattern with intensity rho.
PointPattern sample_poisson(double rho, const Box& window, std::uint64_t seed,
                            std::uint64_t stream = 0);

/// Replicates r = 0..count-1 use streams 0..count-1 and run in parallel;
/// output is independent of the worker count.
std::vector<PointPattern> sample_stdpp_replicates(const SpectralApproximation& approx,
                                                  std::uint64_t seed, std::size_t count,
                                                  const SamplerOptions& options = {});
std::vector<PointPattern> sample_poisson_replicates(double rho, const Box& window,
                                                    std::uint64_t seed, std::size_t count);

}  // namespace stdpp
