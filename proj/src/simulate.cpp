#include "stdpp/simulate.hpp"

#include <boost/random/poisson_distribution.hpp>
#include <cmath>
#include <complex>
#include <numbers>
#include <string>

#include "stdpp/error.hpp"
#include "stdpp/parallel.hpp"
#include "stdpp/random.hpp"

namespace stdpp {
namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr std::size_t kMaxModes = std::size_t{1} << 25;
constexpr int kMaxImageShells = 400;

struct Lattice {
    std::array<int, 3> cut;
    std::array<std::size_t, 3> n;
    std::array<double, 3> len;

    Lattice(ModeCutoff c, const Box& box)
        : cut{c.x, c.y, c.t},
          n{2 * std::size_t(c.x) + 1, 2 * std::size_t(c.y) + 1, 2 * std::size_t(c.t) + 1},
          len{box.x_extent, box.y_extent, box.t_extent} {}

    [[nodiscard]] std::size_t size() const { return n[0] * n[1] * n[2]; }
};

void check_cutoff(ModeCutoff c) {
    if (c.x < 1 || c.y < 1 || c.t < 1) throw InvalidParameter("mode cutoff must be >= 1 per axis");
}

Box enlarge(const Box& window, double enlargement) {
    if (!(enlargement >= 0.0) || !std::isfinite(enlargement)) {
        throw InvalidParameter("enlargement must be a finite non-negative fraction");
    }
    const double f = 1.0 + enlargement;
    return {window.x_extent * f, window.y_extent * f, window.t_extent * f};
}

void check_simulable(const KernelModel& model) {
    require_valid(model);
    if (!model.has_closed_form()) {
        throw Unsupported("simulation of Fuentes models with 0 < epsilon < 1 is not supported");
    }
}

/// |V| * sum over periodic images of C(m L), summed shell by shell in the
/// max-norm of m until a shell adds less than 1e-16 of the running total.
double periodic_trace(const KernelModel& model, const Box& box) {
    const double lx = box.x_extent, ly = box.y_extent, lt = box.t_extent;
    double total = kernel_value_unchecked(model, 0.0, 0.0);
    for (int s = 1; s <= kMaxImageShells; ++s) {
        double shell = 0.0;
        for (int a = -s; a <= s; ++a) {
            for (int b = -s; b <= s; ++b) {
                const bool on_face = std::abs(a) == s || std::abs(b) == s;
                for (int c = -s; c <= s; c += (on_face ? 1 : 2 * s)) {
                    shell += kernel_value_unchecked(model, std::hypot(a * lx, b * ly), c * lt);
                }
            }
        }
        total += shell;
        if (std::abs(shell) <= 1e-16 * std::abs(total)) break;
    }
    return box.volume() * total;
}

struct MassSummary {
    double kept = 0.0;
    std::array<double, 3> boundary{};  // mass on the |k_i| = cut_i layers
};

MassSummary lattice_mass(const KernelModel& model, const Lattice& lat, std::vector<double>* out) {
    MassSummary m;
    if (out != nullptr) out->resize(lat.size());
    std::vector<double> rows(lat.n[0], 0.0);
    std::vector<std::array<double, 3>> bnd(lat.n[0], {0.0, 0.0, 0.0});
    parallel_for(lat.n[0], [&](std::size_t ix) {
        const int kx = int(ix) - lat.cut[0];
        const double wx = kx / lat.len[0];
        double row = 0.0;
        std::array<double, 3> b{};
        for (std::size_t iy = 0; iy < lat.n[1]; ++iy) {
            const int ky = int(iy) - lat.cut[1];
            const double wn = std::hypot(wx, ky / lat.len[1]);
            for (std::size_t it = 0; it < lat.n[2]; ++it) {
                const int kt = int(it) - lat.cut[2];
                const double p = spectral_density_radial(model, wn, kt / lat.len[2]);
                if (out != nullptr) (*out)[(ix * lat.n[1] + iy) * lat.n[2] + it] = p;
                row += p;
                if (std::abs(kx) == lat.cut[0]) b[0] += p;
                if (std::abs(ky) == lat.cut[1]) b[1] += p;
                if (std::abs(kt) == lat.cut[2]) b[2] += p;
            }
        }
        rows[ix] = row;
        bnd[ix] = b;
    });
    for (std::size_t i = 0; i < lat.n[0]; ++i) {
        m.kept += rows[i];
        for (int a = 0; a < 3; ++a) m.boundary[a] += bnd[i][a];
    }
    return m;
}

std::string provenance(std::uint64_t seed, std::uint64_t stream) {
    return "philox4x32-10 seed=" + std::to_string(seed) + " stream=" + std::to_string(stream);
}

}  // namespace

std::array<int, 3> SpectralApproximation::mode(std::size_t index) const {
    const std::size_t ny = 2 * std::size_t(cutoff.y) + 1, nt = 2 * std::size_t(cutoff.t) + 1;
    return {int(index / (ny * nt)) - cutoff.x, int((index / nt) % ny) - cutoff.y,
            int(index % nt) - cutoff.t};
}

double SpectralApproximation::expected_modes() const {
    double s = 0.0;
    for (double p : probabilities) s += p;
    return s;
}

double SpectralApproximation::expected_count() const {
    return expected_modes() * window.volume() / periodic_box.volume();
}

std::array<double, 3> SpectralApproximation::window_offset() const {
    return {0.5 * (periodic_box.x_extent - window.x_extent),
            0.5 * (periodic_box.y_extent - window.y_extent),
            0.5 * (periodic_box.t_extent - window.t_extent)};
}

SpectralApproximation build_spectral_approx(const KernelModel& model, const Box& window,
                                            ModeCutoff cutoff, double tolerance,
                                            double enlargement) {
    window.validate();
    check_cutoff(cutoff);
    check_simulable(model);
    if (!(tolerance > 0.0)) throw InvalidParameter("truncation tolerance must be positive");
    SpectralApproximation a;
    a.window = window;
    a.periodic_box = enlarge(window, enlargement);
    a.cutoff = cutoff;
    const Lattice lat(cutoff, a.periodic_box);
    if (lat.size() > kMaxModes) {
        throw SizeLimitError("spectral approximation: " + std::to_string(lat.size()) +
                             " modes exceed the limit of " + std::to_string(kMaxModes));
    }
    const MassSummary m = lattice_mass(model, lat, &a.probabilities);
    a.total_mass = periodic_trace(model, a.periodic_box);
    a.truncation_mass = std::max(0.0, a.total_mass - m.kept);
    const double fraction = a.truncation_mass / a.total_mass;
    if (fraction > tolerance) {
        throw TruncationError("spectral cutoff (" + std::to_string(cutoff.x) + ", " +
                                  std::to_string(cutoff.y) + ", " + std::to_string(cutoff.t) +
                                  ") discards too much spectral mass; increase the cutoff",
                              fraction);
    }
    return a;
}

ModeCutoff suggest_cutoff(const KernelModel& model, const Box& window, double tolerance,
                          double enlargement) {
    window.validate();
    check_simulable(model);
    if (!(tolerance > 0.0)) throw InvalidParameter("truncation tolerance must be positive");
    const Box box = enlarge(window, enlargement);
    const double total = periodic_trace(model, box);
    // Spatial cutoffs share one frequency radius so the lattice stays isotropic.
    double omega_s = 4.0 / std::min(box.x_extent, box.y_extent);
    int cut_t = 4;
    for (;;) {
        const ModeCutoff c{int(std::ceil(omega_s * box.x_extent)),
                           int(std::ceil(omega_s * box.y_extent)), cut_t};
        const Lattice lat(c, box);
        if (lat.size() > kMaxModes) {
            throw TruncationError("no cutoff within the mode limit reaches the tolerance",
                                  std::numeric_limits<double>::quiet_NaN());
        }
        const MassSummary m = lattice_mass(model, lat, nullptr);
        if (total - m.kept <= tolerance * total) return c;
        if (m.boundary[0] + m.boundary[1] > m.boundary[2]) {
            omega_s *= 1.5;
        } else {
            cut_t = int(std::ceil(1.5 * cut_t));
        }
    }
}

PointPattern sample_stdpp(const SpectralApproximation& approx, const Box& window,
                          std::uint64_t seed, std::uint64_t stream, const SamplerOptions& options) {
    if (!(window == approx.window)) {
        throw InvalidParameter("sample_stdpp: window differs from the approximation's window");
    }
    Philox4x32 rng(seed, stream);
    PointPattern out;
    out.window = window;
    out.seed_provenance = provenance(seed, stream);

    std::vector<std::array<double, 3>> freq;
    for (std::size_t i = 0; i < approx.probabilities.size(); ++i) {
        if (rng.uniform() < approx.probabilities[i]) {
            const auto k = approx.mode(i);
            freq.push_back({kTwoPi * k[0] / approx.periodic_box.x_extent,
                            kTwoPi * k[1] / approx.periodic_box.y_extent,
                            kTwoPi * k[2] / approx.periodic_box.t_extent});
        }
    }
    const std::size_t n = freq.size();
    if (n == 0) return out;

    using cplx = std::complex<double>;
    std::vector<std::vector<cplx>> basis;  // orthonormal rows spanning accepted feature vectors
    basis.reserve(n);
    std::vector<cplx> v(n), coef;
    const auto offset = approx.window_offset();
    const double nn = double(n);
    for (std::size_t placed = 0; placed < n; ++placed) {
        const double cap = options.proposal_factor * nn / double(n - placed);
        bool accepted = false;
        for (double tries = 0; tries < cap; tries += 1.0) {
            const double x = rng.uniform() * approx.periodic_box.x_extent;
            const double y = rng.uniform() * approx.periodic_box.y_extent;
            const double t = rng.uniform() * approx.periodic_box.t_extent;
            for (std::size_t k = 0; k < n; ++k) {
                v[k] = std::polar(1.0, freq[k][0] * x + freq[k][1] * y + freq[k][2] * t);
            }
            coef.assign(basis.size(), cplx{});
            double projected = 0.0;
            for (std::size_t j = 0; j < basis.size(); ++j) {
                cplx c{};
                for (std::size_t k = 0; k < n; ++k) c += std::conj(basis[j][k]) * v[k];
                coef[j] = c;
                projected += std::norm(c);
            }
            const double accept = 1.0 - projected / nn;
            if (rng.uniform() >= accept) continue;

            if (placed + 1 < n) {
                // Classical Gram-Schmidt with one re-orthogonalization pass.
                std::vector<cplx> w = v;
                for (int pass = 0; pass < 2; ++pass) {
                    for (std::size_t j = 0; j < basis.size(); ++j) {
                        cplx c = coef[j];
                        if (pass == 1) {
                            c = {};
                            for (std::size_t k = 0; k < n; ++k) c += std::conj(basis[j][k]) * w[k];
                        }
                        for (std::size_t k = 0; k < n; ++k) w[k] -= c * basis[j][k];
                    }
                }
                double norm = 0.0;
                for (const auto& z : w) norm += std::norm(z);
                norm = std::sqrt(norm);
                if (!(norm > 1e-10)) continue;  // numerically inside the span already
                for (auto& z : w) z /= norm;
                basis.push_back(std::move(w));
            }
            const SpaceTimePoint p{x - offset[0], y - offset[1], t - offset[2]};
            if (p.x > 0.0 && p.x < window.x_extent && p.y > 0.0 && p.y < window.y_extent &&
                p.t > 0.0 && p.t < window.t_extent) {
                out.points.push_back(p);
            }
            accepted = true;
            break;
        }
        if (!accepted) {
            throw RejectionBudgetExceeded("sample_stdpp: proposal cap reached at point " +
                                          std::to_string(placed + 1) + " of " + std::to_string(n));
        }
    }
    return out;
}

PointPattern sample_poisson(double rho, const Box& window, std::uint64_t seed,
                            std::uint64_t stream) {
    window.validate();
    if (!(rho > 0.0) || !std::isfinite(rho)) throw InvalidParameter("sample_poisson: rho must be positive");
    Philox4x32 rng(seed, stream);
    PointPattern out;
    out.window = window;
    out.seed_provenance = provenance(seed, stream);
    boost::random::poisson_distribution<long long, double> count(rho * window.volume());
    const long long n = count(rng);
    out.points.reserve(std::size_t(n));
    for (long long i = 0; i < n; ++i) {
        out.points.push_back({rng.uniform() * window.x_extent, rng.uniform() * window.y_extent,
                              rng.uniform() * window.t_extent});
    }
    return out;
}

std::vector<PointPattern> sample_stdpp_replicates(const SpectralApproximation& approx,
                                                  std::uint64_t seed, std::size_t count,
                                                  const SamplerOptions& options) {
    std::vector<PointPattern> out(count);
    parallel_for(count, [&](std::size_t r) {
        out[r] = sample_stdpp(approx, approx.window, seed, r, options);
    });
    return out;
}

std::vector<PointPattern> sample_poisson_replicates(double rho, const Box& window,
                                                    std::uint64_t seed, std::size_t count) {
    std::vector<PointPattern> out(count);
    parallel_for(count, [&](std::size_t r) { out[r] = sample_poisson(rho, window, seed, r); });
    return out;
}

}  // namespace stdpp
