#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <utility>
#include <vector>

#include "anova/fft.hpp"
#include "anova/nfft.hpp"

namespace anova {

// Unscaled points in R^dim, row-major.
struct Points {
    std::size_t dim = 1;
    std::vector<double> coords;

    std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
};

class ScalingOverflow : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

class ExpansionTooLarge : public std::length_error {
public:
    using std::length_error::length_error;
};

// g_i = sum_j alpha_j exp(-sigma_bar |t_i - s_j|^2), O(N * M).
inline std::vector<double> gauss_transform_direct(const Points& sources, const Points& targets,
                                                  const std::vector<double>& alpha, double sigma_bar) {
    if (sources.dim != targets.dim) throw std::invalid_argument("source and target dimensions differ");
    if (alpha.size() != sources.size()) throw std::invalid_argument("coefficient count does not match the sources");
    if (!(sigma_bar > 0.0)) throw std::invalid_argument("sigma_bar must be positive");
    const std::size_t d = sources.dim;
    std::vector<double> out(targets.size(), 0.0);
    for (std::size_t i = 0; i < targets.size(); ++i) {
        const double* t = &targets.coords[i * d];
        double acc = 0.0;
        for (std::size_t j = 0; j < sources.size(); ++j) {
            const double* s = &sources.coords[j * d];
            double r2 = 0.0;
            for (std::size_t k = 0; k < d; ++k) r2 += (t[k] - s[k]) * (t[k] - s[k]);
            acc += alpha[j] * std::exp(-sigma_bar * r2);
        }
        out[i] = acc;
    }
    return out;
}

struct FastsumParams {
    // Target for the kernel's truncation and periodisation error.
    double kernel_tolerance = 1e-7;
    // Smallest expansion degree per axis.
    std::size_t min_expansion = 16;
    std::size_t cutoff = 4;
    double oversampling = 2.0;
    WindowKind window = WindowKind::kaiser_bessel;
    // Refuse plans whose oversampled grid exceeds this many points.
    std::size_t max_grid = std::size_t{1} << 24;
};

// Each axis is mapped affinely into the torus with a guard band wide enough that
// periodic images of the Gaussian are below the tolerance. The kernel is then
// the periodised Gaussian, approximated by its truncated Fourier series.
class FastsumPlan {
public:
    FastsumPlan(std::vector<double> lo, std::vector<double> hi, double sigma_bar, const FastsumParams& params = {})
        : sigma_bar_(sigma_bar), params_(params) {
        if (lo.empty() || lo.size() != hi.size()) throw std::invalid_argument("bounding box is malformed");
        if (!(sigma_bar > 0.0) || !std::isfinite(sigma_bar)) throw std::invalid_argument("sigma_bar must be positive");
        if (!(params.kernel_tolerance > 0.0 && params.kernel_tolerance < 1.0))
            throw std::invalid_argument("kernel tolerance must lie in (0, 1)");
        const std::size_t d = lo.size();
        const double width = 1.0 / std::sqrt(sigma_bar);
        const double guard = std::sqrt(std::log(1.0 / params.kernel_tolerance));
        std::vector<std::size_t> bandwidth;
        std::size_t grid_total = 1;
        for (std::size_t s = 0; s < d; ++s) {
            if (!(hi[s] >= lo[s]) || !std::isfinite(lo[s]) || !std::isfinite(hi[s]))
                throw std::invalid_argument("bounding box is malformed");
            centre_.push_back(0.5 * (lo[s] + hi[s]));
            const double scale = (1.0 - 1e-9) / ((hi[s] - lo[s]) + guard * width);
            scale_.push_back(scale);
            const double scaled_width = scale * width;
            const std::size_t n = expansion_degree(scaled_width, params.kernel_tolerance / d, params.min_expansion);
            bandwidth.push_back(n);
            grid_total *= next_power_of_two(static_cast<std::size_t>(std::ceil(params.oversampling * n)));
            if (grid_total > params.max_grid)
                throw ExpansionTooLarge("fast summation grid exceeds the configured budget; use exact summation");
            axis_coeffs_.push_back(axis_coefficients(scaled_width, n));
            // The unpaired frequency -n/2 lies in the truncation tail. Dropping it
            // keeps the transform of real data real.
            axis_coeffs_.back()[0] = 0.0;
        }
        nfft_ = std::make_shared<NfftPlan>(bandwidth, params.oversampling, params.cutoff, params.window);
        coeffs_.assign(nfft_->coefficient_count(), 1.0);
        mirror_.assign(nfft_->coefficient_count(), 0);
        std::vector<std::size_t> t(d, 0);
        for (std::size_t c = 0; c < coeffs_.size(); ++c) {
            std::size_t m = 0;
            for (std::size_t s = 0; s < d; ++s) {
                coeffs_[c] *= axis_coeffs_[s][t[s]];
                m = m * bandwidth[s] + (bandwidth[s] - t[s]) % bandwidth[s];
            }
            mirror_[c] = m;
            std::size_t s = d;
            while (s > 0 && ++t[s - 1] == bandwidth[s - 1]) t[--s] = 0;
        }
    }

    std::size_t dim() const { return centre_.size(); }
    double sigma_bar() const { return sigma_bar_; }
    const FastsumParams& params() const { return params_; }
    const NfftPlan& nfft_plan() const { return *nfft_; }
    const std::vector<double>& coefficients() const { return coeffs_; }
    const std::vector<double>& scale() const { return scale_; }
    // Coefficient slot of frequency -k for each slot k.
    const std::vector<std::size_t>& mirror() const { return mirror_; }

    // Plans that can share one complex grid.
    bool shares_grid_with(const FastsumPlan& other) const {
        const NfftPlan &a = *nfft_, &b = *other.nfft_;
        return a.bandwidth() == b.bandwidth() && a.grid() == b.grid() && a.cutoff() == b.cutoff() &&
               a.window() == b.window();
    }

    NodeSet to_torus(const Points& pts) const {
        if (pts.dim != dim()) throw std::invalid_argument("point dimension does not match the plan");
        NodeSet ns;
        ns.dim = pts.dim;
        ns.coords.resize(pts.coords.size());
        for (std::size_t j = 0; j < pts.size(); ++j)
            for (std::size_t s = 0; s < dim(); ++s) {
                const double x = (pts.coords[j * dim() + s] - centre_[s]) * scale_[s];
                if (!(std::abs(x) < 0.5)) throw ScalingOverflow("point leaves the torus after scaling");
                ns.coords[j * dim() + s] = x;
            }
        return ns;
    }

    // Smallest power of two >= floor whose Fourier tail for a unit-peak
    // Gaussian of width w (exp(-x^2 / w^2)) stays below tol.
    static std::size_t expansion_degree(double w, double tol, std::size_t floor) {
        std::size_t n = std::max<std::size_t>(2, next_power_of_two(floor));
        for (;; n *= 2) {
            double tail = 0.0;
            for (double k = static_cast<double>(n / 2);; k += 1.0) {
                const double term =
                    2.0 * std::sqrt(std::numbers::pi) * w * std::exp(-std::pow(std::numbers::pi * w * k, 2));
                tail += term;
                if (term < 1e-3 * tol || term == 0.0) break;
            }
            if (tail <= tol) return n;
            if (n > (std::size_t{1} << 20)) throw ExpansionTooLarge("Gaussian too narrow for a Fourier expansion");
        }
    }

private:
    // Fourier coefficients of the periodised Gaussian, from samples on an
    // n-point grid.
    static std::vector<double> axis_coefficients(double w, std::size_t n) {
        std::vector<complex> samples(n);
        for (std::size_t j = 0; j < n; ++j) {
            const double t = static_cast<double>(j) / static_cast<double>(n);
            double v = 0.0;
            for (int image = -3; image <= 3; ++image) {
                const double x = (t - std::round(t)) + image;
                v += std::exp(-(x * x) / (w * w));
            }
            samples[j] = v;
        }
        AxisFft(n).run(samples.data(), 1, 1, -1);
        std::vector<double> out(n);
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t k = (i + n - n / 2) % n;
            out[i] = samples[k].real() / static_cast<double>(n);
        }
        return out;
    }

    double sigma_bar_;
    FastsumParams params_;
    std::vector<double> centre_;
    std::vector<double> scale_;
    std::vector<std::vector<double>> axis_coeffs_;
    std::shared_ptr<NfftPlan> nfft_;
    std::vector<double> coeffs_;
    std::vector<std::size_t> mirror_;
};

inline FastsumPlan make_fastsum_plan(const Points& sources, const Points& targets, double sigma_bar,
                                     const FastsumParams& params = {}) {
    if (sources.dim != targets.dim) throw std::invalid_argument("source and target dimensions differ");
    const std::size_t d = sources.dim;
    std::vector<double> lo(d, std::numeric_limits<double>::infinity()), hi(d, -std::numeric_limits<double>::infinity());
    for (const Points* pts : {&sources, &targets})
        for (std::size_t j = 0; j < pts->size(); ++j)
            for (std::size_t s = 0; s < d; ++s) {
                lo[s] = std::min(lo[s], pts->coords[j * d + s]);
                hi[s] = std::max(hi[s], pts->coords[j * d + s]);
            }
    if (sources.size() + targets.size() == 0)
        std::fill(lo.begin(), lo.end(), 0.0), std::fill(hi.begin(), hi.end(), 0.0);
    return FastsumPlan(std::move(lo), std::move(hi), sigma_bar, params);
}

// A plan bound to fixed source and target sets for repeated transforms.
class FastGaussTransform {
public:
    FastGaussTransform(std::shared_ptr<const FastsumPlan> plan, const Points& sources, const Points& targets)
        : plan_(std::move(plan)), sources_(plan_->nfft_plan(), plan_->to_torus(sources)) {
        if (&sources != &targets)
            targets_ = std::make_unique<PreparedNodes>(plan_->nfft_plan(), plan_->to_torus(targets));
    }

    FastGaussTransform(std::shared_ptr<const FastsumPlan> plan, const Points& nodes)
        : FastGaussTransform(std::move(plan), nodes, nodes) {}

    std::size_t source_count() const { return sources_.size(); }
    std::size_t target_count() const { return targets_ ? targets_->size() : sources_.size(); }
    const FastsumPlan& plan() const { return *plan_; }

    std::vector<double> apply(const std::vector<double>& alpha) const {
        if (alpha.size() != sources_.size())
            throw std::invalid_argument("coefficient count does not match the sources");
        std::vector<complex> values(alpha.begin(), alpha.end());
        std::vector<complex> coeffs = nfft_adjoint(plan_->nfft_plan(), sources_, values);
        const auto& b = plan_->coefficients();
        for (std::size_t k = 0; k < coeffs.size(); ++k) coeffs[k] *= b[k];
        const std::vector<complex> g = nfft(plan_->nfft_plan(), targets_ ? *targets_ : sources_, coeffs);
        std::vector<double> out(g.size());
        for (std::size_t i = 0; i < g.size(); ++i) out[i] = g[i].real();
        return out;
    }

    const PreparedNodes& sources() const { return sources_; }
    const PreparedNodes& targets() const { return targets_ ? *targets_ : sources_; }

private:
    std::shared_ptr<const FastsumPlan> plan_;
    PreparedNodes sources_;
    std::unique_ptr<PreparedNodes> targets_;
};

// Two transforms on plans that share a grid, carried in the real and imaginary
// parts of one complex grid so each direction needs a single FFT.
inline std::pair<std::vector<double>, std::vector<double>> apply_pair(const FastGaussTransform& a,
                                                                      const std::vector<double>& alpha_a,
                                                                      const FastGaussTransform& b,
                                                                      const std::vector<double>& alpha_b) {
    if (!a.plan().shares_grid_with(b.plan())) throw std::invalid_argument("paired transforms need a common grid");
    const NfftPlan& nfft_plan = a.plan().nfft_plan();
    std::vector<complex> grid(nfft_plan.grid_size());
    spread_real(a.sources(), alpha_a, grid, 0);
    spread_real(b.sources(), alpha_b, grid, 1);
    nfft_plan.grid_fft().run_pruned(grid, +1, nfft_plan.active_frequencies(), false);
    std::vector<complex> z(nfft_plan.coefficient_count());
    detail::for_each_frequency(nfft_plan,
                               [&](std::size_t c, std::size_t g, double deconv) { z[c] = grid[g] * deconv; });

    // Both halves are Hermitian in k, so they separate through the mirror slot.
    const auto& mirror = a.plan().mirror();
    const auto& ca = a.plan().coefficients();
    const auto& cb = b.plan().coefficients();
    std::vector<complex> mixed(z.size());
    for (std::size_t c = 0; c < z.size(); ++c) {
        const complex zm = std::conj(z[mirror[c]]);
        const complex ha = 0.5 * (z[c] + zm);
        const complex hb = complex(0.0, -0.5) * (z[c] - zm);
        mixed[c] = ca[c] * ha + complex(0.0, 1.0) * (cb[c] * hb);
    }
    std::fill(grid.begin(), grid.end(), complex(0.0));
    detail::for_each_frequency(nfft_plan,
                               [&](std::size_t c, std::size_t g, double deconv) { grid[g] = mixed[c] * deconv; });
    nfft_plan.grid_fft().run_pruned(grid, -1, nfft_plan.active_frequencies(), true);
    return {gather_real(a.targets(), grid, 0), gather_real(b.targets(), grid, 1)};
}

inline std::vector<double> gauss_transform_fast(const Points& sources, const Points& targets,
                                                const std::vector<double>& alpha, const FastsumPlan& plan) {
    auto shared = std::shared_ptr<const FastsumPlan>(&plan, [](const FastsumPlan*) {});
    return FastGaussTransform(shared, sources, targets).apply(alpha);
}

}  // namespace anova
