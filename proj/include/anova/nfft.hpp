#pragma once

#include <cmath>
#include <complex>
#include <cstdint>
#include <memory>
#include <numbers>
#include <stdexcept>
#include <vector>

#include "anova/fft.hpp"

namespace anova {

// Points on the torus [-1/2, 1/2)^dim, row-major.
struct NodeSet {
    std::size_t dim = 1;
    std::vector<double> coords;

    std::size_t size() const { return dim == 0 ? 0 : coords.size() / dim; }
};

enum class WindowKind { gaussian, kaiser_bessel };

// Trigonometric polynomials f(x) = sum_{k in I_M} c_k exp(-2 pi i k.x) with
// I_M = prod_s {-M_s/2, ..., M_s/2 - 1}. Coefficients are stored row-major
// with k_s offset by M_s/2.
class NfftPlan {
public:
    NfftPlan(std::vector<std::size_t> bandwidth, double oversampling = 2.0, std::size_t cutoff = 5,
             WindowKind window = WindowKind::kaiser_bessel)
        : bandwidth_(std::move(bandwidth)), oversampling_(oversampling), cutoff_(cutoff), window_(window) {
        if (bandwidth_.empty()) throw std::invalid_argument("NFFT needs at least one dimension");
        if (!(oversampling_ >= 1.25)) throw std::invalid_argument("oversampling factor must be at least 1.25");
        if (cutoff_ == 0) throw std::invalid_argument("window cutoff must be positive");
        for (std::size_t m : bandwidth_) {
            if (!is_power_of_two(m) || m < 2) throw std::invalid_argument("bandwidth must be a power of two >= 2");
            const auto n = next_power_of_two(static_cast<std::size_t>(std::ceil(oversampling_ * m)));
            grid_.push_back(n);
            const double sigma = static_cast<double>(n) / static_cast<double>(m);
            shape_.push_back(window_ == WindowKind::gaussian
                                 ? (2 * sigma / (2 * sigma - 1)) * cutoff_ / std::numbers::pi
                                 : std::numbers::pi * (2 - 1 / sigma));
            std::vector<double> deconv(m);
            for (std::size_t i = 0; i < m; ++i) {
                const double k = static_cast<double>(i) - static_cast<double>(m / 2);
                deconv[i] = 1.0 / window_hat(grid_.size() - 1, k);
            }
            deconv_.push_back(std::move(deconv));
        }
        fft_ = std::make_shared<FftNd>(grid_);
        for (std::size_t s = 0; s < grid_.size(); ++s) {
            std::vector<char> live(grid_[s], 0);
            for (std::size_t i = 0; i < bandwidth_[s]; ++i) live[(i + grid_[s] - bandwidth_[s] / 2) % grid_[s]] = 1;
            active_.push_back(std::move(live));
        }
    }

    std::size_t dim() const { return bandwidth_.size(); }
    const std::vector<std::size_t>& bandwidth() const { return bandwidth_; }
    const std::vector<std::size_t>& grid() const { return grid_; }
    std::size_t cutoff() const { return cutoff_; }
    double oversampling() const { return oversampling_; }
    WindowKind window() const { return window_; }
    std::size_t width() const { return 2 * cutoff_ + 2; }

    std::size_t coefficient_count() const {
        std::size_t t = 1;
        for (std::size_t m : bandwidth_) t *= m;
        return t;
    }

    std::size_t grid_size() const { return fft_->total(); }
    const FftNd& grid_fft() const { return *fft_; }
    const std::vector<double>& deconvolution(std::size_t s) const { return deconv_[s]; }
    // Grid indices per axis that hold frequencies of I_M.
    const std::vector<std::vector<char>>& active_frequencies() const { return active_; }

    // Window value at offset u from a grid point, in grid units.
    double window_value(std::size_t s, double u) const {
        const double m = static_cast<double>(cutoff_);
        if (std::abs(u) > m) return 0.0;
        const double b = shape_[s];
        if (window_ == WindowKind::gaussian) return std::exp(-u * u / b) / std::sqrt(std::numbers::pi * b);
        const double r = std::sqrt(std::max(0.0, m * m - u * u));
        if (r < 1e-12) return b / std::numbers::pi;
        return std::sinh(b * r) / (std::numbers::pi * r);
    }

    // n_s times the Fourier coefficient of the periodised window at frequency k.
    double window_hat(std::size_t s, double k) const {
        const double n = static_cast<double>(grid_[s]);
        const double b = shape_[s];
        if (window_ == WindowKind::gaussian) {
            const double t = std::numbers::pi * k / n;
            return std::exp(-b * t * t);
        }
        const double w = 2 * std::numbers::pi * k / n;
        return std::cyl_bessel_i(0.0, static_cast<double>(cutoff_) * std::sqrt(b * b - w * w));
    }

private:
    std::vector<std::size_t> bandwidth_;
    double oversampling_;
    std::size_t cutoff_;
    WindowKind window_;
    std::vector<std::size_t> grid_;
    std::vector<double> shape_;
    std::vector<std::vector<double>> deconv_;
    std::vector<std::vector<char>> active_;
    std::shared_ptr<FftNd> fft_;
};

// Window footprints of a node set on a plan's grid: for every node and axis,
// the flattened grid offsets and window weights of the 2m+2 nearest points.
// Footprints wider than the grid wrap around and accumulate.
class PreparedNodes {
public:
    PreparedNodes(const NfftPlan& plan, const NodeSet& nodes) : dim_(plan.dim()), width_(plan.width()) {
        if (nodes.dim != plan.dim()) throw std::invalid_argument("node dimension does not match the plan");
        count_ = nodes.size();
        offsets_.resize(count_ * dim_ * width_);
        weights_.resize(count_ * dim_ * width_);
        std::vector<std::size_t> stride(dim_, 1);
        for (std::size_t s = dim_; s-- > 1;) stride[s - 1] = stride[s] * plan.grid()[s];
        const auto m = static_cast<std::int64_t>(plan.cutoff());
        for (std::size_t j = 0; j < count_; ++j) {
            for (std::size_t s = 0; s < dim_; ++s) {
                const double x = nodes.coords[j * dim_ + s];
                if (!(x >= -0.5 && x < 0.5)) throw std::domain_error("node outside the torus [-1/2, 1/2)");
                const auto n = static_cast<std::int64_t>(plan.grid()[s]);
                const double u = x * static_cast<double>(n);
                const std::int64_t first = static_cast<std::int64_t>(std::floor(u)) - m;
                const std::size_t base = (j * dim_ + s) * width_;
                for (std::size_t t = 0; t < width_; ++t) {
                    const std::int64_t l = first + static_cast<std::int64_t>(t);
                    offsets_[base + t] =
                        static_cast<std::uint32_t>(((l % n + n) % n) * static_cast<std::int64_t>(stride[s]));
                    weights_[base + t] = plan.window_value(s, u - static_cast<double>(l));
                }
            }
        }
    }

    std::size_t size() const { return count_; }
    std::size_t dim() const { return dim_; }

    // Calls visit(flat_grid_index, weight) for every grid point in node j's footprint.
    template <class Visit>
    void for_each(std::size_t j, Visit&& visit) const {
        const std::uint32_t* off = &offsets_[j * dim_ * width_];
        const double* w = &weights_[j * dim_ * width_];
        const std::size_t k = width_;
        switch (dim_) {
            case 1:
                for (std::size_t a = 0; a < k; ++a) visit(off[a], w[a]);
                break;
            case 2:
                for (std::size_t a = 0; a < k; ++a)
                    for (std::size_t b = 0; b < k; ++b) visit(off[a] + off[k + b], w[a] * w[k + b]);
                break;
            case 3:
                for (std::size_t a = 0; a < k; ++a)
                    for (std::size_t b = 0; b < k; ++b) {
                        const std::size_t ab = off[a] + off[k + b];
                        const double wab = w[a] * w[k + b];
                        for (std::size_t c = 0; c < k; ++c) visit(ab + off[2 * k + c], wab * w[2 * k + c]);
                    }
                break;
            default: {
                std::vector<std::size_t> t(dim_, 0);
                for (;;) {
                    std::size_t idx = 0;
                    double weight = 1.0;
                    for (std::size_t s = 0; s < dim_; ++s) {
                        idx += off[s * k + t[s]];
                        weight *= w[s * k + t[s]];
                    }
                    visit(idx, weight);
                    std::size_t s = dim_;
                    while (s > 0 && ++t[s - 1] == k) t[--s] = 0;
                    if (s == 0) break;
                }
            }
        }
    }

private:
    std::size_t dim_;
    std::size_t width_;
    std::size_t count_ = 0;
    std::vector<std::uint32_t> offsets_;
    std::vector<double> weights_;
};

namespace detail {

// Visits every multi-index of I_M with its coefficient slot and grid slot.
template <class Visit>
void for_each_frequency(const NfftPlan& plan, Visit&& visit) {
    const std::size_t d = plan.dim();
    std::vector<std::size_t> t(d, 0);
    const std::size_t count = plan.coefficient_count();
    for (std::size_t c = 0; c < count; ++c) {
        std::size_t g = 0;
        double deconv = 1.0;
        for (std::size_t s = 0; s < d; ++s) {
            const std::size_t m = plan.bandwidth()[s], n = plan.grid()[s];
            const std::size_t wrapped = (t[s] + n - m / 2) % n;
            g = g * n + wrapped;
            deconv *= plan.deconvolution(s)[t[s]];
        }
        visit(c, g, deconv);
        std::size_t s = d;
        while (s > 0 && ++t[s - 1] == plan.bandwidth()[s - 1]) t[--s] = 0;
    }
}

}  // namespace detail

inline std::vector<complex> nfft(const NfftPlan& plan, const PreparedNodes& nodes, const std::vector<complex>& coeffs) {
    if (coeffs.size() != plan.coefficient_count())
        throw std::invalid_argument("coefficient count does not match the plan");
    if (nodes.dim() != plan.dim()) throw std::invalid_argument("prepared nodes belong to another plan");
    std::vector<complex> grid(plan.grid_size());
    detail::for_each_frequency(plan,
                               [&](std::size_t c, std::size_t g, double deconv) { grid[g] = coeffs[c] * deconv; });
    plan.grid_fft().run_pruned(grid, -1, plan.active_frequencies(), true);
    std::vector<complex> out(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        double re = 0.0, im = 0.0;
        nodes.for_each(j, [&](std::size_t g, double w) {
            re += w * grid[g].real();
            im += w * grid[g].imag();
        });
        out[j] = complex(re, im);
    }
    return out;
}

inline std::vector<complex> nfft_adjoint(const NfftPlan& plan, const PreparedNodes& nodes,
                                         const std::vector<complex>& values) {
    if (values.size() != nodes.size()) throw std::invalid_argument("value count does not match the node count");
    if (nodes.dim() != plan.dim()) throw std::invalid_argument("prepared nodes belong to another plan");
    std::vector<complex> grid(plan.grid_size());
    auto* raw = reinterpret_cast<double*>(grid.data());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double re = values[j].real(), im = values[j].imag();
        nodes.for_each(j, [&](std::size_t g, double w) {
            raw[2 * g] += w * re;
            raw[2 * g + 1] += w * im;
        });
    }
    plan.grid_fft().run_pruned(grid, +1, plan.active_frequencies(), false);
    std::vector<complex> out(plan.coefficient_count());
    detail::for_each_frequency(plan, [&](std::size_t c, std::size_t g, double deconv) { out[c] = grid[g] * deconv; });
    return out;
}

// Real-valued building blocks for transforms that carry two real problems in
// the real and imaginary parts of one grid. part 0 is the real component,
// part 1 the imaginary one.
inline void spread_real(const PreparedNodes& nodes, const std::vector<double>& values, std::vector<complex>& grid,
                        int part) {
    if (values.size() != nodes.size()) throw std::invalid_argument("value count does not match the node count");
    auto* raw = reinterpret_cast<double*>(grid.data()) + part;
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        const double x = values[j];
        nodes.for_each(j, [&](std::size_t g, double w) { raw[2 * g] += w * x; });
    }
}

inline std::vector<double> gather_real(const PreparedNodes& nodes, const std::vector<complex>& grid, int part) {
    const auto* raw = reinterpret_cast<const double*>(grid.data()) + part;
    std::vector<double> out(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        double acc = 0.0;
        nodes.for_each(j, [&](std::size_t g, double w) { acc += w * raw[2 * g]; });
        out[j] = acc;
    }
    return out;
}

inline std::vector<complex> nfft(const NfftPlan& plan, const NodeSet& nodes, const std::vector<complex>& coeffs) {
    return nfft(plan, PreparedNodes(plan, nodes), coeffs);
}

inline std::vector<complex> nfft_adjoint(const NfftPlan& plan, const NodeSet& nodes,
                                         const std::vector<complex>& values) {
    return nfft_adjoint(plan, PreparedNodes(plan, nodes), values);
}

namespace detail {

inline complex unit_phase(double turns) {
    const double angle = 2.0 * std::numbers::pi * turns;
    return complex(std::cos(angle), std::sin(angle));
}

inline std::vector<std::vector<double>> frequencies(const std::vector<std::size_t>& bandwidth) {
    std::vector<std::vector<double>> ks;
    std::size_t count = 1;
    for (std::size_t m : bandwidth) count *= m;
    std::vector<std::size_t> t(bandwidth.size(), 0);
    for (std::size_t c = 0; c < count; ++c) {
        std::vector<double> k(bandwidth.size());
        for (std::size_t s = 0; s < bandwidth.size(); ++s)
            k[s] = static_cast<double>(t[s]) - static_cast<double>(bandwidth[s] / 2);
        ks.push_back(std::move(k));
        std::size_t s = bandwidth.size();
        while (s > 0 && ++t[s - 1] == bandwidth[s - 1]) t[--s] = 0;
    }
    return ks;
}

}  // namespace detail

// Direct evaluation, O(|I_M| * N).
inline std::vector<complex> ndft(const std::vector<std::size_t>& bandwidth, const NodeSet& nodes,
                                 const std::vector<complex>& coeffs) {
    const auto ks = detail::frequencies(bandwidth);
    if (coeffs.size() != ks.size()) throw std::invalid_argument("coefficient count does not match the bandwidth");
    if (nodes.dim != bandwidth.size()) throw std::invalid_argument("node dimension does not match the bandwidth");
    std::vector<complex> out(nodes.size());
    for (std::size_t j = 0; j < nodes.size(); ++j) {
        complex acc = 0.0;
        for (std::size_t c = 0; c < ks.size(); ++c) {
            double dot = 0.0;
            for (std::size_t s = 0; s < nodes.dim; ++s) dot += ks[c][s] * nodes.coords[j * nodes.dim + s];
            acc += coeffs[c] * detail::unit_phase(-dot);
        }
        out[j] = acc;
    }
    return out;
}

inline std::vector<complex> ndft_adjoint(const std::vector<std::size_t>& bandwidth, const NodeSet& nodes,
                                         const std::vector<complex>& values) {
    const auto ks = detail::frequencies(bandwidth);
    if (values.size() != nodes.size()) throw std::invalid_argument("value count does not match the node count");
    if (nodes.dim != bandwidth.size()) throw std::invalid_argument("node dimension does not match the bandwidth");
    std::vector<complex> out(ks.size());
    for (std::size_t c = 0; c < ks.size(); ++c) {
        complex acc = 0.0;
        for (std::size_t j = 0; j < nodes.size(); ++j) {
            double dot = 0.0;
            for (std::size_t s = 0; s < nodes.dim; ++s) dot += ks[c][s] * nodes.coords[j * nodes.dim + s];
            acc += values[j] * detail::unit_phase(dot);
        }
        out[c] = acc;
    }
    return out;
}

}  // namespace anova
