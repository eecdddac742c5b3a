#pragma once

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace anova {

using complex = std::complex<double>;

inline bool is_power_of_two(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline std::size_t next_power_of_two(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// Radix-2 complex FFT along one axis of a row-major [outer][n][inner] array.
// sign = -1 computes sum_l x_l exp(-2 pi i k l / n); sign = +1 flips the
// exponent. No normalisation.
class AxisFft {
public:
    explicit AxisFft(std::size_t n) : n_(n), bitrev_(n), twiddle_(n / 2) {
        if (!is_power_of_two(n)) throw std::invalid_argument("FFT length must be a power of two");
        std::size_t bits = 0;
        while ((std::size_t{1} << bits) < n) ++bits;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t r = 0;
            for (std::size_t b = 0; b < bits; ++b)
                if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
            bitrev_[i] = r;
        }
        for (std::size_t j = 0; j < n / 2; ++j) {
            const double angle = -2.0 * std::numbers::pi * static_cast<double>(j) / static_cast<double>(n);
            twiddle_[j] = complex(std::cos(angle), std::sin(angle));
        }
    }

    std::size_t size() const { return n_; }

    // Blocks o with skip[o] != 0 are left untouched.
    void run(complex* data, std::size_t outer, std::size_t inner, int sign, const char* skip = nullptr) const {
        if (n_ == 1) return;
        const double flip = sign < 0 ? 1.0 : -1.0;
        for (std::size_t o = 0; o < outer; ++o) {
            if (skip && skip[o]) continue;
            complex* block = data + o * n_ * inner;
            for (std::size_t i = 0; i < n_; ++i) {
                const std::size_t r = bitrev_[i];
                if (r > i)
                    for (std::size_t t = 0; t < inner; ++t) std::swap(block[i * inner + t], block[r * inner + t]);
            }
            for (std::size_t len = 2; len <= n_; len <<= 1) {
                const std::size_t half = len / 2, step = n_ / len;
                for (std::size_t start = 0; start < n_; start += len) {
                    for (std::size_t j = 0; j < half; ++j) {
                        const double wr = twiddle_[j * step].real();
                        const double wi = flip * twiddle_[j * step].imag();
                        double* p = reinterpret_cast<double*>(block + (start + j) * inner);
                        double* q = reinterpret_cast<double*>(block + (start + j + half) * inner);
                        for (std::size_t t = 0; t < 2 * inner; t += 2) {
                            const double br = wr * q[t] - wi * q[t + 1];
                            const double bi = wr * q[t + 1] + wi * q[t];
                            q[t] = p[t] - br;
                            q[t + 1] = p[t + 1] - bi;
                            p[t] += br;
                            p[t + 1] += bi;
                        }
                    }
                }
            }
        }
    }

private:
    std::size_t n_;
    std::vector<std::size_t> bitrev_;
    std::vector<complex> twiddle_;
};

// Multidimensional FFT over a row-major array with power-of-two extents.
class FftNd {
public:
    explicit FftNd(std::vector<std::size_t> dims) : dims_(std::move(dims)) {
        if (dims_.empty()) throw std::invalid_argument("FFT needs at least one dimension");
        for (std::size_t n : dims_) axes_.emplace_back(n);
    }

    std::size_t total() const {
        std::size_t t = 1;
        for (std::size_t n : dims_) t *= n;
        return t;
    }

    const std::vector<std::size_t>& dims() const { return dims_; }

    void run(std::vector<complex>& data, int sign) const {
        if (data.size() != total()) throw std::invalid_argument("FFT buffer has the wrong size");
        std::size_t outer = 1;
        for (std::size_t a = 0; a < dims_.size(); ++a) {
            const std::size_t inner = total() / (outer * dims_[a]);
            axes_[a].run(data.data(), outer, inner, sign);
            outer *= dims_[a];
        }
    }

    // Pruned transform for data supported on (forward) or needed only on
    // (adjoint) the product of the per-axis index sets active[a]. Entries
    // outside that product are unspecified on return when reading outputs.
    void run_pruned(std::vector<complex>& data, int sign, const std::vector<std::vector<char>>& active,
                    bool sparse_input) const {
        if (data.size() != total()) throw std::invalid_argument("FFT buffer has the wrong size");
        if (active.size() != dims_.size()) throw std::invalid_argument("pruning mask has the wrong rank");
        const std::size_t d = dims_.size();
        std::vector<char> skip;
        for (std::size_t step = 0; step < d; ++step) {
            const std::size_t a = sparse_input ? d - 1 - step : step;
            std::size_t outer = 1;
            for (std::size_t b = 0; b < a; ++b) outer *= dims_[b];
            // A block is live when every leading index lies in its active set.
            skip.assign(outer, 0);
            std::size_t repeat = outer;
            for (std::size_t b = 0; b < a; ++b) {
                repeat /= dims_[b];
                for (std::size_t o = 0; o < outer; ++o)
                    if (!active[b][(o / repeat) % dims_[b]]) skip[o] = 1;
            }
            axes_[a].run(data.data(), outer, total() / (outer * dims_[a]), sign, skip.data());
        }
    }

private:
    std::vector<std::size_t> dims_;
    std::vector<AxisFft> axes_;
};

inline void fft(std::vector<complex>& data, const std::vector<std::size_t>& dims, int sign) {
    FftNd(dims).run(data, sign);
}

}  // namespace anova
