#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <complex>
#include <memory>
#include <random>
#include <vector>

#include "anova/features.hpp"
#include "anova/imaging.hpp"
#include "anova/kernel.hpp"
#include "anova/synthetic.hpp"

namespace testing_support {

inline std::vector<double> random_vector(std::size_t n, std::mt19937_64& rng, double lo = -1.0, double hi = 1.0) {
    std::uniform_real_distribution<double> dist(lo, hi);
    std::vector<double> v(n);
    for (double& x : v) x = dist(rng);
    return v;
}

inline std::vector<std::complex<double>> random_complex(std::size_t n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> dist(-1.0, 1.0);
    std::vector<std::complex<double>> v(n);
    for (auto& x : v) x = {dist(rng), dist(rng)};
    return v;
}

template <class T>
double max_abs(const std::vector<T>& v) {
    double m = 0.0;
    for (const T& x : v) m = std::max(m, static_cast<double>(std::abs(x)));
    return m;
}

template <class T>
double max_abs_diff(const std::vector<T>& a, const std::vector<T>& b) {
    double m = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, static_cast<double>(std::abs(a[i] - b[i])));
    return m;
}

// Relative l-infinity error of `approx` against `ref`.
template <class T>
double rel_inf_error(const std::vector<T>& approx, const std::vector<T>& ref) {
    return max_abs_diff(approx, ref) / max_abs(ref);
}

inline double rel_l2_error(const std::vector<double>& approx, const std::vector<double>& ref) {
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < ref.size(); ++i) {
        num += (approx[i] - ref[i]) * (approx[i] - ref[i]);
        den += ref[i] * ref[i];
    }
    return std::sqrt(num / den);
}

inline Eigen::VectorXd to_eigen(const std::vector<double>& v) {
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
}

inline std::vector<double> from_eigen(const Eigen::VectorXd& v) { return {v.data(), v.data() + v.size()}; }

inline anova::GrayImage noisy_scene(std::size_t h, std::size_t w, std::uint64_t seed, double noise) {
    return anova::add_gaussian_noise(anova::make_scene(h, w, seed), {noise, seed + 100});
}

// ANOVA kernel of a noisy synthetic scene.
inline std::shared_ptr<anova::AnovaOperator> scene_operator(std::size_t h, std::size_t w, double sigma,
                                                            anova::KernelMode mode = anova::KernelMode::fast,
                                                            std::size_t radius = 1, std::uint64_t seed = 7,
                                                            double noise = 25.0) {
    anova::KernelOptions opt;
    opt.mode = mode;
    return anova::build_anova_operator(anova::windows_from_image(noisy_scene(h, w, seed, noise), radius, sigma), opt);
}

// Brute-force Gamma with zero diagonal, computed independently of the library
// kernels from the window set.
inline Eigen::MatrixXd brute_force_gamma(const anova::WindowSet& ws) {
    const std::size_t n = ws.points();
    Eigen::MatrixXd g = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    for (const auto& cols : ws.windows)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                if (i == j) continue;
                double r2 = 0.0;
                for (std::size_t c : cols) {
                    const double d = (*ws.features)(i, c) - (*ws.features)(j, c);
                    r2 += d * d;
                }
                g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) += std::exp(-r2 / (ws.sigma * ws.sigma));
            }
    return g / static_cast<double>(ws.count());
}

}  // namespace testing_support
