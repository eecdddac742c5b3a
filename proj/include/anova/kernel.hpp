#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <vector>

#include "anova/fastsum.hpp"
#include "anova/features.hpp"
#include "anova/parallel.hpp"

namespace anova {

enum class KernelMode { fast, exact };

inline constexpr std::size_t default_dense_limit = 5000;

class DenseLimitExceeded : public std::length_error {
public:
    using std::length_error::length_error;
};

struct KernelOptions {
    KernelMode mode = KernelMode::fast;
    FastsumParams fastsum;
    // Largest n accepted by the exact path.
    std::size_t dense_limit = default_dense_limit;
};

namespace detail {

inline Points window_points(const WindowSet& ws, std::size_t l) {
    Points p;
    p.dim = ws.windows.at(l).size();
    p.coords = ws.window_points(l);
    return p;
}

inline void check_window_set(const WindowSet& ws) {
    if (!ws.features || ws.features->rows == 0) throw std::invalid_argument("window set has no features");
    if (ws.windows.empty()) throw std::invalid_argument("window set has no windows");
    if (!(ws.sigma > 0.0) || !std::isfinite(ws.sigma)) throw std::invalid_argument("sigma must be positive");
}

}  // namespace detail

// Matrix-free ANOVA kernel: the average over windows of Gaussian kernels on the
// window coordinates, with zero diagonal.
class AnovaOperator {
public:
    AnovaOperator(WindowSet ws, KernelOptions options = {}) : ws_(std::move(ws)), options_(options) {
        detail::check_window_set(ws_);
        if (options_.mode == KernelMode::exact && size() > options_.dense_limit)
            throw DenseLimitExceeded("exact kernel refused: n = " + std::to_string(size()) +
                                     " exceeds the dense limit " + std::to_string(options_.dense_limit));
        points_.resize(ws_.count());
        for (std::size_t l = 0; l < ws_.count(); ++l) points_[l] = detail::window_points(ws_, l);
        if (options_.mode == KernelMode::fast) engines_ = build_engines(sigma_bar());
    }

    AnovaOperator(const AnovaOperator&) = delete;
    AnovaOperator& operator=(const AnovaOperator&) = delete;

    std::size_t size() const { return ws_.points(); }
    std::size_t window_count() const { return ws_.count(); }
    double sigma() const { return ws_.sigma; }
    double sigma_bar() const { return 1.0 / (ws_.sigma * ws_.sigma); }
    KernelMode mode() const { return options_.mode; }
    const WindowSet& windows() const { return ws_; }
    const KernelOptions& options() const { return options_; }

    // Gamma v.
    std::vector<double> apply(const std::vector<double>& v) const {
        if (v.size() != size()) throw std::invalid_argument("vector length does not match the kernel");
        std::vector<double> out = window_sum(v, engines_, sigma_bar());
        const double inv_l = 1.0 / static_cast<double>(window_count());
        for (std::size_t i = 0; i < out.size(); ++i)
            out[i] = inv_l * (out[i] - static_cast<double>(window_count()) * v[i]);
        return out;
    }

    // Row sums of Gamma.
    const std::vector<double>& degree() const {
        std::call_once(degree_once_, [&] { degree_ = apply(std::vector<double>(size(), 1.0)); });
        return degree_;
    }

    // Sum over windows of the squared window kernels' row sums, diagonals
    // excluded.
    const std::vector<double>& degree_squared() const {
        std::call_once(squared_once_, [&] {
            std::vector<std::shared_ptr<FastGaussTransform>> engines;
            if (options_.mode == KernelMode::fast) engines = build_engines(2.0 * sigma_bar());
            degree_squared_ = window_sum(std::vector<double>(size(), 1.0), engines, 2.0 * sigma_bar());
            for (double& x : degree_squared_) x -= static_cast<double>(window_count());
        });
        return degree_squared_;
    }

private:
    std::vector<std::shared_ptr<FastGaussTransform>> build_engines(double sb) const {
        std::vector<std::shared_ptr<FastGaussTransform>> engines(window_count());
        parallel_for(window_count(), [&](std::size_t l) {
            auto plan =
                std::make_shared<const FastsumPlan>(make_fastsum_plan(points_[l], points_[l], sb, options_.fastsum));
            engines[l] = std::make_shared<FastGaussTransform>(plan, points_[l]);
        });
        return engines;
    }

    // Greedy pairing of windows whose plans share a grid; (l, l) runs alone.
    static std::vector<std::pair<std::size_t, std::size_t>> pair_windows(
        const std::vector<std::shared_ptr<FastGaussTransform>>& engines) {
        std::vector<std::pair<std::size_t, std::size_t>> tasks;
        std::vector<char> used(engines.size(), 0);
        for (std::size_t l = 0; l < engines.size(); ++l) {
            if (used[l]) continue;
            used[l] = 1;
            std::size_t partner = l;
            for (std::size_t m = l + 1; m < engines.size() && partner == l; ++m)
                if (!used[m] && engines[l]->plan().shares_grid_with(engines[m]->plan())) partner = m;
            used[partner] = 1;
            tasks.emplace_back(l, partner);
        }
        return tasks;
    }

    // Sum over windows of the full window kernels (diagonal included) times v.
    std::vector<double> window_sum(const std::vector<double>& v,
                                   const std::vector<std::shared_ptr<FastGaussTransform>>& engines, double sb) const {
        std::vector<std::vector<double>> parts(window_count());
        if (engines.empty()) {
            parallel_for(window_count(),
                         [&](std::size_t l) { parts[l] = gauss_transform_direct(points_[l], points_[l], v, sb); });
        } else {
            const auto tasks = pair_windows(engines);
            parallel_for(tasks.size(), [&](std::size_t t) {
                const auto [l, m] = tasks[t];
                if (m == l) {
                    parts[l] = engines[l]->apply(v);
                } else {
                    auto both = apply_pair(*engines[l], v, *engines[m], v);
                    parts[l] = std::move(both.first);
                    parts[m] = std::move(both.second);
                }
            });
        }
        std::vector<double> out(size(), 0.0);
        for (const auto& part : parts)
            for (std::size_t i = 0; i < out.size(); ++i) out[i] += part[i];
        return out;
    }

    WindowSet ws_;
    KernelOptions options_;
    std::vector<Points> points_;
    std::vector<std::shared_ptr<FastGaussTransform>> engines_;
    mutable std::once_flag degree_once_, squared_once_;
    mutable std::vector<double> degree_, degree_squared_;
};

inline std::shared_ptr<AnovaOperator> build_anova_operator(WindowSet ws, KernelOptions options = {}) {
    return std::make_shared<AnovaOperator>(std::move(ws), options);
}

struct DenseKernel {
    Eigen::MatrixXd gamma;
    // Sum over windows of the squared window kernels' row sums.
    Eigen::VectorXd squared_degree;
    double sigma = 0.0;
    std::size_t windows = 0;

    std::size_t size() const { return static_cast<std::size_t>(gamma.rows()); }
    Eigen::VectorXd degree() const { return gamma.rowwise().sum(); }
};

inline DenseKernel assemble_dense(const WindowSet& ws, std::size_t dense_limit = default_dense_limit) {
    detail::check_window_set(ws);
    const std::size_t n = ws.points();
    if (n > dense_limit)
        throw DenseLimitExceeded("dense kernel refused: n = " + std::to_string(n) + " exceeds the dense limit " +
                                 std::to_string(dense_limit));
    const double sb = 1.0 / (ws.sigma * ws.sigma);
    const auto nn = static_cast<Eigen::Index>(n);
    DenseKernel k;
    k.gamma = Eigen::MatrixXd::Zero(nn, nn);
    k.squared_degree = Eigen::VectorXd::Zero(nn);
    k.sigma = ws.sigma;
    k.windows = ws.count();
    for (std::size_t l = 0; l < ws.count(); ++l) {
        const Points p = detail::window_points(ws, l);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = i + 1; j < n; ++j) {
                double r2 = 0.0;
                for (std::size_t s = 0; s < p.dim; ++s) {
                    const double diff = p.coords[i * p.dim + s] - p.coords[j * p.dim + s];
                    r2 += diff * diff;
                }
                const double g = std::exp(-sb * r2);
                const auto a = static_cast<Eigen::Index>(i), b = static_cast<Eigen::Index>(j);
                k.gamma(a, b) += g;
                k.squared_degree(a) += g * g;
                k.squared_degree(b) += g * g;
            }
        }
    }
    k.gamma /= static_cast<double>(ws.count());
    k.gamma.triangularView<Eigen::StrictlyLower>() = k.gamma.transpose();
    return k;
}

}  // namespace anova
