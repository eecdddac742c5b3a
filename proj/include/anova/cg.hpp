#pragma once

#include <cmath>
#include <functional>
#include <vector>

namespace anova {

struct CgResult {
    std::vector<double> x;
    std::size_t iterations = 0;
    // True relative residual |b - Ax| / |b| of the returned iterate.
    double relative_residual = 0.0;
    bool converged = false;
    // Set when p^T A p or r^T M^{-1} r stopped being positive and finite.
    bool breakdown = false;
};

using CgMonitor = std::function<void(std::size_t iteration, const std::vector<double>& x, double residual)>;

namespace detail {

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double norm2(const std::vector<double>& a) { return std::sqrt(dot(a, a)); }

template <class ApplyA>
std::vector<double> residual(ApplyA& apply_a, const std::vector<double>& b, const std::vector<double>& x) {
    std::vector<double> r = apply_a(x);
    for (std::size_t i = 0; i < r.size(); ++i) r[i] = b[i] - r[i];
    return r;
}

}  // namespace detail

// Preconditioned conjugate gradients for SPD A and SPD M. apply_m applies
// M^{-1}. Stops once the relative residual is below tol; a recurrence residual
// below tol is confirmed against the true residual, and if the check fails the
// iteration restarts from the true residual.
template <class ApplyA, class ApplyM>
CgResult pcg(ApplyA&& apply_a, ApplyM&& apply_m, const std::vector<double>& b, std::vector<double> x0, double tol,
             std::size_t maxit, const CgMonitor& monitor = {}) {
    CgResult res;
    res.x = std::move(x0);
    if (res.x.size() != b.size()) res.x.assign(b.size(), 0.0);
    const double bnorm = detail::norm2(b);
    if (bnorm == 0.0) {
        res.x.assign(b.size(), 0.0);
        res.converged = true;
        return res;
    }
    std::vector<double> r = detail::residual(apply_a, b, res.x);
    res.relative_residual = detail::norm2(r) / bnorm;
    if (res.relative_residual <= tol) {
        res.converged = true;
        return res;
    }
    if (maxit == 0) return res;

    std::vector<double> z = apply_m(r);
    std::vector<double> p = z;
    double rz = detail::dot(r, z);
    const std::size_t n = b.size();
    for (std::size_t it = 1; it <= maxit; ++it) {
        res.iterations = it;
        if (!(rz > 0.0) || !std::isfinite(rz)) {
            res.breakdown = true;
            break;
        }
        const std::vector<double> q = apply_a(p);
        const double pq = detail::dot(p, q);
        if (!(pq > 0.0) || !std::isfinite(pq)) {
            res.breakdown = true;
            break;
        }
        const double alpha = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            res.x[i] += alpha * p[i];
            r[i] -= alpha * q[i];
        }
        double rel = detail::norm2(r) / bnorm;
        if (monitor) monitor(it, res.x, rel);
        bool restart = false;
        if (rel <= tol) {
            r = detail::residual(apply_a, b, res.x);
            rel = detail::norm2(r) / bnorm;
            res.relative_residual = rel;
            if (rel <= tol) {
                res.converged = true;
                return res;
            }
            restart = true;
        }
        z = apply_m(r);
        const double rz_next = detail::dot(r, z);
        if (restart) {
            p = z;
        } else {
            const double beta = rz_next / rz;
            for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
        }
        rz = rz_next;
    }
    res.relative_residual = detail::norm2(detail::residual(apply_a, b, res.x)) / bnorm;
    if (!std::isfinite(res.relative_residual)) res.breakdown = true;
    return res;
}

}  // namespace anova
