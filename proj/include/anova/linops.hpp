#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <stdexcept>
#include <string>
#include <vector>

#include "anova/basis.hpp"
#include "anova/cg.hpp"
#include "anova/kernel.hpp"

namespace anova {

// A = lambda I + mu L with the graph Laplacian L = diag(Gamma 1) - Gamma.
struct ShiftedSystem {
    double lambda = 1.0;
    double mu = 1.0;
    std::shared_ptr<const AnovaOperator> kernel;

    ShiftedSystem() = default;
    ShiftedSystem(double l, double m, std::shared_ptr<const AnovaOperator> k) : lambda(l), mu(m), kernel(std::move(k)) {
        if (!(lambda > 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be positive");
        if (!(mu > 0.0) || !std::isfinite(mu)) throw std::invalid_argument("mu must be positive");
        if (!kernel) throw std::invalid_argument("missing kernel");
    }

    std::size_t size() const { return kernel->size(); }
};

inline std::vector<double> laplacian_apply(const AnovaOperator& kernel, const std::vector<double>& v) {
    std::vector<double> out = kernel.apply(v);
    const auto& eta = kernel.degree();
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = eta[i] * v[i] - out[i];
    return out;
}

inline std::vector<double> system_apply(const ShiftedSystem& sys, const std::vector<double>& v) {
    std::vector<double> out = laplacian_apply(*sys.kernel, v);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] = sys.lambda * v[i] + sys.mu * out[i];
    return out;
}

enum class DiagonalKind { none, jacobi, l2 };

// Jacobi: lambda + mu eta. l2: the row 2-norm estimate
// sqrt((mu / L)^2 eta_2 + (lambda + mu eta)^2).
inline std::vector<double> diagonal_preconditioner(const ShiftedSystem& sys, DiagonalKind kind) {
    const std::size_t n = sys.size();
    if (kind == DiagonalKind::none) return std::vector<double>(n, 1.0);
    const auto& eta = sys.kernel->degree();
    std::vector<double> d(n);
    for (std::size_t i = 0; i < n; ++i) d[i] = sys.lambda + sys.mu * eta[i];
    if (kind == DiagonalKind::l2) {
        const auto& eta2 = sys.kernel->degree_squared();
        const double scale = sys.mu / static_cast<double>(sys.kernel->window_count());
        for (std::size_t i = 0; i < n; ++i) d[i] = std::sqrt(scale * scale * std::max(0.0, eta2[i]) + d[i] * d[i]);
    }
    return d;
}

enum class BasisKind { unitary, sparse };

// y -> pi_2(X^{-1} D^{-1} X (0; y)) for X = U (unitary) or X = Q (sparse).
inline std::vector<double> projected_preconditioner_apply(const std::vector<double>& diag,
                                                          const ChangeOfBasis<double>& basis, BasisKind kind,
                                                          const std::vector<double>& y) {
    const std::size_t n = basis.size();
    if (y.size() + 1 != n || diag.size() != n) throw std::invalid_argument("size mismatch in projected preconditioner");
    std::vector<double> full(n, 0.0);
    std::copy(y.begin(), y.end(), full.begin() + 1);
    std::vector<double> w = kind == BasisKind::unitary ? basis.u_apply(full) : basis.q_apply(full);
    for (std::size_t i = 0; i < n; ++i) w[i] /= diag[i];
    w = kind == BasisKind::unitary ? basis.u_adjoint_apply(w) : basis.q_inverse_apply(w);
    return std::vector<double>(w.begin() + 1, w.end());
}

enum class SolverKind { none, jacobi, l2, deflated_none, deflated_jacobi, deflated_l2 };

inline const std::vector<SolverKind>& all_solver_kinds() {
    static const std::vector<SolverKind> kinds = {
        SolverKind::none,          SolverKind::jacobi,          SolverKind::l2,
        SolverKind::deflated_none, SolverKind::deflated_jacobi, SolverKind::deflated_l2};
    return kinds;
}

inline std::string to_string(SolverKind k) {
    switch (k) {
        case SolverKind::none:
            return "none";
        case SolverKind::jacobi:
            return "jacobi";
        case SolverKind::l2:
            return "l2";
        case SolverKind::deflated_none:
            return "deflated-none";
        case SolverKind::deflated_jacobi:
            return "deflated-jacobi";
        case SolverKind::deflated_l2:
            return "deflated-l2";
    }
    return "none";
}

inline SolverKind parse_solver_kind(const std::string& s) {
    for (SolverKind k : all_solver_kinds())
        if (to_string(k) == s) return k;
    throw std::invalid_argument("unknown preconditioner '" + s + "'");
}

inline bool is_deflated(SolverKind k) {
    return k == SolverKind::deflated_none || k == SolverKind::deflated_jacobi || k == SolverKind::deflated_l2;
}

inline DiagonalKind diagonal_of(SolverKind k) {
    switch (k) {
        case SolverKind::jacobi:
        case SolverKind::deflated_jacobi:
            return DiagonalKind::jacobi;
        case SolverKind::l2:
        case SolverKind::deflated_l2:
            return DiagonalKind::l2;
        default:
            return DiagonalKind::none;
    }
}

struct SolveResult {
    std::vector<double> u;
    std::size_t iterations = 0;
    double relative_residual = 0.0;
    bool converged = false;
    bool breakdown = false;
};

// Solves A u = lambda f in the basis U, whose first column spans the constant
// vector. The first coordinate is exact; CG runs on the remaining block with
// the projected diagonal preconditioner, starting from zero.
inline SolveResult deflated_solve(const ShiftedSystem& sys, const std::vector<double>& f, DiagonalKind kind, double tol,
                                  std::size_t maxit, const CgMonitor& monitor = {}) {
    const std::size_t n = sys.size();
    if (f.size() != n) throw std::invalid_argument("right-hand side has the wrong length");
    if (n < 2) return SolveResult{f, 0, 0.0, true, false};
    const auto basis = ChangeOfBasis<double>::graph_laplacian(n);
    const std::vector<double> diag = diagonal_preconditioner(sys, kind);

    const std::vector<double> ft = basis.u_adjoint_apply(f);
    std::vector<double> g(ft.begin() + 1, ft.end());
    for (double& x : g) x *= sys.lambda;

    auto block = [&](const std::vector<double>& y) {
        std::vector<double> full(n, 0.0);
        std::copy(y.begin(), y.end(), full.begin() + 1);
        const std::vector<double> w = basis.u_adjoint_apply(system_apply(sys, basis.u_apply(full)));
        return std::vector<double>(w.begin() + 1, w.end());
    };
    auto precondition = [&](const std::vector<double>& y) {
        if (kind == DiagonalKind::none) return y;
        return projected_preconditioner_apply(diag, basis, BasisKind::unitary, y);
    };
    const CgResult cg = pcg(block, precondition, g, std::vector<double>(n - 1, 0.0), tol, maxit, monitor);

    std::vector<double> coords(n);
    coords[0] = ft[0];
    std::copy(cg.x.begin(), cg.x.end(), coords.begin() + 1);
    return SolveResult{basis.u_apply(coords), cg.iterations, cg.relative_residual, cg.converged, cg.breakdown};
}

// Solves A u = lambda f. Without deflation, CG starts from f.
inline SolveResult solve(const ShiftedSystem& sys, const std::vector<double>& f, SolverKind kind, double tol,
                         std::size_t maxit, const CgMonitor& monitor = {}) {
    if (is_deflated(kind)) return deflated_solve(sys, f, diagonal_of(kind), tol, maxit, monitor);
    const std::size_t n = sys.size();
    if (f.size() != n) throw std::invalid_argument("right-hand side has the wrong length");
    const std::vector<double> diag = diagonal_preconditioner(sys, diagonal_of(kind));
    std::vector<double> b(f);
    for (double& x : b) x *= sys.lambda;
    auto apply_a = [&](const std::vector<double>& v) { return system_apply(sys, v); };
    auto apply_m = [&](const std::vector<double>& r) {
        std::vector<double> z(r);
        for (std::size_t i = 0; i < n; ++i) z[i] /= diag[i];
        return z;
    };
    const CgResult cg = pcg(apply_a, apply_m, b, f, tol, maxit, monitor);
    return SolveResult{cg.x, cg.iterations, cg.relative_residual, cg.converged, cg.breakdown};
}

}  // namespace anova
