#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>
#include <stdexcept>
#include <string>
#include <vector>

#include "anova/basis.hpp"
#include "anova/kernel.hpp"

namespace anova {

// lambda I + mu (diag(Gamma 1) - Gamma).
inline Eigen::MatrixXd dense_system(double lambda, double mu, const Eigen::MatrixXd& gamma) {
    Eigen::MatrixXd a = -mu * gamma;
    a.diagonal() = Eigen::VectorXd::Constant(gamma.rows(), lambda) + mu * gamma.rowwise().sum();
    return a;
}

inline Eigen::MatrixXd dense_laplacian(const Eigen::MatrixXd& gamma) {
    Eigen::MatrixXd l = -gamma;
    l.diagonal() = gamma.rowwise().sum();
    return l;
}

struct Eigensystem {
    Eigen::VectorXd values;   // ascending
    Eigen::MatrixXd vectors;  // columns, empty unless requested
    int sweeps = 0;
};

// Cyclic Jacobi for a real symmetric matrix.
inline Eigensystem eig_symmetric(Eigen::MatrixXd a, bool want_vectors = false, int max_sweeps = 60) {
    if (a.rows() != a.cols()) throw std::invalid_argument("matrix is not square");
    const Eigen::Index n = a.rows();
    Eigensystem out;
    Eigen::MatrixXd v;
    if (want_vectors) v = Eigen::MatrixXd::Identity(n, n);
    const double scale = a.norm();
    for (out.sweeps = 0; out.sweeps < max_sweeps; ++out.sweeps) {
        double off = 0.0;
        for (Eigen::Index q = 1; q < n; ++q)
            for (Eigen::Index p = 0; p < q; ++p) off += a(p, q) * a(p, q);
        if (std::sqrt(off) <= 1e-15 * scale || scale == 0.0) break;
        for (Eigen::Index q = 1; q < n; ++q) {
            for (Eigen::Index p = 0; p < q; ++p) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;
                double* cp = a.col(p).data();
                double* cq = a.col(q).data();
                for (Eigen::Index k = 0; k < n; ++k) {
                    const double akp = cp[k], akq = cq[k];
                    cp[k] = c * akp - s * akq;
                    cq[k] = s * akp + c * akq;
                }
                // Columns now hold A J; finish J^T (A J) using symmetry.
                const double bpp = a(p, p), bqq = a(q, q), bpq = a(p, q), bqp = a(q, p);
                for (Eigen::Index k = 0; k < n; ++k) {
                    a(p, k) = a(k, p);
                    a(q, k) = a(k, q);
                }
                a(p, p) = c * bpp - s * bqp;
                a(q, q) = s * bpq + c * bqq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                if (want_vectors) {
                    double* vp = v.col(p).data();
                    double* vq = v.col(q).data();
                    for (Eigen::Index k = 0; k < n; ++k) {
                        const double x = vp[k], y = vq[k];
                        vp[k] = c * x - s * y;
                        vq[k] = s * x + c * y;
                    }
                }
            }
        }
    }
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), Eigen::Index{0});
    std::sort(order.begin(), order.end(), [&](Eigen::Index i, Eigen::Index j) { return a(i, i) < a(j, j); });
    out.values.resize(n);
    if (want_vectors) out.vectors.resize(n, n);
    for (Eigen::Index k = 0; k < n; ++k) {
        out.values(k) = a(order[static_cast<std::size_t>(k)], order[static_cast<std::size_t>(k)]);
        if (want_vectors) out.vectors.col(k) = v.col(order[static_cast<std::size_t>(k)]);
    }
    return out;
}

inline Eigen::VectorXd eigenvalues(const Eigen::MatrixXd& a) { return eig_symmetric(a).values; }

// Spectrum of D^{-1} A for SPD diagonal D, via D^{-1/2} A D^{-1/2}.
inline Eigen::VectorXd diag_preconditioned_spectrum(const Eigen::MatrixXd& a, const Eigen::VectorXd& d) {
    const Eigen::VectorXd s = d.cwiseSqrt().cwiseInverse();
    return eigenvalues(s.asDiagonal() * a * s.asDiagonal());
}

// Spectrum of C B for SPD C and symmetric B, via R^T B R with C = R R^T.
inline Eigen::VectorXd product_spectrum(const Eigen::MatrixXd& c, const Eigen::MatrixXd& b) {
    Eigen::LLT<Eigen::MatrixXd> llt(c);
    if (llt.info() != Eigen::Success) throw std::runtime_error("preconditioner block is not positive definite");
    const Eigen::MatrixXd r = llt.matrixL();
    Eigen::MatrixXd m = r.transpose() * b * r;
    m = 0.5 * (m + m.transpose());
    return eigenvalues(m);
}

// Dense U for the constant eigenvector.
inline Eigen::MatrixXd dense_unitary_basis(std::size_t n) {
    const auto basis = ChangeOfBasis<double>::graph_laplacian(n);
    Eigen::MatrixXd u(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(n));
    std::vector<double> e(n, 0.0);
    for (std::size_t j = 0; j < n; ++j) {
        e[j] = 1.0;
        const std::vector<double> col = basis.u_apply(e);
        e[j] = 0.0;
        for (std::size_t i = 0; i < n; ++i) u(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = col[i];
    }
    return u;
}

// Row 2-norms of A.
inline Eigen::VectorXd row_norm_diagonal(const Eigen::MatrixXd& a) { return a.rowwise().norm(); }

// Spectrum of pi_2(U^T D^{-1} U) pi_2(U^T A U).
inline Eigen::VectorXd projected_spectrum(const Eigen::MatrixXd& a, const Eigen::VectorXd& d,
                                          const Eigen::MatrixXd& u) {
    const Eigen::Index m = a.rows() - 1;
    const Eigen::MatrixXd block_a = (u.transpose() * a * u).bottomRightCorner(m, m);
    Eigen::MatrixXd block_p = (u.transpose() * d.cwiseInverse().asDiagonal() * u).bottomRightCorner(m, m);
    block_p = 0.5 * (block_p + block_p.transpose());
    return product_spectrum(block_p, 0.5 * (block_a + block_a.transpose()));
}

struct BoundCheck {
    std::string name;
    double value = 0.0;
    double lower = -std::numeric_limits<double>::infinity();
    double upper = std::numeric_limits<double>::infinity();
    // False when the bound is vacuous or its precondition fails; such checks
    // are reported but never count as failures.
    bool asserted = true;
    bool holds = true;
};

struct BoundsReport {
    std::size_t n = 0;
    double lambda = 0.0, mu = 0.0;
    double laplacian_max = 0.0, laplacian_connectivity = 0.0;
    double system_max = 0.0, system_connectivity = 0.0;
    double eta_min = 0.0, eta_max = 0.0;
    // Largest distance from each projected eigenvalue to the preconditioned
    // spectrum without its smallest eigenvalue.
    double jacobi_projection_gap = 0.0, l2_projection_gap = 0.0;
    std::vector<BoundCheck> checks;

    bool all_hold() const {
        return std::all_of(checks.begin(), checks.end(), [](const BoundCheck& c) { return !c.asserted || c.holds; });
    }
    bool in_working_range() const { return system_max - system_connectivity > 1.0; }
};

namespace detail {

// scale is the norm of the matrix whose eigenvalue is checked; it sets the
// absolute rounding slack.
inline BoundCheck make_check(std::string name, double value, double lower, double upper, double scale,
                             bool asserted = true) {
    BoundCheck c{std::move(name), value, lower, upper, asserted, true};
    const double slack = 1e-12 * scale + 1e-12 * std::abs(value);
    c.holds = value >= lower - slack && value <= upper + slack;
    return c;
}

inline double max_gap(const Eigen::VectorXd& projected, const Eigen::VectorXd& reference_without_min) {
    double gap = 0.0;
    for (Eigen::Index i = 0; i < projected.size(); ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (Eigen::Index j = 0; j < reference_without_min.size(); ++j)
            best = std::min(best, std::abs(projected(i) - reference_without_min(j)));
        gap = std::max(gap, best);
    }
    return gap;
}

}  // namespace detail

inline BoundsReport bounds_report(const DenseKernel& kernel, double lambda, double mu) {
    const Eigen::MatrixXd& gamma = kernel.gamma;
    const Eigen::Index n = gamma.rows();
    if (n < 3) throw std::invalid_argument("bounds need at least three points");
    const double inf = std::numeric_limits<double>::infinity();
    BoundsReport rep;
    rep.n = static_cast<std::size_t>(n);
    rep.lambda = lambda;
    rep.mu = mu;
    const double nn = static_cast<double>(n);
    const Eigen::VectorXd eta = gamma.rowwise().sum();
    rep.eta_min = eta.minCoeff();
    rep.eta_max = eta.maxCoeff();

    const Eigen::VectorXd sl = eigenvalues(dense_laplacian(gamma));
    rep.laplacian_max = sl(n - 1);
    rep.laplacian_connectivity = sl(1);
    rep.system_max = lambda + mu * rep.laplacian_max;
    rep.system_connectivity = lambda + mu * rep.laplacian_connectivity;

    const double lscale = rep.laplacian_max;
    rep.checks.push_back(
        detail::make_check("laplacian_max", rep.laplacian_max, rep.eta_max, 2.0 * rep.eta_max, lscale));
    rep.checks.push_back(detail::make_check("laplacian_connectivity", rep.laplacian_connectivity, -inf,
                                            nn / (nn - 1.0) * rep.eta_min, lscale));
    const double first_col_min = gamma.col(0).tail(n - 1).minCoeff();
    rep.checks.push_back(detail::make_check("system_connectivity", rep.system_connectivity, mu * first_col_min + lambda,
                                            inf, rep.system_max, first_col_min > 0.0));

    const Eigen::MatrixXd a = dense_system(lambda, mu, gamma);
    const Eigen::VectorXd pa = Eigen::VectorXd::Constant(n, lambda) + mu * eta;
    const Eigen::VectorXd pb = row_norm_diagonal(a);
    const double windows = static_cast<double>(std::max<std::size_t>(1, kernel.windows));
    Eigen::VectorXd pb_est = pa;
    if (kernel.squared_degree.size() == n)
        for (Eigen::Index i = 0; i < n; ++i)
            pb_est(i) = std::sqrt(std::pow(mu / windows, 2) * kernel.squared_degree(i) + pa(i) * pa(i));

    const Eigen::VectorXd sa = diag_preconditioned_spectrum(a, pa);
    const double upper_a = std::min(2.0, nn / (nn - 1.0) * rep.laplacian_max / rep.laplacian_connectivity);
    rep.checks.push_back(detail::make_check("jacobi_min", sa(0), lambda / (lambda + mu * rep.eta_max), inf, 2.0));
    rep.checks.push_back(detail::make_check("jacobi_max", sa(n - 1), -inf, upper_a, 2.0));

    double sandwich = 0.0;
    bool sandwich_ok = true;
    for (Eigen::Index i = 0; i < n; ++i) {
        const double tol = 1e-12 * pb(i);
        sandwich_ok = sandwich_ok && pa(i) <= pb_est(i) + tol && pb_est(i) <= pb(i) + tol &&
                      pb(i) <= std::sqrt(2.0) * pa(i) + tol;
        sandwich = std::max(sandwich, pb(i) / pa(i));
    }
    BoundCheck sw{"l2_sandwich", sandwich, 1.0, std::sqrt(2.0), true, sandwich_ok};
    rep.checks.push_back(sw);

    const Eigen::VectorXd sb = diag_preconditioned_spectrum(a, pb);
    const Eigen::VectorXd sb_est = diag_preconditioned_spectrum(a, pb_est);
    rep.checks.push_back(detail::make_check("l2_min", sb(0), sa(0) / std::sqrt(2.0), inf, 2.0));
    rep.checks.push_back(detail::make_check("l2_max", sb(n - 1), -inf, sa(n - 1), 2.0));
    rep.checks.push_back(detail::make_check("l2_estimate_min", sb_est(0), sa(0) / std::sqrt(2.0), inf, 2.0));
    rep.checks.push_back(detail::make_check("l2_estimate_max", sb_est(n - 1), -inf, sa(n - 1), 2.0));

    const Eigen::MatrixXd u = dense_unitary_basis(static_cast<std::size_t>(n));
    const double shift = lambda / (lambda + mu * rep.eta_min);
    struct Case {
        const char* name;
        const Eigen::VectorXd* d;
        const Eigen::VectorXd* spectrum;
        double* gap;
    };
    for (const Case& c : {Case{"projected_jacobi", &pa, &sa, &rep.jacobi_projection_gap},
                          Case{"projected_l2", &pb, &sb, &rep.l2_projection_gap}}) {
        const Eigen::VectorXd sp = projected_spectrum(a, *c.d, u);
        const double lower = (*c.spectrum)(1) - shift;
        rep.checks.push_back(detail::make_check(std::string(c.name) + "_min", sp(0), lower, inf, 2.0, lower > 0.0));
        rep.checks.push_back(
            detail::make_check(std::string(c.name) + "_max", sp(n - 2), -inf, (*c.spectrum)(n - 1), 2.0));
        *c.gap = detail::max_gap(sp, c.spectrum->tail(n - 1));
    }
    return rep;
}

struct LeverageReport {
    double scale = 0.0;  // l_1
    Eigen::VectorXd spectrum;
    Eigen::VectorXd expected;
    double max_deviation = 0.0;
};

// Raises the lambda eigenvalue of A (constant eigenvector) to lambda l_1 with
// l_1 = (delta rho(B) + (1 - delta) a(B) + lambda) / lambda, B = mu L.
inline LeverageReport leverage_check(const Eigen::MatrixXd& gamma, double lambda, double mu, double delta) {
    if (!(delta >= 0.0 && delta <= 1.0)) throw std::invalid_argument("delta must lie in [0, 1]");
    const Eigen::Index n = gamma.rows();
    const Eigen::VectorXd sl = eigenvalues(dense_laplacian(gamma));
    const double rho_b = mu * sl(n - 1), a_b = mu * sl(1);
    LeverageReport rep;
    rep.scale = (delta * rho_b + (1.0 - delta) * a_b + lambda) / lambda;
    const Eigen::MatrixXd a = dense_system(lambda, mu, gamma);
    const Eigen::MatrixXd m =
        a + Eigen::MatrixXd::Constant(n, n, (lambda * rep.scale - lambda) / static_cast<double>(n));
    rep.spectrum = eigenvalues(m);
    rep.expected.resize(n);
    rep.expected(0) = lambda * rep.scale;
    for (Eigen::Index i = 1; i < n; ++i) rep.expected(i) = lambda + mu * sl(i);
    std::sort(rep.expected.data(), rep.expected.data() + n);
    rep.max_deviation = (rep.spectrum - rep.expected).cwiseAbs().maxCoeff();
    return rep;
}

// Upper estimate of the condition number of A.
inline double condition_estimate(double lambda, double mu, double max_degree) {
    if (!(lambda > 0.0)) throw std::invalid_argument("lambda must be positive");
    return 2.0 * mu * max_degree / lambda + 1.0;
}

struct SpectrumRow {
    double sigma, lambda;
    std::size_t index;
    double value;
    std::string tag;
};

// Spectra of A and of its preconditioned and projected variants.
inline std::vector<SpectrumRow> spectrum_rows(const DenseKernel& kernel, double lambda, double mu) {
    const Eigen::MatrixXd a = dense_system(lambda, mu, kernel.gamma);
    const Eigen::Index n = a.rows();
    const Eigen::VectorXd pa = Eigen::VectorXd::Constant(n, lambda) + mu * kernel.degree();
    const Eigen::VectorXd pb = row_norm_diagonal(a);
    const Eigen::MatrixXd u = dense_unitary_basis(static_cast<std::size_t>(n));
    std::vector<SpectrumRow> rows;
    auto emit = [&](const Eigen::VectorXd& values, const char* tag) {
        for (Eigen::Index i = 0; i < values.size(); ++i)
            rows.push_back({kernel.sigma, lambda, static_cast<std::size_t>(i), values(i), tag});
    };
    emit(eigenvalues(a), "A");
    emit(diag_preconditioned_spectrum(a, pa), "jacobi");
    emit(diag_preconditioned_spectrum(a, pb), "l2");
    emit(projected_spectrum(a, Eigen::VectorXd::Ones(n), u), "deflated-none");
    emit(projected_spectrum(a, pa, u), "deflated-jacobi");
    emit(projected_spectrum(a, pb, u), "deflated-l2");
    return rows;
}

inline void write_spectrum_csv(std::ostream& out, const std::vector<SpectrumRow>& rows, bool header = true) {
    if (header) out << "sigma,lambda,eig_index,value,operator_tag\n";
    out.precision(17);
    for (const auto& r : rows)
        out << r.sigma << ',' << r.lambda << ',' << r.index << ',' << r.value << ',' << r.tag << '\n';
}

}  // namespace anova
