#pragma once

#include <cmath>
#include <complex>
#include <stdexcept>
#include <type_traits>
#include <vector>

namespace anova {

namespace detail {

template <class T>
struct is_complex : std::false_type {};
template <class T>
struct is_complex<std::complex<T>> : std::true_type {};

template <class Scalar>
Scalar conj_of(const Scalar& x) {
    if constexpr (is_complex<Scalar>::value)
        return std::conj(x);
    else
        return x;
}

// Kahan-compensated accumulator.
template <class Scalar>
struct CompensatedSum {
    Scalar sum{};
    Scalar carry{};

    void add(const Scalar& x) {
        const Scalar y = x - carry;
        const Scalar t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

}  // namespace detail

// Suffix sums anchored at the first entry: out_i = x_1 + sum_{j > i} x_j for
// i < n, out_n = x_1 (1-based).
template <class Scalar>
std::vector<Scalar> scs_up(const std::vector<Scalar>& x) {
    const std::size_t n = x.size();
    std::vector<Scalar> out(n);
    if (n == 0) return out;
    detail::CompensatedSum<Scalar> acc;
    acc.add(x[0]);
    for (std::size_t i = n; i-- > 0;) {
        out[i] = acc.sum;
        if (i > 0) acc.add(x[i]);
    }
    return out;
}

// Prefix sums shifted by one, with the total in front: out_1 = sum_j x_j,
// out_i = sum_{j < i} x_j for i >= 2 (1-based).
template <class Scalar>
std::vector<Scalar> scs_down(const std::vector<Scalar>& x) {
    const std::size_t n = x.size();
    std::vector<Scalar> out(n);
    if (n == 0) return out;
    detail::CompensatedSum<Scalar> acc;
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0) out[i] = acc.sum;
        acc.add(x[i]);
    }
    out[0] = acc.sum;
    return out;
}

// Two bases whose first column is a given eigenvector v, applied in O(n):
// the sparse basis Q with Qu = (<u, v>; u_1 v_{2:n} - v_1 u_{2:n}) and the
// unitary basis U with first column v / |v|.
//
// Both need a real, nonzero first entry. Otherwise v is cyclically rotated to
// its first nonzero entry and its phase normalised; the bases then act as
// X = R^T X', where R is the rotation and X' is built on the adjusted vector.
template <class Scalar>
class ChangeOfBasis {
public:
    using Vec = std::vector<Scalar>;

    explicit ChangeOfBasis(const Vec& v) {
        const std::size_t n = v.size();
        if (n == 0) throw std::invalid_argument("empty eigenvector");
        while (pivot_ < n && v[pivot_] == Scalar(0)) ++pivot_;
        if (pivot_ == n) throw std::invalid_argument("eigenvector is zero");
        v_.resize(n);
        for (std::size_t k = 0; k < n; ++k) v_[k] = v[(k + pivot_) % n];
        if constexpr (detail::is_complex<Scalar>::value) {
            phase_ = std::conj(v_[0]) / std::abs(v_[0]);
            for (Scalar& x : v_) x *= phase_;
            v_[0] = Scalar(std::abs(v_[0]));
        }

        // Prefix norms on a copy scaled by its largest magnitude.
        double peak = 0.0;
        for (const Scalar& x : v_) peak = std::max(peak, static_cast<double>(std::abs(x)));
        prefix_.resize(n);
        detail::CompensatedSum<double> acc;
        for (std::size_t k = 0; k < n; ++k) {
            const double r = std::abs(v_[k]) / peak;
            acc.add(r * r);
            prefix_[k] = std::sqrt(acc.sum);
        }
        unit_.resize(n);
        for (std::size_t k = 0; k < n; ++k) unit_[k] = v_[k] / Scalar(peak);
        for (const Scalar& x : v_) norm2_ += std::norm(std::complex<double>(x));
        a_.assign(n, 0.0);
        b_.assign(n, 0.0);
        for (std::size_t k = 1; k < n; ++k) {
            a_[k] = prefix_[k - 1] / prefix_[k];
            b_[k] = 1.0 / (prefix_[k - 1] * prefix_[k]);
        }
    }

    static ChangeOfBasis graph_laplacian(std::size_t n) { return ChangeOfBasis(Vec(n, Scalar(1))); }

    std::size_t size() const { return v_.size(); }
    std::size_t pivot() const { return pivot_; }
    Scalar phase() const { return phase_; }
    // The rotated, phase-normalised eigenvector the bases are built on.
    const Vec& adjusted_vector() const { return v_; }

    Vec q_apply(const Vec& u) const {
        check(u);
        return unrotate(q_core(u));
    }

    Vec q_inverse_apply(const Vec& u) const {
        check(u);
        return q_inverse_core(rotate(u));
    }

    Vec u_apply(const Vec& x) const {
        check(x);
        const std::size_t n = size();
        Vec c(n);
        c[0] = x[0] / Scalar(prefix_[n - 1]);
        for (std::size_t k = 1; k < n; ++k) c[k] = detail::conj_of(unit_[k]) * Scalar(b_[k]) * x[k];
        const Vec s = scs_up(c);
        Vec out(n);
        for (std::size_t k = 0; k < n; ++k) out[k] = unit_[k] * s[k] - Scalar(a_[k]) * x[k];
        return unrotate(out);
    }

    Vec u_adjoint_apply(const Vec& y) const {
        check(y);
        const std::size_t n = size();
        const Vec w = rotate(y);
        Vec c(n);
        for (std::size_t k = 0; k < n; ++k) c[k] = detail::conj_of(unit_[k]) * w[k];
        const Vec s = scs_down(c);
        Vec out(n);
        out[0] = s[0] / Scalar(prefix_[n - 1]);
        for (std::size_t k = 1; k < n; ++k) out[k] = unit_[k] * Scalar(b_[k]) * s[k] - Scalar(a_[k]) * w[k];
        return out;
    }

private:
    void check(const Vec& x) const {
        if (x.size() != size()) throw std::invalid_argument("vector length does not match the basis");
    }

    Vec rotate(const Vec& x) const {
        if (pivot_ == 0) return x;
        Vec out(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) out[k] = x[(k + pivot_) % x.size()];
        return out;
    }

    Vec unrotate(const Vec& x) const {
        if (pivot_ == 0) return x;
        Vec out(x.size());
        for (std::size_t k = 0; k < x.size(); ++k) out[(k + pivot_) % x.size()] = x[k];
        return out;
    }

    Vec q_core(const Vec& u) const {
        const std::size_t n = size();
        Vec out(n);
        detail::CompensatedSum<Scalar> dot;
        for (std::size_t k = 0; k < n; ++k) dot.add(detail::conj_of(v_[k]) * u[k]);
        out[0] = dot.sum;
        for (std::size_t k = 1; k < n; ++k) out[k] = u[0] * v_[k] - v_[0] * u[k];
        return out;
    }

    Vec q_inverse_core(const Vec& u) const {
        const std::size_t n = size();
        detail::CompensatedSum<Scalar> dot;
        for (std::size_t k = 0; k < n; ++k) dot.add(detail::conj_of(v_[k]) * u[k]);
        const Scalar coef = dot.sum / Scalar(norm2_);
        Vec out(n);
        out[0] = coef;
        for (std::size_t k = 1; k < n; ++k) out[k] = (coef * v_[k] - u[k]) / v_[0];
        return out;
    }

    std::size_t pivot_ = 0;
    Scalar phase_ = Scalar(1);
    Vec v_;
    Vec unit_;
    double norm2_ = 0.0;
    std::vector<double> prefix_;
    std::vector<double> a_;
    std::vector<double> b_;
};

}  // namespace anova
