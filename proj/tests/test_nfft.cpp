#include <gtest/gtest.h>

#include <numbers>

#include "anova/nfft.hpp"
#include "test_support.hpp"

using namespace anova;
using testing_support::max_abs_diff;
using testing_support::random_complex;
using testing_support::rel_inf_error;

namespace {

NodeSet random_nodes(std::size_t dim, std::size_t count, std::mt19937_64& rng) {
    NodeSet ns;
    ns.dim = dim;
    ns.coords = testing_support::random_vector(dim * count, rng, -0.5, 0.5 - 1e-12);
    return ns;
}

std::size_t coefficient_count(const std::vector<std::size_t>& bw) {
    std::size_t t = 1;
    for (std::size_t m : bw) t *= m;
    return t;
}

// One-dimensional trigonometric sum written out independently of the library.
std::vector<complex> direct_1d(std::size_t bandwidth, const std::vector<double>& x, const std::vector<complex>& c) {
    std::vector<complex> out(x.size());
    const auto half = static_cast<double>(bandwidth / 2);
    for (std::size_t j = 0; j < x.size(); ++j)
        for (std::size_t i = 0; i < bandwidth; ++i)
            out[j] += c[i] * std::polar(1.0, -2.0 * std::numbers::pi * (static_cast<double>(i) - half) * x[j]);
    return out;
}

complex inner(const std::vector<complex>& a, const std::vector<complex>& b) {
    complex s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * std::conj(b[i]);
    return s;
}

double norm(const std::vector<complex>& a) { return std::sqrt(std::abs(inner(a, a))); }

}  // namespace

TEST(Ndft, SingleFrequencyAtQuarterTurnIsMinusI) {
    NodeSet ns{1, {0.25}};
    // Bandwidth 4 has frequencies -2..1; index 3 is k = 1.
    const auto f = ndft({4}, ns, {0.0, 0.0, 0.0, 1.0});
    EXPECT_NEAR(f[0].real(), 0.0, 1e-15);
    EXPECT_NEAR(f[0].imag(), -1.0, 1e-15);
}

TEST(Ndft, MatchesIndependentOneDimensionalSum) {
    std::mt19937_64 rng(5);
    const NodeSet ns = random_nodes(1, 40, rng);
    const auto c = random_complex(16, rng);
    EXPECT_LT(max_abs_diff(ndft({16}, ns, c), direct_1d(16, ns.coords, c)), 1e-12);
}

TEST(Ndft, AdjointIsTheConjugateTranspose) {
    std::mt19937_64 rng(6);
    const std::vector<std::size_t> bw = {4, 8};
    const NodeSet ns = random_nodes(2, 30, rng);
    const auto c = random_complex(coefficient_count(bw), rng);
    const auto y = random_complex(30, rng);
    const complex lhs = inner(ndft(bw, ns, c), y);
    const complex rhs = inner(c, ndft_adjoint(bw, ns, y));
    EXPECT_LT(std::abs(lhs - rhs), 1e-12 * norm(c) * norm(y));
}

TEST(Nfft, MatchesNdftInEachDimension) {
    std::mt19937_64 rng(7);
    for (const auto& bw : std::vector<std::vector<std::size_t>>{{64}, {16, 16}, {8, 8, 8}}) {
        const NfftPlan plan(bw, 2.0, 5);
        const NodeSet ns = random_nodes(bw.size(), 200, rng);
        const auto c = random_complex(coefficient_count(bw), rng);
        EXPECT_LT(rel_inf_error(nfft(plan, ns, c), ndft(bw, ns, c)), 1e-6) << bw.size();
        const auto y = random_complex(200, rng);
        EXPECT_LT(rel_inf_error(nfft_adjoint(plan, ns, y), ndft_adjoint(bw, ns, y)), 1e-6) << bw.size();
    }
}

TEST(Nfft, AnisotropicBandwidths) {
    std::mt19937_64 rng(8);
    const std::vector<std::size_t> bw = {32, 4};
    const NfftPlan plan(bw, 2.0, 6);
    const NodeSet ns = random_nodes(2, 100, rng);
    const auto c = random_complex(128, rng);
    EXPECT_LT(rel_inf_error(nfft(plan, ns, c), ndft(bw, ns, c)), 1e-7);
}

TEST(Nfft, AdjointIdentityHolds) {
    std::mt19937_64 rng(9);
    for (const auto& bw : std::vector<std::vector<std::size_t>>{{32}, {8, 16}, {8, 8, 4}}) {
        const NfftPlan plan(bw, 2.0, 5);
        const NodeSet ns = random_nodes(bw.size(), 150, rng);
        const PreparedNodes prepared(plan, ns);
        const auto c = random_complex(coefficient_count(bw), rng);
        const auto y = random_complex(150, rng);
        const complex lhs = inner(nfft(plan, prepared, c), y);
        const complex rhs = inner(c, nfft_adjoint(plan, prepared, y));
        EXPECT_LT(std::abs(lhs - rhs), 1e-12 * norm(c) * norm(y));
    }
}

TEST(Nfft, ErrorShrinksWithCutoff) {
    std::mt19937_64 rng(10);
    const NodeSet ns = random_nodes(1, 300, rng);
    const auto c = random_complex(128, rng);
    const auto ref = ndft({128}, ns, c);
    double previous = 1.0;
    for (std::size_t m : {2u, 4u, 6u, 8u}) {
        const double err = rel_inf_error(nfft(NfftPlan({128}, 2.0, m), ns, c), ref);
        EXPECT_LT(err, previous);
        previous = err;
    }
    EXPECT_LT(previous, 1e-12);
}

TEST(Nfft, GaussianWindowIsSupported) {
    std::mt19937_64 rng(11);
    const NodeSet ns = random_nodes(2, 100, rng);
    const auto c = random_complex(256, rng);
    const NfftPlan plan({16, 16}, 2.0, 8, WindowKind::gaussian);
    EXPECT_LT(rel_inf_error(nfft(plan, ns, c), ndft({16, 16}, ns, c)), 1e-6);
}

TEST(Nfft, NodeOnLowerBoundaryIsAccepted) {
    NodeSet ns{1, {-0.5, 0.0}};
    std::mt19937_64 rng(12);
    const auto c = random_complex(16, rng);
    EXPECT_LT(rel_inf_error(nfft(NfftPlan({16}), ns, c), ndft({16}, ns, c)), 1e-8);
}

TEST(Nfft, RejectsNodesOutsideTheTorus) {
    const NfftPlan plan({16});
    EXPECT_THROW(PreparedNodes(plan, NodeSet{1, {0.5}}), std::domain_error);
    EXPECT_THROW(PreparedNodes(plan, NodeSet{1, {-0.75}}), std::domain_error);
}

TEST(Nfft, RejectsInvalidPlans) {
    EXPECT_THROW(NfftPlan({12}), std::invalid_argument);
    EXPECT_THROW(NfftPlan({16}, 1.0), std::invalid_argument);
    EXPECT_THROW(NfftPlan({16}, 2.0, 0), std::invalid_argument);
    EXPECT_THROW(NfftPlan({}, 2.0), std::invalid_argument);
}
