#include <gtest/gtest.h>

#include <Eigen/Eigenvalues>
#include <sstream>

#include "anova/spectral.hpp"
#include "test_support.hpp"

using namespace anova;
using namespace testing_support;

namespace {

Eigen::MatrixXd complete_gamma(Eigen::Index n) { return Eigen::MatrixXd::Ones(n, n) - Eigen::MatrixXd::Identity(n, n); }

DenseKernel complete_kernel(Eigen::Index n) {
    DenseKernel k;
    k.gamma = complete_gamma(n);
    k.squared_degree = Eigen::VectorXd::Constant(n, static_cast<double>(n - 1));
    k.sigma = 1.0;
    k.windows = 1;
    return k;
}

Eigen::MatrixXd random_symmetric(Eigen::Index n, std::mt19937_64& rng) {
    std::uniform_real_distribution<double> d(-1, 1);
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i)
        for (Eigen::Index j = 0; j < n; ++j) m(i, j) = d(rng);
    return 0.5 * (m + m.transpose());
}

const BoundCheck& find_check(const BoundsReport& rep, const std::string& name) {
    for (const auto& c : rep.checks)
        if (c.name == name) return c;
    throw std::runtime_error("missing check " + name);
}

}  // namespace

TEST(JacobiEigen, MatchesReferenceSolver) {
    std::mt19937_64 rng(1);
    for (Eigen::Index n : {1, 2, 5, 40, 120}) {
        const Eigen::MatrixXd a = random_symmetric(n, rng);
        const Eigensystem es = eig_symmetric(a, true);
        Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ref(a);
        EXPECT_LT((es.values - ref.eigenvalues()).cwiseAbs().maxCoeff(), 1e-12 * std::max(1.0, a.norm())) << n;
        EXPECT_LT((a * es.vectors - es.vectors * es.values.asDiagonal()).cwiseAbs().maxCoeff(), 1e-11 * a.norm());
        EXPECT_LT((es.vectors.transpose() * es.vectors - Eigen::MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff(), 1e-12);
    }
}

TEST(JacobiEigen, ValuesAreAscending) {
    std::mt19937_64 rng(2);
    const Eigen::VectorXd v = eigenvalues(random_symmetric(30, rng));
    for (Eigen::Index i = 1; i < v.size(); ++i) EXPECT_LE(v(i - 1), v(i));
}

TEST(Spectra, ThreeNodeExample) {
    // lambda = mu = 1 on K_3: spectrum {1, 4, 4}, Jacobi diagonal 3, row norms sqrt(11).
    const Eigen::MatrixXd a = dense_system(1.0, 1.0, complete_gamma(3));
    const Eigen::VectorXd s = eigenvalues(a);
    EXPECT_NEAR(s(0), 1.0, 1e-14);
    EXPECT_NEAR(s(1), 4.0, 1e-14);
    EXPECT_NEAR(s(2), 4.0, 1e-14);
    EXPECT_LT((row_norm_diagonal(a) - Eigen::Vector3d::Constant(std::sqrt(11.0))).cwiseAbs().maxCoeff(), 1e-14);
    const Eigen::VectorXd sj = diag_preconditioned_spectrum(a, Eigen::Vector3d::Constant(3.0));
    EXPECT_NEAR(sj(0), 1.0 / 3.0, 1e-14);
    EXPECT_NEAR(sj(2), 4.0 / 3.0, 1e-14);
}

TEST(Spectra, LeverageWithZeroShiftMovesTheSmallestEigenvalueToConnectivity) {
    const LeverageReport rep = leverage_check(complete_gamma(3), 1.0, 1.0, 0.0);
    for (Eigen::Index i = 0; i < 3; ++i) EXPECT_NEAR(rep.spectrum(i), 4.0, 1e-13);
    EXPECT_LT(rep.max_deviation, 1e-13);
}

TEST(Spectra, LeverageRelocatesTheEigenvalueForAnyWeight) {
    const DenseKernel k = assemble_dense(windows_from_image(noisy_scene(6, 7, 3, 25.0), 1, 40.0));
    for (double delta : {0.0, 0.3, 1.0}) EXPECT_LT(leverage_check(k.gamma, 1e-4, 1e-2, delta).max_deviation, 1e-12);
    EXPECT_THROW(leverage_check(k.gamma, 1e-4, 1e-2, 1.5), std::invalid_argument);
}

TEST(Spectra, ConditionEstimateExample) { EXPECT_DOUBLE_EQ(condition_estimate(0.1, 0.01, 50.0), 11.0); }

TEST(Spectra, DenseUnitaryBasisIsOrthogonalWithConstantFirstColumn) {
    const Eigen::MatrixXd u = dense_unitary_basis(9);
    EXPECT_LT((u.transpose() * u - Eigen::MatrixXd::Identity(9, 9)).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_LT((u.col(0) - Eigen::VectorXd::Constant(9, 1.0 / 3.0)).cwiseAbs().maxCoeff(), 1e-15);
}

TEST(Spectra, ProjectedSpectrumWithoutPreconditionerDropsLambda) {
    const DenseKernel k = assemble_dense(windows_from_image(noisy_scene(5, 6, 2, 25.0), 1, 40.0));
    const Eigen::MatrixXd a = dense_system(1e-6, 1e-2, k.gamma);
    const Eigen::VectorXd full = eigenvalues(a);
    const Eigen::VectorXd proj = projected_spectrum(a, Eigen::VectorXd::Ones(a.rows()), dense_unitary_basis(30));
    EXPECT_LT((proj - full.tail(29)).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Bounds, CompleteGraphAttainsEqualityCases) {
    for (Eigen::Index n : {3, 5, 12}) {
        const double nn = static_cast<double>(n);
        const double lambda = 0.2, mu = 0.5;
        const BoundsReport rep = bounds_report(complete_kernel(n), lambda, mu);
        EXPECT_TRUE(rep.all_hold());
        // Laplacian spectrum {0, n, ..., n}.
        EXPECT_NEAR(rep.laplacian_max, nn, 1e-12);
        EXPECT_NEAR(rep.laplacian_connectivity, nn, 1e-12);
        // The connectivity bound n/(n-1) min eta is attained.
        EXPECT_NEAR(rep.laplacian_connectivity, nn / (nn - 1) * rep.eta_min, 1e-12);
        // The Jacobi lower bound lambda / (lambda + mu max eta) is attained.
        const BoundCheck& jmin = find_check(rep, "jacobi_min");
        EXPECT_NEAR(jmin.value, jmin.lower, 1e-13);
        EXPECT_NEAR(rep.system_connectivity, lambda + mu * nn, 1e-12);
    }
}

TEST(Bounds, CompleteGraphLaplacianSpectrumIsExact) {
    const Eigen::VectorXd s = eigenvalues(dense_laplacian(complete_gamma(6)));
    EXPECT_NEAR(s(0), 0.0, 1e-13);
    for (Eigen::Index i = 1; i < 6; ++i) EXPECT_NEAR(s(i), 6.0, 1e-13);
}

TEST(Bounds, HoldOnSceneKernels) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 6; ++trial) {
        const std::size_t h = 5 + trial, w = 6 + trial;
        const double sigma = 20.0 + 15.0 * trial;
        const DenseKernel k = assemble_dense(windows_from_image(noisy_scene(h, w, trial, 25.0), 1 + trial % 2, sigma));
        const BoundsReport rep = bounds_report(k, std::pow(10.0, -1 - trial), 1e-2);
        for (const auto& c : rep.checks)
            EXPECT_TRUE(!c.asserted || c.holds)
                << c.name << " value " << c.value << " in [" << c.lower << ", " << c.upper << "]";
    }
}

TEST(Bounds, WorkingRangeFlag) {
    BoundsReport rep;
    rep.system_max = 3.0;
    rep.system_connectivity = 1.5;
    EXPECT_TRUE(rep.in_working_range());
    rep.system_connectivity = 2.5;
    EXPECT_FALSE(rep.in_working_range());
}

TEST(Bounds, RejectTinySystems) { EXPECT_THROW(bounds_report(complete_kernel(2), 1.0, 1.0), std::invalid_argument); }

TEST(SpectrumCsv, HeaderAndRowCount) {
    const DenseKernel k = assemble_dense(windows_from_image(noisy_scene(4, 5, 1, 20.0), 1, 30.0));
    const auto rows = spectrum_rows(k, 1e-3, 1e-2);
    EXPECT_EQ(rows.size(), 3u * 20 + 3u * 19);
    std::ostringstream out;
    write_spectrum_csv(out, rows);
    std::istringstream in(out.str());
    std::string header;
    std::getline(in, header);
    EXPECT_EQ(header, "sigma,lambda,eig_index,value,operator_tag");
    std::string line;
    std::size_t count = 0;
    while (std::getline(in, line)) ++count;
    EXPECT_EQ(count, rows.size());
}
