#include <gtest/gtest.h>

#include "anova/kernel.hpp"
#include "test_support.hpp"

using namespace anova;
using namespace testing_support;

TEST(DenseKernel, MatchesBruteForceAssembly) {
    const WindowSet ws = windows_from_image(noisy_scene(8, 9, 1, 20.0), 1, 35.0);
    const DenseKernel k = assemble_dense(ws);
    const Eigen::MatrixXd ref = brute_force_gamma(ws);
    EXPECT_LT((k.gamma - ref).cwiseAbs().maxCoeff(), 1e-14);
    EXPECT_EQ(k.windows, 3u);
    EXPECT_DOUBLE_EQ(k.sigma, 35.0);
}

TEST(DenseKernel, IsSymmetricWithZeroDiagonalAndUnitBound) {
    const DenseKernel k = assemble_dense(windows_from_image(noisy_scene(7, 7, 2, 30.0), 2, 30.0));
    EXPECT_LT((k.gamma - k.gamma.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    for (Eigen::Index i = 0; i < k.gamma.rows(); ++i) EXPECT_EQ(k.gamma(i, i), 0.0);
    EXPECT_GE(k.gamma.minCoeff(), 0.0);
    EXPECT_LE(k.gamma.maxCoeff(), 1.0);
}

TEST(DenseKernel, SquaredDegreeSumsSquaredSubkernels) {
    const WindowSet ws = windows_from_image(noisy_scene(6, 6, 3, 20.0), 1, 40.0);
    const DenseKernel k = assemble_dense(ws);
    // Each subkernel squared is the subkernel at half the squared width.
    WindowSet half = ws;
    half.sigma = ws.sigma / std::sqrt(2.0);
    const Eigen::MatrixXd g2 = brute_force_gamma(half) * static_cast<double>(ws.count());
    EXPECT_LT((k.squared_degree - g2.rowwise().sum()).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(DenseKernel, RefusesSizesAboveTheDenseLimit) {
    const WindowSet ws = windows_from_image(noisy_scene(10, 10, 1, 20.0), 1, 40.0);
    EXPECT_THROW(assemble_dense(ws, 99), DenseLimitExceeded);
    EXPECT_NO_THROW(assemble_dense(ws, 100));
}

class FastKernel : public ::testing::TestWithParam<std::tuple<double, std::size_t>> {};

TEST_P(FastKernel, ApplyMatchesDense) {
    const auto [sigma, radius] = GetParam();
    const auto op = scene_operator(20, 22, sigma, KernelMode::fast, radius);
    const DenseKernel k = assemble_dense(op->windows());
    std::mt19937_64 rng(3);
    const auto v = random_vector(op->size(), rng, 0.0, 1.0);
    EXPECT_LT(rel_inf_error(op->apply(v), from_eigen(k.gamma * to_eigen(v))), 1e-5);
    EXPECT_LT(rel_inf_error(op->degree(), from_eigen(k.degree())), 1e-5);
    EXPECT_LT(rel_inf_error(op->degree_squared(), from_eigen(k.squared_degree)), 1e-5);
}

INSTANTIATE_TEST_SUITE_P(Settings, FastKernel,
                         ::testing::Values(std::make_tuple(30.0, 1u), std::make_tuple(40.0, 1u),
                                           std::make_tuple(50.0, 2u), std::make_tuple(1400.0, 1u)));

TEST(ExactKernel, MatchesDenseProduct) {
    const auto op = scene_operator(10, 12, 30.0, KernelMode::exact);
    const DenseKernel k = assemble_dense(op->windows());
    std::mt19937_64 rng(4);
    const auto v = random_vector(op->size(), rng);
    EXPECT_LT(max_abs_diff(op->apply(v), from_eigen(k.gamma * to_eigen(v))), 1e-12);
}

TEST(ExactKernel, RefusedAboveTheDenseLimit) {
    KernelOptions opt;
    opt.mode = KernelMode::exact;
    opt.dense_limit = 50;
    const WindowSet ws = windows_from_image(noisy_scene(8, 8, 1, 20.0), 1, 40.0);
    EXPECT_THROW(build_anova_operator(ws, opt), DenseLimitExceeded);
}

TEST(FastKernel, IsSymmetric) {
    const auto op = scene_operator(24, 24, 40.0);
    std::mt19937_64 rng(5);
    const auto x = random_vector(op->size(), rng), y = random_vector(op->size(), rng);
    const auto gx = op->apply(x), gy = op->apply(y);
    double a = 0.0, b = 0.0, scale = 0.0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        a += gx[i] * y[i];
        b += x[i] * gy[i];
        scale += std::abs(gx[i] * y[i]);
    }
    EXPECT_NEAR(a, b, 1e-6 * scale);
}

TEST(FastKernel, LaplacianAnnihilatesConstants) {
    const auto op = scene_operator(16, 16, 40.0);
    const auto ones = std::vector<double>(op->size(), 1.0);
    const auto g = op->apply(ones);
    const auto& eta = op->degree();
    for (std::size_t i = 0; i < g.size(); ++i) EXPECT_NEAR(eta[i] - g[i], 0.0, 1e-14 * eta[i]);
}

TEST(FastKernel, DegreeIsStableAcrossCalls) {
    const auto op = scene_operator(12, 12, 40.0);
    const auto* first = &op->degree();
    EXPECT_EQ(first, &op->degree());
    EXPECT_EQ(op->degree(), op->apply(std::vector<double>(op->size(), 1.0)));
}

TEST(FastKernel, ApplyIsDeterministic) {
    const auto op = scene_operator(20, 20, 40.0);
    std::mt19937_64 rng(6);
    const auto v = random_vector(op->size(), rng);
    EXPECT_EQ(op->apply(v), op->apply(v));
}

TEST(AnovaOperator, RejectsWrongLengths) {
    const auto op = scene_operator(5, 5, 40.0);
    EXPECT_THROW(op->apply(std::vector<double>(3)), std::invalid_argument);
}
