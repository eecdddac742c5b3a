#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <sstream>

#include "anova/imaging.hpp"
#include "anova/synthetic.hpp"

using namespace anova;

namespace {

GrayImage constant_image(std::size_t h, std::size_t w, double value) {
    GrayImage img(h, w);
    std::fill(img.pixels.begin(), img.pixels.end(), value);
    return img;
}

ImageErrorKind parse_error(const std::string& bytes) {
    std::istringstream in(bytes);
    try {
        read_pgm(in);
    } catch (const ImageError& e) {
        return e.kind();
    }
    ADD_FAILURE() << "no error for input";
    return ImageErrorKind::write_failed;
}

}  // namespace

TEST(Pgm, RoundTripsEightBitImages) {
    GrayImage img(3, 4);
    for (std::size_t i = 0; i < img.size(); ++i) img.pixels[i] = static_cast<double>(i * 20);
    std::stringstream buf;
    write_pgm(buf, img);
    const GrayImage back = read_pgm(buf);
    ASSERT_EQ(back.height, 3u);
    ASSERT_EQ(back.width, 4u);
    EXPECT_EQ(back.pixels, img.pixels);
}

TEST(Pgm, WriterClampsAndRounds) {
    GrayImage img(1, 4);
    img.pixels = {-5.0, 300.0, 12.6, 12.4};
    std::stringstream buf;
    write_pgm(buf, img);
    const GrayImage back = read_pgm(buf);
    EXPECT_EQ(back.pixels, (std::vector<double>{0.0, 255.0, 13.0, 12.0}));
}

TEST(Pgm, HeaderCommentsAreSkipped) {
    std::string bytes = "P5\n# a comment\n2 1\n# another\n255\n";
    bytes += static_cast<char>(7);
    bytes += static_cast<char>(200);
    std::istringstream in(bytes);
    const GrayImage img = read_pgm(in);
    EXPECT_EQ(img.pixels, (std::vector<double>{7.0, 200.0}));
}

TEST(Pgm, SixteenBitSamplesScaleToEightBitRange) {
    std::string bytes = "P5 3 1 65535\n";
    for (unsigned v : {0u, 257u, 65535u}) {
        bytes += static_cast<char>(v >> 8);
        bytes += static_cast<char>(v & 0xFF);
    }
    std::istringstream in(bytes);
    const GrayImage img = read_pgm(in);
    EXPECT_DOUBLE_EQ(img.pixels[0], 0.0);
    EXPECT_DOUBLE_EQ(img.pixels[1], 1.0);
    EXPECT_DOUBLE_EQ(img.pixels[2], 255.0);
}

TEST(Pgm, ReportsErrorKinds) {
    EXPECT_EQ(parse_error("P2\n1 1\n255\n0"), ImageErrorKind::bad_magic);
    EXPECT_EQ(parse_error("P5\nx 1\n255\n"), ImageErrorKind::malformed_header);
    EXPECT_EQ(parse_error("P5\n2 2\n0\n"), ImageErrorKind::malformed_header);
    EXPECT_EQ(parse_error("P5\n2 2\n255\nab"), ImageErrorKind::truncated_payload);
}

TEST(Pgm, MissingFileNamesThePath) {
    try {
        load_image("/nonexistent/dir/image.pgm");
        FAIL();
    } catch (const ImageError& e) {
        EXPECT_EQ(e.kind(), ImageErrorKind::open_failed);
        EXPECT_NE(std::string(e.what()).find("/nonexistent/dir/image.pgm"), std::string::npos);
    }
}

TEST(Pgm, SaveAndLoadThroughFiles) {
    const auto path = std::filesystem::temp_directory_path() / "anova_imaging_roundtrip.pgm";
    const GrayImage img = make_scene(9, 7, 3);
    save_image(img, path.string());
    const GrayImage back = load_image(path.string());
    std::filesystem::remove(path);
    for (std::size_t i = 0; i < img.size(); ++i) EXPECT_EQ(back.pixels[i], std::round(img.pixels[i]));
}

TEST(Noise, SplitMixStreamMatchesReferenceOutput) {
    // First outputs of the reference SplitMix64 generator seeded with 0.
    NormalStream rng(0);
    EXPECT_EQ(rng.next_u64(), 0xE220A8397B1DCDAFULL);
    EXPECT_EQ(rng.next_u64(), 0x6E789E6AA1B965F4ULL);
}

TEST(Noise, UniformsStayInHalfOpenUnitInterval) {
    NormalStream rng(42);
    for (int i = 0; i < 10000; ++i) {
        const double u = rng.next_uniform();
        ASSERT_GT(u, 0.0);
        ASSERT_LE(u, 1.0);
    }
}

TEST(Noise, IsDeterministicPerSeed) {
    const GrayImage img = constant_image(16, 16, 100.0);
    const GrayImage a = add_gaussian_noise(img, {10.0, 5});
    const GrayImage b = add_gaussian_noise(img, {10.0, 5});
    const GrayImage c = add_gaussian_noise(img, {10.0, 6});
    EXPECT_EQ(a.pixels, b.pixels);
    EXPECT_NE(a.pixels, c.pixels);
}

TEST(Noise, ZeroStddevIsIdentity) {
    const GrayImage img = make_scene(8, 8, 1);
    EXPECT_EQ(add_gaussian_noise(img, {0.0, 9}).pixels, img.pixels);
}

TEST(Noise, SampleMomentsMatchTheRequestedStddev) {
    const GrayImage img = constant_image(200, 200, 0.0);
    const GrayImage noisy = add_gaussian_noise(img, {30.0, 11});
    double mean = 0.0, sq = 0.0;
    for (double p : noisy.pixels) mean += p;
    mean /= static_cast<double>(noisy.size());
    for (double p : noisy.pixels) sq += (p - mean) * (p - mean);
    const double sd = std::sqrt(sq / static_cast<double>(noisy.size() - 1));
    // 4e4 samples: standard errors 0.15 for the mean and about 0.11 for the stddev.
    EXPECT_NEAR(mean, 0.0, 0.75);
    EXPECT_NEAR(sd, 30.0, 0.6);
}

TEST(Noise, IsNotClipped) {
    const GrayImage noisy = add_gaussian_noise(constant_image(50, 50, 250.0), {30.0, 2});
    EXPECT_GT(*std::max_element(noisy.pixels.begin(), noisy.pixels.end()), 255.0);
}

TEST(Ssim, IdenticalImagesScoreOne) {
    const GrayImage img = make_scene(20, 20, 4);
    EXPECT_NEAR(ssim(img, img), 1.0, 1e-12);
}

TEST(Ssim, ConstantImagesMatchClosedForm) {
    const double c1 = std::pow(0.01 * 255.0, 2);
    auto closed = [&](double x, double y) { return (2 * x * y + c1) / (x * x + y * y + c1); };
    EXPECT_NEAR(ssim(constant_image(16, 16, 100.0), constant_image(16, 16, 355.0)), closed(100.0, 355.0), 1e-12);
    const double black_white = ssim(constant_image(16, 16, 0.0), constant_image(16, 16, 255.0));
    EXPECT_NEAR(black_white, closed(0.0, 255.0), 1e-12);
    EXPECT_LT(black_white, 0.05);
}

TEST(Ssim, SingleWindowMatchesHandComputation) {
    GrayImage a(2, 2), b(2, 2);
    a.pixels = {10, 20, 30, 40};
    b.pixels = {12, 18, 35, 30};
    // Means 25 and 23.75; population variances 125 and 84.1875; covariance 88.75.
    const double c1 = std::pow(2.55, 2), c2 = std::pow(7.65, 2);
    const double expected =
        ((2 * 25 * 23.75 + c1) * (2 * 88.75 + c2)) / ((25 * 25 + 23.75 * 23.75 + c1) * (125 + 84.1875 + c2));
    EXPECT_NEAR(ssim(a, b), expected, 1e-12);
}

TEST(Ssim, IsSymmetricAndBounded) {
    const GrayImage a = make_scene(24, 24, 1);
    const GrayImage b = add_gaussian_noise(a, {30.0, 3});
    EXPECT_NEAR(ssim(a, b), ssim(b, a), 1e-12);
    EXPECT_LE(ssim(a, b), 1.0);
    EXPECT_LT(ssim(a, b), ssim(a, add_gaussian_noise(a, {5.0, 3})));
}

TEST(Ssim, RejectsShapeMismatch) {
    EXPECT_THROW(ssim(constant_image(4, 4, 1), constant_image(4, 5, 1)), std::invalid_argument);
}

TEST(Mse, MatchesDefinition) {
    GrayImage a(1, 3), b(1, 3);
    a.pixels = {1, 2, 3};
    b.pixels = {2, 2, 5};
    EXPECT_DOUBLE_EQ(mean_squared_error(a, b), 5.0 / 3.0);
}

TEST(Resize, PreservesConstantsAndShape) {
    const GrayImage r = resize_bilinear(constant_image(10, 20, 77.0), 13, 7);
    EXPECT_EQ(r.height, 13u);
    EXPECT_EQ(r.width, 7u);
    for (double p : r.pixels) EXPECT_NEAR(p, 77.0, 1e-12);
}

TEST(Resize, IdentitySizeIsExact) {
    const GrayImage img = make_scene(11, 9, 8);
    EXPECT_EQ(resize_bilinear(img, 11, 9).pixels, img.pixels);
}

TEST(Scene, IsDeterministicAndInRange) {
    const GrayImage a = make_scene(32, 32, 5), b = make_scene(32, 32, 5);
    EXPECT_EQ(a.pixels, b.pixels);
    for (double p : a.pixels) {
        EXPECT_GE(p, 0.0);
        EXPECT_LE(p, 255.0);
    }
    EXPECT_NE(make_scene(32, 32, 6).pixels, a.pixels);
}
