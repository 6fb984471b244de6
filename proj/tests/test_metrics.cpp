#include <catch_amalgamated.hpp>

#include "holoforge/metrics.hpp"
#include "holoforge/rng.hpp"

using namespace holoforge;

namespace {

// analytic image pair; the same closed forms were evaluated in an external
// scalar reference (scikit-image 0.25, gaussian_weights, sigma 1.5, no sample
// covariance) to freeze the expected values below.
constexpr int kH = 48, kW = 64;

std::vector<double> image_a() {
    std::vector<double> a(kH * kW);
    for (int i = 0; i < kH; ++i)
        for (int j = 0; j < kW; ++j) a[static_cast<size_t>(i) * kW + j] = 0.5 + 0.4 * std::sin(0.37 * i + 0.11 * j);
    return a;
}

std::vector<double> image_b() {
    auto b = image_a();
    for (int i = 0; i < kH; ++i)
        for (int j = 0; j < kW; ++j) b[static_cast<size_t>(i) * kW + j] += 0.08 * std::cos(0.5 * i - 0.3 * j);
    return b;
}

std::vector<double> image_c() {
    auto a = image_a();
    std::vector<double> c(a.size());
    for (int i = 0; i < kH; ++i)
        for (int j = 0; j < kW; ++j) {
            const size_t idx = static_cast<size_t>(i) * kW + j;
            c[idx] = a[idx] * 0.8 + 0.1 + 0.15 * std::sin(0.45 * i + 0.325 * j);
        }
    return c;
}

}  // namespace

TEST_CASE("identical images: psnr caps at 100 dB and ssim is 1") {
    auto a = image_a();
    CHECK(psnr(a, a) == 100.0);
    CHECK(ssim(a, a, kH, kW) == Catch::Approx(1.0).margin(1e-12));
}

TEST_CASE("mse of 0.01 gives exactly 20 dB") {
    std::vector<double> a(256, 0.5), b(256, 0.6);  // diff 0.1 everywhere -> mse 0.01
    CHECK(psnr(a, b) == Catch::Approx(20.0).epsilon(1e-12));
}

TEST_CASE("psnr and ssim match the external scalar reference") {
    auto a = image_a();
    auto b = image_b();
    auto c = image_c();
    CHECK(psnr(a, b) == Catch::Approx(24.948152308214997).margin(1e-9));
    CHECK(ssim(a, b, kH, kW) == Catch::Approx(0.943488916941667).margin(1e-9));
    CHECK(psnr(a, c) == Catch::Approx(18.293729964421210).margin(1e-9));
    CHECK(ssim(a, c, kH, kW) == Catch::Approx(0.764787598692395).margin(1e-9));
}

TEST_CASE("ssim is symmetric and bounded") {
    auto a = image_a();
    auto b = image_b();
    CHECK(ssim(a, b, kH, kW) == Catch::Approx(ssim(b, a, kH, kW)).margin(1e-12));
    Rng rng(3);
    std::vector<double> u(kH * kW), v(kH * kW);
    for (auto& x : u) x = rng.uniform();
    for (auto& x : v) x = rng.uniform();
    const double s = ssim(u, v, kH, kW);
    CHECK(s >= -1.0);
    CHECK(s <= 1.0);
}

TEST_CASE("metric helpers reject size mismatches") {
    std::vector<double> a(10), b(12);
    CHECK_THROWS_AS(psnr(a, b), ShapeError);
    CHECK_THROWS_AS(ssim(a, a, 2, 5), ShapeError);  // smaller than the window
}

TEST_CASE("mean_std matches hand computation") {
    MeanStd r = mean_std({1.0, 2.0, 3.0, 4.0});
    CHECK(r.mean == Catch::Approx(2.5));
    CHECK(r.stddev == Catch::Approx(std::sqrt(1.25)));
}
