#pragma once

#include <cmath>
#include <vector>

#include "holoforge/errors.hpp"

namespace holoforge {

/// PSNR in dB for images in [0, 1]; identical images report the 100 dB cap.
inline double psnr(const std::vector<double>& a, const std::vector<double>& b) {
    if (a.size() != b.size() || a.empty()) throw ShapeError("psnr: size mismatch");
    double mse = 0.0;
    for (size_t i = 0; i < a.size(); ++i) mse += (a[i] - b[i]) * (a[i] - b[i]);
    mse /= static_cast<double>(a.size());
    if (mse <= 0.0) return 100.0;
    return std::min(100.0, 10.0 * std::log10(1.0 / mse));
}

namespace metric_detail {

inline std::vector<double> gaussian_window(int size, double sigma) {
    std::vector<double> w(static_cast<size_t>(size) * size);
    const double c = (size - 1) / 2.0;
    double total = 0.0;
    for (int y = 0; y < size; ++y)
        for (int x = 0; x < size; ++x) {
            double v = std::exp(-((y - c) * (y - c) + (x - c) * (x - c)) / (2.0 * sigma * sigma));
            w[static_cast<size_t>(y) * size + x] = v;
            total += v;
        }
    for (auto& v : w) v /= total;
    return w;
}

}  // namespace metric_detail

/// Mean SSIM with an 11x11 Gaussian window (sigma 1.5), c1 = 0.01^2,
/// c2 = 0.03^2, averaged over the valid (fully interior) window positions.
inline double ssim(const std::vector<double>& a, const std::vector<double>& b, int h, int w) {
    if (a.size() != b.size() || a.size() != static_cast<size_t>(h) * w)
        throw ShapeError("ssim: size mismatch");
    constexpr int win = 11;
    constexpr double c1 = 0.01 * 0.01;
    constexpr double c2 = 0.03 * 0.03;
    if (h < win || w < win) throw ShapeError("ssim: image smaller than the 11x11 window");
    static const std::vector<double> kernel = metric_detail::gaussian_window(win, 1.5);

    double acc = 0.0;
    int count = 0;
    for (int y = 0; y + win <= h; ++y) {
        for (int x = 0; x + win <= w; ++x) {
            double mu_a = 0.0, mu_b = 0.0, aa = 0.0, bb = 0.0, ab = 0.0;
            for (int ky = 0; ky < win; ++ky) {
                const double* ra = a.data() + static_cast<size_t>(y + ky) * w + x;
                const double* rb = b.data() + static_cast<size_t>(y + ky) * w + x;
                const double* kr = kernel.data() + static_cast<size_t>(ky) * win;
                for (int kx = 0; kx < win; ++kx) {
                    mu_a += kr[kx] * ra[kx];
                    mu_b += kr[kx] * rb[kx];
                    aa += kr[kx] * ra[kx] * ra[kx];
                    bb += kr[kx] * rb[kx] * rb[kx];
                    ab += kr[kx] * ra[kx] * rb[kx];
                }
            }
            const double var_a = aa - mu_a * mu_a;
            const double var_b = bb - mu_b * mu_b;
            const double cov = ab - mu_a * mu_b;
            const double s = ((2.0 * mu_a * mu_b + c1) * (2.0 * cov + c2)) /
                             ((mu_a * mu_a + mu_b * mu_b + c1) * (var_a + var_b + c2));
            acc += s;
            ++count;
        }
    }
    return acc / count;
}

/// Mean and standard deviation helper for metric tables.
struct MeanStd {
    double mean = 0.0;
    double stddev = 0.0;
};

inline MeanStd mean_std(const std::vector<double>& xs) {
    MeanStd r;
    if (xs.empty()) return r;
    for (double v : xs) r.mean += v;
    r.mean /= static_cast<double>(xs.size());
    double acc = 0.0;
    for (double v : xs) acc += (v - r.mean) * (v - r.mean);
    r.stddev = std::sqrt(acc / static_cast<double>(xs.size()));
    return r;
}

}  // namespace holoforge
