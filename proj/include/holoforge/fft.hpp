#pragma once

#include <complex>
#include <vector>

#include "holoforge/errors.hpp"
#include "holoforge/field.hpp"

namespace holoforge {
namespace fft_detail {

inline bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

/// In-place iterative radix-2 Cooley-Tukey. sign = -1 forward, +1 inverse.
/// Unnormalized in both directions.
inline void radix2(cdouble* x, size_t n, int sign) {
    // bit reversal
    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(x[i], x[j]);
    }
    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = sign * kTwoPi / static_cast<double>(len);
        const cdouble wlen(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cdouble w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                cdouble u = x[i + k];
                cdouble v = x[i + k + len / 2] * w;
                x[i + k] = u + v;
                x[i + k + len / 2] = u - v;
                w *= wlen;
            }
        }
    }
}

/// Bluestein chirp-z transform for arbitrary n, expressed through radix-2
/// convolutions of length m = next_pow2(2n - 1). Unnormalized.
inline void bluestein(cdouble* x, size_t n, int sign) {
    size_t m = 1;
    while (m < 2 * n - 1) m <<= 1;
    std::vector<cdouble> a(m, cdouble(0, 0)), b(m, cdouble(0, 0));
    std::vector<cdouble> chirp(n);
    for (size_t k = 0; k < n; ++k) {
        // angle = sign * pi * k^2 / n, with k^2 reduced mod 2n to keep precision
        size_t k2 = (k * k) % (2 * n);
        double ang = sign * kPi * static_cast<double>(k2) / static_cast<double>(n);
        chirp[k] = cdouble(std::cos(ang), std::sin(ang));
    }
    for (size_t k = 0; k < n; ++k) a[k] = x[k] * chirp[k];
    b[0] = cdouble(1, 0);
    for (size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);
    radix2(a.data(), m, -1);
    radix2(b.data(), m, -1);
    for (size_t i = 0; i < m; ++i) a[i] *= b[i];
    radix2(a.data(), m, +1);
    const double inv_m = 1.0 / static_cast<double>(m);
    for (size_t k = 0; k < n; ++k) x[k] = a[k] * inv_m * chirp[k];
}

inline void transform_1d(cdouble* x, size_t n, int sign) {
    if (n == 1) return;
    if (is_pow2(n))
        radix2(x, n, sign);
    else
        bluestein(x, n, sign);
}

}  // namespace fft_detail

/// In-place 2D FFT of a row-major h*w grid.
/// forward: X_k = sum_n x_n exp(-2*pi*i*k.n/N), unnormalized.
/// inverse: normalized by 1/(h*w), so ifft2(fft2(x)) == x.
inline void fft2_inplace(cdouble* data, int h, int w, bool inverse) {
    if (h < 1 || w < 1) throw ShapeError("fft2 requires positive dimensions");
    const int sign = inverse ? +1 : -1;
    for (int y = 0; y < h; ++y)
        fft_detail::transform_1d(data + static_cast<size_t>(y) * w, static_cast<size_t>(w), sign);
    std::vector<cdouble> col(static_cast<size_t>(h));
    for (int x = 0; x < w; ++x) {
        for (int y = 0; y < h; ++y) col[static_cast<size_t>(y)] = data[static_cast<size_t>(y) * w + x];
        fft_detail::transform_1d(col.data(), static_cast<size_t>(h), sign);
        for (int y = 0; y < h; ++y) data[static_cast<size_t>(y) * w + x] = col[static_cast<size_t>(y)];
    }
    if (inverse) {
        const double scale = 1.0 / (static_cast<double>(h) * static_cast<double>(w));
        const size_t n = static_cast<size_t>(h) * w;
        for (size_t i = 0; i < n; ++i) data[i] *= scale;
    }
}

inline std::vector<cdouble> fft2(const std::vector<cdouble>& in, int h, int w) {
    auto out = in;
    fft2_inplace(out.data(), h, w, false);
    return out;
}

inline std::vector<cdouble> ifft2(const std::vector<cdouble>& in, int h, int w) {
    auto out = in;
    fft2_inplace(out.data(), h, w, true);
    return out;
}

}  // namespace holoforge
