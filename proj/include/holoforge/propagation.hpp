#pragma once

#include <cmath>
#include <vector>

#include "holoforge/config.hpp"
#include "holoforge/errors.hpp"
#include "holoforge/fft.hpp"
#include "holoforge/field.hpp"

namespace holoforge {

/// Frequency-domain kernel of band-limited angular-spectrum propagation.
/// Pure phase inside the propagating band, zero outside; laid out on the
/// standard DFT grid (zero frequency at index 0).
struct TransferFunction {
    int height = 0;
    int width = 0;
    double wavelength = 0.0;   // meters
    double distance = 0.0;     // signed meters
    double pixel_pitch = 0.0;  // meters
    bool band_limited = true;
    std::vector<cdouble> spectrum;   // height * width
    std::vector<uint8_t> band_mask;  // 1 where the spectrum is nonzero
};

/// DFT frequency for index i of n samples at pitch d (cycles per meter).
/// Indices at and above (n+1)/2 alias to negative frequencies.
inline double fft_frequency(int i, int n, double pitch) {
    const int k = i < (n + 1) / 2 ? i : i - n;
    return static_cast<double>(k) / (n * pitch);
}

/// Matsushima band limit along one axis: 1 / (lambda * sqrt((2*du*z)^2 + 1))
/// with du = 1 / (n * pitch), evaluated at |z|.
inline double band_limit_frequency(double wavelength, double z, int n, double pitch) {
    const double du = 1.0 / (n * pitch);
    const double a = 2.0 * du * std::abs(z);
    return 1.0 / (wavelength * std::sqrt(a * a + 1.0));
}

/// spectrum(fx, fy) = exp(i * 2*pi * z * sqrt(1/lambda^2 - fx^2 - fy^2)) inside
/// the propagating band, zeroed on evanescent components and outside the
/// band-limit rectangle.
inline TransferFunction make_transfer_function(double wavelength, double z, double pixel_pitch,
                                               int height, int width, bool band_limited = true) {
    if (!(wavelength > 0.0)) throw DimensionError("wavelength must be positive");
    if (!(pixel_pitch > 0.0)) throw DimensionError("pixel_pitch must be positive");
    if (height < 2 || width < 2) throw ShapeError("transfer function requires H, W >= 2");

    TransferFunction tf;
    tf.height = height;
    tf.width = width;
    tf.wavelength = wavelength;
    tf.distance = z;
    tf.pixel_pitch = pixel_pitch;
    tf.band_limited = band_limited;
    tf.spectrum.assign(static_cast<size_t>(height) * width, cdouble(0, 0));
    tf.band_mask.assign(static_cast<size_t>(height) * width, 0);

    const double inv_l2 = 1.0 / (wavelength * wavelength);
    const double fx_lim = band_limit_frequency(wavelength, z, width, pixel_pitch);
    const double fy_lim = band_limit_frequency(wavelength, z, height, pixel_pitch);

    for (int y = 0; y < height; ++y) {
        const double fy = fft_frequency(y, height, pixel_pitch);
        for (int x = 0; x < width; ++x) {
            const double fx = fft_frequency(x, width, pixel_pitch);
            const double arg = inv_l2 - fx * fx - fy * fy;
            if (arg <= 0.0) continue;  // evanescent: hard zero
            if (band_limited && (std::abs(fx) > fx_lim || std::abs(fy) > fy_lim)) continue;
            const double phase = kTwoPi * z * std::sqrt(arg);
            const size_t i = static_cast<size_t>(y) * width + x;
            tf.spectrum[i] = cdouble(std::cos(phase), std::sin(phase));
            tf.band_mask[i] = 1;
        }
    }
    return tf;
}

/// IFFT(FFT(field) .* spectrum); linear in the field.
inline ComplexField propagate(const ComplexField& field, const TransferFunction& tf) {
    if (field.height != tf.height || field.width != tf.width)
        throw ShapeError("field and transfer function grids differ");
    if (field.pixel_pitch != tf.pixel_pitch)
        throw ShapeError("field and transfer function pixel pitch differ");
    if (field.wavelength != tf.wavelength)
        throw ShapeError("field and transfer function wavelength differ");

    ComplexField out = field;
    fft2_inplace(out.data.data(), out.height, out.width, false);
    const size_t n = out.data.size();
    for (size_t i = 0; i < n; ++i) out.data[i] *= tf.spectrum[i];
    fft2_inplace(out.data.data(), out.height, out.width, true);
    return out;
}

/// Same transport with 2x zero padding, for callers that need to suppress the
/// wraparound of the unpadded circular convolution.
inline ComplexField propagate_padded(const ComplexField& field, double z, bool band_limited = true) {
    const int h2 = field.height * 2;
    const int w2 = field.width * 2;
    ComplexField big(h2, w2, field.pixel_pitch, field.wavelength);
    const int oy = field.height / 2;
    const int ox = field.width / 2;
    for (int y = 0; y < field.height; ++y)
        for (int x = 0; x < field.width; ++x) big.at(y + oy, x + ox) = field.at(y, x);
    TransferFunction tf = make_transfer_function(field.wavelength, z, field.pixel_pitch, h2, w2, band_limited);
    ComplexField prop = propagate(big, tf);
    ComplexField out = field;
    for (int y = 0; y < field.height; ++y)
        for (int x = 0; x < field.width; ++x) out.at(y, x) = prop.at(y + oy, x + ox);
    return out;
}

/// Plane intensity stack of Eq.-style reconstruction:
/// intensity[k][p] = sum_t | l(t,p) * propagate(exp(i * r_p * phi_t), tf(lambda_p, z_k)) |^2.
/// Returns K*P maps of H*W nonnegative values, indexed [k*P + p].
inline std::vector<std::vector<double>> reconstruct_volume(const PhaseHologram& hologram,
                                                           const LaserPowers& powers,
                                                           const OpticalConfig& config,
                                                           bool band_limited = true) {
    validate_config(config);
    if (hologram.subframes != config.subframe_count)
        throw ShapeError("hologram subframe count does not match config");
    if (hologram.height != config.height || hologram.width != config.width)
        throw ShapeError("hologram resolution does not match config");
    if (powers.subframes != config.subframe_count || powers.primaries != config.primary_count)
        throw ShapeError("laser power matrix must be T x P");

    const int hgt = config.height;
    const int wid = config.width;
    const size_t npix = static_cast<size_t>(hgt) * wid;
    const auto depths = plane_depths(config);

    std::vector<std::vector<double>> intensity(
        static_cast<size_t>(config.plane_count) * config.primary_count,
        std::vector<double>(npix, 0.0));

    for (int p = 0; p < config.primary_count; ++p) {
        const double ratio = config.wavelength_ratio(p);
        std::vector<ComplexField> fields;
        fields.reserve(static_cast<size_t>(config.subframe_count));
        for (int t = 0; t < config.subframe_count; ++t) {
            ComplexField f(hgt, wid, config.pixel_pitch, config.wavelength(p));
            const double* phi = hologram.map(t);
            for (size_t i = 0; i < npix; ++i) {
                const double a = ratio * phi[i];
                f.data[i] = cdouble(std::cos(a), std::sin(a));
            }
            fields.push_back(std::move(f));
        }
        for (int k = 0; k < config.plane_count; ++k) {
            TransferFunction tf = make_transfer_function(config.wavelength(p), depths[static_cast<size_t>(k)],
                                                         config.pixel_pitch, hgt, wid, band_limited);
            auto& out = intensity[static_cast<size_t>(k) * config.primary_count + p];
            for (int t = 0; t < config.subframe_count; ++t) {
                const double l = powers.at(t, p);
                if (l == 0.0) continue;
                ComplexField prop = propagate(fields[static_cast<size_t>(t)], tf);
                for (size_t i = 0; i < npix; ++i) out[i] += l * l * std::norm(prop.data[i]);
            }
        }
    }
    return intensity;
}

}  // namespace holoforge
