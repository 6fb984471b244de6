#pragma once

#include <cmath>
#include <complex>
#include <vector>

#include "holoforge/errors.hpp"

namespace holoforge {

using cdouble = std::complex<double>;

constexpr double kPi = 3.141592653589793238462643383279502884;
constexpr double kTwoPi = 2.0 * kPi;

/// Wraps a phase to [-pi, pi).
inline double wrap_phase(double theta) {
    double w = std::remainder(theta, kTwoPi);  // (-pi, pi]
    if (w == kPi) w = -kPi;
    return w;
}

/// A 2D grid of complex amplitudes tagged with pixel pitch and wavelength;
/// the unit of wave transport.
struct ComplexField {
    int height = 0;
    int width = 0;
    double pixel_pitch = 0.0;  // meters
    double wavelength = 0.0;   // meters
    std::vector<cdouble> data;

    ComplexField() = default;
    ComplexField(int h, int w, double pitch, double lambda)
        : height(h), width(w), pixel_pitch(pitch), wavelength(lambda),
          data(static_cast<size_t>(h) * static_cast<size_t>(w)) {
        if (h < 2 || w < 2) throw ShapeError("ComplexField must be at least 2x2");
        if (!(pitch > 0.0)) throw DimensionError("pixel_pitch must be positive");
        if (!(lambda > 0.0)) throw DimensionError("wavelength must be positive");
    }

    cdouble& at(int y, int x) { return data[static_cast<size_t>(y) * width + x]; }
    const cdouble& at(int y, int x) const { return data[static_cast<size_t>(y) * width + x]; }

    double energy() const {
        double e = 0.0;
        for (const auto& v : data) e += std::norm(v);
        return e;
    }
};

/// T phase maps wrapped to [-pi, pi); the optimization variable and the
/// display payload. Exported at 8-bit depth (256 levels).
struct PhaseHologram {
    int subframes = 0;
    int height = 0;
    int width = 0;
    std::vector<double> phases;  // subframes * height * width, row-major per map
    static constexpr int bit_depth = 8;

    PhaseHologram() = default;
    PhaseHologram(int t, int h, int w)
        : subframes(t), height(h), width(w),
          phases(static_cast<size_t>(t) * h * w, 0.0) {
        if (t < 1) throw ShapeError("subframe count must be >= 1");
        if (h < 2 || w < 2) throw ShapeError("hologram must be at least 2x2");
    }

    double* map(int t) { return phases.data() + static_cast<size_t>(t) * height * width; }
    const double* map(int t) const { return phases.data() + static_cast<size_t>(t) * height * width; }

    /// Rewraps all stored phases into [-pi, pi).
    void wrap() {
        for (auto& p : phases) p = wrap_phase(p);
    }
};

/// T x P peak-brightness matrix, each entry in [0, 1]. Identity for
/// single-color holograms (one primary per subframe).
struct LaserPowers {
    int subframes = 0;
    int primaries = 0;
    std::vector<double> values;  // row t, column p

    LaserPowers() = default;
    LaserPowers(int t, int p) : subframes(t), primaries(p), values(static_cast<size_t>(t) * p, 0.0) {
        if (t < 1 || p < 1) throw ShapeError("LaserPowers requires T, P >= 1");
    }

    static LaserPowers identity(int t) {
        LaserPowers lp(t, t);
        for (int i = 0; i < t; ++i) lp.at(i, i) = 1.0;
        return lp;
    }

    double& at(int t, int p) { return values[static_cast<size_t>(t) * primaries + p]; }
    double at(int t, int p) const { return values[static_cast<size_t>(t) * primaries + p]; }

    void check() const {
        for (double v : values)
            if (!(v >= 0.0 && v <= 1.0)) throw DomainError("laser powers must lie in [0, 1]");
    }

    bool is_identity(double tol = 0.0) const {
        if (subframes != primaries) return false;
        for (int t = 0; t < subframes; ++t)
            for (int p = 0; p < primaries; ++p)
                if (std::abs(at(t, p) - (t == p ? 1.0 : 0.0)) > tol) return false;
        return true;
    }
};

/// One reconstruction plane: per-primary intensity targets plus the binary
/// in-focus mask of the pixels this plane owns.
struct TargetPlane {
    std::vector<double> intensity;  // primaries * height * width
    std::vector<double> mask;       // height * width, entries 0 or 1
};

/// K per-plane, per-primary intensity targets with masks that partition the
/// image pixelwise.
struct MultiplaneTarget {
    int planes_count = 0;
    int primaries = 0;
    int height = 0;
    int width = 0;
    std::vector<TargetPlane> planes;
    std::vector<double> bin_edges;  // K + 1 monotone values in [0, 1]

    MultiplaneTarget() = default;
    MultiplaneTarget(int k, int p, int h, int w)
        : planes_count(k), primaries(p), height(h), width(w), planes(static_cast<size_t>(k)) {
        if (k < 1 || p < 1) throw ShapeError("MultiplaneTarget requires K, P >= 1");
        for (auto& plane : planes) {
            plane.intensity.assign(static_cast<size_t>(p) * h * w, 0.0);
            plane.mask.assign(static_cast<size_t>(h) * w, 0.0);
        }
        bin_edges.resize(static_cast<size_t>(k) + 1);
        for (int i = 0; i <= k; ++i) bin_edges[static_cast<size_t>(i)] = static_cast<double>(i) / k;
    }

    double* intensity(int k, int p) {
        return planes[static_cast<size_t>(k)].intensity.data() + static_cast<size_t>(p) * height * width;
    }
    const double* intensity(int k, int p) const {
        return planes[static_cast<size_t>(k)].intensity.data() + static_cast<size_t>(p) * height * width;
    }
    double* mask(int k) { return planes[static_cast<size_t>(k)].mask.data(); }
    const double* mask(int k) const { return planes[static_cast<size_t>(k)].mask.data(); }

    /// Masks must partition the image: pixelwise sum over planes equals 1.
    void check_partition(double tol = 0.0) const {
        const size_t n = static_cast<size_t>(height) * width;
        for (size_t i = 0; i < n; ++i) {
            double sum = 0.0;
            for (const auto& plane : planes) sum += plane.mask[i];
            if (std::abs(sum - 1.0) > tol) throw DomainError("plane masks do not partition the image");
        }
    }
};

}  // namespace holoforge
