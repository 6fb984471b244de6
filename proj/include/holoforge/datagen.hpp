#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "holoforge/config.hpp"
#include "holoforge/field.hpp"
#include "holoforge/rng.hpp"

namespace holoforge {

/// Synthetic RGB + depth sample. depth 0 is the nearest plane of the volume,
/// 1 the farthest.
struct SceneSample {
    int height = 0;
    int width = 0;
    uint64_t seed = 0;
    std::vector<double> rgb;    // 3 * H * W in [0, 1]
    std::vector<double> depth;  // H * W in [0, 1]

    double* channel(int c) { return rgb.data() + static_cast<size_t>(c) * height * width; }
    const double* channel(int c) const { return rgb.data() + static_cast<size_t>(c) * height * width; }
};

namespace datagen_detail {

struct Object {
    int kind = 0;  // 0 rectangle, 1 ellipse, 2 gradient-filled rectangle
    double cx = 0, cy = 0, rx = 0, ry = 0;
    double color0[3] = {0, 0, 0};
    double color1[3] = {0, 0, 0};
    double grad_axis = 0;  // 0: along x, 1: along y
    double depth = 0;
};

}  // namespace datagen_detail

/// Renders axis-aligned rectangles, ellipses and linear gradients at random
/// constant depths with painter's-algorithm occlusion. Bit-identical output
/// for identical seeds (xoshiro256** stream, fixed draw order).
inline SceneSample synth_scene(uint64_t seed, int h, int w, int object_count) {
    if (h < 2 || w < 2) throw ShapeError("synth_scene: resolution must be at least 2x2");
    if (object_count < 0) throw ShapeError("synth_scene: object_count must be >= 0");
    SceneSample s;
    s.height = h;
    s.width = w;
    s.seed = seed;
    const size_t n = static_cast<size_t>(h) * w;
    s.rgb.assign(3 * n, 0.0);
    s.depth.assign(n, 1.0);  // uniform background at the far plane

    Rng rng(seed);
    // muted random background color
    double bg[3];
    for (double& c : bg) c = rng.uniform(0.05, 0.35);
    for (int c = 0; c < 3; ++c)
        for (size_t i = 0; i < n; ++i) s.rgb[static_cast<size_t>(c) * n + i] = bg[c];

    std::vector<datagen_detail::Object> objects(static_cast<size_t>(object_count));
    for (auto& o : objects) {
        o.kind = static_cast<int>(rng.below(3));
        o.cx = rng.uniform(0.1, 0.9) * w;
        o.cy = rng.uniform(0.1, 0.9) * h;
        o.rx = rng.uniform(0.08, 0.3) * w;
        o.ry = rng.uniform(0.08, 0.3) * h;
        for (double& c : o.color0) c = rng.uniform(0.1, 1.0);
        for (double& c : o.color1) c = rng.uniform(0.1, 1.0);
        o.grad_axis = rng.below(2) ? 1.0 : 0.0;
        o.depth = rng.uniform(0.0, 0.97);  // strictly in front of the background
    }
    // painter's algorithm: draw far objects first, near objects last
    std::stable_sort(objects.begin(), objects.end(),
                     [](const auto& a, const auto& b) { return a.depth > b.depth; });

    for (const auto& o : objects) {
        const int y0 = std::max(0, static_cast<int>(std::floor(o.cy - o.ry)));
        const int y1 = std::min(h - 1, static_cast<int>(std::ceil(o.cy + o.ry)));
        const int x0 = std::max(0, static_cast<int>(std::floor(o.cx - o.rx)));
        const int x1 = std::min(w - 1, static_cast<int>(std::ceil(o.cx + o.rx)));
        for (int y = y0; y <= y1; ++y) {
            for (int x = x0; x <= x1; ++x) {
                const double dx = (x + 0.5 - o.cx) / o.rx;
                const double dy = (y + 0.5 - o.cy) / o.ry;
                bool inside = false;
                if (o.kind == 1)
                    inside = dx * dx + dy * dy <= 1.0;
                else
                    inside = std::abs(dx) <= 1.0 && std::abs(dy) <= 1.0;
                if (!inside) continue;
                const size_t i = static_cast<size_t>(y) * w + x;
                double t = 0.0;
                if (o.kind == 2) t = 0.5 * ((o.grad_axis > 0.5 ? dy : dx) + 1.0);
                for (int c = 0; c < 3; ++c) {
                    const double v = o.color0[c] * (1.0 - t) + o.color1[c] * t;
                    s.rgb[static_cast<size_t>(c) * n + i] = std::clamp(v, 0.0, 1.0);
                }
                s.depth[i] = o.depth;
            }
        }
    }
    return s;
}

/// Bins the sample into K per-plane targets: mask_k selects the pixels whose
/// depth falls in bin k (ties go to the nearer bin), and the per-primary
/// intensity is rgb masked to that plane. Masks partition the image.
inline MultiplaneTarget slice_multiplane(const SceneSample& sample, const OpticalConfig& config) {
    validate_config(config);
    if (sample.height != config.height || sample.width != config.width)
        throw ShapeError("slice_multiplane: sample resolution does not match config");
    const int K = config.plane_count;
    const int h = sample.height, w = sample.width;
    const size_t n = static_cast<size_t>(h) * w;
    MultiplaneTarget target(K, config.primary_count, h, w);

    for (size_t i = 0; i < n; ++i) {
        const double d = sample.depth[i];
        // bins: [0, 1/K], (1/K, 2/K], ...; a value on an edge joins the
        // nearer (lower-depth) bin
        int k = static_cast<int>(std::ceil(d * K)) - 1;
        k = std::clamp(k, 0, K - 1);
        target.mask(k)[i] = 1.0;
    }
    for (int k = 0; k < K; ++k) {
        const double* m = target.mask(k);
        for (int p = 0; p < config.primary_count; ++p) {
            double* out = target.intensity(k, p);
            const double* src = sample.channel(std::min(p, 2));
            for (size_t i = 0; i < n; ++i) out[i] = src[i] * m[i];
        }
    }
    return target;
}

}  // namespace holoforge
