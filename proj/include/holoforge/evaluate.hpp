#pragma once

#include <algorithm>

#include "holoforge/field.hpp"
#include "holoforge/metrics.hpp"

namespace holoforge {

struct ReconQuality {
    double psnr = 0.0;  // over in-focus pixels, all planes and primaries
    double ssim = 0.0;  // on the per-primary in-focus composites, averaged
};

/// Table-style evaluation: reconstructions are compared to the s-scaled
/// target on in-focus pixels only, normalized back to [0,1] by s. SSIM runs
/// on the full-frame composites assembled from each plane's in-focus region.
inline ReconQuality evaluate_reconstruction(const std::vector<std::vector<double>>& recon,
                                            const MultiplaneTarget& target, double s) {
    const int K = target.planes_count, P = target.primaries;
    if (static_cast<int>(recon.size()) != K * P) throw ShapeError("evaluate_reconstruction: stack size mismatch");
    const size_t n = static_cast<size_t>(target.height) * target.width;
    const double inv_s = 1.0 / (s > 0.0 ? s : 1.0);

    std::vector<double> got, want;
    got.reserve(n * static_cast<size_t>(P));
    want.reserve(n * static_cast<size_t>(P));
    double ssim_acc = 0.0;
    for (int p = 0; p < P; ++p) {
        std::vector<double> comp_got(n, 0.0), comp_want(n, 0.0);
        for (int k = 0; k < K; ++k) {
            const double* m = target.mask(k);
            const double* r = recon[static_cast<size_t>(k) * P + p].data();
            const double* i = target.intensity(k, p);
            for (size_t px = 0; px < n; ++px) {
                if (m[px] == 0.0) continue;
                const double g = std::clamp(r[px] * inv_s, 0.0, 1.0);
                comp_got[px] = g;
                comp_want[px] = i[px];
                got.push_back(g);
                want.push_back(i[px]);
            }
        }
        ssim_acc += ssim(comp_got, comp_want, target.height, target.width);
    }
    ReconQuality q;
    q.psnr = psnr(got, want);
    q.ssim = ssim_acc / P;
    return q;
}

}  // namespace holoforge
