#pragma once

#include "holoforge/autodiff.hpp"
#include "holoforge/losses.hpp"
#include "holoforge/propagation.hpp"

namespace holoforge {

/// Transfer function as a complex constant tensor for graph building.
inline ad::Tensor transfer_tensor(const TransferFunction& tf) {
    auto st = std::make_shared<ad::Storage>(ad::Shape{tf.height, tf.width}, true);
    for (size_t i = 0; i < tf.spectrum.size(); ++i) {
        st->re[i] = tf.spectrum[i].real();
        st->im[i] = tf.spectrum[i].imag();
    }
    return ad::Tensor::constant(st);
}

/// Precomputed per-(primary, plane) transfer spectra for one configuration.
struct TransferBank {
    int primaries = 0;
    int planes = 0;
    bool padded = false;  // spectra live on the 2x zero-padded grid
    std::vector<ad::Tensor> spectra;  // [p * planes + k]

    const ad::Tensor& at(int p, int k) const { return spectra[static_cast<size_t>(p) * planes + k]; }
};

inline TransferBank make_transfer_bank(const OpticalConfig& config, bool band_limited = true,
                                       bool padded = false) {
    TransferBank bank;
    bank.primaries = config.primary_count;
    bank.planes = config.plane_count;
    bank.padded = padded;
    const int h = padded ? 2 * config.height : config.height;
    const int w = padded ? 2 * config.width : config.width;
    const auto depths = plane_depths(config);
    for (int p = 0; p < config.primary_count; ++p)
        for (int k = 0; k < config.plane_count; ++k)
            bank.spectra.push_back(transfer_tensor(make_transfer_function(
                config.wavelength(p), depths[static_cast<size_t>(k)], config.pixel_pitch,
                h, w, band_limited)));
    return bank;
}

/// Differentiable counterpart of reconstruct_volume: builds the K x P
/// intensity maps from phase tensors. powers_tp holds T*P scalar tensors in
/// [0,1] (row-major by subframe); empty means identity coupling (l = 1 for
/// p == t, else 0).
inline losses::ReconStack reconstruct_graph(const std::vector<ad::Tensor>& phases,
                                            const std::vector<ad::Tensor>& powers_tp,
                                            const OpticalConfig& config,
                                            const TransferBank& bank) {
    const int T = static_cast<int>(phases.size());
    if (T != config.subframe_count) throw ShapeError("reconstruct_graph: subframe count mismatch");
    const bool identity = powers_tp.empty();
    if (identity && config.subframe_count != config.primary_count)
        throw ShapeError("reconstruct_graph: identity powers require T == P");
    if (!identity && static_cast<int>(powers_tp.size()) != T * config.primary_count)
        throw ShapeError("reconstruct_graph: powers must hold T*P scalars");

    losses::ReconStack recon;
    recon.planes = config.plane_count;
    recon.primaries = config.primary_count;
    recon.maps.resize(static_cast<size_t>(config.plane_count) * config.primary_count);

    for (int p = 0; p < config.primary_count; ++p) {
        const double ratio = config.wavelength_ratio(p);
        // spectra of e^{i r_p phi_t}, shared across planes
        std::vector<ad::Tensor> field_spectra;
        field_spectra.reserve(static_cast<size_t>(T));
        for (int t = 0; t < T; ++t) {
            if (identity && t != p) {
                field_spectra.emplace_back();
                continue;
            }
            ad::Tensor field = ad::complex_exp(ad::scale(phases[static_cast<size_t>(t)], ratio));
            field_spectra.push_back(ad::fft2(field));
        }
        for (int k = 0; k < config.plane_count; ++k) {
            ad::Tensor acc;
            for (int t = 0; t < T; ++t) {
                if (identity && t != p) continue;
                ad::Tensor prop = ad::ifft2(ad::mul(field_spectra[static_cast<size_t>(t)], bank.at(p, k)));
                ad::Tensor intensity = ad::modulus_squared(prop);
                if (!identity) {
                    const ad::Tensor& l = powers_tp[static_cast<size_t>(t) * config.primary_count + p];
                    intensity = ad::mul_scalar_tensor(intensity, ad::mul(l, l));
                }
                acc = acc.storage() ? ad::add(acc, intensity) : intensity;
            }
            recon.maps[static_cast<size_t>(k) * config.primary_count + p] = acc;
        }
    }
    return recon;
}

}  // namespace holoforge
