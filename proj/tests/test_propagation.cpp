#include <catch_amalgamated.hpp>

#include "holoforge/propagation.hpp"
#include "holoforge/rng.hpp"
#include "oracles.hpp"

using namespace holoforge;

namespace {

constexpr double kRedLambda = 639e-9;
constexpr double kPitch = 3.74e-6;

ComplexField gaussian_aperture(int n, double pitch, double lambda, double sigma_px) {
    ComplexField f(n, n, pitch, lambda);
    const double c = n / 2.0 - 0.5;
    for (int y = 0; y < n; ++y)
        for (int x = 0; x < n; ++x) {
            double r2 = (y - c) * (y - c) + (x - c) * (x - c);
            f.at(y, x) = std::exp(-r2 / (2.0 * sigma_px * sigma_px));
        }
    return f;
}

ComplexField random_band_limited(Rng& rng, int n, double pitch, double lambda, double z) {
    // build in frequency space inside the band, transform back
    TransferFunction tf = make_transfer_function(lambda, z, pitch, n, n);
    std::vector<cdouble> spec(static_cast<size_t>(n) * n, cdouble(0, 0));
    for (size_t i = 0; i < spec.size(); ++i)
        if (tf.band_mask[i]) spec[i] = cdouble(rng.normal(), rng.normal());
    auto data = ifft2(spec, n, n);
    ComplexField f(n, n, pitch, lambda);
    f.data = std::move(data);
    return f;
}

}  // namespace

TEST_CASE("zero distance gives identity transport on the propagating band") {
    auto tf = make_transfer_function(kRedLambda, 0.0, kPitch, 32, 32);
    for (size_t i = 0; i < tf.spectrum.size(); ++i) {
        if (tf.band_mask[i]) {
            CHECK(std::abs(tf.spectrum[i] - cdouble(1, 0)) < 1e-15);
        } else {
            CHECK(tf.spectrum[i] == cdouble(0, 0));
        }
    }
    // at this pitch the whole FFT grid lies inside the propagating band
    size_t inside = 0;
    for (auto m : tf.band_mask) inside += m;
    CHECK(inside == tf.band_mask.size());
}

TEST_CASE("on-axis spectrum value is the plane-wave phase exp(i*2*pi*z/lambda)") {
    const double z = 10e-3;
    auto tf = make_transfer_function(kRedLambda, z, kPitch, 64, 64);
    const cdouble dc = tf.spectrum[0];  // zero frequency at index 0
    CHECK(std::abs(dc) == Catch::Approx(1.0).epsilon(1e-12));
    const double expected = kTwoPi * z / kRedLambda;
    CHECK(std::real(dc) == Catch::Approx(std::cos(expected)).margin(1e-9));
    CHECK(std::imag(dc) == Catch::Approx(std::sin(expected)).margin(1e-9));
}

TEST_CASE("band-limit cutoff matches an independent evaluation of the formula") {
    const int w = 64;
    const double z = 10e-3;
    auto tf = make_transfer_function(kRedLambda, z, kPitch, w, w);

    // independent scalar route: long-double arithmetic, different grouping
    const long double du = 1.0L / (static_cast<long double>(w) * static_cast<long double>(kPitch));
    const long double prod = 2.0L * du * static_cast<long double>(z);
    const long double cutoff = 1.0L / (static_cast<long double>(kRedLambda) * sqrtl(prod * prod + 1.0L));
    CHECK(static_cast<double>(cutoff) ==
          Catch::Approx(band_limit_frequency(kRedLambda, z, w, kPitch)).epsilon(1e-12));

    // every mask entry agrees with the predicate evaluated from scratch
    for (int y = 0; y < w; ++y) {
        for (int x = 0; x < w; ++x) {
            const double fy = fft_frequency(y, w, kPitch);
            const double fx = fft_frequency(x, w, kPitch);
            const bool propagating = 1.0 / (kRedLambda * kRedLambda) > fx * fx + fy * fy;
            const bool in_band = std::abs(fx) <= static_cast<double>(cutoff) &&
                                 std::abs(fy) <= static_cast<double>(cutoff);
            const bool expected = propagating && in_band;
            CHECK(static_cast<bool>(tf.band_mask[static_cast<size_t>(y) * w + x]) == expected);
        }
    }
    // sanity: the limit actually bites at this distance
    size_t inside = 0;
    for (auto m : tf.band_mask) inside += m;
    CHECK(inside > 0);
    CHECK(inside < tf.band_mask.size());
}

TEST_CASE("transfer spectra are conjugate under distance negation on the band") {
    auto fwd = make_transfer_function(kRedLambda, 3e-3, kPitch, 48, 48);
    auto bwd = make_transfer_function(kRedLambda, -3e-3, kPitch, 48, 48);
    for (size_t i = 0; i < fwd.spectrum.size(); ++i) {
        CHECK(fwd.band_mask[i] == bwd.band_mask[i]);
        if (fwd.band_mask[i]) CHECK(std::abs(bwd.spectrum[i] - std::conj(fwd.spectrum[i])) < 1e-14);
    }
}

TEST_CASE("uniform plane wave picks up only the global phase") {
    const double z = 2e-3;
    ComplexField u(32, 32, kPitch, kRedLambda);
    for (auto& v : u.data) v = cdouble(1, 0);
    auto tf = make_transfer_function(kRedLambda, z, kPitch, 32, 32);
    auto out = propagate(u, tf);
    const cdouble expected = std::exp(cdouble(0, kTwoPi * z / kRedLambda));
    for (auto& v : out.data) CHECK(std::abs(v - expected) < 1e-10);
}

TEST_CASE("propagate is linear in the field") {
    Rng rng(17);
    const int n = 32;
    auto u = random_band_limited(rng, n, kPitch, kRedLambda, 1e-3);
    auto v = random_band_limited(rng, n, kPitch, kRedLambda, 1e-3);
    auto tf = make_transfer_function(kRedLambda, 1e-3, kPitch, n, n);
    const cdouble a(0.8, 0.1), b(-1.1, 0.4);
    ComplexField mix(n, n, kPitch, kRedLambda);
    for (size_t i = 0; i < mix.data.size(); ++i) mix.data[i] = a * u.data[i] + b * v.data[i];
    auto lhs = propagate(mix, tf);
    auto pu = propagate(u, tf);
    auto pv = propagate(v, tf);
    std::vector<cdouble> rhs(mix.data.size());
    for (size_t i = 0; i < rhs.size(); ++i) rhs[i] = a * pu.data[i] + b * pv.data[i];
    CHECK(oracle::relative_l2(lhs.data, rhs, n, n) < 1e-9);
}

TEST_CASE("energy is conserved without the band mask and non-increasing with it") {
    Rng rng(19);
    const int n = 32;
    ComplexField u(n, n, kPitch, kRedLambda);
    for (auto& v : u.data) v = cdouble(rng.normal(), rng.normal());
    auto tf_free = make_transfer_function(kRedLambda, 5e-3, kPitch, n, n, /*band_limited=*/false);
    auto out_free = propagate(u, tf_free);
    CHECK(out_free.energy() == Catch::Approx(u.energy()).epsilon(1e-9));

    auto tf_masked = make_transfer_function(kRedLambda, 5e-3, kPitch, n, n, /*band_limited=*/true);
    auto out_masked = propagate(u, tf_masked);
    CHECK(out_masked.energy() <= u.energy() * (1.0 + 1e-12));
}

TEST_CASE("z then -z round trip is the identity on band-limited inputs") {
    Rng rng(23);
    const int n = 64;
    const double z = 10e-3;
    auto u = random_band_limited(rng, n, kPitch, kRedLambda, z);
    auto fwd = make_transfer_function(kRedLambda, z, kPitch, n, n);
    auto bwd = make_transfer_function(kRedLambda, -z, kPitch, n, n);
    auto back = propagate(propagate(u, fwd), bwd);
    CHECK(oracle::relative_l2(back.data, u.data, n, n) < 1e-6);
}

TEST_CASE("band-limited ASM matches the Rayleigh-Sommerfeld double-sum oracle") {
    // The double sum is a linear convolution, so the like-for-like ASM run
    // uses the 2x zero-padding option to remove circular wraparound.
    const int n = 32;
    auto u = gaussian_aperture(n, kPitch, kRedLambda, 2.0);
    for (double z : {1e-3, 2e-3}) {
        auto fast = propagate_padded(u, z);
        auto slow = oracle::rayleigh_sommerfeld_propagate(u.data, n, n, kPitch, z, kRedLambda);
        const double err = oracle::relative_l2(fast.data, slow, n, n, 16);
        INFO("z = " << z << "  relative L2 on central 16x16 = " << err);
        CHECK(err <= 1e-3);
    }
}

TEST_CASE("unpadded ASM still tracks the oracle at short range") {
    const int n = 32;
    auto u = gaussian_aperture(n, kPitch, kRedLambda, 2.0);
    const double z = 1e-3;
    auto tf = make_transfer_function(kRedLambda, z, kPitch, n, n);
    auto fast = propagate(u, tf);
    auto slow = oracle::rayleigh_sommerfeld_propagate(u.data, n, n, kPitch, z, kRedLambda);
    CHECK(oracle::relative_l2(fast.data, slow, n, n, 16) <= 1e-3);
}

TEST_CASE("propagate rejects mismatched grids") {
    ComplexField u(32, 32, kPitch, kRedLambda);
    auto tf = make_transfer_function(kRedLambda, 1e-3, kPitch, 64, 64);
    CHECK_THROWS_AS(propagate(u, tf), ShapeError);
    auto tf_wrong_pitch = make_transfer_function(kRedLambda, 1e-3, 8e-6, 32, 32);
    CHECK_THROWS_AS(propagate(u, tf_wrong_pitch), ShapeError);
}

TEST_CASE("make_transfer_function rejects nonpositive lambda and pitch") {
    CHECK_THROWS_AS(make_transfer_function(0.0, 1e-3, kPitch, 32, 32), DimensionError);
    CHECK_THROWS_AS(make_transfer_function(kRedLambda, 1e-3, -1.0, 32, 32), DimensionError);
}

TEST_CASE("reconstruction with all-zero powers is dark everywhere") {
    OpticalConfig c;
    c.height = c.width = 16;
    c.plane_count = 2;
    PhaseHologram h(3, 16, 16);
    Rng rng(5);
    for (auto& p : h.phases) p = rng.uniform(-kPi, kPi);
    LaserPowers lp(3, 3);  // zeros
    auto stack = reconstruct_volume(h, lp, c);
    for (const auto& plane : stack)
        for (double v : plane) CHECK(v == 0.0);
}

TEST_CASE("identity powers couple each primary to exactly one subframe") {
    OpticalConfig c;
    c.height = c.width = 16;
    c.plane_count = 1;
    Rng rng(9);
    PhaseHologram h(3, 16, 16);
    for (auto& p : h.phases) p = rng.uniform(-kPi, kPi);

    auto base = reconstruct_volume(h, LaserPowers::identity(3), c);

    // perturbing subframe t must change only primary p == t
    for (int t = 0; t < 3; ++t) {
        PhaseHologram mod = h;
        double* m = mod.map(t);
        for (int i = 0; i < 16 * 16; ++i) m[i] = wrap_phase(m[i] + 0.3 * std::sin(i * 0.7));
        auto out = reconstruct_volume(mod, LaserPowers::identity(3), c);
        for (int p = 0; p < 3; ++p) {
            double diff = 0.0;
            for (size_t i = 0; i < out[static_cast<size_t>(p)].size(); ++i)
                diff += std::abs(out[static_cast<size_t>(p)][i] - base[static_cast<size_t>(p)][i]);
            if (p == t)
                CHECK(diff > 1e-6);
            else
                CHECK(diff == 0.0);
        }
    }
}

TEST_CASE("doubling one power entry quadruples that subframe's contribution") {
    OpticalConfig c;
    c.height = c.width = 16;
    c.plane_count = 1;
    Rng rng(13);
    PhaseHologram h(3, 16, 16);
    for (auto& p : h.phases) p = rng.uniform(-kPi, kPi);

    // isolate subframe t=1, primary p=0
    LaserPowers only(3, 3);
    only.at(1, 0) = 0.4;
    auto base = reconstruct_volume(h, only, c);
    LaserPowers doubled(3, 3);
    doubled.at(1, 0) = 0.8;
    auto big = reconstruct_volume(h, doubled, c);
    for (size_t i = 0; i < base[0].size(); ++i)
        CHECK(big[0][i] == Catch::Approx(4.0 * base[0][i]).margin(1e-12));
}

TEST_CASE("reconstruct_volume rejects mismatched shapes") {
    OpticalConfig c;
    c.height = c.width = 16;
    PhaseHologram wrong_t(2, 16, 16);
    CHECK_THROWS_AS(reconstruct_volume(wrong_t, LaserPowers::identity(3), c), ShapeError);
    PhaseHologram h(3, 16, 16);
    LaserPowers wrong_p(3, 2);
    CHECK_THROWS_AS(reconstruct_volume(h, wrong_p, c), ShapeError);
    PhaseHologram wrong_res(3, 8, 8);
    CHECK_THROWS_AS(reconstruct_volume(wrong_res, LaserPowers::identity(3), c), ShapeError);
}
