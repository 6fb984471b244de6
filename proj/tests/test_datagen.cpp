#include <cstring>

#include <catch_amalgamated.hpp>

#include "holoforge/datagen.hpp"

using namespace holoforge;

TEST_CASE("object_count = 0 gives a uniform background at depth 1") {
    auto s = synth_scene(5, 32, 32, 0);
    for (double d : s.depth) CHECK(d == 1.0);
    for (int c = 0; c < 3; ++c) {
        const double v0 = s.channel(c)[0];
        for (size_t i = 0; i < 32 * 32; ++i) CHECK(s.channel(c)[i] == v0);
    }
}

TEST_CASE("identical seeds give bit-identical samples; different seeds differ") {
    auto a = synth_scene(123, 48, 40, 6);
    auto b = synth_scene(123, 48, 40, 6);
    CHECK(std::memcmp(a.rgb.data(), b.rgb.data(), a.rgb.size() * sizeof(double)) == 0);
    CHECK(std::memcmp(a.depth.data(), b.depth.data(), a.depth.size() * sizeof(double)) == 0);
    auto c = synth_scene(124, 48, 40, 6);
    CHECK(std::memcmp(a.rgb.data(), c.rgb.data(), a.rgb.size() * sizeof(double)) != 0);
}

TEST_CASE("samples stay inside the declared ranges") {
    for (uint64_t seed : {1ULL, 7ULL, 99ULL}) {
        auto s = synth_scene(seed, 64, 64, 8);
        for (double v : s.rgb) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
        for (double v : s.depth) {
            REQUIRE(v >= 0.0);
            REQUIRE(v <= 1.0);
        }
    }
}

TEST_CASE("depth discontinuities coincide with color-region boundaries") {
    // wherever depth jumps between neighbours, the color must change too --
    // objects are drawn with their own colors at their own constant depths
    auto s = synth_scene(31, 64, 64, 5);
    const int h = s.height, w = s.width;
    const size_t n = static_cast<size_t>(h) * w;
    int depth_edges = 0, matched = 0;
    auto color_differs = [&](size_t i, size_t j) {
        for (int c = 0; c < 3; ++c)
            if (std::abs(s.rgb[static_cast<size_t>(c) * n + i] - s.rgb[static_cast<size_t>(c) * n + j]) > 1e-12)
                return true;
        return false;
    };
    for (int y = 0; y < h; ++y)
        for (int x = 0; x + 1 < w; ++x) {
            const size_t i = static_cast<size_t>(y) * w + x;
            if (std::abs(s.depth[i] - s.depth[i + 1]) > 1e-12) {
                ++depth_edges;
                if (color_differs(i, i + 1)) ++matched;
            }
        }
    REQUIRE(depth_edges > 0);
    // allow rare coincidences where two random colors agree
    CHECK(matched >= depth_edges * 99 / 100);
}

TEST_CASE("multiplane masks partition every pixel exactly once") {
    OpticalConfig c;
    c.height = c.width = 32;
    for (int k : {1, 3, 4, 7}) {
        c.plane_count = k;
        auto s = synth_scene(77, 32, 32, 6);
        auto t = slice_multiplane(s, c);
        CHECK_NOTHROW(t.check_partition());
    }
}

TEST_CASE("K = 1 keeps the full image on a single plane") {
    OpticalConfig c;
    c.height = c.width = 16;
    c.plane_count = 1;
    auto s = synth_scene(3, 16, 16, 4);
    auto t = slice_multiplane(s, c);
    for (size_t i = 0; i < 16 * 16; ++i) CHECK(t.mask(0)[i] == 1.0);
    for (int p = 0; p < 3; ++p)
        for (size_t i = 0; i < 16 * 16; ++i)
            CHECK(t.intensity(0, p)[i] == s.channel(p)[i]);
}

TEST_CASE("plane intensities reassemble the rgb exactly") {
    OpticalConfig c;
    c.height = c.width = 32;
    c.plane_count = 5;
    auto s = synth_scene(41, 32, 32, 7);
    auto t = slice_multiplane(s, c);
    for (int p = 0; p < 3; ++p)
        for (size_t i = 0; i < 32 * 32; ++i) {
            double acc = 0.0;
            for (int k = 0; k < 5; ++k) acc += t.intensity(k, p)[i];
            CHECK(acc == s.channel(p)[i]);
        }
}

TEST_CASE("a two-depth scene with K = 4 occupies exactly two masks") {
    // constructed sample: left half at depth 0.2 (bin 0), right half at 0.9 (bin 3)
    SceneSample s;
    s.height = s.width = 16;
    s.rgb.assign(3 * 256, 0.5);
    s.depth.assign(256, 0.0);
    for (int y = 0; y < 16; ++y)
        for (int x = 0; x < 16; ++x) s.depth[static_cast<size_t>(y) * 16 + x] = x < 8 ? 0.2 : 0.9;
    OpticalConfig c;
    c.height = c.width = 16;
    c.plane_count = 4;
    auto t = slice_multiplane(s, c);
    std::vector<double> mass(4, 0.0);
    for (int k = 0; k < 4; ++k)
        for (size_t i = 0; i < 256; ++i) mass[static_cast<size_t>(k)] += t.mask(k)[i];
    CHECK(mass[0] == 128.0);
    CHECK(mass[1] == 0.0);
    CHECK(mass[2] == 0.0);
    CHECK(mass[3] == 128.0);
}

TEST_CASE("bin edges assign boundary depths to the nearer plane") {
    SceneSample s;
    s.height = 2;
    s.width = 4;
    s.rgb.assign(3 * 8, 0.3);
    // depths exactly on the bin edges of K = 2: 0.0, 0.5, 0.5 + ulp, 1.0
    s.depth = {0.0, 0.5, std::nextafter(0.5, 1.0), 1.0, 0.25, 0.5, 0.75, 1.0};
    OpticalConfig c;
    c.height = 2;
    c.width = 4;
    c.plane_count = 2;
    auto t = slice_multiplane(s, c);
    CHECK(t.mask(0)[0] == 1.0);  // 0.0 -> near bin
    CHECK(t.mask(0)[1] == 1.0);  // 0.5 on the edge -> nearer bin
    CHECK(t.mask(1)[2] == 1.0);  // just above the edge -> far bin
    CHECK(t.mask(1)[3] == 1.0);  // 1.0 -> far bin
}

TEST_CASE("slice_multiplane rejects resolution mismatches") {
    OpticalConfig c;
    c.height = c.width = 64;
    auto s = synth_scene(1, 32, 32, 3);
    CHECK_THROWS_AS(slice_multiplane(s, c), ShapeError);
}
