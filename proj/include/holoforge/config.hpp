#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "holoforge/errors.hpp"
#include "holoforge/units.hpp"

namespace holoforge {

enum class WavelengthRatio {
    as_printed,  // lambda_p / lambda_anchor
    reciprocal,  // lambda_anchor / lambda_p
};

/// The full set of display parameters that conditions every computation.
/// Immutable value object; validate() before use.
struct OpticalConfig {
    std::vector<double> wavelengths = {639e-9, 515e-9, 473e-9};  // meters
    int anchor_index = 0;
    double pixel_pitch = 3.74e-6;     // d_x, meters
    double location_offset = 10e-3;   // Z, distance to the middle of the volume, meters
    double volume_depth = 4e-3;       // VD, meters
    int plane_count = 3;              // K
    double brightness_scale = 1.0;    // s
    int subframe_count = 3;           // T
    int primary_count = 3;            // P
    WavelengthRatio ratio_convention = WavelengthRatio::as_printed;
    int height = 64;
    int width = 64;

    double wavelength(int p) const { return wavelengths.at(static_cast<size_t>(p)); }
    double anchor_wavelength() const { return wavelengths.at(static_cast<size_t>(anchor_index)); }

    /// Phase scaling factor r_p applied to the hologram for primary p.
    double wavelength_ratio(int p) const {
        double lp = wavelength(p);
        double la = anchor_wavelength();
        return ratio_convention == WavelengthRatio::as_printed ? lp / la : la / lp;
    }
};

inline const OpticalConfig& validate_config(const OpticalConfig& c) {
    if (static_cast<int>(c.wavelengths.size()) != c.primary_count)
        throw ShapeError("wavelength count must equal primary_count");
    for (double wl : c.wavelengths)
        if (!(wl > 0.0)) throw DimensionError("wavelengths must be positive");
    if (c.anchor_index < 0 || c.anchor_index >= c.primary_count)
        throw IndexError("anchor_index out of range");
    if (!(c.pixel_pitch > 0.0)) throw DimensionError("pixel_pitch must be positive");
    if (!(c.volume_depth > 0.0)) throw DimensionError("volume_depth must be positive");
    if (!(c.brightness_scale >= 0.0)) throw DimensionError("brightness_scale must be >= 0");
    if (c.plane_count < 1) throw ShapeError("plane_count must be >= 1");
    if (c.subframe_count < 1) throw ShapeError("subframe_count must be >= 1");
    if (c.primary_count < 1) throw ShapeError("primary_count must be >= 1");
    if (c.height < 2 || c.width < 2) throw ShapeError("resolution must be at least 2x2");
    return c;
}

/// Depths of the K reconstruction planes: bin midpoints of [Z - VD/2, Z + VD/2],
/// strictly increasing and centered on Z.
inline std::vector<double> plane_depths(const OpticalConfig& c) {
    validate_config(c);
    std::vector<double> z(static_cast<size_t>(c.plane_count));
    const double near = c.location_offset - 0.5 * c.volume_depth;
    const double step = c.volume_depth / c.plane_count;
    for (int k = 0; k < c.plane_count; ++k) z[static_cast<size_t>(k)] = near + (k + 0.5) * step;
    return z;
}

inline nlohmann::json config_to_json(const OpticalConfig& c) {
    nlohmann::json j;
    auto& wl = j["wavelengths"] = nlohmann::json::array();
    for (double w : c.wavelengths) wl.push_back(format_length(w));
    j["anchor_index"] = c.anchor_index;
    j["pixel_pitch"] = format_length(c.pixel_pitch);
    j["location_offset"] = format_length(c.location_offset);
    j["volume_depth"] = format_length(c.volume_depth);
    j["plane_count"] = c.plane_count;
    j["brightness_scale"] = c.brightness_scale;
    j["subframe_count"] = c.subframe_count;
    j["primary_count"] = c.primary_count;
    j["wavelength_ratio_convention"] =
        c.ratio_convention == WavelengthRatio::as_printed ? "as_printed" : "reciprocal";
    j["resolution"] = {c.height, c.width};
    return j;
}

inline double json_length(const nlohmann::json& v, const char* key) {
    if (v.is_number()) return v.get<double>();  // bare numbers are meters
    if (v.is_string()) return parse_length(v.get<std::string>());
    throw ConfigError(std::string("config key '") + key + "' must be a number or unit string");
}

inline OpticalConfig config_from_json(const nlohmann::json& j) {
    OpticalConfig c;
    try {
        if (j.contains("wavelengths")) {
            c.wavelengths.clear();
            for (const auto& v : j.at("wavelengths")) c.wavelengths.push_back(json_length(v, "wavelengths"));
            c.primary_count = static_cast<int>(c.wavelengths.size());
        }
        if (j.contains("anchor_index")) c.anchor_index = j.at("anchor_index").get<int>();
        if (j.contains("pixel_pitch")) c.pixel_pitch = json_length(j.at("pixel_pitch"), "pixel_pitch");
        if (j.contains("location_offset")) c.location_offset = json_length(j.at("location_offset"), "location_offset");
        if (j.contains("volume_depth")) c.volume_depth = json_length(j.at("volume_depth"), "volume_depth");
        if (j.contains("plane_count")) c.plane_count = j.at("plane_count").get<int>();
        if (j.contains("brightness_scale")) c.brightness_scale = j.at("brightness_scale").get<double>();
        if (j.contains("subframe_count")) c.subframe_count = j.at("subframe_count").get<int>();
        if (j.contains("primary_count")) c.primary_count = j.at("primary_count").get<int>();
        if (j.contains("wavelength_ratio_convention")) {
            std::string conv = j.at("wavelength_ratio_convention").get<std::string>();
            if (conv == "as_printed")
                c.ratio_convention = WavelengthRatio::as_printed;
            else if (conv == "reciprocal")
                c.ratio_convention = WavelengthRatio::reciprocal;
            else
                throw ConfigError("wavelength_ratio_convention must be as_printed or reciprocal");
        }
        if (j.contains("resolution")) {
            const auto& r = j.at("resolution");
            if (!r.is_array() || r.size() != 2) throw ConfigError("resolution must be [H, W]");
            c.height = r[0].get<int>();
            c.width = r[1].get<int>();
        }
    } catch (const nlohmann::json::exception& e) {
        throw ConfigError(std::string("malformed config: ") + e.what());
    }
    validate_config(c);
    return c;
}

/// FNV-1a over the canonical serialization; stable across runs for identical configs.
inline std::string config_hash(const OpticalConfig& c) {
    std::string s = config_to_json(c).dump();
    uint64_t h = 1469598103934665603ULL;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 1099511628211ULL;
    }
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

}  // namespace holoforge
