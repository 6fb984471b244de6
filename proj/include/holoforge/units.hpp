#pragma once

#include <cctype>
#include <cstdio>
#include <string>
#include <string_view>

#include "holoforge/errors.hpp"

namespace holoforge {

// All lengths are carried in meters internally. File interfaces use strings
// with an explicit unit suffix ("3.74um", "10mm", "639nm") so configs never
// depend on an implicit unit.

/// Parses "<number><suffix>" where suffix is one of m, mm, um, µm, nm.
inline double parse_length(std::string_view text) {
    size_t i = 0;
    while (i < text.size() && (std::isspace(static_cast<unsigned char>(text[i])) != 0)) ++i;
    size_t start = i;
    bool seen_digit = false;
    while (i < text.size()) {
        char c = text[i];
        if ((c >= '0' && c <= '9')) {
            seen_digit = true;
            ++i;
        } else if (c == '.' || c == '+' || c == '-' || c == 'e' || c == 'E') {
            // 'e' might start a suffix-less exponent or be part of one; accept
            // and let strtod sort it out.
            ++i;
        } else {
            break;
        }
    }
    if (!seen_digit) throw ConfigError("length '" + std::string(text) + "' has no numeric part");
    std::string num(text.substr(start, i - start));
    char* end = nullptr;
    double value = std::strtod(num.c_str(), &end);
    if (end != num.c_str() + num.size()) {
        // strtod stopped early: the trailing 'e'/'E' belonged to the suffix.
        size_t consumed = static_cast<size_t>(end - num.c_str());
        if (consumed == 0) throw ConfigError("length '" + std::string(text) + "' is not a number");
        i = start + consumed;
        value = std::strtod(num.substr(0, consumed).c_str(), nullptr);
    }
    std::string suffix;
    for (; i < text.size(); ++i) {
        char c = text[i];
        if (std::isspace(static_cast<unsigned char>(c)) != 0) continue;
        suffix.push_back(c);
    }
    if (suffix.empty() || suffix == "m") return value;
    if (suffix == "mm") return value * 1e-3;
    if (suffix == "um" || suffix == "\xc2\xb5m" || suffix == "\xce\xbcm") return value * 1e-6;
    if (suffix == "nm") return value * 1e-9;
    throw ConfigError("unknown length unit '" + suffix + "' in '" + std::string(text) + "'");
}

/// Formats a length in meters with a readable suffix (nm/um/mm/m).
inline std::string format_length(double meters) {
    const auto fmt = [](double v, const char* suffix) {
        char buf[64];
        std::snprintf(buf, sizeof(buf), "%.9g%s", v, suffix);
        return std::string(buf);
    };
    double a = meters < 0 ? -meters : meters;
    if (a == 0.0) return "0m";
    if (a < 1e-6) return fmt(meters * 1e9, "nm");
    if (a < 1e-3) return fmt(meters * 1e6, "um");
    if (a < 1.0) return fmt(meters * 1e3, "mm");
    return fmt(meters, "m");
}

}  // namespace holoforge
