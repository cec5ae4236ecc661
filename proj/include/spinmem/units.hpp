#pragma once

#include <charconv>
#include <cmath>
#include <numbers>
#include <optional>
#include <string>
#include <string_view>

namespace spinmem {

/// Multiplier taking a value in `unit` to SI base units, or nullopt if the
/// unit is unknown.  dBm is not a pure scale and is handled in parse_quantity.
inline std::optional<double> unit_factor(std::string_view unit) {
    if (unit.empty()) return 1.0;
    struct Entry {
        std::string_view name;
        double factor;
    };
    static constexpr Entry table[] = {
        {"Hz", 1.0},    {"kHz", 1e3},   {"MHz", 1e6},  {"GHz", 1e9},
        {"s", 1.0},     {"ms", 1e-3},   {"us", 1e-6},  {"ns", 1e-9},
        {"T", 1.0},     {"mT", 1e-3},   {"uT", 1e-6},  {"nT", 1e-9},
        {"W", 1.0},     {"mW", 1e-3},   {"uW", 1e-6},  {"nW", 1e-9},
        {"pW", 1e-12},  {"fW", 1e-15},  {"aW", 1e-18},
        {"m", 1.0},     {"mm", 1e-3},   {"um", 1e-6},  {"nm", 1e-9},
        {"ppm", 1e-6},  {"rad", 1.0},   {"deg", std::numbers::pi / 180.0},
        {"K", 1.0},     {"percent", 1e-2},
    };
    for (const auto& e : table)
        if (unit == e.name) return e.factor;
    return std::nullopt;
}

struct ParsedQuantity {
    double si = 0.0;
    bool ok = false;
    std::string error;
};

/// Parses "value [unit]" (e.g. "2.915 GHz", "650", "-71 dBm") to SI.
inline ParsedQuantity parse_quantity(std::string_view text) {
    ParsedQuantity out;
    const auto strip = [](std::string_view s) {
        while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
        while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
        return s;
    };
    text = strip(text);
    if (text.empty()) {
        out.error = "empty value";
        return out;
    }
    std::size_t split = text.size();
    for (std::size_t i = 0; i < text.size(); ++i) {
        if (text[i] == ' ' || text[i] == '\t') {
            split = i;
            break;
        }
    }
    const std::string_view num_part = text.substr(0, split);
    const std::string_view unit_part = strip(split < text.size() ? text.substr(split + 1) : "");

    double value = 0.0;
    const auto [ptr, ec] =
        std::from_chars(num_part.data(), num_part.data() + num_part.size(), value);
    if (ec != std::errc{} || ptr != num_part.data() + num_part.size()) {
        out.error = "malformed number '" + std::string(num_part) + "'";
        return out;
    }
    if (unit_part == "dBm") {
        out.si = 1e-3 * std::pow(10.0, value / 10.0);
        out.ok = true;
        return out;
    }
    const auto factor = unit_factor(unit_part);
    if (!factor) {
        out.error = "unknown unit '" + std::string(unit_part) + "'";
        return out;
    }
    out.si = value * *factor;
    out.ok = true;
    return out;
}

}  // namespace spinmem
