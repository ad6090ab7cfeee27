#pragma once

#include <cmath>
#include <numbers>
#include <utility>

namespace mpr {

constexpr double kEarthRadiusMeters = 6371008.8;

// Equirectangular projection around a reference point; metres east/north.
// Good to well under a percent across a city.
struct LocalProjection {
    double lat0 = 0.0;
    double lon0 = 0.0;

    std::pair<double, double> project(double lat, double lon) const {
        constexpr double rad = std::numbers::pi / 180.0;
        const double x = kEarthRadiusMeters * (lon - lon0) * rad * std::cos(lat0 * rad);
        const double y = kEarthRadiusMeters * (lat - lat0) * rad;
        return {x, y};
    }

    std::pair<double, double> unproject(double x, double y) const {
        constexpr double deg = 180.0 / std::numbers::pi;
        constexpr double rad = std::numbers::pi / 180.0;
        const double lat = lat0 + y / kEarthRadiusMeters * deg;
        const double lon = lon0 + x / (kEarthRadiusMeters * std::cos(lat0 * rad)) * deg;
        return {lat, lon};
    }
};

}  // namespace mpr
