#pragma once

#include <cmath>

namespace gdpw::geo {

inline constexpr double kEarthRadiusKm = 6371.0;

/// Great-circle distance in km between two (lat, lon) points given in degrees.
inline double haversine_km(double lat_a, double lon_a, double lat_b, double lon_b) {
    constexpr double deg = M_PI / 180.0;
    const double phi1 = lat_a * deg;
    const double phi2 = lat_b * deg;
    const double dphi = (lat_b - lat_a) * deg;
    const double dlam = (lon_b - lon_a) * deg;
    const double s = std::sin(dphi / 2), t = std::sin(dlam / 2);
    double h = s * s + std::cos(phi1) * std::cos(phi2) * t * t;
    if (h > 1.0) h = 1.0;
    return 2.0 * kEarthRadiusKm * std::asin(std::sqrt(h));
}

}  // namespace gdpw::geo
