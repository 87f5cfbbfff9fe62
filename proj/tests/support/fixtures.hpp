#pragma once

#include <string>
#include <vector>

#include "mobprof/geo.hpp"

namespace fixture {

inline mobprof::Arrondissement square(mobprof::RegionId id, double x0, double y0, double size, mobprof::ZoneId lz) {
    using mobprof::GeoPoint;
    mobprof::Arrondissement a;
    a.id = id;
    a.name = "A" + std::to_string(id);
    a.centroid = GeoPoint::make(x0 + size / 2, y0 + size / 2);
    a.boundary.push_back({GeoPoint::make(x0, y0), GeoPoint::make(x0 + size, y0), GeoPoint::make(x0 + size, y0 + size),
                          GeoPoint::make(x0, y0 + size), GeoPoint::make(x0, y0)});
    a.lz_id = lz;
    return a;
}

inline std::vector<mobprof::LivelihoodZone> zones(int n) {
    std::vector<mobprof::LivelihoodZone> z;
    for (int i = 1; i <= n; ++i) z.push_back({i, "LZ" + std::to_string(i), ""});
    return z;
}

/// Row of unit squares along the equator: arrondissement i covers lon [i-1, i], zone zone_of[i-1].
inline mobprof::Geography strip(const std::vector<mobprof::ZoneId>& zone_of, int n_zones) {
    std::vector<mobprof::Arrondissement> arrs;
    for (std::size_t i = 0; i < zone_of.size(); ++i)
        arrs.push_back(square(static_cast<mobprof::RegionId>(i + 1), static_cast<double>(i), 0.0, 1.0, zone_of[i]));
    return mobprof::Geography(zones(n_zones), std::move(arrs));
}

}  // namespace fixture
