#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "mobprof/types.hpp"

namespace mobprof {

inline constexpr double kEarthRadiusKm = 6371.0;

struct GeoPoint {
    double lon = 0.0;  // degrees east
    double lat = 0.0;  // degrees north

    /// Throws InputError unless both coordinates are finite and in range.
    static GeoPoint make(double lon, double lat);
    bool operator==(const GeoPoint&) const = default;
};

double haversine_km(GeoPoint a, GeoPoint b);

using Ring = std::vector<GeoPoint>;  // closed: front() == back()

struct BoundingBox {
    double min_lon, min_lat, max_lon, max_lat;
    bool contains(GeoPoint p) const {
        return p.lon >= min_lon && p.lon <= max_lon && p.lat >= min_lat && p.lat <= max_lat;
    }
};

struct Arrondissement {
    RegionId id = 0;
    std::string name;
    GeoPoint centroid;
    std::vector<Ring> boundary;
    ZoneId lz_id = 0;
    bool synthetic_centroid = false;  // set when the centroid falls outside the boundary

    /// Even-odd containment; points on an edge count as inside.
    bool contains(GeoPoint p) const;
    BoundingBox bounds() const;
};

struct LivelihoodZone {
    ZoneId id = 0;
    std::string name;
    std::string tag;
};

struct Antenna {
    std::string id;
    GeoPoint location;
    RegionId arrondissement_id = 0;
};

struct Location {
    RegionId id = 0;
    bool fallback = false;  // no boundary contained the point; nearest centroid used
};

/// Immutable country model. Arrondissements are kept sorted by id.
class Geography {
public:
    Geography() = default;
    Geography(std::vector<LivelihoodZone> zones, std::vector<Arrondissement> arrondissements);

    /// Loads the arrondissement JSON file and, optionally, an antenna table.
    static Geography load(const std::filesystem::path& arrondissements,
                          const std::optional<std::filesystem::path>& antennas = std::nullopt);

    /// Adds antennas; each is assigned to the arrondissement that contains it.
    void set_antennas(std::vector<Antenna> antennas);
    void load_antennas(const std::filesystem::path& path);

    const std::vector<Arrondissement>& arrondissements() const noexcept { return arrondissements_; }
    const std::vector<LivelihoodZone>& zones() const noexcept { return zones_; }
    const std::vector<Antenna>& antennas() const noexcept { return antennas_; }

    bool has_arrondissement(RegionId id) const;
    const Arrondissement& arrondissement(RegionId id) const;
    bool has_zone(ZoneId id) const;
    ZoneId zone_of(RegionId id) const;
    std::vector<RegionId> arrondissements_in_zone(ZoneId zone) const;

    const Antenna* find_antenna(std::string_view id) const;

    /// Lowest-id arrondissement whose boundary contains p, if any.
    std::optional<RegionId> containing(GeoPoint p) const;
    Location locate(GeoPoint p) const;

private:
    std::vector<LivelihoodZone> zones_;
    std::vector<Arrondissement> arrondissements_;
    std::vector<BoundingBox> bounds_;
    std::vector<Antenna> antennas_;
    std::unordered_map<std::string, std::size_t> antenna_index_;
};

Location locate_arrondissement(GeoPoint p, const Geography& geography);
ZoneId arrondissement_to_lz(RegionId id, const Geography& geography);

// --- region series and rainfall --------------------------------------------

enum class RegionKind { arrondissement, livelihood_zone };
enum class TimeResolution { day, month };

const char* to_string(RegionKind kind);

struct SeriesPoint {
    /// Days since the Unix epoch for daily series; year*12 + (month-1) for monthly series.
    std::int32_t time = 0;
    std::optional<double> value;
    int missing_days = 0;  // monthly series only
};

/// Environment variable or indicator attached to a region.
struct RegionSeries {
    std::int32_t region_id = 0;
    RegionKind kind = RegionKind::arrondissement;
    std::string variable;
    TimeResolution resolution = TimeResolution::day;
    std::vector<SeriesPoint> points;

    /// Throws InvariantError unless times are strictly increasing and values finite.
    void validate() const;
    /// Monthly values for one calendar year; months absent from the series are missing.
    MonthSlots<double> months_of(int year) const;
};

inline std::int32_t month_key(int year, int month) { return year * 12 + (month - 1); }

struct RainGridReading {
    std::chrono::sys_days day;
    GeoPoint cell_center;
    double mm = 0.0;
};

struct RainGridSpec {
    double resolution_deg = 0.25;
    int supersample = 4;
};

std::vector<RainGridReading> read_rain_grid(const std::filesystem::path& path);

/// Per-region daily weighted mean of gridded rainfall. A cell contributes to a region
/// with weight equal to the fraction of its S x S interior sample points inside it.
std::vector<RegionSeries> aggregate_rain(std::span<const RainGridReading> readings,
                                         const Geography& geography, RegionKind target,
                                         const RainGridSpec& grid = {});

/// Per-region cell weights used by aggregate_rain, exposed for testing.
struct CellWeight {
    std::size_t region_index;  // index into the target region list
    double weight;
};
std::vector<CellWeight> cell_weights(GeoPoint cell_center, const Geography& geography,
                                     RegionKind target, const RainGridSpec& grid);
std::vector<std::int32_t> target_regions(const Geography& geography, RegionKind target);

/// Sums daily values per calendar month; missing days are skipped and counted.
RegionSeries monthly_rain(const RegionSeries& daily);

}  // namespace mobprof
