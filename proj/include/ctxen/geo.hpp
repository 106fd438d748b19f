#pragma once

// Location representation, the 16-byte context blob codec and the metric
// grid quantizer used to blur locations.

#include <cstdint>
#include <optional>

#include "ctxen/bytes.hpp"
#include "ctxen/gaen.hpp"

namespace ctxen {

inline constexpr double kEarthRadiusM = 6371000.0;
/// The quantizer grid is defined only for |lat| <= this bound.
inline constexpr double kPolarLimitDeg = 85.0;

/// WGS84-style degrees. lat in [-90, 90], lon in [-180, 180).
struct GeoPoint {
    double lat = 0.0;
    double lon = 0.0;

    bool valid() const noexcept;
    /// Throws DomainError if !valid().
    const GeoPoint& checked() const;

    friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// Great-circle distance in meters.
double haversine_m(const GeoPoint& a, const GeoPoint& b);

/// Fixed-point location plus ENIN. Wire layout (big-endian):
/// [0,4) lat_code  [4,8) lon_code  [8,12) enin  [12,16) reserved (zero).
struct ContextBlob {
    static constexpr std::size_t kSize = 16;

    std::uint32_t lat_code = 0;
    std::uint32_t lon_code = 0;
    std::uint32_t enin = 0;
    ByteArray<4> reserved{};

    ByteArray<kSize> to_bytes() const;
    /// Throws FormatError unless exactly 16 bytes. Reserved bytes are kept
    /// but carry no meaning.
    static ContextBlob from_bytes(ByteView bytes);

    friend bool operator==(const ContextBlob&, const ContextBlob&) = default;
};

/// One code step in degrees.
inline constexpr double kLatStepDeg = 180.0 / 4294967296.0;
inline constexpr double kLonStepDeg = 360.0 / 4294967296.0;

struct DecodedContext {
    GeoPoint point;
    Enin enin;
};

/// Throws DomainError for invalid coordinates.
ContextBlob encode_context(const GeoPoint& p, Enin e);
DecodedContext decode_context(const ContextBlob& blob);
DecodedContext decode_context(ByteView bytes);

class QuantizerConfig {
public:
    /// Throws ArgumentError unless cell_m is in [1, 100000].
    explicit QuantizerConfig(double cell_m);
    double cell_m() const noexcept { return cell_m_; }

    friend bool operator==(const QuantizerConfig&, const QuantizerConfig&) = default;

private:
    double cell_m_;
};

/// A blurred location: the center of the grid cell that contains the source.
struct FGps {
    GeoPoint center;
    double cell_m = 0.0;
};

/// Snaps p to the center of its cell on a local equirectangular meter grid.
/// Rows are bands of latitude; each row's longitude scale uses the cosine of
/// the row's center latitude. Cells are clipped at +-85 degrees latitude and
/// at the antimeridian, and the center of a clipped cell is the center of the
/// clipped extent. Throws UnsupportedRegionError for |lat| > 85.
FGps quantize(const GeoPoint& p, const QuantizerConfig& cfg);

/// Worst-case distance from a point to its cell center, with 1% slack for
/// the projection.
inline double blur_bound_m(double cell_m) { return cell_m * 0.70710678118654752 * 1.01; }

enum class DensityClass { urban, suburban, rural };

struct DensityCellSizes {
    double urban_m = 200.0;
    double suburban_m = 1000.0;
    double rural_m = 1000.0;
};

double density_cell_size(DensityClass density, const DensityCellSizes& sizes = {});

/// Throws ArgumentError for unknown names.
DensityClass density_from_string(std::string_view name);

}  // namespace ctxen
