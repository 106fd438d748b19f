#include "ctxen/geo.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace ctxen {
namespace {

constexpr double kTwo32 = 4294967296.0;
constexpr double kMetersPerDeg = kEarthRadiusM * std::numbers::pi / 180.0;

std::uint32_t to_code(double value, double offset, double span) {
    const double scaled = std::floor((value + offset) / span * kTwo32);
    if (scaled >= kTwo32) return 0xffffffffu;
    if (scaled <= 0.0) return 0;
    return static_cast<std::uint32_t>(scaled);
}

double radians(double deg) { return deg * std::numbers::pi / 180.0; }

}  // namespace

bool GeoPoint::valid() const noexcept {
    return std::isfinite(lat) && std::isfinite(lon) && lat >= -90.0 && lat <= 90.0 &&
           lon >= -180.0 && lon < 180.0;
}

const GeoPoint& GeoPoint::checked() const {
    if (!valid()) {
        throw DomainError("invalid coordinates (" + std::to_string(lat) + ", " +
                          std::to_string(lon) + ")");
    }
    return *this;
}

double haversine_m(const GeoPoint& a, const GeoPoint& b) {
    const double dlat = radians(b.lat - a.lat);
    const double dlon = radians(b.lon - a.lon);
    const double s = std::sin(dlat / 2) * std::sin(dlat / 2) +
                     std::cos(radians(a.lat)) * std::cos(radians(b.lat)) * std::sin(dlon / 2) *
                         std::sin(dlon / 2);
    return 2.0 * kEarthRadiusM * std::asin(std::min(1.0, std::sqrt(s)));
}

ByteArray<ContextBlob::kSize> ContextBlob::to_bytes() const {
    ByteArray<kSize> out{};
    store_be32(out.data(), lat_code);
    store_be32(out.data() + 4, lon_code);
    store_be32(out.data() + 8, enin);
    std::memcpy(out.data() + 12, reserved.data(), reserved.size());
    return out;
}

ContextBlob ContextBlob::from_bytes(ByteView bytes) {
    if (bytes.size() != kSize) {
        throw FormatError("context blob must be 16 bytes, got " + std::to_string(bytes.size()));
    }
    ContextBlob blob;
    blob.lat_code = load_be32(bytes.data());
    blob.lon_code = load_be32(bytes.data() + 4);
    blob.enin = load_be32(bytes.data() + 8);
    std::memcpy(blob.reserved.data(), bytes.data() + 12, 4);
    return blob;
}

ContextBlob encode_context(const GeoPoint& p, Enin e) {
    p.checked();
    ContextBlob blob;
    blob.lat_code = to_code(p.lat, 90.0, 180.0);
    blob.lon_code = to_code(p.lon, 180.0, 360.0);
    blob.enin = e.value;
    return blob;
}

// Codes are floors, so the step's midpoint halves the worst-case error.
DecodedContext decode_context(const ContextBlob& blob) {
    return {GeoPoint{(blob.lat_code + 0.5) / kTwo32 * 180.0 - 90.0, (blob.lon_code + 0.5) / kTwo32 * 360.0 - 180.0},
            Enin{blob.enin}};
}

DecodedContext decode_context(ByteView bytes) { return decode_context(ContextBlob::from_bytes(bytes)); }

QuantizerConfig::QuantizerConfig(double cell_m) : cell_m_(cell_m) {
    if (!(cell_m >= 1.0 && cell_m <= 100000.0)) {
        throw ArgumentError("cell size must be within [1, 100000] m, got " + std::to_string(cell_m));
    }
}

FGps quantize(const GeoPoint& p, const QuantizerConfig& cfg) {
    p.checked();
    if (std::abs(p.lat) > kPolarLimitDeg) {
        throw UnsupportedRegionError("latitude " + std::to_string(p.lat) +
                                     " outside the supported +-85 degree band");
    }
    const double cell = cfg.cell_m();

    const double y_limit = kPolarLimitDeg * kMetersPerDeg;
    const double row = std::floor(p.lat * kMetersPerDeg / cell);
    const double y_lo = std::max(row * cell, -y_limit);
    const double y_hi = std::min((row + 1) * cell, y_limit);
    const double lat_c = (y_lo + y_hi) / 2.0 / kMetersPerDeg;

    const double x_scale = kMetersPerDeg * std::cos(radians(lat_c));
    const double x_limit = 180.0 * x_scale;
    const double col = std::floor(p.lon * x_scale / cell);
    const double x_lo = std::max(col * cell, -x_limit);
    const double x_hi = std::min((col + 1) * cell, x_limit);
    const double lon_c = (x_lo + x_hi) / 2.0 / x_scale;

    return FGps{GeoPoint{lat_c, lon_c}, cell};
}

double density_cell_size(DensityClass density, const DensityCellSizes& sizes) {
    switch (density) {
        case DensityClass::urban: return sizes.urban_m;
        case DensityClass::suburban: return sizes.suburban_m;
        case DensityClass::rural: return sizes.rural_m;
    }
    return sizes.rural_m;
}

DensityClass density_from_string(std::string_view name) {
    if (name == "urban") return DensityClass::urban;
    if (name == "suburban") return DensityClass::suburban;
    if (name == "rural") return DensityClass::rural;
    throw ArgumentError("unknown density class '" + std::string(name) + "'");
}

}  // namespace ctxen
