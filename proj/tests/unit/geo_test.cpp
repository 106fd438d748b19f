#include <cmath>
#include <fstream>

#include <gtest/gtest.h>

#include "ctxen/geo.hpp"
#include "ctxen/rng.hpp"
#include "test_support.hpp"

namespace ctxen {
namespace {

GeoPoint random_point(Rng& rng, double max_abs_lat = 90.0) {
    return {(rng.uniform01() * 2.0 - 1.0) * max_abs_lat, rng.uniform01() * 360.0 - 180.0};
}

TEST(GeoPoint, Validity) {
    EXPECT_TRUE((GeoPoint{90.0, -180.0}.valid()));
    EXPECT_FALSE((GeoPoint{90.0001, 0.0}.valid()));
    EXPECT_FALSE((GeoPoint{0.0, 180.0}.valid()));
    EXPECT_FALSE((GeoPoint{std::nan(""), 0.0}.valid()));
    EXPECT_THROW((GeoPoint{-91.0, 0.0}.checked()), DomainError);
}

TEST(Haversine, KnownDistances) {
    EXPECT_DOUBLE_EQ(haversine_m({0, 0}, {0, 0}), 0.0);
    // One degree of arc on the sphere.
    EXPECT_NEAR(haversine_m({0, 0}, {1, 0}), kEarthRadiusM * M_PI / 180.0, 1e-6);
    EXPECT_NEAR(haversine_m({0, 179.5}, {0, -179.5}), kEarthRadiusM * M_PI / 180.0, 1e-6);
}

TEST(ContextBlob, MatchesOracleGoldenVectors) {
    std::ifstream in(test::data_path("context_blob_vectors.txt"));
    double lat = 0, lon = 0;
    std::uint32_t enin = 0;
    std::string hex;
    int n = 0;
    while (in >> lat >> lon >> enin >> hex) {
        const auto blob = encode_context({lat, lon}, Enin{enin});
        EXPECT_EQ(to_hex(blob.to_bytes()), hex) << lat << "," << lon;
        EXPECT_EQ(ContextBlob::from_bytes(from_hex(hex)), blob);
        ++n;
    }
    EXPECT_GE(n, 6);
}

TEST(ContextBlob, RoundTripWithinOneStep) {
    Rng rng(31);
    for (int i = 0; i < 1000; ++i) {
        const auto p = random_point(rng);
        const Enin e{static_cast<std::uint32_t>(rng.next_u64())};
        const auto d = decode_context(encode_context(p, e).to_bytes());
        EXPECT_EQ(d.enin, e);
        // Midpoint decoding: within half a step, so within one.
        EXPECT_LE(std::abs(d.point.lat - p.lat), kLatStepDeg / 2 + 1e-12);
        EXPECT_LE(std::abs(d.point.lon - p.lon), kLonStepDeg / 2 + 1e-12);
    }
}

TEST(ContextBlob, ReservedBytesZeroAndIgnored) {
    auto bytes = encode_context({1.0, 2.0}, Enin{3}).to_bytes();
    EXPECT_EQ(bytes[12] | bytes[13] | bytes[14] | bytes[15], 0);
    bytes[15] = 0xaa;
    const auto d = decode_context(bytes);
    EXPECT_EQ(d.enin, Enin{3});
    EXPECT_NEAR(d.point.lat, 1.0, kLatStepDeg);
}

TEST(ContextBlob, BadInputsRejected) {
    EXPECT_THROW(encode_context({95.0, 0.0}, Enin{0}), DomainError);
    EXPECT_THROW(encode_context({0.0, 180.0}, Enin{0}), DomainError);
    EXPECT_THROW(ContextBlob::from_bytes(Bytes(15)), FormatError);
    EXPECT_THROW(ContextBlob::from_bytes(Bytes(17)), FormatError);
}

TEST(Quantizer, MatchesOracleGoldenVectors) {
    std::ifstream in(test::data_path("quantizer_vectors.txt"));
    double lat = 0, lon = 0, cell = 0, clat = 0, clon = 0;
    int n = 0;
    while (in >> lat >> lon >> cell >> clat >> clon) {
        const auto f = quantize({lat, lon}, QuantizerConfig(cell));
        EXPECT_NEAR(f.center.lat, clat, 1e-9) << lat << "," << lon << " @" << cell;
        EXPECT_NEAR(f.center.lon, clon, 1e-9) << lat << "," << lon << " @" << cell;
        EXPECT_EQ(f.cell_m, cell);
        ++n;
    }
    EXPECT_GE(n, 8);
}

TEST(Quantizer, CenterWithinBoundAndIdempotent) {
    Rng rng(41);
    const double cells[] = {1.0, 50.0, 200.0, 1000.0, 5000.0};
    for (const double cell : cells) {
        const QuantizerConfig q(cell);
        for (int i = 0; i < 1000; ++i) {
            // Stay off the clipped polar rows, whose centers shift toward the equator.
            const auto p = random_point(rng, 80.0);
            const auto f = quantize(p, q);
            EXPECT_LE(haversine_m(p, f.center), blur_bound_m(cell)) << p.lat << "," << p.lon;
            const auto again = quantize(f.center, q);
            EXPECT_EQ(again.center, f.center);
        }
    }
}

TEST(Quantizer, NearbyPointsShareCell) {
    const QuantizerConfig q(1000.0);
    const auto a = quantize({42.3601, -71.0942}, q);
    const auto b = quantize({42.36011, -71.09421}, q);
    EXPECT_EQ(a.center, b.center);
}

TEST(Quantizer, PolarAndConfigLimits) {
    const QuantizerConfig q(200.0);
    EXPECT_NO_THROW(quantize({85.0, 0.0}, q));
    EXPECT_NO_THROW(quantize({-85.0, 0.0}, q));
    EXPECT_THROW(quantize({85.0001, 0.0}, q), UnsupportedRegionError);
    EXPECT_THROW(quantize({-89.0, 0.0}, q), UnsupportedRegionError);
    EXPECT_THROW(QuantizerConfig(0.5), ArgumentError);
    EXPECT_THROW(QuantizerConfig(100001.0), ArgumentError);
    EXPECT_NO_THROW(QuantizerConfig(1.0));
    EXPECT_NO_THROW(QuantizerConfig(100000.0));
}

TEST(Quantizer, ClippedCellsStayInDomain) {
    Rng rng(43);
    const QuantizerConfig q(100000.0);
    for (int i = 0; i < 1000; ++i) {
        const auto f = quantize(random_point(rng, 85.0), q);
        EXPECT_TRUE(f.center.valid());
        EXPECT_LE(std::abs(f.center.lat), kPolarLimitDeg);
    }
}

TEST(Density, CellSizes) {
    EXPECT_EQ(density_cell_size(DensityClass::urban), 200.0);
    EXPECT_EQ(density_cell_size(DensityClass::suburban), 1000.0);
    EXPECT_EQ(density_cell_size(DensityClass::rural), 1000.0);
    EXPECT_EQ(density_cell_size(DensityClass::rural, {200, 1000, 5000}), 5000.0);
    EXPECT_EQ(density_from_string("suburban"), DensityClass::suburban);
    EXPECT_THROW(density_from_string("downtown"), ArgumentError);
}

}  // namespace
}  // namespace ctxen
