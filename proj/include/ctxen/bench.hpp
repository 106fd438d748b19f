#pragma once

// Size and cost comparison of the context schemes. Timings are wall-clock
// and vary between runs; sizes and counters are deterministic.

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctxen/device.hpp"

namespace ctxen {

struct BenchOptions {
    std::uint64_t seed = 1;
    std::vector<std::uint32_t> key_counts{10, 100, 1000};
    std::vector<std::uint32_t> beacon_counts{1, 2, 4, 8, 16};
    std::uint32_t findmy_minutes = 60;
    std::uint32_t heard_rpis = 100;  // scan log size for the matching sweep
};

struct SchemeCost {
    SchemeKind scheme = SchemeKind::sym;
    std::size_t payload_bytes = 0;
    double broadcast_us = 0.0;  // per tick_broadcast
    double receive_us = 0.0;    // per on_receive
    double match_us = 0.0;      // per diagnosis key in process_exposures
};

struct FindMyScaling {
    std::uint32_t beacons = 0;
    std::uint64_t distinct_pairs = 0;  // distinct (beacon uuid, interval) pairs heard
    std::uint64_t encryptions = 0;
};

struct MatchScaling {
    std::uint32_t keys = 0;
    std::uint64_t derivations = 0;
    std::uint64_t lookups = 0;
    double ms = 0.0;
};

struct BenchResult {
    std::vector<SchemeCost> schemes;
    std::vector<FindMyScaling> findmy;
    std::vector<MatchScaling> matching;

    /// Least-squares slope of derivations against key count.
    double derivations_per_key() const;
    std::string table() const;
    nlohmann::json to_json() const;
};

BenchResult bench_schemes(const BenchOptions& options = {});

}  // namespace ctxen
