#pragma once

// Deterministic discrete-time simulator. Each tick moves the agents along
// their traces, lets every agent broadcast once and delivers the frame to
// every agent in range (or across a wall pair) unless the channel drops it.
// Day boundaries trigger key provisioning, uploads of diagnosed agents and
// consent revocations; matching runs on every agent after the last tick.
//
// The report is a pure function of the scenario: the same scenario produces
// byte-identical report files.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "ctxen/bundle.hpp"
#include "ctxen/device.hpp"
#include "ctxen/scenario.hpp"

namespace ctxen {

/// Ground truth for one tick: two agents within range, or a wall pair.
struct Contact {
    std::uint32_t a = 0;  // agent indices, a < b
    std::uint32_t b = 0;
    std::uint64_t t = 0;  // unix seconds
    GeoPoint pos_a;
    GeoPoint pos_b;
    double distance_m = 0.0;
    bool via_wall = false;  // heard only because of a wall pair
};

struct GroundTruth {
    std::vector<Contact> contacts;
};

/// sent counts frames put on the air; eligible counts (frame, listener)
/// pairs the channel considered. received + dropped == eligible.
struct ChannelCounters {
    std::uint64_t sent = 0;
    std::uint64_t eligible = 0;
    std::uint64_t received = 0;
    std::uint64_t dropped = 0;
    std::uint64_t via_wall = 0;
};

struct UploadRecord {
    std::uint32_t agent = 0;
    std::uint64_t receipt = 0;
    std::uint32_t day = 0;  // absolute day of the upload (diagnosis day)
    std::uint32_t first_day = 0;
    std::uint32_t last_day = 0;
    bool consent = true;
};

struct RevocationRecord {
    std::uint32_t agent = 0;
    std::uint64_t receipt = 0;
    std::uint32_t day = 0;  // absolute day the revocation was issued
    std::vector<std::uint32_t> days;  // absolute days revoked
    bool appended = false;
    std::vector<std::string> warnings;
};

struct AgentResult {
    std::string id;
    SchemeKind scheme = SchemeKind::sym;
    DeviceCounters counters;
    std::vector<ExposureEvent> events;
    Bytes snapshot;
};

struct SimulationReport {
    Scenario scenario;
    ChannelCounters channel;
    std::vector<AgentResult> agents;
    std::vector<UploadRecord> uploads;
    std::vector<RevocationRecord> revocations;
    std::vector<DiagnosisBundle> registry_log;
    GroundTruth ground_truth;

    /// Agent index of the uploader behind a registry receipt.
    std::optional<std::uint32_t> uploader_of(std::uint64_t receipt) const;
    std::size_t total_events() const;
    /// Events that carry a location.
    std::size_t total_disclosures() const;
};

/// Throws ValidationError before executing anything if the scenario is invalid.
SimulationReport run(const Scenario& sc);

/// Writes scenario.yaml, report.json, events.jsonl, ground_truth.json,
/// registry.jsonl and snapshots/<id>.cen under dir.
void write_report(const SimulationReport& report, const std::filesystem::path& dir);

/// Inverse of write_report. Throws FormatError for missing or malformed files.
SimulationReport load_report(const std::filesystem::path& dir);

nlohmann::json event_to_json(const ExposureEvent& ev, const SimulationReport& report,
                             std::uint32_t holder);

}  // namespace ctxen
