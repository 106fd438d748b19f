#pragma once

// Scenario description for the simulator: agents with mobility traces and
// device configuration, the channel model, and the diagnosis/consent
// timeline. Scenarios are read from and written to YAML.

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "ctxen/device.hpp"
#include "ctxen/geo.hpp"

namespace ctxen {

inline constexpr std::uint64_t kSecondsPerDay = 86400;
inline constexpr int kScenarioVersion = 1;

struct Waypoint {
    std::uint64_t t = 0;  // seconds after scenario start
    GeoPoint position;
};

/// Piecewise-linear path. Before the first waypoint and after the last the
/// agent stands still.
class MobilityTrace {
public:
    MobilityTrace() = default;
    explicit MobilityTrace(std::vector<Waypoint> waypoints) : waypoints_(std::move(waypoints)) {}

    GeoPoint at(std::uint64_t t) const;
    const std::vector<Waypoint>& waypoints() const noexcept { return waypoints_; }

private:
    std::vector<Waypoint> waypoints_;
};

struct ConsentPolicy {
    bool share = true;                        // include consent secrets in the upload
    std::optional<std::uint32_t> revoke_day;  // scenario day on which consent is withdrawn
    std::vector<std::uint32_t> revoke_days;   // scenario days to withdraw; empty means all uploaded
};

struct AgentSpec {
    std::string id;
    DeviceConfig device;
    std::optional<std::uint32_t> diagnosis_day;  // scenario day; uploads at its end
    ConsentPolicy consent;
    MobilityTrace trace;
};

struct ChannelModel {
    double range_m = 10.0;
    double drop_prob = 0.0;
    /// Agent pairs that hear each other regardless of distance.
    std::vector<std::pair<std::string, std::string>> wall_pairs;

    bool is_wall_pair(std::string_view a, std::string_view b) const;
};

struct Scenario {
    int version = kScenarioVersion;
    std::string name = "scenario";
    std::uint64_t seed = 0;
    std::uint64_t start_unix = 0;  // must be day-aligned
    std::uint64_t duration_s = kSecondsPerDay;
    std::uint32_t tick_s = 60;
    std::uint32_t tolerance = 12;
    ChannelModel channel;
    std::vector<AgentSpec> agents;
    /// Field-level problems found while parsing (unknown scheme names, bad
    /// cell sizes); reported by problems() alongside the semantic checks.
    std::vector<std::string> parse_problems;

    std::uint32_t start_day() const noexcept { return static_cast<std::uint32_t>(start_unix / kSecondsPerDay); }
    std::uint32_t num_days() const noexcept {
        return static_cast<std::uint32_t>((duration_s + kSecondsPerDay - 1) / kSecondsPerDay);
    }
    /// Index into agents, or npos.
    std::size_t agent_index(std::string_view id) const;

    /// Every problem with the scenario; empty when it is runnable.
    std::vector<std::string> problems() const;
    /// Throws ValidationError listing every problem.
    void validate() const;
};

/// Throws FormatError for YAML that does not have the scenario shape. The
/// result is not validated.
Scenario parse_scenario(std::string_view yaml);
Scenario load_scenario(const std::filesystem::path& path);
std::string to_yaml(const Scenario& sc);

}  // namespace ctxen
