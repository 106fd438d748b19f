#pragma once

// Per-device protocol state machine: key schedule, broadcast, scan log,
// private local location log, diagnosis upload and exposure derivation.
//
// A Device is single-owner mutable state. Drive one device from one thread;
// distinct devices are independent.

#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <span>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include "ctxen/bundle.hpp"
#include "ctxen/gaen.hpp"
#include "ctxen/geo.hpp"
#include "ctxen/payload.hpp"
#include "ctxen/rotating.hpp"
#include "ctxen/schemes.hpp"

namespace ctxen {

class Rng;

enum class SchemeKind : std::uint8_t {
    local_rpi,        // location logged on device, indexed by heard RPI
    local_enin,       // location logged on device, indexed by ENIN
    local_blurred,    // as local_enin, but only the quantized cell is stored
    findmy,           // encrypt-what-you-heard under rotating beacon keys
    asym,             // context sealed to a rotating public key
    sym,              // context sealed under the daily key
    consent,          // context sealed under daily key XOR consent secret
    blurred_consent,  // consent scheme over the quantized cell
};

std::string_view to_string(SchemeKind scheme);
/// Throws ArgumentError for unknown names.
SchemeKind scheme_kind_from_string(std::string_view name);
bool logs_locally(SchemeKind scheme);
bool uses_blur(SchemeKind scheme);
SchemeTag broadcast_tag(SchemeKind scheme);

struct DeviceConfig {
    SchemeKind scheme = SchemeKind::sym;
    std::optional<QuantizerConfig> quantizer;  // required iff uses_blur(scheme)
    bool consent_default = true;
    bool per_day_consent = false;  // rotate ConsentSecret with each daily key
    std::uint32_t windows_per_key = kIntervalsPerDay;

    /// Throws ArgumentError on an inconsistent configuration.
    void validate() const;

    friend bool operator==(const DeviceConfig&, const DeviceConfig&) = default;
};

struct ScanRecord {
    std::variant<BlePayload, FindMyBeacon> payload;
    Enin observed_at;
    std::optional<GeoPoint> own_location;
    std::optional<double> rssi;
};

struct LocalLogEntry {
    std::variant<Key16, Enin> key;  // heard RPI (approach 1) or window (approach 2)
    GeoPoint location;
    std::optional<double> cell_m;  // set when location is a blurred cell center
    Enin stored_at;
};

enum class ContextSource : std::uint8_t { own_log, decrypted_peer, none };
std::string_view to_string(ContextSource source);
ContextSource context_source_from_string(std::string_view name);

struct ExposureContext {
    GeoPoint location;
    std::optional<double> cell_m;
    Enin enin;
};

struct ExposureEvent {
    Key16 matched_rpi{};  // FindMy: the matched beacon uuid
    Enin window;          // derivation window of the matched identifier
    std::uint32_t day = 0;
    SchemeKind scheme = SchemeKind::sym;
    std::optional<ExposureContext> context;
    ContextSource source = ContextSource::none;
    std::uint64_t receipt = 0;  // registry receipt of the matching bundle
};

struct DeviceCounters {
    std::uint64_t broadcasts = 0;
    std::uint64_t received = 0;
    std::uint64_t duplicates = 0;
    std::uint64_t unparseable = 0;
    std::uint64_t findmy_encryptions = 0;
};

struct DayRange {
    std::uint32_t first_day = 0;  // days since the epoch, inclusive
    std::uint32_t last_day = 0;   // inclusive
};

class Device {
public:
    Device(DeviceConfig config, Rng& rng);

    const DeviceConfig& config() const noexcept { return config_; }
    const DeviceCounters& counters() const noexcept { return counters_; }
    const std::vector<ScanRecord>& scan_log() const noexcept { return scans_; }
    const std::vector<LocalLogEntry>& local_log() const noexcept { return local_log_; }
    const Key16& storage_key() const noexcept { return storage_key_; }

    /// Creates the keys covering the day that starts at day_start. Idempotent.
    void provision_day(Enin day_start, Rng& rng);
    bool has_key_for(Enin at) const;
    /// Throws StateError if no key covers `at`.
    const DailyKey& key_for(Enin at) const;

    /// The frame to emit at time t: a BLE payload, or for the FindMy scheme a
    /// 48-byte beacon. Throws StateError when the day was not provisioned.
    Bytes tick_broadcast(std::uint64_t t, const GeoPoint& own_gps, Rng& rng);

    /// Records a heard frame. Unparseable frames are counted and dropped.
    void on_receive(ByteView raw, std::uint64_t t, const GeoPoint& own_gps, Rng& rng,
                    std::optional<double> rssi = std::nullopt);

    /// Throws ArgumentError for an empty range, StateError for unprovisioned days.
    DiagnosisBundle make_diagnosis_bundle(DayRange days, bool consent, Rng& rng) const;

    std::vector<ExposureEvent> process_exposures(std::span<const DiagnosisBundle> bundles,
                                                 MatchTolerance tol = {}) const;

    /// Versioned binary snapshot (magic "CEN1"). Every location-bearing field
    /// is sealed with AES-128-GCM under storage_key(), which is not written.
    Bytes snapshot(Rng& rng) const;
    /// Throws FormatError for a malformed snapshot, DecryptError for a wrong key.
    static Device restore(ByteView snapshot, const Key16& storage_key);

private:
    struct KeyMaterial {
        DailyKey key;
        RpiDeriver deriver;
        std::optional<ConsentSecret> consent;  // per-key consent only
        std::optional<MasterSecret> asym_master;
    };

    Device() = default;

    const KeyMaterial& material_for(Enin at) const;
    const ConsentSecret& consent_for(const KeyMaterial& m) const;
    void log_location(const Key16& heard, Enin window, const GeoPoint& own_gps);
    std::optional<ExposureContext> recover_context(const ScanRecord& scan, const RpiMatch& match,
                                                   const DailyKey& key, const DiagnosisEntry& entry,
                                                   MatchTolerance tol, SchemeKind& scheme) const;
    void rebuild_indexes();

    DeviceConfig config_;
    Key16 storage_key_{};
    ConsentSecret consent_{};
    MasterSecret findmy_master_{};
    std::optional<std::pair<std::uint32_t, std::uint32_t>> findmy_windows_;
    std::map<std::uint32_t, KeyMaterial> keys_;  // by validity start
    DeviceCounters counters_;

    std::vector<ScanRecord> scans_;
    std::set<std::pair<Key16, std::uint32_t>> seen_;

    std::vector<LocalLogEntry> local_log_;
    std::map<std::uint32_t, std::vector<std::size_t>> local_by_window_;
    std::map<std::pair<Key16, std::uint32_t>, std::size_t> local_by_rpi_;

    struct StoredFindMy {
        FindMyRecord record;
        Enin heard_at;
    };
    std::vector<StoredFindMy> findmy_records_;
};

}  // namespace ctxen
