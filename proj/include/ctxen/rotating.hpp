#pragma once

// Rotating public keys under one long-term secret, and the "encrypt what you
// heard" FindMy variant built on them.
//
// Each window's private scalar is HKDF(master, label || LE32(window)), so
// whoever holds the master secret can rebuild every window's key pair, while
// the broadcast public keys of different windows are unlinkable.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "ctxen/bytes.hpp"
#include "ctxen/gaen.hpp"
#include "ctxen/geo.hpp"
#include "ctxen/schemes.hpp"

namespace ctxen {

class Rng;

using MasterSecret = Key32;

inline constexpr std::uint32_t kFindMyWindowSeconds = 900;

struct WindowKeypair {
    std::uint32_t window = 0;
    Key32 public_part{};
    Key32 private_scalar{};
};

class RotatingKeypair {
public:
    /// window_seconds: 900 for FindMy beacons, 600 (one ENIN) for the
    /// asymmetric GAEN scheme.
    RotatingKeypair(const MasterSecret& master, std::uint32_t window_seconds, std::string sk_label);

    static RotatingKeypair findmy(const MasterSecret& master);
    static RotatingKeypair asymmetric(const MasterSecret& master);

    std::uint32_t window_at(std::uint64_t unix_seconds) const;
    WindowKeypair at_window(std::uint32_t window) const;
    WindowKeypair at_time(std::uint64_t unix_seconds) const { return at_window(window_at(unix_seconds)); }

    const MasterSecret& master_secret() const noexcept { return master_; }
    std::uint32_t window_seconds() const noexcept { return window_seconds_; }

private:
    MasterSecret master_;
    std::uint32_t window_seconds_;
    std::string sk_label_;
};

MasterSecret generate_master_secret(Rng& rng);

/// (uuid, public key) advertised by a FindMy device for one 15-minute window.
struct FindMyBeacon {
    static constexpr std::size_t kSize = 48;

    ByteArray<16> uuid{};
    Key32 public_key{};

    ByteArray<kSize> to_bytes() const;
    static FindMyBeacon from_bytes(ByteView bytes);

    friend bool operator==(const FindMyBeacon&, const FindMyBeacon&) = default;
};

/// What a device stores after hearing a beacon: the beacon's uuid and its own
/// context encrypted to the beacon's public key.
struct FindMyRecord {
    static constexpr std::size_t kSize = 16 + AsymEncryptedContext::kSize;

    ByteArray<16> uuid{};
    AsymEncryptedContext payload;

    ByteArray<kSize> to_bytes() const;
    static FindMyRecord from_bytes(ByteView bytes);

    friend bool operator==(const FindMyRecord&, const FindMyRecord&) = default;
};

FindMyBeacon findmy_beacon(const RotatingKeypair& kp, std::uint64_t unix_seconds);
ByteArray<16> findmy_uuid(const RotatingKeypair& kp, std::uint32_t window);

FindMyRecord findmy_encrypt_heard(const FindMyBeacon& beacon, const GeoPoint& own_gps,
                                  std::uint64_t unix_seconds, Rng& rng);

struct RecoveredContext {
    ByteArray<16> uuid{};
    std::uint32_t window = 0;
    GeoPoint location;
    Enin enin;
};

struct FindMyRecovery {
    std::vector<RecoveredContext> recovered;
    std::size_t unmatched = 0;       // uuid not one of ours
    std::size_t auth_failures = 0;   // uuid matched, ciphertext did not open
};

/// Matches records against this device's uuids for windows in
/// [first_window, last_window] and decrypts the hits with that window's scalar.
FindMyRecovery findmy_recover(const RotatingKeypair& kp, std::uint32_t first_window,
                              std::uint32_t last_window, std::span<const FindMyRecord> records);

}  // namespace ctxen
