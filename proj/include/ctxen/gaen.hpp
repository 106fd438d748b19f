#pragma once

// GAEN-compatible time windowing and key schedule: ENIN arithmetic, daily
// keys, rolling proximity identifiers, AEM and diagnosis-key matching.

#include <compare>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ctxen/bytes.hpp"
#include "ctxen/crypto.hpp"

namespace ctxen {

class Rng;

inline constexpr std::uint32_t kSecondsPerInterval = 600;
inline constexpr std::uint32_t kIntervalsPerDay = 144;

/// Exposure Notification Interval Number: index of a 10-minute window since
/// the Unix epoch.
struct Enin {
    std::uint32_t value = 0;

    constexpr Enin day_start() const noexcept {
        return Enin{value / kIntervalsPerDay * kIntervalsPerDay};
    }
    /// Days since the epoch.
    constexpr std::uint32_t day() const noexcept { return value / kIntervalsPerDay; }
    constexpr std::uint64_t unix_seconds() const noexcept {
        return std::uint64_t{value} * kSecondsPerInterval;
    }

    friend constexpr auto operator<=>(Enin, Enin) = default;
};

/// floor(t / 600). Throws RangeError when the index does not fit in 32 bits.
Enin enin_from_unix(std::uint64_t unix_seconds);

/// A day's temporary exposure key. The validity window is
/// [day_start, day_start + rolling_period).
class DailyKey {
public:
    /// Throws AlignmentError unless day_start is a multiple of rolling_period,
    /// ArgumentError unless rolling_period divides 144.
    DailyKey(const Key16& key, Enin day_start, std::uint32_t rolling_period = kIntervalsPerDay);

    const Key16& key() const noexcept { return key_; }
    Enin day_start() const noexcept { return day_start_; }
    std::uint32_t rolling_period() const noexcept { return rolling_period_; }
    bool covers(Enin at) const noexcept {
        return at.value >= day_start_.value && at.value - day_start_.value < rolling_period_;
    }

    /// "<32 hex chars> <day_start>" and its inverse.
    std::string to_text() const;
    static DailyKey from_text(std::string_view text, std::uint32_t rolling_period = kIntervalsPerDay);

    friend bool operator==(const DailyKey&, const DailyKey&) = default;

private:
    Key16 key_;
    Enin day_start_;
    std::uint32_t rolling_period_;
};

/// Fresh random key for the day starting at day_start.
DailyKey generate_daily_key(Rng& rng, Enin day_start,
                            std::uint32_t rolling_period = kIntervalsPerDay);

struct Rpi {
    Key16 bytes{};
    Enin derived_at;

    friend bool operator==(const Rpi&, const Rpi&) = default;
};

/// Precomputed RPIK/AEMK for one daily key, so deriving a whole day does one
/// HKDF per sub-key rather than per window.
class RpiDeriver {
public:
    explicit RpiDeriver(const DailyKey& key);

    /// Throws WindowError when `at` is outside the key's validity window.
    Rpi derive(Enin at) const;
    ByteArray<4> crypt_aem(const Rpi& rpi, const ByteArray<4>& metadata) const;
    const DailyKey& key() const noexcept { return key_; }

private:
    DailyKey key_;
    crypto::Aes128Block rpik_;
    Key16 aemk_;
};

Rpi derive_rpi(const DailyKey& key, Enin at);

/// One RPI per window of the key's validity, in window order.
std::vector<Rpi> derive_all_rpis(const DailyKey& key);

/// AES-128-CTR of the 4-byte metadata keyed by AEMK with the RPI as counter
/// block. The same call decrypts.
ByteArray<4> crypt_aem(const DailyKey& key, const Rpi& rpi, const ByteArray<4>& metadata);

struct MatchTolerance {
    std::uint32_t intervals = 12;  // +-2 hours
};

struct HeardRpi {
    Key16 rpi{};
    Enin observed_at;
};

struct RpiMatch {
    std::size_t heard_index = 0;
    Enin window;  // derivation window of the matching RPI

    friend bool operator==(const RpiMatch&, const RpiMatch&) = default;
};

/// Work counters for benchmarking the matching step.
struct MatchStats {
    std::uint64_t derivations = 0;
    std::uint64_t lookups = 0;
};

/// Every heard record whose bytes equal an RPI derived from `key` at window w
/// with |observed_at - w| <= tol.intervals. Results follow `heard` order.
std::vector<RpiMatch> match_rpis(std::span<const HeardRpi> heard, const DailyKey& key,
                                 MatchTolerance tol = {}, MatchStats* stats = nullptr);

/// Golden vector line: `hex(key16) enin hex(rpi16)`.
struct RpiVector {
    Key16 key{};
    Enin enin;
    Key16 rpi{};
};

std::vector<RpiVector> read_rpi_vectors(std::istream& in);
void write_rpi_vectors(std::ostream& out, std::span<const RpiVector> vectors);

}  // namespace ctxen
