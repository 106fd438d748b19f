#include "ctxen/gaen.hpp"

#include <istream>
#include <limits>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "ctxen/rng.hpp"

namespace ctxen {
namespace {

struct Key16Hash {
    std::size_t operator()(const Key16& k) const noexcept {
        std::size_t h = 0;
        std::memcpy(&h, k.data(), sizeof h);
        return h;
    }
};

}  // namespace

Enin enin_from_unix(std::uint64_t unix_seconds) {
    const std::uint64_t interval = unix_seconds / kSecondsPerInterval;
    if (interval > std::numeric_limits<std::uint32_t>::max()) {
        throw RangeError("timestamp " + std::to_string(unix_seconds) + " overflows ENIN");
    }
    return Enin{static_cast<std::uint32_t>(interval)};
}

DailyKey::DailyKey(const Key16& key, Enin day_start, std::uint32_t rolling_period)
    : key_(key), day_start_(day_start), rolling_period_(rolling_period) {
    if (rolling_period == 0 || kIntervalsPerDay % rolling_period != 0) {
        throw ArgumentError("rolling period must divide 144, got " + std::to_string(rolling_period));
    }
    if (day_start.value % rolling_period != 0) {
        throw AlignmentError("key start " + std::to_string(day_start.value) +
                             " not aligned to rolling period " + std::to_string(rolling_period));
    }
}

std::string DailyKey::to_text() const {
    return to_hex(key_) + " " + std::to_string(day_start_.value);
}

DailyKey DailyKey::from_text(std::string_view text, std::uint32_t rolling_period) {
    std::istringstream in{std::string(text)};
    std::string hex;
    std::uint64_t start = 0;
    if (!(in >> hex >> start) || start > std::numeric_limits<std::uint32_t>::max()) {
        throw FormatError("daily key text must be '<hex32> <day_start>'");
    }
    return DailyKey(array_from_hex<16>(hex), Enin{static_cast<std::uint32_t>(start)},
                    rolling_period);
}

DailyKey generate_daily_key(Rng& rng, Enin day_start, std::uint32_t rolling_period) {
    // Validate before drawing so a rejected call does not advance the stream.
    DailyKey probe(Key16{}, day_start, rolling_period);
    return DailyKey(rng.bytes<16>(), probe.day_start(), rolling_period);
}

RpiDeriver::RpiDeriver(const DailyKey& key)
    : key_(key),
      rpik_(crypto::hkdf_sha256<16>(key.key(), {}, crypto::as_bytes("EN-RPIK"))),
      aemk_(crypto::hkdf_sha256<16>(key.key(), {}, crypto::as_bytes("EN-AEMK"))) {}

Rpi RpiDeriver::derive(Enin at) const {
    if (!key_.covers(at)) {
        throw WindowError("interval " + std::to_string(at.value) + " outside key window starting " +
                          std::to_string(key_.day_start().value));
    }
    // PaddedData = "EN-RPI" || 0x000000000000 || LE32(ENIN)
    ByteArray<16> padded{'E', 'N', '-', 'R', 'P', 'I'};
    store_le32(padded.data() + 12, at.value);
    return Rpi{rpik_.encrypt(padded), at};
}

ByteArray<4> RpiDeriver::crypt_aem(const Rpi& rpi, const ByteArray<4>& metadata) const {
    return array_from<4>(crypto::aes128_ctr(aemk_, rpi.bytes, metadata));
}

Rpi derive_rpi(const DailyKey& key, Enin at) { return RpiDeriver(key).derive(at); }

std::vector<Rpi> derive_all_rpis(const DailyKey& key) {
    const RpiDeriver deriver(key);
    std::vector<Rpi> out;
    out.reserve(key.rolling_period());
    for (std::uint32_t i = 0; i < key.rolling_period(); ++i) {
        out.push_back(deriver.derive(Enin{key.day_start().value + i}));
    }
    return out;
}

ByteArray<4> crypt_aem(const DailyKey& key, const Rpi& rpi, const ByteArray<4>& metadata) {
    return RpiDeriver(key).crypt_aem(rpi, metadata);
}

std::vector<RpiMatch> match_rpis(std::span<const HeardRpi> heard, const DailyKey& key,
                                 MatchTolerance tol, MatchStats* stats) {
    std::vector<RpiMatch> matches;
    if (heard.empty()) return matches;

    // AES under one key is a permutation, so each RPI maps to one window.
    std::unordered_map<Key16, Enin, Key16Hash> windows;
    windows.reserve(key.rolling_period());
    for (const auto& rpi : derive_all_rpis(key)) windows.emplace(rpi.bytes, rpi.derived_at);
    if (stats != nullptr) stats->derivations += key.rolling_period();

    for (std::size_t i = 0; i < heard.size(); ++i) {
        if (stats != nullptr) ++stats->lookups;
        const auto it = windows.find(heard[i].rpi);
        if (it == windows.end()) continue;
        const auto observed = std::int64_t{heard[i].observed_at.value};
        const auto derived = std::int64_t{it->second.value};
        const auto delta = observed > derived ? observed - derived : derived - observed;
        if (delta <= std::int64_t{tol.intervals}) matches.push_back({i, it->second});
    }
    return matches;
}

std::vector<RpiVector> read_rpi_vectors(std::istream& in) {
    std::vector<RpiVector> out;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line.front() == '#') continue;
        std::istringstream fields(line);
        std::string key_hex, rpi_hex;
        std::uint64_t enin = 0;
        if (!(fields >> key_hex >> enin >> rpi_hex) || enin > std::numeric_limits<std::uint32_t>::max()) {
            throw FormatError("rpi vector line " + std::to_string(lineno) + " malformed");
        }
        out.push_back({array_from_hex<16>(key_hex), Enin{static_cast<std::uint32_t>(enin)},
                       array_from_hex<16>(rpi_hex)});
    }
    return out;
}

void write_rpi_vectors(std::ostream& out, std::span<const RpiVector> vectors) {
    for (const auto& v : vectors) {
        out << to_hex(v.key) << ' ' << v.enin.value << ' ' << to_hex(v.rpi) << '\n';
    }
}

}  // namespace ctxen
