#include "ctxen/rotating.hpp"

#include <map>

#include "ctxen/crypto.hpp"
#include "ctxen/rng.hpp"

namespace ctxen {
namespace {

Bytes window_info(std::string_view label, std::uint32_t window) {
    Bytes info(label.begin(), label.end());
    info.resize(label.size() + 4);
    store_le32(info.data() + label.size(), window);
    return info;
}

}  // namespace

RotatingKeypair::RotatingKeypair(const MasterSecret& master, std::uint32_t window_seconds,
                                 std::string sk_label)
    : master_(master), window_seconds_(window_seconds), sk_label_(std::move(sk_label)) {
    if (window_seconds_ == 0) throw ArgumentError("rotation window must be positive");
}

RotatingKeypair RotatingKeypair::findmy(const MasterSecret& master) {
    return RotatingKeypair(master, kFindMyWindowSeconds, "FM-SK");
}

RotatingKeypair RotatingKeypair::asymmetric(const MasterSecret& master) {
    return RotatingKeypair(master, kSecondsPerInterval, "ASYM-SK");
}

std::uint32_t RotatingKeypair::window_at(std::uint64_t unix_seconds) const {
    const auto w = unix_seconds / window_seconds_;
    if (w > 0xffffffffu) throw RangeError("rotation window index overflow");
    return static_cast<std::uint32_t>(w);
}

WindowKeypair RotatingKeypair::at_window(std::uint32_t window) const {
    WindowKeypair kp;
    kp.window = window;
    kp.private_scalar = crypto::hkdf_sha256<32>(master_, {}, window_info(sk_label_, window));
    kp.public_part = crypto::x25519_public(kp.private_scalar);
    return kp;
}

MasterSecret generate_master_secret(Rng& rng) { return rng.bytes<32>(); }

ByteArray<FindMyBeacon::kSize> FindMyBeacon::to_bytes() const {
    ByteArray<kSize> out{};
    std::memcpy(out.data(), uuid.data(), 16);
    std::memcpy(out.data() + 16, public_key.data(), 32);
    return out;
}

FindMyBeacon FindMyBeacon::from_bytes(ByteView bytes) {
    if (bytes.size() != kSize) {
        throw FormatError("findmy beacon must be 48 bytes, got " + std::to_string(bytes.size()));
    }
    return FindMyBeacon{array_from<16>(bytes.first(16)), array_from<32>(bytes.subspan(16))};
}

ByteArray<FindMyRecord::kSize> FindMyRecord::to_bytes() const {
    ByteArray<kSize> out{};
    std::memcpy(out.data(), uuid.data(), 16);
    const auto inner = payload.to_bytes();
    std::memcpy(out.data() + 16, inner.data(), inner.size());
    return out;
}

FindMyRecord FindMyRecord::from_bytes(ByteView bytes) {
    if (bytes.size() != kSize) {
        throw FormatError("findmy record must be 92 bytes, got " + std::to_string(bytes.size()));
    }
    return FindMyRecord{array_from<16>(bytes.first(16)),
                        AsymEncryptedContext::from_bytes(bytes.subspan(16))};
}

ByteArray<16> findmy_uuid(const RotatingKeypair& kp, std::uint32_t window) {
    return crypto::hkdf_sha256<16>(kp.master_secret(), {}, window_info("FM-UUID", window));
}

FindMyBeacon findmy_beacon(const RotatingKeypair& kp, std::uint64_t unix_seconds) {
    const auto window = kp.window_at(unix_seconds);
    return FindMyBeacon{findmy_uuid(kp, window), kp.at_window(window).public_part};
}

FindMyRecord findmy_encrypt_heard(const FindMyBeacon& beacon, const GeoPoint& own_gps,
                                  std::uint64_t unix_seconds, Rng& rng) {
    const auto blob = encode_context(own_gps, enin_from_unix(unix_seconds));
    return FindMyRecord{beacon.uuid, encrypt_asym(beacon.public_key, blob, rng)};
}

FindMyRecovery findmy_recover(const RotatingKeypair& kp, std::uint32_t first_window,
                              std::uint32_t last_window, std::span<const FindMyRecord> records) {
    FindMyRecovery out;
    if (records.empty() || last_window < first_window) {
        out.unmatched = records.size();
        return out;
    }
    std::map<ByteArray<16>, std::uint32_t> windows;
    for (std::uint64_t w = first_window; w <= last_window; ++w) {
        windows.emplace(findmy_uuid(kp, static_cast<std::uint32_t>(w)), static_cast<std::uint32_t>(w));
    }
    for (const auto& record : records) {
        const auto it = windows.find(record.uuid);
        if (it == windows.end()) {
            ++out.unmatched;
            continue;
        }
        try {
            const auto blob = decrypt_asym(kp.at_window(it->second).private_scalar, record.payload);
            const auto ctx = decode_context(blob);
            out.recovered.push_back({record.uuid, it->second, ctx.point, ctx.enin});
        } catch (const DecryptError&) {
            ++out.auth_failures;
        }
    }
    return out;
}

}  // namespace ctxen
