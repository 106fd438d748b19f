#pragma once

// Context encryption schemes carried next to the RPI in the BLE payload.
//
//   symmetric        CK = HKDF(DailyKey, "CTX-SYM")
//   consent          CK = HKDF(DailyKey XOR ConsentSecret, "CTX-CONSENT")
//   blurred consent  consent scheme over the quantized cell center
//   asymmetric       X25519 ephemeral ECDH -> HKDF -> AES-128-GCM
//
// All of them use AES-128-GCM so that a wrong key or a withheld consent
// secret fails authentication instead of yielding garbage.

#include <cstdint>
#include <string_view>

#include "ctxen/bytes.hpp"
#include "ctxen/crypto.hpp"
#include "ctxen/gaen.hpp"
#include "ctxen/geo.hpp"

namespace ctxen {

class Rng;

enum class SchemeTag : std::uint8_t {
    none = 0,
    asymmetric = 2,
    symmetric = 3,
    consent = 4,
    blurred_consent = 5,
};

std::string_view to_string(SchemeTag tag);
/// Throws FormatError for byte values outside the defined set.
SchemeTag scheme_tag_from_byte(std::uint8_t value);

/// nonce (12) || ciphertext (16) || tag (16).
struct EncryptedContext {
    static constexpr std::size_t kSize = 44;

    crypto::GcmNonce nonce{};
    ByteArray<32> ciphertext_and_tag{};

    ByteArray<kSize> to_bytes() const;
    static EncryptedContext from_bytes(ByteView bytes);

    friend bool operator==(const EncryptedContext&, const EncryptedContext&) = default;
};

/// ephemeral public key (32) || EncryptedContext (44).
struct AsymEncryptedContext {
    static constexpr std::size_t kSize = 76;

    Key32 ephemeral_public{};
    EncryptedContext sealed;

    ByteArray<kSize> to_bytes() const;
    static AsymEncryptedContext from_bytes(ByteView bytes);

    friend bool operator==(const AsymEncryptedContext&, const AsymEncryptedContext&) = default;
};

struct ConsentSecret {
    Key16 secret{};

    friend bool operator==(const ConsentSecret&, const ConsentSecret&) = default;
};

ConsentSecret generate_consent_secret(Rng& rng);

EncryptedContext encrypt_symmetric(const DailyKey& key, const ContextBlob& blob, Rng& rng);
/// Throws DecryptError on authentication failure.
ContextBlob decrypt_symmetric(const DailyKey& key, const EncryptedContext& ec);

Key16 consent_key(const DailyKey& key, const ConsentSecret& consent);

EncryptedContext encrypt_consent(const DailyKey& key, const ConsentSecret& consent,
                                 const ContextBlob& blob, Rng& rng);
ContextBlob decrypt_consent(const DailyKey& key, const ConsentSecret& consent,
                            const EncryptedContext& ec);

/// Consent scheme over encode_context(quantize(p, q).center, e). Decrypt with
/// decrypt_consent; the plaintext is always a cell center.
EncryptedContext encrypt_blurred_consent(const DailyKey& key, const ConsentSecret& consent,
                                         const GeoPoint& p, Enin e, const QuantizerConfig& q,
                                         Rng& rng);

struct AsymKeypair {
    Key32 public_key{};
    Key32 private_key{};
};

AsymKeypair asym_keypair(Rng& rng);

/// ECIES: fresh ephemeral X25519 key, shared secret -> HKDF(salt = eph_pub ||
/// recipient_pub, info "CTX-ASYM") -> AES-128-GCM.
AsymEncryptedContext encrypt_asym(const Key32& recipient_public, const ContextBlob& blob, Rng& rng);
ContextBlob decrypt_asym(const Key32& private_key, const AsymEncryptedContext& ec);

/// Fixed-nonce and fixed-ephemeral variants. Reusing a nonce under one key
/// breaks GCM; these exist only to reproduce golden vectors.
namespace fixed_nonce {

EncryptedContext seal_symmetric(const DailyKey& key, const ContextBlob& blob,
                                const crypto::GcmNonce& nonce);
EncryptedContext seal_consent(const DailyKey& key, const ConsentSecret& consent,
                              const ContextBlob& blob, const crypto::GcmNonce& nonce);
AsymEncryptedContext seal_asym(const Key32& recipient_public, const ContextBlob& blob,
                               const Key32& ephemeral_private, const crypto::GcmNonce& nonce);

}  // namespace fixed_nonce

}  // namespace ctxen
