#include "ctxen/schemes.hpp"

#include <string>

#include "ctxen/rng.hpp"

namespace ctxen {
namespace {

Key16 symmetric_key(const DailyKey& key) {
    return crypto::hkdf_sha256<16>(key.key(), {}, crypto::as_bytes("CTX-SYM"));
}

EncryptedContext seal(const Key16& ck, const ContextBlob& blob, const crypto::GcmNonce& nonce) {
    const auto plain = blob.to_bytes();
    const auto sealed = crypto::aes128_gcm_seal(ck, nonce, plain);
    return EncryptedContext{nonce, array_from<32>(sealed)};
}

ContextBlob open(const Key16& ck, const EncryptedContext& ec) {
    return ContextBlob::from_bytes(crypto::aes128_gcm_open(ck, ec.nonce, ec.ciphertext_and_tag));
}

Key16 asym_session_key(const Key32& shared, const Key32& ephemeral_public,
                       const Key32& recipient_public) {
    ByteArray<64> salt{};
    std::memcpy(salt.data(), ephemeral_public.data(), 32);
    std::memcpy(salt.data() + 32, recipient_public.data(), 32);
    return crypto::hkdf_sha256<16>(shared, salt, crypto::as_bytes("CTX-ASYM"));
}

}  // namespace

std::string_view to_string(SchemeTag tag) {
    switch (tag) {
        case SchemeTag::none: return "none";
        case SchemeTag::asymmetric: return "asymmetric";
        case SchemeTag::symmetric: return "symmetric";
        case SchemeTag::consent: return "consent";
        case SchemeTag::blurred_consent: return "blurred-consent";
    }
    return "unknown";
}

SchemeTag scheme_tag_from_byte(std::uint8_t value) {
    switch (value) {
        case 0: return SchemeTag::none;
        case 2: return SchemeTag::asymmetric;
        case 3: return SchemeTag::symmetric;
        case 4: return SchemeTag::consent;
        case 5: return SchemeTag::blurred_consent;
        default: throw FormatError("unknown scheme tag " + std::to_string(value));
    }
}

ByteArray<EncryptedContext::kSize> EncryptedContext::to_bytes() const {
    ByteArray<kSize> out{};
    std::memcpy(out.data(), nonce.data(), nonce.size());
    std::memcpy(out.data() + nonce.size(), ciphertext_and_tag.data(), ciphertext_and_tag.size());
    return out;
}

EncryptedContext EncryptedContext::from_bytes(ByteView bytes) {
    if (bytes.size() != kSize) {
        throw FormatError("encrypted context must be 44 bytes, got " + std::to_string(bytes.size()));
    }
    return EncryptedContext{array_from<12>(bytes.first(12)), array_from<32>(bytes.subspan(12))};
}

ByteArray<AsymEncryptedContext::kSize> AsymEncryptedContext::to_bytes() const {
    ByteArray<kSize> out{};
    std::memcpy(out.data(), ephemeral_public.data(), 32);
    const auto inner = sealed.to_bytes();
    std::memcpy(out.data() + 32, inner.data(), inner.size());
    return out;
}

AsymEncryptedContext AsymEncryptedContext::from_bytes(ByteView bytes) {
    if (bytes.size() != kSize) {
        throw FormatError("asymmetric context must be 76 bytes, got " + std::to_string(bytes.size()));
    }
    return AsymEncryptedContext{array_from<32>(bytes.first(32)),
                                EncryptedContext::from_bytes(bytes.subspan(32))};
}

ConsentSecret generate_consent_secret(Rng& rng) { return ConsentSecret{rng.bytes<16>()}; }

EncryptedContext encrypt_symmetric(const DailyKey& key, const ContextBlob& blob, Rng& rng) {
    return seal(symmetric_key(key), blob, rng.bytes<12>());
}

ContextBlob decrypt_symmetric(const DailyKey& key, const EncryptedContext& ec) {
    return open(symmetric_key(key), ec);
}

Key16 consent_key(const DailyKey& key, const ConsentSecret& consent) {
    Key16 mixed{};
    for (std::size_t i = 0; i < mixed.size(); ++i) mixed[i] = key.key()[i] ^ consent.secret[i];
    return crypto::hkdf_sha256<16>(mixed, {}, crypto::as_bytes("CTX-CONSENT"));
}

EncryptedContext encrypt_consent(const DailyKey& key, const ConsentSecret& consent,
                                 const ContextBlob& blob, Rng& rng) {
    return seal(consent_key(key, consent), blob, rng.bytes<12>());
}

ContextBlob decrypt_consent(const DailyKey& key, const ConsentSecret& consent,
                            const EncryptedContext& ec) {
    return open(consent_key(key, consent), ec);
}

EncryptedContext encrypt_blurred_consent(const DailyKey& key, const ConsentSecret& consent,
                                         const GeoPoint& p, Enin e, const QuantizerConfig& q,
                                         Rng& rng) {
    const auto cell = quantize(p, q);
    return encrypt_consent(key, consent, encode_context(cell.center, e), rng);
}

AsymKeypair asym_keypair(Rng& rng) {
    AsymKeypair kp;
    kp.private_key = rng.bytes<32>();
    kp.public_key = crypto::x25519_public(kp.private_key);
    return kp;
}

AsymEncryptedContext encrypt_asym(const Key32& recipient_public, const ContextBlob& blob, Rng& rng) {
    const auto ephemeral = rng.bytes<32>();
    const auto nonce = rng.bytes<12>();
    return fixed_nonce::seal_asym(recipient_public, blob, ephemeral, nonce);
}

ContextBlob decrypt_asym(const Key32& private_key, const AsymEncryptedContext& ec) {
    const auto own_public = crypto::x25519_public(private_key);
    const auto shared = crypto::x25519_shared(private_key, ec.ephemeral_public);
    return open(asym_session_key(shared, ec.ephemeral_public, own_public), ec.sealed);
}

namespace fixed_nonce {

EncryptedContext seal_symmetric(const DailyKey& key, const ContextBlob& blob,
                                const crypto::GcmNonce& nonce) {
    return seal(symmetric_key(key), blob, nonce);
}

EncryptedContext seal_consent(const DailyKey& key, const ConsentSecret& consent,
                              const ContextBlob& blob, const crypto::GcmNonce& nonce) {
    return seal(consent_key(key, consent), blob, nonce);
}

AsymEncryptedContext seal_asym(const Key32& recipient_public, const ContextBlob& blob,
                               const Key32& ephemeral_private, const crypto::GcmNonce& nonce) {
    const auto ephemeral_public = crypto::x25519_public(ephemeral_private);
    Key32 shared{};
    try {
        shared = crypto::x25519_shared(ephemeral_private, recipient_public);
    } catch (const DecryptError&) {
        throw ArgumentError("recipient public key is a low-order point");
    }
    const auto ck = asym_session_key(shared, ephemeral_public, recipient_public);
    return AsymEncryptedContext{ephemeral_public, seal(ck, blob, nonce)};
}

}  // namespace fixed_nonce

}  // namespace ctxen
