#pragma once

// Thin OpenSSL wrappers for the primitives the protocol needs. Every
// function is stateless; failures inside OpenSSL surface as ctxen::Error.

#include <memory>
#include <string_view>

#include "ctxen/bytes.hpp"

namespace ctxen::crypto {

inline constexpr std::size_t kGcmNonceSize = 12;
inline constexpr std::size_t kGcmTagSize = 16;

using GcmNonce = ByteArray<kGcmNonceSize>;

ByteArray<32> sha256(ByteView data);

/// HKDF-SHA256 (RFC 5869). An empty salt means "no salt" (HashLen zeros).
Bytes hkdf_sha256(ByteView ikm, ByteView salt, ByteView info, std::size_t length);

template <std::size_t N>
ByteArray<N> hkdf_sha256(ByteView ikm, ByteView salt, ByteView info) {
    return array_from<N>(hkdf_sha256(ikm, salt, info, N));
}

inline ByteView as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

/// Single-block AES-128 encryption (ECB on one block). Holds a keyed
/// context so repeated calls under one key stay cheap.
class Aes128Block {
public:
    explicit Aes128Block(const Key16& key);
    Aes128Block(const Aes128Block& other);
    Aes128Block& operator=(const Aes128Block& other);
    Aes128Block(Aes128Block&&) noexcept;
    Aes128Block& operator=(Aes128Block&&) noexcept;
    ~Aes128Block();

    ByteArray<16> encrypt(const ByteArray<16>& block) const;

private:
    struct Ctx;
    Key16 key_;
    std::unique_ptr<Ctx> ctx_;
};

/// AES-128-CTR with a full 16-byte initial counter block.
Bytes aes128_ctr(const Key16& key, const ByteArray<16>& iv, ByteView data);

/// AES-128-GCM. Output is ciphertext || 16-byte tag.
Bytes aes128_gcm_seal(const Key16& key, const GcmNonce& nonce, ByteView plaintext,
                      ByteView aad = {});

/// Inverse of aes128_gcm_seal. Throws DecryptError when the tag does not verify.
Bytes aes128_gcm_open(const Key16& key, const GcmNonce& nonce, ByteView sealed,
                      ByteView aad = {});

/// X25519 public key for a 32-byte private scalar (clamped per RFC 7748).
Key32 x25519_public(const Key32& private_key);

/// X25519 shared secret. Throws DecryptError for low-order peer points.
Key32 x25519_shared(const Key32& private_key, const Key32& peer_public);

}  // namespace ctxen::crypto
