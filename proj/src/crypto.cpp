#include "ctxen/crypto.hpp"

#include <openssl/core_names.h>
#include <openssl/evp.h>
#include <openssl/kdf.h>
#include <openssl/params.h>

namespace ctxen::crypto {
namespace {

struct CipherCtxDeleter {
    void operator()(EVP_CIPHER_CTX* ctx) const { EVP_CIPHER_CTX_free(ctx); }
};
using CipherCtx = std::unique_ptr<EVP_CIPHER_CTX, CipherCtxDeleter>;

struct PkeyDeleter {
    void operator()(EVP_PKEY* k) const { EVP_PKEY_free(k); }
};
using Pkey = std::unique_ptr<EVP_PKEY, PkeyDeleter>;

struct PkeyCtxDeleter {
    void operator()(EVP_PKEY_CTX* c) const { EVP_PKEY_CTX_free(c); }
};
using PkeyCtx = std::unique_ptr<EVP_PKEY_CTX, PkeyCtxDeleter>;

void check(int ok, const char* what) {
    if (ok != 1) throw Error(std::string("openssl: ") + what + " failed");
}

CipherCtx new_cipher_ctx() {
    CipherCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx) throw Error("openssl: EVP_CIPHER_CTX_new failed");
    return ctx;
}

EVP_KDF* hkdf_algorithm() {
    static EVP_KDF* kdf = EVP_KDF_fetch(nullptr, "HKDF", nullptr);
    if (kdf == nullptr) throw Error("openssl: HKDF unavailable");
    return kdf;
}

}  // namespace

ByteArray<32> sha256(ByteView data) {
    ByteArray<32> out{};
    unsigned int len = 0;
    check(EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr), "sha256");
    return out;
}

Bytes hkdf_sha256(ByteView ikm, ByteView salt, ByteView info, std::size_t length) {
    std::unique_ptr<EVP_KDF_CTX, decltype(&EVP_KDF_CTX_free)> ctx(EVP_KDF_CTX_new(hkdf_algorithm()),
                                                                  &EVP_KDF_CTX_free);
    if (!ctx) throw Error("openssl: EVP_KDF_CTX_new failed");

    // OpenSSL rejects zero-length octet params built from null pointers.
    static const std::uint8_t kEmpty = 0;
    auto ptr = [](ByteView v) {
        return const_cast<std::uint8_t*>(v.empty() ? &kEmpty : v.data());
    };
    char digest[] = "SHA256";
    OSSL_PARAM params[5];
    std::size_t n = 0;
    params[n++] = OSSL_PARAM_construct_utf8_string(OSSL_KDF_PARAM_DIGEST, digest, 0);
    params[n++] = OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_KEY, ptr(ikm), ikm.size());
    params[n++] = OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_INFO, ptr(info), info.size());
    if (!salt.empty()) {
        params[n++] = OSSL_PARAM_construct_octet_string(OSSL_KDF_PARAM_SALT, ptr(salt), salt.size());
    }
    params[n] = OSSL_PARAM_construct_end();

    Bytes out(length);
    check(EVP_KDF_derive(ctx.get(), out.data(), out.size(), params), "hkdf");
    return out;
}

struct Aes128Block::Ctx {
    CipherCtx cipher;
};

Aes128Block::Aes128Block(const Key16& key) : key_(key), ctx_(std::make_unique<Ctx>()) {
    ctx_->cipher = new_cipher_ctx();
    check(EVP_EncryptInit_ex(ctx_->cipher.get(), EVP_aes_128_ecb(), nullptr, key_.data(), nullptr),
          "aes-128-ecb init");
    EVP_CIPHER_CTX_set_padding(ctx_->cipher.get(), 0);
}

Aes128Block::Aes128Block(const Aes128Block& other) : Aes128Block(other.key_) {}

Aes128Block& Aes128Block::operator=(const Aes128Block& other) {
    if (this != &other) *this = Aes128Block(other.key_);
    return *this;
}

Aes128Block::Aes128Block(Aes128Block&&) noexcept = default;
Aes128Block& Aes128Block::operator=(Aes128Block&&) noexcept = default;
Aes128Block::~Aes128Block() = default;

ByteArray<16> Aes128Block::encrypt(const ByteArray<16>& block) const {
    ByteArray<16> out{};
    int len = 0;
    check(EVP_EncryptUpdate(ctx_->cipher.get(), out.data(), &len, block.data(), 16),
          "aes-128-ecb");
    if (len != 16) throw Error("openssl: short aes block");
    return out;
}

Bytes aes128_ctr(const Key16& key, const ByteArray<16>& iv, ByteView data) {
    auto ctx = new_cipher_ctx();
    check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_ctr(), nullptr, key.data(), iv.data()),
          "aes-128-ctr init");
    Bytes out(data.size());
    int len = 0;
    check(EVP_EncryptUpdate(ctx.get(), out.data(), &len, data.data(), static_cast<int>(data.size())),
          "aes-128-ctr");
    return out;
}

Bytes aes128_gcm_seal(const Key16& key, const GcmNonce& nonce, ByteView plaintext, ByteView aad) {
    auto ctx = new_cipher_ctx();
    check(EVP_EncryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.data(), nonce.data()),
          "gcm init");
    int len = 0;
    if (!aad.empty()) {
        check(EVP_EncryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())),
              "gcm aad");
    }
    Bytes out(plaintext.size() + kGcmTagSize);
    check(EVP_EncryptUpdate(ctx.get(), out.data(), &len, plaintext.data(),
                            static_cast<int>(plaintext.size())),
          "gcm encrypt");
    int tail = 0;
    check(EVP_EncryptFinal_ex(ctx.get(), out.data() + len, &tail), "gcm final");
    check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_GET_TAG, kGcmTagSize,
                              out.data() + plaintext.size()),
          "gcm tag");
    return out;
}

Bytes aes128_gcm_open(const Key16& key, const GcmNonce& nonce, ByteView sealed, ByteView aad) {
    if (sealed.size() < kGcmTagSize) throw FormatError("sealed box shorter than tag");
    const std::size_t body = sealed.size() - kGcmTagSize;
    auto ctx = new_cipher_ctx();
    check(EVP_DecryptInit_ex(ctx.get(), EVP_aes_128_gcm(), nullptr, key.data(), nonce.data()),
          "gcm init");
    int len = 0;
    if (!aad.empty()) {
        check(EVP_DecryptUpdate(ctx.get(), nullptr, &len, aad.data(), static_cast<int>(aad.size())),
              "gcm aad");
    }
    Bytes out(body);
    check(EVP_DecryptUpdate(ctx.get(), out.data(), &len, sealed.data(), static_cast<int>(body)),
          "gcm decrypt");
    ByteArray<kGcmTagSize> tag{};
    std::memcpy(tag.data(), sealed.data() + body, kGcmTagSize);
    check(EVP_CIPHER_CTX_ctrl(ctx.get(), EVP_CTRL_GCM_SET_TAG, kGcmTagSize, tag.data()), "gcm tag");
    int tail = 0;
    if (EVP_DecryptFinal_ex(ctx.get(), out.data() + len, &tail) != 1) {
        throw DecryptError("authentication failed");
    }
    return out;
}

namespace {

Pkey x25519_private_key(const Key32& sk) {
    Pkey key(EVP_PKEY_new_raw_private_key(EVP_PKEY_X25519, nullptr, sk.data(), sk.size()));
    if (!key) throw Error("openssl: bad x25519 private key");
    return key;
}

}  // namespace

Key32 x25519_public(const Key32& private_key) {
    auto key = x25519_private_key(private_key);
    Key32 out{};
    std::size_t len = out.size();
    check(EVP_PKEY_get_raw_public_key(key.get(), out.data(), &len), "x25519 public");
    return out;
}

Key32 x25519_shared(const Key32& private_key, const Key32& peer_public) {
    auto key = x25519_private_key(private_key);
    Pkey peer(EVP_PKEY_new_raw_public_key(EVP_PKEY_X25519, nullptr, peer_public.data(),
                                          peer_public.size()));
    if (!peer) throw DecryptError("bad x25519 public key");
    PkeyCtx ctx(EVP_PKEY_CTX_new(key.get(), nullptr));
    if (!ctx) throw Error("openssl: EVP_PKEY_CTX_new failed");
    check(EVP_PKEY_derive_init(ctx.get()), "x25519 derive init");
    if (EVP_PKEY_derive_set_peer(ctx.get(), peer.get()) != 1) {
        throw DecryptError("x25519 peer rejected");
    }
    Key32 out{};
    std::size_t len = out.size();
    // OpenSSL fails the derive for low-order peers (all-zero shared secret).
    if (EVP_PKEY_derive(ctx.get(), out.data(), &len) != 1 || len != out.size()) {
        throw DecryptError("x25519 derive failed");
    }
    return out;
}

}  // namespace ctxen::crypto
