#include "ctxen/rng.hpp"

#include <string>

namespace ctxen {
namespace {

Key16 stream_key(ByteView ikm, std::string_view label) {
    std::string info = "CTXEN-RNG:";
    info += label;
    return crypto::hkdf_sha256<16>(ikm, {}, crypto::as_bytes(info));
}

ByteArray<8> seed_bytes(std::uint64_t seed) {
    ByteArray<8> out{};
    for (int i = 0; i < 8; ++i) out[i] = static_cast<std::uint8_t>(seed >> (8 * i));
    return out;
}

}  // namespace

Rng::Rng(std::uint64_t seed, std::string_view stream)
    : Rng(stream_key(seed_bytes(seed), stream)) {}

Rng::Rng(const Key16& key) : key_(key), cipher_(key) {}

Rng Rng::fork(std::string_view label) const { return Rng(stream_key(key_, label)); }

void Rng::refill() {
    ByteArray<16> block{};
    for (int i = 0; i < 8; ++i) block[i] = static_cast<std::uint8_t>(counter_ >> (8 * i));
    buffer_ = cipher_.encrypt(block);
    ++counter_;
    used_ = 0;
}

void Rng::fill(std::span<std::uint8_t> out) {
    for (auto& b : out) {
        if (used_ == buffer_.size()) refill();
        b = buffer_[used_++];
    }
}

std::uint64_t Rng::next_u64() {
    ByteArray<8> raw{};
    fill(raw);
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= std::uint64_t{raw[i]} << (8 * i);
    return v;
}

double Rng::uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

std::uint64_t Rng::below(std::uint64_t bound) {
    if (bound == 0) throw ArgumentError("Rng::below: zero bound");
    const std::uint64_t limit = max() - max() % bound;
    for (;;) {
        const auto v = next_u64();
        if (v < limit) return v % bound;
    }
}

}  // namespace ctxen
