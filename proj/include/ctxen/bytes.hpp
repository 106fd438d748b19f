#pragma once

#include <array>
#include <bit>
#include <cstddef>
#include <cstdint>
#include <cstring>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ctxen/error.hpp"

namespace ctxen {

using Bytes = std::vector<std::uint8_t>;
using ByteView = std::span<const std::uint8_t>;

template <std::size_t N>
using ByteArray = std::array<std::uint8_t, N>;

using Key16 = ByteArray<16>;
using Key32 = ByteArray<32>;

std::string to_hex(ByteView bytes);

/// Lowercase or uppercase hex, even length. Throws FormatError otherwise.
Bytes from_hex(std::string_view hex);

template <std::size_t N>
ByteArray<N> array_from_hex(std::string_view hex) {
    const Bytes raw = from_hex(hex);
    if (raw.size() != N) {
        throw FormatError("expected " + std::to_string(N) + " bytes of hex, got " +
                          std::to_string(raw.size()));
    }
    ByteArray<N> out{};
    std::memcpy(out.data(), raw.data(), N);
    return out;
}

template <std::size_t N>
ByteArray<N> array_from(ByteView bytes) {
    if (bytes.size() != N) {
        throw FormatError("expected " + std::to_string(N) + " bytes, got " +
                          std::to_string(bytes.size()));
    }
    ByteArray<N> out{};
    std::memcpy(out.data(), bytes.data(), N);
    return out;
}

template <std::size_t N>
std::string to_hex(const ByteArray<N>& a) {
    return to_hex(ByteView(a.data(), a.size()));
}

inline std::string to_hex(const Bytes& b) { return to_hex(ByteView(b.data(), b.size())); }

/// Append-only big-endian writer used by the binary formats.
class ByteWriter {
public:
    void u8(std::uint8_t v) { out_.push_back(v); }
    void u16(std::uint16_t v) {
        u8(static_cast<std::uint8_t>(v >> 8));
        u8(static_cast<std::uint8_t>(v));
    }
    void u32(std::uint32_t v) {
        u16(static_cast<std::uint16_t>(v >> 16));
        u16(static_cast<std::uint16_t>(v));
    }
    void u64(std::uint64_t v) {
        u32(static_cast<std::uint32_t>(v >> 32));
        u32(static_cast<std::uint32_t>(v));
    }
    void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
    void raw(ByteView bytes) { out_.insert(out_.end(), bytes.begin(), bytes.end()); }
    /// Length-prefixed (u32) byte string.
    void blob(ByteView bytes) {
        u32(static_cast<std::uint32_t>(bytes.size()));
        raw(bytes);
    }

    const Bytes& bytes() const& { return out_; }
    Bytes take() && { return std::move(out_); }

private:
    Bytes out_;
};

/// Bounds-checked reader matching ByteWriter. Throws FormatError on underrun.
class ByteReader {
public:
    explicit ByteReader(ByteView in) : in_(in) {}

    std::uint8_t u8() {
        need(1);
        return in_[pos_++];
    }
    std::uint16_t u16() {
        const auto hi = u8();
        return static_cast<std::uint16_t>((hi << 8) | u8());
    }
    std::uint32_t u32() {
        const std::uint32_t hi = u16();
        return (hi << 16) | u16();
    }
    std::uint64_t u64() {
        const std::uint64_t hi = u32();
        return (hi << 32) | u32();
    }
    double f64() { return std::bit_cast<double>(u64()); }
    ByteView raw(std::size_t n) {
        need(n);
        auto view = in_.subspan(pos_, n);
        pos_ += n;
        return view;
    }
    template <std::size_t N>
    ByteArray<N> array() {
        return array_from<N>(raw(N));
    }
    Bytes blob() {
        const auto n = u32();
        auto view = raw(n);
        return Bytes(view.begin(), view.end());
    }

    bool done() const noexcept { return pos_ == in_.size(); }
    std::size_t remaining() const noexcept { return in_.size() - pos_; }

private:
    void need(std::size_t n) const {
        if (in_.size() - pos_ < n) throw FormatError("truncated input");
    }

    ByteView in_;
    std::size_t pos_ = 0;
};

inline void store_be32(std::uint8_t* out, std::uint32_t v) {
    out[0] = static_cast<std::uint8_t>(v >> 24);
    out[1] = static_cast<std::uint8_t>(v >> 16);
    out[2] = static_cast<std::uint8_t>(v >> 8);
    out[3] = static_cast<std::uint8_t>(v);
}

inline std::uint32_t load_be32(const std::uint8_t* in) {
    return (std::uint32_t{in[0]} << 24) | (std::uint32_t{in[1]} << 16) |
           (std::uint32_t{in[2]} << 8) | std::uint32_t{in[3]};
}

inline void store_le32(std::uint8_t* out, std::uint32_t v) {
    out[0] = static_cast<std::uint8_t>(v);
    out[1] = static_cast<std::uint8_t>(v >> 8);
    out[2] = static_cast<std::uint8_t>(v >> 16);
    out[3] = static_cast<std::uint8_t>(v >> 24);
}

}  // namespace ctxen
