#pragma once

#include <cstdint>
#include <limits>
#include <span>
#include <string_view>

#include "ctxen/bytes.hpp"
#include "ctxen/crypto.hpp"

namespace ctxen {

/// Counter-based deterministic generator: block i is AES-128(K, i) where K is
/// derived from (seed, stream label). Identical seed and call sequence give
/// identical output on every platform. Independent streams come from fork().
///
/// Meets UniformRandomBitGenerator, but prefer the members below over
/// <random> distributions, whose output is implementation-defined.
class Rng {
public:
    using result_type = std::uint64_t;

    explicit Rng(std::uint64_t seed, std::string_view stream = "root");

    /// Child generator keyed from this generator's key and a label. Does not
    /// advance this generator.
    Rng fork(std::string_view label) const;

    void fill(std::span<std::uint8_t> out);

    template <std::size_t N>
    ByteArray<N> bytes() {
        ByteArray<N> out{};
        fill(out);
        return out;
    }

    std::uint64_t next_u64();
    /// Uniform in [0, 1) with 53 bits of precision.
    double uniform01();
    /// Uniform in [0, bound) without modulo bias. bound must be > 0.
    std::uint64_t below(std::uint64_t bound);

    result_type operator()() { return next_u64(); }
    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    std::uint64_t blocks_consumed() const noexcept { return counter_; }

private:
    explicit Rng(const Key16& key);
    void refill();

    Key16 key_;
    crypto::Aes128Block cipher_;
    std::uint64_t counter_ = 0;
    ByteArray<16> buffer_{};
    std::size_t used_ = 16;
};

}  // namespace ctxen
