#pragma once

// Extended BLE advertisement payload:
//
//   [0,16)  rpi
//   [16,20) aem
//   [20]    scheme tag
//   [21,..) context section: EncryptedContext (44 bytes), or for the
//           asymmetric scheme an ephemeral public key followed by it (76).
//
// Total sizes: 21 (no context), 65, or 97 (asymmetric).

#include <optional>
#include <variant>

#include "ctxen/bytes.hpp"
#include "ctxen/schemes.hpp"

namespace ctxen {

inline constexpr std::size_t kPayloadHeaderSize = 21;
inline constexpr std::size_t kPayloadSymmetricSize = kPayloadHeaderSize + EncryptedContext::kSize;
inline constexpr std::size_t kPayloadAsymmetricSize = kPayloadHeaderSize + AsymEncryptedContext::kSize;

struct BlePayload {
    using Context = std::variant<std::monostate, EncryptedContext, AsymEncryptedContext>;

    Key16 rpi{};
    ByteArray<4> aem{};
    SchemeTag scheme = SchemeTag::none;
    Context context;

    bool has_context() const noexcept { return !std::holds_alternative<std::monostate>(context); }

    friend bool operator==(const BlePayload&, const BlePayload&) = default;
};

/// Throws ArgumentError when the tag and the context alternative disagree.
Bytes assemble_payload(const BlePayload& payload);

/// Throws FormatError on bad length, unknown tag, or a length that does not
/// match the tag.
BlePayload parse_payload(ByteView bytes);

std::size_t payload_size(SchemeTag scheme);

}  // namespace ctxen
