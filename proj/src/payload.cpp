#include "ctxen/payload.hpp"

#include <string>

namespace ctxen {

std::size_t payload_size(SchemeTag scheme) {
    switch (scheme) {
        case SchemeTag::none: return kPayloadHeaderSize;
        case SchemeTag::asymmetric: return kPayloadAsymmetricSize;
        case SchemeTag::symmetric:
        case SchemeTag::consent:
        case SchemeTag::blurred_consent: return kPayloadSymmetricSize;
    }
    throw ArgumentError("unknown scheme tag");
}

Bytes assemble_payload(const BlePayload& payload) {
    const bool wants_asym = payload.scheme == SchemeTag::asymmetric;
    const bool wants_sym = payload.scheme != SchemeTag::none && !wants_asym;
    if (std::holds_alternative<std::monostate>(payload.context) != (payload.scheme == SchemeTag::none) ||
        (wants_asym && !std::holds_alternative<AsymEncryptedContext>(payload.context)) ||
        (wants_sym && !std::holds_alternative<EncryptedContext>(payload.context))) {
        throw ArgumentError("context section does not match scheme tag " +
                            std::string(to_string(payload.scheme)));
    }

    Bytes out;
    out.reserve(payload_size(payload.scheme));
    out.insert(out.end(), payload.rpi.begin(), payload.rpi.end());
    out.insert(out.end(), payload.aem.begin(), payload.aem.end());
    out.push_back(static_cast<std::uint8_t>(payload.scheme));
    if (const auto* ec = std::get_if<EncryptedContext>(&payload.context)) {
        const auto raw = ec->to_bytes();
        out.insert(out.end(), raw.begin(), raw.end());
    } else if (const auto* ac = std::get_if<AsymEncryptedContext>(&payload.context)) {
        const auto raw = ac->to_bytes();
        out.insert(out.end(), raw.begin(), raw.end());
    }
    return out;
}

BlePayload parse_payload(ByteView bytes) {
    if (bytes.size() < kPayloadHeaderSize) {
        throw FormatError("payload too short: " + std::to_string(bytes.size()) + " bytes");
    }
    BlePayload p;
    p.rpi = array_from<16>(bytes.first(16));
    p.aem = array_from<4>(bytes.subspan(16, 4));
    p.scheme = scheme_tag_from_byte(bytes[20]);
    if (bytes.size() != payload_size(p.scheme)) {
        throw FormatError("payload of " + std::to_string(bytes.size()) + " bytes does not fit scheme " +
                          std::string(to_string(p.scheme)));
    }
    const auto section = bytes.subspan(kPayloadHeaderSize);
    if (p.scheme == SchemeTag::asymmetric) {
        p.context = AsymEncryptedContext::from_bytes(section);
    } else if (p.scheme != SchemeTag::none) {
        p.context = EncryptedContext::from_bytes(section);
    }
    return p;
}

}  // namespace ctxen
