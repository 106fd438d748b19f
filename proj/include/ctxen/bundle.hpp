#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include <json.hpp>

#include "ctxen/bytes.hpp"
#include "ctxen/gaen.hpp"
#include "ctxen/rotating.hpp"

namespace ctxen {

struct DiagnosisEntry {
    Enin day_start;
    Key16 daily_key{};
    std::optional<Key16> consent_secret;   // present only when consent was given for the day
    std::optional<MasterSecret> asym_master;
    /// Cell size of the uploader's blurred contexts. The ciphertext does not
    /// carry it, so the receiver learns it here.
    std::optional<double> blur_cell_m;

    friend bool operator==(const DiagnosisEntry&, const DiagnosisEntry&) = default;
};

/// What a diagnosed device uploads. `receipt` and `version` are assigned by
/// the registry; a revocation appends a new version under the same receipt.
struct DiagnosisBundle {
    ByteArray<16> device_pseudonym{};
    std::uint64_t receipt = 0;
    std::uint32_t version = 0;
    std::vector<DiagnosisEntry> entries;
    std::vector<FindMyRecord> findmy_records;

    friend bool operator==(const DiagnosisBundle&, const DiagnosisBundle&) = default;
};

/// Hex-encoded JSON form used by the registry file and the line protocol.
nlohmann::json to_json(const DiagnosisBundle& bundle);
/// Throws FormatError on missing or malformed fields.
DiagnosisBundle bundle_from_json(const nlohmann::json& j);

/// Latest version of each receipt chain, in order of first appearance.
/// Bundles without a receipt (never uploaded) are kept as-is.
std::vector<DiagnosisBundle> effective_bundles(std::span<const DiagnosisBundle> versions);

}  // namespace ctxen
