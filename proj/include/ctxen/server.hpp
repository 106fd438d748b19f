#pragma once

// Diagnosis-key registry: append-only log of bundle versions with
// cursor-based download and consent revocation by superseding append.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

#include "ctxen/bundle.hpp"

namespace ctxen {

class UploadRejected : public Error {
public:
    using Error::Error;
};

struct RegistryOptions {
    std::uint32_t retention_days = 14;
    /// JSON-lines store, one bundle version per line. Replayed on open.
    std::optional<std::filesystem::path> store;
};

struct Download {
    std::vector<DiagnosisBundle> bundles;
    std::uint64_t cursor = 0;
};

struct RevokeResult {
    bool appended = false;
    std::vector<std::string> warnings;
};

/// Single writer, many readers; every method is safe to call concurrently.
class DiagnosisRegistry {
public:
    explicit DiagnosisRegistry(RegistryOptions options = {});

    /// Appends a new bundle and returns its receipt id (>= 1). Throws
    /// UploadRejected with the reason for malformed or out-of-horizon bundles.
    std::uint64_t upload(DiagnosisBundle bundle);

    /// Versions appended after `cursor`, in order. A cursor past the end
    /// replays from zero.
    Download download_since(std::uint64_t cursor) const;

    /// Appends a version of the receipt's latest bundle without consent
    /// secrets for `days` (days since the epoch). Throws ArgumentError for an
    /// unknown receipt. Days absent from the bundle produce warnings.
    RevokeResult revoke_consent(std::uint64_t receipt, std::span<const std::uint32_t> days);

    /// When set, uploads may only carry days in (today - retention, today].
    void set_today(std::uint32_t day);

    std::uint64_t size() const;

private:
    void validate(const DiagnosisBundle& bundle) const;
    void append(DiagnosisBundle bundle);

    RegistryOptions options_;
    std::optional<std::uint32_t> today_;
    mutable std::shared_mutex mutex_;
    std::vector<DiagnosisBundle> log_;
};

/// One JSON object per line in each direction:
///   {"verb":"UPLOAD","bundle":{...}}          -> {"status":"ok","receipt":n}
///   {"verb":"DOWNLOAD_SINCE","cursor":n}      -> {"status":"ok","cursor":m,"bundles":[...]}
///   {"verb":"REVOKE","receipt":n,"days":[d]}  -> {"status":"ok","appended":b,"warnings":[...]}
/// Failures answer {"status":"error","reason":"..."}.
class LineProtocolServer {
public:
    explicit LineProtocolServer(DiagnosisRegistry& registry) : registry_(registry) {}

    std::string handle(std::string_view request_line);
    /// Serves until EOF on `in`.
    void serve(std::istream& in, std::ostream& out);

private:
    DiagnosisRegistry& registry_;
};

}  // namespace ctxen
