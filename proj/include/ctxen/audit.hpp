#pragma once

// Privacy audit over a simulation report. Ground truth is recomputed from
// the scenario's traces; device state is only read through the serialized
// outputs, as an attacker holding them would.
//
//   (a) every disclosed location matches a ground-truth encounter with the
//       diagnosed uploader
//   (b) blurred disclosures are cell centers within the blur bound of truth
//   (c) withheld or revoked consent leaves events but no locations
//   (d) no raw coordinates appear in plaintext in snapshots or outputs
//   (e) the union of all disclosures localizes only diagnosed agents (or a
//       holder's own log)
//
// plus soundness and completeness of exposure events, and an informational
// line for events that only a wall pair explains.

#include <string>
#include <utility>
#include <vector>

#include "ctxen/sim.hpp"

namespace ctxen {

enum class Verdict { pass, fail, info };

std::string_view to_string(Verdict v);

struct AuditCheck {
    std::string id;     // "a".."e", "soundness", "completeness", "wall"
    std::string title;
    Verdict verdict = Verdict::pass;
    std::string evidence;
};

struct AuditResult {
    std::vector<AuditCheck> checks;

    bool passed() const;
    const AuditCheck& check(std::string_view id) const;
    /// Fixed-width summary table, one row per check.
    std::string table() const;
};

struct AuditOptions {
    /// Fixed-point codec error plus float noise, in meters.
    double codec_slack_m = 1.0;
    /// Decimal text within this many degrees of a coordinate counts as a leak.
    double text_tolerance_deg = 1e-6;
};

AuditResult audit_privacy(const SimulationReport& report, const AuditOptions& options = {});

/// Serialized artifacts an attacker could read, by file name: report.json,
/// events.jsonl, registry.jsonl and every snapshot.
std::vector<std::pair<std::string, std::string>> serialized_outputs(const SimulationReport& report);

}  // namespace ctxen
