#include "ctxen/server.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <mutex>
#include <ostream>
#include <set>

namespace ctxen {

using nlohmann::json;

DiagnosisRegistry::DiagnosisRegistry(RegistryOptions options) : options_(std::move(options)) {
    if (options_.retention_days == 0) throw ArgumentError("retention horizon must be positive");
    if (!options_.store || !std::filesystem::exists(*options_.store)) return;

    std::ifstream in(*options_.store);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        try {
            log_.push_back(bundle_from_json(json::parse(line)));
        } catch (const json::exception& ex) {
            throw FormatError("registry store line " + std::to_string(lineno) + ": " + ex.what());
        }
    }
}

void DiagnosisRegistry::validate(const DiagnosisBundle& bundle) const {
    if (bundle.entries.empty() && bundle.findmy_records.empty()) {
        throw UploadRejected("bundle has no entries");
    }
    std::set<std::uint32_t> starts;
    std::set<std::uint32_t> days;
    for (const auto& e : bundle.entries) {
        if (!starts.insert(e.day_start.value).second) {
            throw UploadRejected("duplicate entry for interval " + std::to_string(e.day_start.value));
        }
        if (e.blur_cell_m && !(*e.blur_cell_m >= 1.0 && *e.blur_cell_m <= 100000.0)) {
            throw UploadRejected("blur cell size out of range");
        }
        days.insert(e.day_start.day());
    }
    if (days.empty()) return;
    const auto lo = *days.begin();
    const auto hi = *days.rbegin();
    if (hi - lo + 1 > options_.retention_days) {
        throw UploadRejected("bundle spans " + std::to_string(hi - lo + 1) + " days, horizon is " +
                             std::to_string(options_.retention_days));
    }
    if (today_ && (hi > *today_ || *today_ - lo >= options_.retention_days)) {
        throw UploadRejected("bundle days outside the retention horizon");
    }
}

void DiagnosisRegistry::append(DiagnosisBundle bundle) {
    if (options_.store) {
        std::ofstream out(*options_.store, std::ios::app);
        out << to_json(bundle).dump() << '\n';
        if (!out) throw Error("cannot append to registry store " + options_.store->string());
    }
    log_.push_back(std::move(bundle));
}

std::uint64_t DiagnosisRegistry::upload(DiagnosisBundle bundle) {
    std::unique_lock lock(mutex_);
    validate(bundle);
    bundle.receipt = log_.size() + 1;
    bundle.version = 0;
    const auto receipt = bundle.receipt;
    append(std::move(bundle));
    return receipt;
}

Download DiagnosisRegistry::download_since(std::uint64_t cursor) const {
    std::shared_lock lock(mutex_);
    if (cursor > log_.size()) cursor = 0;
    Download d;
    d.bundles.assign(log_.begin() + static_cast<std::ptrdiff_t>(cursor), log_.end());
    d.cursor = log_.size();
    return d;
}

RevokeResult DiagnosisRegistry::revoke_consent(std::uint64_t receipt, std::span<const std::uint32_t> days) {
    std::unique_lock lock(mutex_);
    const DiagnosisBundle* latest = nullptr;
    for (const auto& b : log_) {
        if (b.receipt == receipt && (latest == nullptr || b.version >= latest->version)) latest = &b;
    }
    if (latest == nullptr) throw ArgumentError("unknown receipt " + std::to_string(receipt));

    RevokeResult result;
    DiagnosisBundle next = *latest;
    bool changed = false;
    for (const auto day : days) {
        auto it = std::find_if(next.entries.begin(), next.entries.end(),
                               [day](const DiagnosisEntry& e) { return e.day_start.day() == day; });
        if (it == next.entries.end()) {
            result.warnings.push_back("day " + std::to_string(day) + " not in bundle");
            continue;
        }
        for (auto& e : next.entries) {
            if (e.day_start.day() == day && e.consent_secret) {
                e.consent_secret.reset();
                changed = true;
            }
        }
    }
    if (changed) {
        next.version = latest->version + 1;
        append(std::move(next));
        result.appended = true;
    }
    return result;
}

void DiagnosisRegistry::set_today(std::uint32_t day) {
    std::unique_lock lock(mutex_);
    today_ = day;
}

std::uint64_t DiagnosisRegistry::size() const {
    std::shared_lock lock(mutex_);
    return log_.size();
}

std::string LineProtocolServer::handle(std::string_view request_line) {
    json response;
    try {
        const auto request = json::parse(request_line);
        const auto verb = request.at("verb").get<std::string>();
        if (verb == "UPLOAD") {
            const auto receipt = registry_.upload(bundle_from_json(request.at("bundle")));
            response = {{"status", "ok"}, {"receipt", receipt}};
        } else if (verb == "DOWNLOAD_SINCE") {
            const auto d = registry_.download_since(request.value("cursor", std::uint64_t{0}));
            json bundles = json::array();
            for (const auto& b : d.bundles) bundles.push_back(to_json(b));
            response = {{"status", "ok"}, {"cursor", d.cursor}, {"bundles", std::move(bundles)}};
        } else if (verb == "REVOKE") {
            const auto days = request.at("days").get<std::vector<std::uint32_t>>();
            const auto r = registry_.revoke_consent(request.at("receipt").get<std::uint64_t>(), days);
            response = {{"status", "ok"}, {"appended", r.appended}, {"warnings", r.warnings}};
        } else {
            response = {{"status", "error"}, {"reason", "unknown verb " + verb}};
        }
    } catch (const json::exception& ex) {
        response = {{"status", "error"}, {"reason", std::string("bad request: ") + ex.what()}};
    } catch (const Error& ex) {
        response = {{"status", "error"}, {"reason", ex.what()}};
    }
    return response.dump();
}

void LineProtocolServer::serve(std::istream& in, std::ostream& out) {
    std::string line;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        out << handle(line) << '\n' << std::flush;
    }
}

}  // namespace ctxen
