#include "ctxen/bundle.hpp"

#include <map>

namespace ctxen {

using nlohmann::json;

json to_json(const DiagnosisBundle& bundle) {
    json entries = json::array();
    for (const auto& e : bundle.entries) {
        json je = {{"day_start", e.day_start.value}, {"daily_key", to_hex(e.daily_key)}};
        if (e.consent_secret) je["consent_secret"] = to_hex(*e.consent_secret);
        if (e.asym_master) je["asym_master"] = to_hex(*e.asym_master);
        if (e.blur_cell_m) je["blur_cell_m"] = *e.blur_cell_m;
        entries.push_back(std::move(je));
    }
    json records = json::array();
    for (const auto& r : bundle.findmy_records) records.push_back(to_hex(r.to_bytes()));
    return json{{"device_pseudonym", to_hex(bundle.device_pseudonym)},
                {"receipt", bundle.receipt},
                {"version", bundle.version},
                {"entries", std::move(entries)},
                {"findmy_records", std::move(records)}};
}

DiagnosisBundle bundle_from_json(const json& j) {
    try {
        DiagnosisBundle b;
        b.device_pseudonym = array_from_hex<16>(j.at("device_pseudonym").get<std::string>());
        b.receipt = j.value("receipt", std::uint64_t{0});
        b.version = j.value("version", std::uint32_t{0});
        for (const auto& je : j.at("entries")) {
            DiagnosisEntry e;
            e.day_start = Enin{je.at("day_start").get<std::uint32_t>()};
            e.daily_key = array_from_hex<16>(je.at("daily_key").get<std::string>());
            if (je.contains("consent_secret")) {
                e.consent_secret = array_from_hex<16>(je["consent_secret"].get<std::string>());
            }
            if (je.contains("asym_master")) {
                e.asym_master = array_from_hex<32>(je["asym_master"].get<std::string>());
            }
            if (je.contains("blur_cell_m")) e.blur_cell_m = je["blur_cell_m"].get<double>();
            b.entries.push_back(e);
        }
        if (j.contains("findmy_records")) {
            for (const auto& jr : j["findmy_records"]) {
                b.findmy_records.push_back(FindMyRecord::from_bytes(from_hex(jr.get<std::string>())));
            }
        }
        return b;
    } catch (const json::exception& ex) {
        throw FormatError(std::string("bad bundle json: ") + ex.what());
    }
}

std::vector<DiagnosisBundle> effective_bundles(std::span<const DiagnosisBundle> versions) {
    std::vector<DiagnosisBundle> out;
    std::map<std::uint64_t, std::size_t> slot;
    for (const auto& b : versions) {
        if (b.receipt == 0) {
            out.push_back(b);
            continue;
        }
        const auto [it, inserted] = slot.emplace(b.receipt, out.size());
        if (inserted) {
            out.push_back(b);
        } else if (b.version >= out[it->second].version) {
            out[it->second] = b;
        }
    }
    return out;
}

}  // namespace ctxen
