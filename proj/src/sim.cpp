#include "ctxen/sim.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "ctxen/audit.hpp"
#include "ctxen/rng.hpp"
#include "ctxen/server.hpp"

namespace ctxen {

using nlohmann::json;

namespace {

class Simulation {
public:
    explicit Simulation(const Scenario& sc) : sc_(sc), root_(sc.seed), channel_rng_(root_.fork("channel")) {
        report_.scenario = sc;
        rngs_.reserve(sc.agents.size());
        devices_.reserve(sc.agents.size());
        receipts_.resize(sc.agents.size());
        for (const auto& a : sc.agents) {
            rngs_.push_back(root_.fork("agent:" + a.id));
            devices_.emplace_back(a.device, rngs_.back());
        }
    }

    SimulationReport run() {
        const std::uint64_t end = sc_.start_unix + sc_.duration_s;
        std::vector<GeoPoint> pos(sc_.agents.size());
        std::vector<Bytes> frames(sc_.agents.size());

        for (std::uint64_t t = sc_.start_unix; t < end; t += sc_.tick_s) {
            const auto elapsed = t - sc_.start_unix;
            if (elapsed % kSecondsPerDay == 0) day_boundary(static_cast<std::uint32_t>(elapsed / kSecondsPerDay));

            for (std::size_t i = 0; i < pos.size(); ++i) pos[i] = sc_.agents[i].trace.at(elapsed);
            record_contacts(t, pos);

            for (std::size_t i = 0; i < frames.size(); ++i) {
                frames[i] = devices_[i].tick_broadcast(t, pos[i], rngs_[i]);
                ++report_.channel.sent;
            }
            for (std::size_t i = 0; i < frames.size(); ++i) {
                for (std::size_t j = 0; j < frames.size(); ++j) {
                    if (i != j) deliver(i, j, t, pos, frames[i]);
                }
            }
        }
        day_boundary(sc_.num_days());
        finish();
        return std::move(report_);
    }

private:
    void day_boundary(std::uint32_t day) {
        for (std::size_t i = 0; i < sc_.agents.size(); ++i) {
            const auto& d = sc_.agents[i].diagnosis_day;
            if (d && *d + 1 == day) upload(i);
        }
        for (std::size_t i = 0; i < sc_.agents.size(); ++i) {
            const auto& r = sc_.agents[i].consent.revoke_day;
            if (r && *r == day) revoke(i, day);
        }
        if (day < sc_.num_days()) {
            const Enin start{(sc_.start_day() + day) * kIntervalsPerDay};
            for (std::size_t i = 0; i < devices_.size(); ++i) devices_[i].provision_day(start, rngs_[i]);
        }
    }

    void upload(std::size_t i) {
        const auto& a = sc_.agents[i];
        const std::uint32_t last = sc_.start_day() + *a.diagnosis_day;
        const std::uint32_t first = std::max(sc_.start_day(), last >= 13 ? last - 13 : 0);
        auto bundle = devices_[i].make_diagnosis_bundle({first, last}, a.consent.share, rngs_[i]);
        registry_.set_today(last);
        UploadRecord rec{static_cast<std::uint32_t>(i), 0, last, first, last, a.consent.share};
        try {
            rec.receipt = registry_.upload(std::move(bundle));
        } catch (const UploadRejected&) {
            // Nothing to publish (a FindMy agent that heard no beacons).
        }
        receipts_[i] = rec.receipt;
        report_.uploads.push_back(rec);
    }

    void revoke(std::size_t i, std::uint32_t day) {
        const auto& a = sc_.agents[i];
        RevocationRecord rec;
        rec.agent = static_cast<std::uint32_t>(i);
        rec.receipt = receipts_[i];
        rec.day = sc_.start_day() + day;
        if (a.consent.revoke_days.empty()) {
            const std::uint32_t last = sc_.start_day() + *a.diagnosis_day;
            for (auto d = std::max(sc_.start_day(), last >= 13 ? last - 13 : 0); d <= last; ++d) {
                rec.days.push_back(d);
            }
        } else {
            for (auto d : a.consent.revoke_days) rec.days.push_back(sc_.start_day() + d);
        }
        if (rec.receipt != 0) {
            auto result = registry_.revoke_consent(rec.receipt, rec.days);
            rec.appended = result.appended;
            rec.warnings = std::move(result.warnings);
        } else {
            rec.warnings.push_back("no upload to revoke");
        }
        report_.revocations.push_back(std::move(rec));
    }

    void record_contacts(std::uint64_t t, const std::vector<GeoPoint>& pos) {
        for (std::size_t i = 0; i < pos.size(); ++i) {
            for (std::size_t j = i + 1; j < pos.size(); ++j) {
                const double d = haversine_m(pos[i], pos[j]);
                const bool in_range = d <= sc_.channel.range_m;
                if (!in_range && !sc_.channel.is_wall_pair(sc_.agents[i].id, sc_.agents[j].id)) continue;
                report_.ground_truth.contacts.push_back({static_cast<std::uint32_t>(i),
                                                         static_cast<std::uint32_t>(j), t, pos[i], pos[j],
                                                         d, !in_range});
            }
        }
    }

    void deliver(std::size_t from, std::size_t to, std::uint64_t t, const std::vector<GeoPoint>& pos,
                 const Bytes& frame) {
        const bool in_range = haversine_m(pos[from], pos[to]) <= sc_.channel.range_m;
        const bool wall = !in_range && sc_.channel.is_wall_pair(sc_.agents[from].id, sc_.agents[to].id);
        if (!in_range && !wall) return;
        ++report_.channel.eligible;
        if (sc_.channel.drop_prob > 0.0 && channel_rng_.uniform01() < sc_.channel.drop_prob) {
            ++report_.channel.dropped;
            return;
        }
        ++report_.channel.received;
        if (wall) ++report_.channel.via_wall;
        devices_[to].on_receive(frame, t, pos[to], rngs_[to]);
    }

    void finish() {
        report_.registry_log = registry_.download_since(0).bundles;
        for (std::size_t i = 0; i < devices_.size(); ++i) {
            AgentResult r;
            r.id = sc_.agents[i].id;
            r.scheme = sc_.agents[i].device.scheme;
            r.events = devices_[i].process_exposures(report_.registry_log, MatchTolerance{sc_.tolerance});
            r.counters = devices_[i].counters();
            r.snapshot = devices_[i].snapshot(rngs_[i]);
            report_.agents.push_back(std::move(r));
        }
    }

    const Scenario& sc_;
    Rng root_;
    Rng channel_rng_;
    std::vector<Rng> rngs_;
    std::vector<Device> devices_;
    std::vector<std::uint64_t> receipts_;
    DiagnosisRegistry registry_;
    SimulationReport report_;
};

json counters_json(const DeviceCounters& c) {
    return {{"broadcasts", c.broadcasts},     {"received", c.received},
            {"duplicates", c.duplicates},     {"unparseable", c.unparseable},
            {"findmy_encryptions", c.findmy_encryptions}};
}

DeviceCounters counters_from_json(const json& j) {
    return {j.at("broadcasts").get<std::uint64_t>(), j.at("received").get<std::uint64_t>(),
            j.at("duplicates").get<std::uint64_t>(), j.at("unparseable").get<std::uint64_t>(),
            j.at("findmy_encryptions").get<std::uint64_t>()};
}

json report_json(const SimulationReport& r) {
    json agents = json::array();
    for (const auto& a : r.agents) {
        std::size_t disclosures = 0;
        for (const auto& e : a.events) disclosures += e.context ? 1 : 0;
        agents.push_back({{"id", a.id},
                          {"scheme", to_string(a.scheme)},
                          {"counters", counters_json(a.counters)},
                          {"events", a.events.size()},
                          {"disclosures", disclosures}});
    }
    json uploads = json::array();
    for (const auto& u : r.uploads) {
        uploads.push_back({{"agent", r.agents[u.agent].id}, {"receipt", u.receipt}, {"day", u.day},
                           {"first_day", u.first_day}, {"last_day", u.last_day}, {"consent", u.consent}});
    }
    json revocations = json::array();
    for (const auto& v : r.revocations) {
        revocations.push_back({{"agent", r.agents[v.agent].id}, {"receipt", v.receipt}, {"day", v.day},
                               {"days", v.days}, {"appended", v.appended}, {"warnings", v.warnings}});
    }
    return {{"format", 1},
            {"scenario", r.scenario.name},
            {"seed", r.scenario.seed},
            {"channel",
             {{"sent", r.channel.sent},
              {"eligible", r.channel.eligible},
              {"received", r.channel.received},
              {"dropped", r.channel.dropped},
              {"via_wall", r.channel.via_wall}}},
            {"totals", {{"events", r.total_events()}, {"disclosures", r.total_disclosures()}}},
            {"agents", std::move(agents)},
            {"uploads", std::move(uploads)},
            {"revocations", std::move(revocations)},
            {"registry_versions", r.registry_log.size()}};
}

json ground_truth_json(const SimulationReport& r) {
    json contacts = json::array();
    for (const auto& c : r.ground_truth.contacts) {
        contacts.push_back({{"a", r.scenario.agents[c.a].id},
                            {"b", r.scenario.agents[c.b].id},
                            {"t", c.t},
                            {"enin", enin_from_unix(c.t).value},
                            {"a_pos", {c.pos_a.lat, c.pos_a.lon}},
                            {"b_pos", {c.pos_b.lat, c.pos_b.lon}},
                            {"distance_m", c.distance_m},
                            {"via_wall", c.via_wall}});
    }
    return {{"contacts", std::move(contacts)}};
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw FormatError("missing report file " + p.string());
    std::stringstream s;
    s << in.rdbuf();
    return s.str();
}

void write_file(const std::filesystem::path& p, std::string_view data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    out.write(data.data(), static_cast<std::streamsize>(data.size()));
    if (!out) throw Error("cannot write " + p.string());
}

std::uint32_t agent_by_id(const Scenario& sc, const std::string& id) {
    const auto i = sc.agent_index(id);
    if (i == static_cast<std::size_t>(-1)) throw FormatError("report names unknown agent '" + id + "'");
    return static_cast<std::uint32_t>(i);
}

ExposureEvent event_from_json(const json& j) {
    ExposureEvent ev;
    ev.matched_rpi = array_from_hex<16>(j.at("matched").get<std::string>());
    ev.window = Enin{j.at("window").get<std::uint32_t>()};
    ev.day = j.at("day").get<std::uint32_t>();
    ev.scheme = scheme_kind_from_string(j.at("scheme").get<std::string>());
    ev.source = context_source_from_string(j.at("context_source").get<std::string>());
    ev.receipt = j.at("receipt").get<std::uint64_t>();
    if (!j.at("lat").is_null()) {
        ExposureContext ctx;
        ctx.location = {j.at("lat").get<double>(), j.at("lon").get<double>()};
        ctx.enin = Enin{j.at("enin").get<std::uint32_t>()};
        if (!j.at("cell_m").is_null()) ctx.cell_m = j.at("cell_m").get<double>();
        ev.context = ctx;
    }
    return ev;
}

}  // namespace

std::optional<std::uint32_t> SimulationReport::uploader_of(std::uint64_t receipt) const {
    for (const auto& u : uploads) {
        if (u.receipt == receipt && receipt != 0) return u.agent;
    }
    return std::nullopt;
}

std::size_t SimulationReport::total_events() const {
    std::size_t n = 0;
    for (const auto& a : agents) n += a.events.size();
    return n;
}

std::size_t SimulationReport::total_disclosures() const {
    std::size_t n = 0;
    for (const auto& a : agents) {
        for (const auto& e : a.events) n += e.context ? 1 : 0;
    }
    return n;
}

SimulationReport run(const Scenario& sc) {
    sc.validate();
    return Simulation(sc).run();
}

json event_to_json(const ExposureEvent& ev, const SimulationReport& report, std::uint32_t holder) {
    const auto uploader = report.uploader_of(ev.receipt);
    json j{{"agent", report.agents[holder].id},
           {"uploader", uploader ? json(report.agents[*uploader].id) : json(nullptr)},
           {"receipt", ev.receipt},
           {"scheme", to_string(ev.scheme)},
           {"day", ev.day},
           {"window", ev.window.value},
           {"matched", to_hex(ev.matched_rpi)},
           {"context_source", to_string(ev.source)},
           {"enin", nullptr},
           {"lat", nullptr},
           {"lon", nullptr},
           {"cell_m", nullptr}};
    if (ev.context) {
        j["enin"] = ev.context->enin.value;
        j["lat"] = ev.context->location.lat;
        j["lon"] = ev.context->location.lon;
        if (ev.context->cell_m) j["cell_m"] = *ev.context->cell_m;
    }
    return j;
}

std::vector<std::pair<std::string, std::string>> serialized_outputs(const SimulationReport& report) {
    std::vector<std::pair<std::string, std::string>> out;
    out.emplace_back("report.json", report_json(report).dump(2) + "\n");

    std::string events;
    for (std::uint32_t i = 0; i < report.agents.size(); ++i) {
        for (const auto& ev : report.agents[i].events) events += event_to_json(ev, report, i).dump() + "\n";
    }
    out.emplace_back("events.jsonl", std::move(events));

    std::string registry;
    for (const auto& b : report.registry_log) registry += to_json(b).dump() + "\n";
    out.emplace_back("registry.jsonl", std::move(registry));

    for (const auto& a : report.agents) {
        out.emplace_back("snapshots/" + a.id + ".cen", std::string(a.snapshot.begin(), a.snapshot.end()));
    }
    return out;
}

void write_report(const SimulationReport& report, const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir / "snapshots");
    write_file(dir / "scenario.yaml", to_yaml(report.scenario));
    write_file(dir / "ground_truth.json", ground_truth_json(report).dump(1) + "\n");
    for (const auto& [name, data] : serialized_outputs(report)) write_file(dir / name, data);
}

SimulationReport load_report(const std::filesystem::path& dir) {
    SimulationReport r;
    try {
        r.scenario = parse_scenario(read_file(dir / "scenario.yaml"));
        const auto rep = json::parse(read_file(dir / "report.json"));
        const auto& ch = rep.at("channel");
        r.channel = {ch.at("sent").get<std::uint64_t>(), ch.at("eligible").get<std::uint64_t>(),
                     ch.at("received").get<std::uint64_t>(), ch.at("dropped").get<std::uint64_t>(),
                     ch.at("via_wall").get<std::uint64_t>()};
        for (const auto& a : rep.at("agents")) {
            AgentResult res;
            res.id = a.at("id").get<std::string>();
            res.scheme = scheme_kind_from_string(a.at("scheme").get<std::string>());
            res.counters = counters_from_json(a.at("counters"));
            const auto snap = read_file(dir / "snapshots" / (res.id + ".cen"));
            res.snapshot.assign(snap.begin(), snap.end());
            r.agents.push_back(std::move(res));
        }
        for (const auto& u : rep.at("uploads")) {
            r.uploads.push_back({agent_by_id(r.scenario, u.at("agent").get<std::string>()),
                                 u.at("receipt").get<std::uint64_t>(), u.at("day").get<std::uint32_t>(),
                                 u.at("first_day").get<std::uint32_t>(), u.at("last_day").get<std::uint32_t>(),
                                 u.at("consent").get<bool>()});
        }
        for (const auto& v : rep.at("revocations")) {
            r.revocations.push_back({agent_by_id(r.scenario, v.at("agent").get<std::string>()),
                                     v.at("receipt").get<std::uint64_t>(), v.at("day").get<std::uint32_t>(),
                                     v.at("days").get<std::vector<std::uint32_t>>(), v.at("appended").get<bool>(),
                                     v.at("warnings").get<std::vector<std::string>>()});
        }

        std::istringstream events(read_file(dir / "events.jsonl"));
        for (std::string line; std::getline(events, line);) {
            if (line.empty()) continue;
            const auto j = json::parse(line);
            const auto holder = agent_by_id(r.scenario, j.at("agent").get<std::string>());
            r.agents.at(holder).events.push_back(event_from_json(j));
        }

        std::istringstream registry(read_file(dir / "registry.jsonl"));
        for (std::string line; std::getline(registry, line);) {
            if (!line.empty()) r.registry_log.push_back(bundle_from_json(json::parse(line)));
        }

        const auto gt = json::parse(read_file(dir / "ground_truth.json"));
        for (const auto& c : gt.at("contacts")) {
            Contact k;
            k.a = agent_by_id(r.scenario, c.at("a").get<std::string>());
            k.b = agent_by_id(r.scenario, c.at("b").get<std::string>());
            k.t = c.at("t").get<std::uint64_t>();
            k.pos_a = {c.at("a_pos").at(0).get<double>(), c.at("a_pos").at(1).get<double>()};
            k.pos_b = {c.at("b_pos").at(0).get<double>(), c.at("b_pos").at(1).get<double>()};
            k.distance_m = c.at("distance_m").get<double>();
            k.via_wall = c.at("via_wall").get<bool>();
            r.ground_truth.contacts.push_back(k);
        }
    } catch (const json::exception& ex) {
        throw FormatError(std::string("malformed report: ") + ex.what());
    } catch (const ArgumentError& ex) {
        throw FormatError(std::string("malformed report: ") + ex.what());
    }
    return r;
}

}  // namespace ctxen
