#include "ctxen/bench.hpp"

#include <chrono>
#include <cstdio>
#include <set>
#include <sstream>

#include "ctxen/rng.hpp"

namespace ctxen {
namespace {

using Clock = std::chrono::steady_clock;

constexpr std::uint64_t kBenchStart = 1577836800;  // day-aligned
const GeoPoint kHere{42.3601, -71.0942};

double micros_since(Clock::time_point t0) {
    return std::chrono::duration<double, std::micro>(Clock::now() - t0).count();
}

DeviceConfig config_for(SchemeKind s) {
    DeviceConfig c;
    c.scheme = s;
    if (uses_blur(s)) c.quantizer = QuantizerConfig(1000.0);
    return c;
}

SchemeCost cost_of(SchemeKind scheme, Rng& rng) {
    const Enin day{static_cast<std::uint32_t>(kBenchStart / 600)};
    Device sender(config_for(scheme), rng);
    Device receiver(config_for(scheme), rng);
    sender.provision_day(day, rng);
    receiver.provision_day(day, rng);

    // One frame per interval so receptions are never deduplicated.
    std::vector<Bytes> frames;
    const auto t0 = Clock::now();
    for (std::uint32_t i = 0; i < kIntervalsPerDay; ++i) {
        frames.push_back(sender.tick_broadcast(kBenchStart + std::uint64_t{i} * 600, kHere, rng));
    }
    const double broadcast = micros_since(t0);

    const auto t1 = Clock::now();
    for (std::uint32_t i = 0; i < kIntervalsPerDay; ++i) {
        receiver.on_receive(frames[i], kBenchStart + std::uint64_t{i} * 600, kHere, rng);
    }
    const double receive = micros_since(t1);

    // FindMy: the receiver uploads what it heard and the sender matches.
    const bool findmy = scheme == SchemeKind::findmy;
    auto bundle = (findmy ? receiver : sender).make_diagnosis_bundle({day.day(), day.day()}, true, rng);
    bundle.receipt = 1;
    const auto t2 = Clock::now();
    const auto events = (findmy ? sender : receiver).process_exposures(std::span(&bundle, 1));
    const double match = micros_since(t2);
    (void)events;

    return {scheme, frames.front().size(), broadcast / kIntervalsPerDay, receive / kIntervalsPerDay, match};
}

FindMyScaling findmy_scaling(std::uint32_t beacons, std::uint32_t minutes, Rng& rng) {
    const Enin day{static_cast<std::uint32_t>(kBenchStart / 600)};
    Device listener(config_for(SchemeKind::findmy), rng);
    listener.provision_day(day, rng);
    std::vector<Device> owners;
    for (std::uint32_t i = 0; i < beacons; ++i) {
        owners.emplace_back(config_for(SchemeKind::findmy), rng);
        owners.back().provision_day(day, rng);
    }
    std::set<std::pair<Key16, std::uint32_t>> pairs;
    for (std::uint32_t m = 0; m < minutes; ++m) {
        const std::uint64_t t = kBenchStart + std::uint64_t{m} * 60;
        for (auto& owner : owners) {
            const auto frame = owner.tick_broadcast(t, kHere, rng);
            pairs.insert({FindMyBeacon::from_bytes(frame).uuid, enin_from_unix(t).value});
            listener.on_receive(frame, t, kHere, rng);
        }
    }
    return {beacons, pairs.size(), listener.counters().findmy_encryptions};
}

MatchScaling match_scaling(std::uint32_t keys, std::uint32_t heard_count, Rng& rng) {
    std::vector<HeardRpi> heard;
    for (std::uint32_t i = 0; i < heard_count; ++i) {
        heard.push_back({rng.bytes<16>(), Enin{static_cast<std::uint32_t>(kBenchStart / 600) + i % 144}});
    }
    std::vector<DailyKey> diagnosed;
    for (std::uint32_t i = 0; i < keys; ++i) {
        diagnosed.push_back(generate_daily_key(rng, Enin{static_cast<std::uint32_t>(kBenchStart / 600)}));
    }
    MatchStats stats;
    const auto t0 = Clock::now();
    for (const auto& k : diagnosed) match_rpis(heard, k, {}, &stats);
    return {keys, stats.derivations, stats.lookups, micros_since(t0) / 1000.0};
}

}  // namespace

double BenchResult::derivations_per_key() const {
    if (matching.size() < 2) return matching.empty() ? 0.0 : double(matching[0].derivations) / matching[0].keys;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    for (const auto& m : matching) {
        sx += m.keys;
        sy += static_cast<double>(m.derivations);
        sxx += double(m.keys) * m.keys;
        sxy += double(m.keys) * static_cast<double>(m.derivations);
    }
    const double n = static_cast<double>(matching.size());
    return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string BenchResult::table() const {
    std::ostringstream s;
    char line[160];
    s << "scheme costs\n";
    std::snprintf(line, sizeof line, "  %-16s %8s %14s %14s %14s\n", "scheme", "bytes", "broadcast_us",
                  "receive_us", "match_us/key");
    s << line;
    for (const auto& c : schemes) {
        std::snprintf(line, sizeof line, "  %-16s %8zu %14.2f %14.2f %14.2f\n", std::string(to_string(c.scheme)).c_str(),
                      c.payload_bytes, c.broadcast_us, c.receive_us, c.match_us);
        s << line;
    }
    s << "findmy encryptions vs heard beacons\n";
    std::snprintf(line, sizeof line, "  %8s %16s %12s\n", "beacons", "distinct_pairs", "encryptions");
    s << line;
    for (const auto& f : findmy) {
        std::snprintf(line, sizeof line, "  %8u %16llu %12llu\n", f.beacons,
                      static_cast<unsigned long long>(f.distinct_pairs), static_cast<unsigned long long>(f.encryptions));
        s << line;
    }
    s << "matching cost vs diagnosis keys\n";
    std::snprintf(line, sizeof line, "  %8s %12s %10s %10s\n", "keys", "derivations", "lookups", "ms");
    s << line;
    for (const auto& m : matching) {
        std::snprintf(line, sizeof line, "  %8u %12llu %10llu %10.2f\n", m.keys,
                      static_cast<unsigned long long>(m.derivations), static_cast<unsigned long long>(m.lookups), m.ms);
        s << line;
    }
    std::snprintf(line, sizeof line, "  derivations per key (fit): %.2f\n", derivations_per_key());
    s << line;
    return s.str();
}

nlohmann::json BenchResult::to_json() const {
    nlohmann::json j;
    for (const auto& c : schemes) {
        j["schemes"].push_back({{"scheme", to_string(c.scheme)}, {"payload_bytes", c.payload_bytes},
                                {"broadcast_us", c.broadcast_us}, {"receive_us", c.receive_us},
                                {"match_us", c.match_us}});
    }
    for (const auto& f : findmy) {
        j["findmy"].push_back({{"beacons", f.beacons}, {"distinct_pairs", f.distinct_pairs},
                               {"encryptions", f.encryptions}});
    }
    for (const auto& m : matching) {
        j["matching"].push_back({{"keys", m.keys}, {"derivations", m.derivations}, {"lookups", m.lookups}, {"ms", m.ms}});
    }
    j["derivations_per_key"] = derivations_per_key();
    return j;
}

BenchResult bench_schemes(const BenchOptions& options) {
    Rng root(options.seed, "bench");
    BenchResult r;
    for (auto s : {SchemeKind::local_rpi, SchemeKind::local_enin, SchemeKind::local_blurred, SchemeKind::sym,
                   SchemeKind::consent, SchemeKind::blurred_consent, SchemeKind::asym, SchemeKind::findmy}) {
        auto rng = root.fork(std::string("cost:") + std::string(to_string(s)));
        r.schemes.push_back(cost_of(s, rng));
    }
    for (auto n : options.beacon_counts) {
        auto rng = root.fork("findmy:" + std::to_string(n));
        r.findmy.push_back(findmy_scaling(n, options.findmy_minutes, rng));
    }
    for (auto k : options.key_counts) {
        auto rng = root.fork("match:" + std::to_string(k));
        r.matching.push_back(match_scaling(k, options.heard_rpis, rng));
    }
    return r;
}

}  // namespace ctxen
