#include "ctxen/scenario.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>

#include <yaml-cpp/yaml.h>

namespace ctxen {
namespace {

template <typename T>
T field(const YAML::Node& node, const char* key, const std::string& where, T fallback) {
    const auto v = node[key];
    if (!v) return fallback;
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw FormatError(where + "." + key + ": wrong type");
    }
}

template <typename T>
std::optional<T> optional_field(const YAML::Node& node, const char* key, const std::string& where) {
    const auto v = node[key];
    if (!v || v.IsNull()) return std::nullopt;
    try {
        return v.as<T>();
    } catch (const YAML::Exception&) {
        throw FormatError(where + "." + key + ": wrong type");
    }
}

Waypoint parse_waypoint(const YAML::Node& n, const std::string& where) {
    try {
        if (n.IsSequence() && n.size() == 3) {
            return {n[0].as<std::uint64_t>(), {n[1].as<double>(), n[2].as<double>()}};
        }
        if (n.IsMap()) {
            return {n["t"].as<std::uint64_t>(), {n["lat"].as<double>(), n["lon"].as<double>()}};
        }
    } catch (const YAML::Exception&) {
    }
    throw FormatError(where + ": waypoint must be [t, lat, lon] or {t, lat, lon}");
}

AgentSpec parse_agent(const YAML::Node& n, std::size_t index, std::vector<std::string>& problems) {
    const std::string where = "agents[" + std::to_string(index) + "]";
    if (!n.IsMap()) throw FormatError(where + ": expected a mapping");
    AgentSpec a;
    a.id = field<std::string>(n, "id", where, "");

    const auto scheme = field<std::string>(n, "scheme", where, "sym");
    try {
        a.device.scheme = scheme_kind_from_string(scheme);
    } catch (const ArgumentError& ex) {
        problems.push_back(where + ": " + ex.what());
    }

    auto cell = optional_field<double>(n, "cell_m", where);
    if (const auto density = optional_field<std::string>(n, "density", where)) {
        if (cell) {
            problems.push_back(where + ": give cell_m or density, not both");
        } else {
            try {
                cell = density_cell_size(density_from_string(*density));
            } catch (const ArgumentError& ex) {
                problems.push_back(where + ": " + ex.what());
            }
        }
    }
    if (cell) {
        try {
            a.device.quantizer = QuantizerConfig(*cell);
        } catch (const ArgumentError& ex) {
            problems.push_back(where + ": " + ex.what());
        }
    }
    a.device.per_day_consent = field<bool>(n, "per_day_consent", where, false);
    a.device.windows_per_key = field<std::uint32_t>(n, "windows_per_key", where, kIntervalsPerDay);
    a.diagnosis_day = optional_field<std::uint32_t>(n, "diagnosis_day", where);

    if (const auto c = n["consent"]) {
        if (!c.IsMap()) throw FormatError(where + ".consent: expected a mapping");
        a.consent.share = field<bool>(c, "share", where + ".consent", true);
        a.consent.revoke_day = optional_field<std::uint32_t>(c, "revoke_day", where + ".consent");
        a.consent.revoke_days =
            field<std::vector<std::uint32_t>>(c, "revoke_days", where + ".consent", {});
    }
    a.device.consent_default = a.consent.share;

    std::vector<Waypoint> wps;
    if (const auto t = n["trace"]) {
        if (!t.IsSequence()) throw FormatError(where + ".trace: expected a list");
        for (std::size_t i = 0; i < t.size(); ++i) {
            wps.push_back(parse_waypoint(t[i], where + ".trace[" + std::to_string(i) + "]"));
        }
    }
    a.trace = MobilityTrace(std::move(wps));
    return a;
}

}  // namespace

GeoPoint MobilityTrace::at(std::uint64_t t) const {
    if (waypoints_.empty()) throw StateError("empty mobility trace");
    if (t <= waypoints_.front().t) return waypoints_.front().position;
    if (t >= waypoints_.back().t) return waypoints_.back().position;
    const auto next = std::upper_bound(waypoints_.begin(), waypoints_.end(), t,
                                       [](std::uint64_t v, const Waypoint& w) { return v < w.t; });
    const auto& b = *next;
    const auto& a = *std::prev(next);
    if (b.t == a.t) return b.position;
    const double f = static_cast<double>(t - a.t) / static_cast<double>(b.t - a.t);
    return {a.position.lat + f * (b.position.lat - a.position.lat),
            a.position.lon + f * (b.position.lon - a.position.lon)};
}

bool ChannelModel::is_wall_pair(std::string_view a, std::string_view b) const {
    return std::any_of(wall_pairs.begin(), wall_pairs.end(), [&](const auto& p) {
        return (p.first == a && p.second == b) || (p.first == b && p.second == a);
    });
}

std::size_t Scenario::agent_index(std::string_view id) const {
    for (std::size_t i = 0; i < agents.size(); ++i) {
        if (agents[i].id == id) return i;
    }
    return static_cast<std::size_t>(-1);
}

std::vector<std::string> Scenario::problems() const {
    std::vector<std::string> out = parse_problems;
    if (version != kScenarioVersion) out.push_back("unsupported scenario version " + std::to_string(version));
    if (start_unix % kSecondsPerDay != 0) out.push_back("start_unix must be a multiple of 86400");
    if (duration_s == 0) out.push_back("duration_s must be positive");
    if (tick_s == 0 || 600 % tick_s != 0) out.push_back("tick_s must divide 600");
    if (!(channel.range_m > 0.0)) out.push_back("channel.range_m must be positive");
    if (!(channel.drop_prob >= 0.0 && channel.drop_prob <= 1.0)) {
        out.push_back("channel.drop_prob must be in [0, 1]");
    }
    if (agents.empty()) out.push_back("scenario has no agents");

    std::set<std::string> ids;
    for (const auto& a : agents) {
        const std::string where = "agent '" + a.id + "'";
        if (a.id.empty()) out.push_back("agent with empty id");
        if (!ids.insert(a.id).second) out.push_back("duplicate agent id '" + a.id + "'");
        try {
            a.device.validate();
        } catch (const ArgumentError& ex) {
            out.push_back(where + ": " + ex.what());
        }
        if (a.diagnosis_day && *a.diagnosis_day >= num_days()) {
            out.push_back(where + ": diagnosis_day " + std::to_string(*a.diagnosis_day) +
                          " is outside the scenario's " + std::to_string(num_days()) + " days");
        }
        const bool consent_scheme = a.device.scheme == SchemeKind::consent ||
                                    a.device.scheme == SchemeKind::blurred_consent;
        if ((!a.consent.share || a.consent.revoke_day) && !consent_scheme) {
            out.push_back(where + ": consent policy needs a consent or blurred_consent scheme");
        }
        if (a.consent.revoke_day) {
            if (!a.diagnosis_day) {
                out.push_back(where + ": revoke_day without diagnosis_day");
            } else if (*a.consent.revoke_day <= *a.diagnosis_day || *a.consent.revoke_day > num_days()) {
                out.push_back(where + ": revoke_day must be after diagnosis_day and at most " +
                              std::to_string(num_days()));
            }
        } else if (!a.consent.revoke_days.empty()) {
            out.push_back(where + ": revoke_days without revoke_day");
        }

        const auto& wps = a.trace.waypoints();
        if (wps.empty()) out.push_back(where + ": trace has no waypoints");
        for (std::size_t i = 0; i < wps.size(); ++i) {
            const auto& p = wps[i].position;
            if (!p.valid() || std::abs(p.lat) > kPolarLimitDeg) {
                out.push_back(where + ": waypoint " + std::to_string(i) + " outside the supported region");
            }
            if (i > 0 && wps[i].t < wps[i - 1].t) {
                out.push_back(where + ": waypoints not sorted by time at " + std::to_string(i));
            }
        }
    }
    for (const auto& [x, y] : channel.wall_pairs) {
        if (!ids.contains(x) || !ids.contains(y)) {
            out.push_back("wall pair (" + x + ", " + y + ") names an unknown agent");
        } else if (x == y) {
            out.push_back("wall pair (" + x + ", " + y + ") pairs an agent with itself");
        }
    }
    return out;
}

void Scenario::validate() const {
    auto p = problems();
    if (!p.empty()) throw ValidationError(std::move(p));
}

Scenario parse_scenario(std::string_view yaml) {
    YAML::Node root;
    try {
        root = YAML::Load(std::string(yaml));
    } catch (const YAML::Exception& ex) {
        throw FormatError(std::string("scenario is not valid YAML: ") + ex.what());
    }
    if (!root.IsMap()) throw FormatError("scenario must be a YAML mapping");

    Scenario sc;
    sc.version = field<int>(root, "version", "scenario", 0);
    sc.name = field<std::string>(root, "name", "scenario", "scenario");
    sc.seed = field<std::uint64_t>(root, "seed", "scenario", 0);
    sc.start_unix = field<std::uint64_t>(root, "start_unix", "scenario", 0);
    sc.duration_s = field<std::uint64_t>(root, "duration_s", "scenario", kSecondsPerDay);
    sc.tick_s = field<std::uint32_t>(root, "tick_s", "scenario", 60);
    sc.tolerance = field<std::uint32_t>(root, "tolerance", "scenario", 12);

    if (const auto ch = root["channel"]) {
        if (!ch.IsMap()) throw FormatError("channel: expected a mapping");
        sc.channel.range_m = field<double>(ch, "range_m", "channel", 10.0);
        sc.channel.drop_prob = field<double>(ch, "drop_prob", "channel", 0.0);
        if (const auto walls = ch["wall_pairs"]) {
            for (const auto& w : walls) {
                if (!w.IsSequence() || w.size() != 2) throw FormatError("channel.wall_pairs: expected [a, b] pairs");
                sc.channel.wall_pairs.emplace_back(w[0].as<std::string>(), w[1].as<std::string>());
            }
        }
    }

    const auto agents = root["agents"];
    if (agents && !agents.IsSequence()) throw FormatError("agents: expected a list");
    if (agents) {
        for (std::size_t i = 0; i < agents.size(); ++i) {
            sc.agents.push_back(parse_agent(agents[i], i, sc.parse_problems));
        }
    }
    return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ArgumentError("cannot open scenario " + path.string());
    std::stringstream text;
    text << in.rdbuf();
    return parse_scenario(text.str());
}

std::string to_yaml(const Scenario& sc) {
    YAML::Emitter out;
    out.SetDoublePrecision(17);
    out << YAML::BeginMap;
    out << YAML::Key << "version" << YAML::Value << sc.version;
    out << YAML::Key << "name" << YAML::Value << sc.name;
    out << YAML::Key << "seed" << YAML::Value << sc.seed;
    out << YAML::Key << "start_unix" << YAML::Value << sc.start_unix;
    out << YAML::Key << "duration_s" << YAML::Value << sc.duration_s;
    out << YAML::Key << "tick_s" << YAML::Value << sc.tick_s;
    out << YAML::Key << "tolerance" << YAML::Value << sc.tolerance;

    out << YAML::Key << "channel" << YAML::Value << YAML::BeginMap;
    out << YAML::Key << "range_m" << YAML::Value << sc.channel.range_m;
    out << YAML::Key << "drop_prob" << YAML::Value << sc.channel.drop_prob;
    out << YAML::Key << "wall_pairs" << YAML::Value << YAML::BeginSeq;
    for (const auto& [a, b] : sc.channel.wall_pairs) {
        out << YAML::Flow << YAML::BeginSeq << a << b << YAML::EndSeq;
    }
    out << YAML::EndSeq << YAML::EndMap;

    out << YAML::Key << "agents" << YAML::Value << YAML::BeginSeq;
    for (const auto& a : sc.agents) {
        out << YAML::BeginMap;
        out << YAML::Key << "id" << YAML::Value << a.id;
        out << YAML::Key << "scheme" << YAML::Value << std::string(to_string(a.device.scheme));
        if (a.device.quantizer) out << YAML::Key << "cell_m" << YAML::Value << a.device.quantizer->cell_m();
        if (a.device.per_day_consent) out << YAML::Key << "per_day_consent" << YAML::Value << true;
        if (a.device.windows_per_key != kIntervalsPerDay) {
            out << YAML::Key << "windows_per_key" << YAML::Value << a.device.windows_per_key;
        }
        if (a.diagnosis_day) out << YAML::Key << "diagnosis_day" << YAML::Value << *a.diagnosis_day;
        if (!a.consent.share || a.consent.revoke_day) {
            out << YAML::Key << "consent" << YAML::Value << YAML::BeginMap;
            out << YAML::Key << "share" << YAML::Value << a.consent.share;
            if (a.consent.revoke_day) out << YAML::Key << "revoke_day" << YAML::Value << *a.consent.revoke_day;
            if (!a.consent.revoke_days.empty()) {
                out << YAML::Key << "revoke_days" << YAML::Value << YAML::Flow << a.consent.revoke_days;
            }
            out << YAML::EndMap;
        }
        out << YAML::Key << "trace" << YAML::Value << YAML::BeginSeq;
        for (const auto& w : a.trace.waypoints()) {
            out << YAML::Flow << YAML::BeginSeq << w.t << w.position.lat << w.position.lon << YAML::EndSeq;
        }
        out << YAML::EndSeq << YAML::EndMap;
    }
    out << YAML::EndSeq << YAML::EndMap;
    return std::string(out.c_str()) + "\n";
}

}  // namespace ctxen
