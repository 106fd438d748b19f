#include <gtest/gtest.h>

#include <cstring>
#include <filesystem>

#include "ctxen/audit.hpp"
#include "ctxen/bench.hpp"
#include "ctxen/error.hpp"
#include "ctxen/scenario.hpp"
#include "ctxen/sim.hpp"

namespace ctxen {
namespace {

Scenario bundled(const std::string& name) {
    return load_scenario(std::filesystem::path(CTXEN_SCENARIO_DIR) / (name + ".yaml"));
}

const AgentResult& agent(const SimulationReport& r, std::string_view id) {
    for (const auto& a : r.agents) {
        if (a.id == id) return a;
    }
    throw std::out_of_range(std::string(id));
}

constexpr const char* kBadScenario = R"(version: 1
name: bad
seed: 1
start_unix: 5
duration_s: 100
tick_s: 7
agents:
  - id: a
    scheme: nope
    trace: [[0, 95, 0]]
  - id: b
    scheme: sym
    diagnosis_day: 9
    consent: {share: false}
    trace: [[10, 0, 0], [5, 0, 0]]
)";

TEST(Scenario, ValidateListsEveryProblem) {
    const auto sc = parse_scenario(kBadScenario);
    const auto problems = sc.problems();
    EXPECT_GE(problems.size(), 6u);
    try {
        sc.validate();
        FAIL() << "expected ValidationError";
    } catch (const ValidationError& e) {
        EXPECT_EQ(e.problems(), problems);
    }
    EXPECT_THROW(run(sc), ValidationError);
}

TEST(Scenario, MalformedYamlIsFormatError) {
    EXPECT_THROW(parse_scenario("agents: [1, 2"), FormatError);
    EXPECT_THROW(parse_scenario("- just\n- a list\n"), FormatError);
    EXPECT_THROW(load_scenario("/nonexistent/scenario.yaml"), ArgumentError);
}

TEST(Scenario, YamlRoundTrip) {
    for (const auto* name : {"two_agents", "consent_revocation", "wall_pair", "five_agents_week",
                             "blurred_neighbourhood"}) {
        const auto sc = bundled(name);
        EXPECT_TRUE(sc.problems().empty()) << name;
        const auto back = parse_scenario(to_yaml(sc));
        EXPECT_EQ(to_yaml(back), to_yaml(sc)) << name;
        ASSERT_EQ(back.agents.size(), sc.agents.size());
        for (std::size_t i = 0; i < sc.agents.size(); ++i) {
            EXPECT_EQ(back.agents[i].device, sc.agents[i].device);
            EXPECT_EQ(back.agents[i].diagnosis_day, sc.agents[i].diagnosis_day);
            EXPECT_EQ(back.agents[i].trace.waypoints().size(), sc.agents[i].trace.waypoints().size());
        }
    }
}

TEST(Scenario, TraceInterpolatesAndClamps) {
    const MobilityTrace tr({{100, {10.0, 20.0}}, {200, {12.0, 24.0}}});
    EXPECT_DOUBLE_EQ(tr.at(0).lat, 10.0);
    EXPECT_DOUBLE_EQ(tr.at(150).lat, 11.0);
    EXPECT_DOUBLE_EQ(tr.at(150).lon, 22.0);
    EXPECT_DOUBLE_EQ(tr.at(999).lon, 24.0);
}

TEST(Simulation, SameScenarioSameBytes) {
    const auto sc = bundled("two_agents");
    EXPECT_EQ(serialized_outputs(run(sc)), serialized_outputs(run(sc)));
}

TEST(Simulation, SeedChangesOutputs) {
    auto sc = bundled("two_agents");
    const auto a = serialized_outputs(run(sc));
    sc.seed += 1;
    EXPECT_NE(serialized_outputs(run(sc)), a);
}

TEST(Simulation, ChannelConservesFrames) {
    auto sc = bundled("two_agents");
    sc.channel.drop_prob = 0.4;
    const auto r = run(sc);
    EXPECT_EQ(r.channel.received + r.channel.dropped, r.channel.eligible);
    EXPECT_GT(r.channel.dropped, 0u);
    EXPECT_GT(r.channel.received, 0u);
    std::uint64_t heard = 0;
    for (const auto& a : r.agents) heard += a.counters.received;
    EXPECT_EQ(heard, r.channel.received);
    // A miss on a lossy channel is informational, never a failure.
    const auto audit = audit_privacy(r);
    EXPECT_NE(audit.check("completeness").verdict, Verdict::fail);
    EXPECT_TRUE(audit.passed()) << audit.table();
}

TEST(Simulation, TwoAgentsCafe) {
    const auto r = run(bundled("two_agents"));
    const auto& alice = agent(r, "alice");
    ASSERT_FALSE(alice.events.empty());
    for (const auto& ev : alice.events) {
        ASSERT_TRUE(ev.context);
        EXPECT_LT(haversine_m(ev.context->location, {42.355018, -71.0650}), 5.0);
        EXPECT_EQ(ev.source, ContextSource::decrypted_peer);
    }
    EXPECT_TRUE(agent(r, "carol").events.empty());
    EXPECT_TRUE(agent(r, "bob").events.empty());
    ASSERT_EQ(r.uploads.size(), 1u);
    EXPECT_EQ(r.uploads[0].day, r.scenario.start_day() + 2);
    EXPECT_TRUE(audit_privacy(r).passed());
}

TEST(Simulation, NoDiagnosisNoEvents) {
    auto sc = bundled("two_agents");
    for (auto& a : sc.agents) {
        a.diagnosis_day.reset();
        a.device.scheme = SchemeKind::local_rpi;
    }
    const auto r = run(sc);
    EXPECT_EQ(r.total_events(), 0u);
    EXPECT_EQ(r.total_disclosures(), 0u);
    EXPECT_TRUE(r.registry_log.empty());
    EXPECT_TRUE(audit_privacy(r).passed());
}

TEST(Simulation, RevokedConsentKeepsEventsDropsLocations) {
    const auto r = run(bundled("consent_revocation"));
    ASSERT_EQ(r.revocations.size(), 1u);
    EXPECT_TRUE(r.revocations[0].appended);
    EXPECT_GT(r.total_events(), 0u);
    EXPECT_EQ(r.total_disclosures(), 0u);
    // The first registry version still carries the secret.
    ASSERT_EQ(r.registry_log.size(), 2u);
    EXPECT_EQ(r.registry_log[0].receipt, r.registry_log[1].receipt);
    const auto audit = audit_privacy(r);
    EXPECT_EQ(audit.check("c").verdict, Verdict::pass);
    EXPECT_NE(audit.check("c").evidence.find("locations=0"), std::string::npos);
}

TEST(Simulation, WallPairIsReportedNotFailed) {
    const auto r = run(bundled("wall_pair"));
    EXPECT_GT(r.channel.via_wall, 0u);
    bool wall_contact = false;
    for (const auto& c : r.ground_truth.contacts) wall_contact |= c.via_wall;
    EXPECT_TRUE(wall_contact);
    const auto audit = audit_privacy(r);
    EXPECT_TRUE(audit.passed());
    EXPECT_EQ(audit.check("wall").verdict, Verdict::info);
    EXPECT_NE(audit.check("wall").evidence.rfind("0 wall", 0), 0u);
}

TEST(Simulation, BlurredDisclosuresCarryUploaderCell) {
    const auto r = run(bundled("blurred_neighbourhood"));
    std::size_t own = 0, peer = 0;
    for (const auto& a : r.agents) {
        for (const auto& ev : a.events) {
            if (!ev.context) continue;
            ASSERT_TRUE(ev.context->cell_m);
            (ev.source == ContextSource::own_log ? own : peer)++;
            EXPECT_DOUBLE_EQ(*ev.context->cell_m, ev.source == ContextSource::own_log ? 200.0 : 1000.0);
        }
    }
    EXPECT_GT(own, 0u);
    EXPECT_GT(peer, 0u);
    const auto audit = audit_privacy(r);
    EXPECT_TRUE(audit.passed()) << audit.table();
}

TEST(Simulation, ReportRoundTripsThroughDisk) {
    const auto r = run(bundled("consent_revocation"));
    const auto dir = std::filesystem::temp_directory_path() / "ctxen_sim_test_report";
    std::filesystem::remove_all(dir);
    write_report(r, dir);
    const auto back = load_report(dir);
    EXPECT_EQ(serialized_outputs(back), serialized_outputs(r));
    EXPECT_EQ(audit_privacy(back).table(), audit_privacy(r).table());
    std::filesystem::remove(dir / "report.json");
    EXPECT_THROW(load_report(dir), FormatError);
    std::filesystem::remove_all(dir);
}

// The audit must notice planted leaks, or its passes mean nothing.
TEST(Audit, FlagsDisclosureOfUndiagnosedAgent) {
    auto r = run(bundled("two_agents"));
    auto& alice = r.agents[r.scenario.agent_index("alice")];
    ASSERT_FALSE(alice.events.empty());
    auto ev = alice.events.front();
    ev.context->location = r.scenario.agents[r.scenario.agent_index("carol")].trace.at(0);
    alice.events.push_back(ev);
    const auto audit = audit_privacy(r);
    EXPECT_FALSE(audit.passed());
    EXPECT_EQ(audit.check("a").verdict, Verdict::fail);
    EXPECT_EQ(audit.check("e").verdict, Verdict::fail);
    EXPECT_NE(audit.check("e").evidence.find("carol"), std::string::npos);
}

TEST(Audit, FlagsRawCoordinatesInSnapshot) {
    auto r = run(bundled("two_agents"));
    const double lat = r.scenario.agents[r.scenario.agent_index("carol")].trace.at(0).lat;
    std::uint8_t raw[8];
    std::memcpy(raw, &lat, 8);
    auto& snap = r.agents[0].snapshot;
    snap.insert(snap.end(), raw, raw + 8);
    const auto audit = audit_privacy(r);
    EXPECT_EQ(audit.check("d").verdict, Verdict::fail);
}

TEST(Audit, FlagsLocationOnRevokedDay) {
    auto r = run(bundled("consent_revocation"));
    auto& alice = r.agents[r.scenario.agent_index("alice")];
    ASSERT_FALSE(alice.events.empty());
    alice.events.front().context = ExposureContext{GeoPoint{0, 0}, std::nullopt, alice.events.front().window};
    EXPECT_EQ(audit_privacy(r).check("c").verdict, Verdict::fail);
}

TEST(Bench, CountersAreDeterministic) {
    BenchOptions opts;
    opts.key_counts = {5, 10, 20};
    opts.beacon_counts = {1, 2, 4};
    opts.findmy_minutes = 30;
    const auto b = bench_schemes(opts);
    EXPECT_DOUBLE_EQ(b.derivations_per_key(), 144.0);
    for (const auto& f : b.findmy) EXPECT_EQ(f.encryptions, f.distinct_pairs);
    EXPECT_EQ(b.findmy[1].encryptions, 2 * b.findmy[0].encryptions);
    EXPECT_EQ(b.findmy[2].encryptions, 4 * b.findmy[0].encryptions);
    for (const auto& c : b.schemes) {
        const std::size_t want = c.scheme == SchemeKind::findmy ? 48
                                 : c.scheme == SchemeKind::asym ? 97
                                 : logs_locally(c.scheme)       ? 21
                                                                : 65;
        EXPECT_EQ(c.payload_bytes, want) << to_string(c.scheme);
    }
    EXPECT_TRUE(b.to_json().contains("matching"));
}

}  // namespace
}  // namespace ctxen
