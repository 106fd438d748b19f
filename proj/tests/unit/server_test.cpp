#include <filesystem>
#include <sstream>
#include <thread>

#include <gtest/gtest.h>

#include "ctxen/rng.hpp"
#include "ctxen/server.hpp"

namespace ctxen {
namespace {

constexpr std::uint32_t kDay0 = 18262;

DiagnosisBundle bundle_for_days(Rng& rng, std::uint32_t first, std::uint32_t last, bool consent = true) {
    DiagnosisBundle b;
    b.device_pseudonym = rng.bytes<16>();
    for (auto d = first; d <= last; ++d) {
        DiagnosisEntry e{Enin{d * kIntervalsPerDay}, rng.bytes<16>(), std::nullopt, std::nullopt};
        if (consent) e.consent_secret = rng.bytes<16>();
        b.entries.push_back(e);
    }
    return b;
}

TEST(Bundle, JsonRoundTrip) {
    Rng rng(1);
    auto b = bundle_for_days(rng, kDay0, kDay0 + 2);
    b.entries[1].asym_master = rng.bytes<32>();
    b.entries[2].blur_cell_m = 200.0;
    b.receipt = 7;
    b.version = 2;
    EXPECT_EQ(bundle_from_json(nlohmann::json::parse(to_json(b).dump())), b);
    EXPECT_THROW(bundle_from_json(nlohmann::json{{"receipt", 1}}), FormatError);
}

TEST(Bundle, EffectiveKeepsLatestVersion) {
    Rng rng(2);
    auto a0 = bundle_for_days(rng, kDay0, kDay0);
    a0.receipt = 1;
    auto b0 = bundle_for_days(rng, kDay0, kDay0);
    b0.receipt = 2;
    auto a1 = a0;
    a1.version = 1;
    a1.entries[0].consent_secret.reset();
    const std::vector<DiagnosisBundle> log{a0, b0, a1};
    const auto eff = effective_bundles(log);
    ASSERT_EQ(eff.size(), 2u);
    EXPECT_EQ(eff[0], a1);
    EXPECT_EQ(eff[1], b0);
}

TEST(Registry, ReceiptsAndCursor) {
    Rng rng(3);
    DiagnosisRegistry reg;
    EXPECT_EQ(reg.upload(bundle_for_days(rng, kDay0, kDay0 + 1)), 1u);
    EXPECT_EQ(reg.upload(bundle_for_days(rng, kDay0, kDay0)), 2u);
    auto d = reg.download_since(0);
    EXPECT_EQ(d.bundles.size(), 2u);
    EXPECT_EQ(d.cursor, 2u);
    EXPECT_TRUE(reg.download_since(d.cursor).bundles.empty());
    reg.upload(bundle_for_days(rng, kDay0, kDay0));
    d = reg.download_since(d.cursor);
    ASSERT_EQ(d.bundles.size(), 1u);
    EXPECT_EQ(d.bundles[0].receipt, 3u);
    // Unknown cursor replays everything.
    EXPECT_EQ(reg.download_since(99).bundles.size(), 3u);
}

TEST(Registry, RejectsMalformedUploads) {
    Rng rng(4);
    DiagnosisRegistry reg;
    EXPECT_THROW(reg.upload(DiagnosisBundle{}), UploadRejected);
    auto dup = bundle_for_days(rng, kDay0, kDay0);
    dup.entries.push_back(dup.entries[0]);
    EXPECT_THROW(reg.upload(dup), UploadRejected);
    EXPECT_THROW(reg.upload(bundle_for_days(rng, kDay0, kDay0 + 14)), UploadRejected);
    EXPECT_NO_THROW(reg.upload(bundle_for_days(rng, kDay0, kDay0 + 13)));
    auto tiny_cell = bundle_for_days(rng, kDay0, kDay0);
    tiny_cell.entries[0].blur_cell_m = 0.5;
    EXPECT_THROW(reg.upload(tiny_cell), UploadRejected);
    reg.set_today(kDay0 + 20);
    EXPECT_THROW(reg.upload(bundle_for_days(rng, kDay0, kDay0)), UploadRejected);
    EXPECT_THROW(reg.upload(bundle_for_days(rng, kDay0 + 21, kDay0 + 21)), UploadRejected);
    EXPECT_NO_THROW(reg.upload(bundle_for_days(rng, kDay0 + 7, kDay0 + 20)));
    EXPECT_EQ(reg.size(), 2u);
}

TEST(Registry, RevokeAppendsSupersedingVersion) {
    Rng rng(5);
    DiagnosisRegistry reg;
    const auto receipt = reg.upload(bundle_for_days(rng, kDay0, kDay0 + 2));
    const std::uint32_t days[] = {kDay0 + 1, kDay0 + 9};
    const auto r = reg.revoke_consent(receipt, days);
    EXPECT_TRUE(r.appended);
    ASSERT_EQ(r.warnings.size(), 1u);
    EXPECT_EQ(reg.size(), 2u);

    const auto all = reg.download_since(0).bundles;
    EXPECT_EQ(all[1].receipt, receipt);
    EXPECT_EQ(all[1].version, 1u);
    EXPECT_TRUE(all[1].entries[0].consent_secret);
    EXPECT_FALSE(all[1].entries[1].consent_secret);
    EXPECT_TRUE(all[1].entries[2].consent_secret);
    // Daily keys survive revocation.
    EXPECT_EQ(all[1].entries[1].daily_key, all[0].entries[1].daily_key);

    // Revoking again changes nothing.
    EXPECT_FALSE(reg.revoke_consent(receipt, days).appended);
    EXPECT_EQ(reg.size(), 2u);
    EXPECT_THROW(reg.revoke_consent(42, days), ArgumentError);
}

TEST(Registry, StoreReplaysOnOpen) {
    Rng rng(6);
    const auto path = std::filesystem::temp_directory_path() / "ctxen_registry_test.jsonl";
    std::filesystem::remove(path);
    {
        DiagnosisRegistry reg({14, path});
        reg.upload(bundle_for_days(rng, kDay0, kDay0));
        const std::uint32_t day[] = {kDay0};
        reg.revoke_consent(1, day);
    }
    DiagnosisRegistry reopened({14, path});
    EXPECT_EQ(reopened.size(), 2u);
    EXPECT_EQ(reopened.upload(bundle_for_days(rng, kDay0, kDay0)), 3u);
    std::filesystem::remove(path);
}

TEST(Registry, ConcurrentUploadsGetDistinctReceipts) {
    DiagnosisRegistry reg;
    std::vector<std::thread> threads;
    std::vector<std::vector<std::uint64_t>> receipts(4);
    for (int t = 0; t < 4; ++t) {
        threads.emplace_back([&, t] {
            Rng rng(100 + t);
            for (int i = 0; i < 50; ++i) receipts[t].push_back(reg.upload(bundle_for_days(rng, kDay0, kDay0)));
        });
    }
    for (auto& th : threads) th.join();
    std::set<std::uint64_t> all;
    for (const auto& r : receipts) all.insert(r.begin(), r.end());
    EXPECT_EQ(all.size(), 200u);
    EXPECT_EQ(*all.rbegin(), 200u);
}

TEST(LineProtocol, Verbs) {
    Rng rng(7);
    DiagnosisRegistry reg;
    LineProtocolServer server(reg);
    const nlohmann::json upload{{"verb", "UPLOAD"}, {"bundle", to_json(bundle_for_days(rng, kDay0, kDay0))}};
    std::istringstream in(upload.dump() + "\n" + R"({"verb":"DOWNLOAD_SINCE","cursor":0})" + "\n" +
                          R"({"verb":"REVOKE","receipt":1,"days":[18262]})" + "\n" +
                          R"({"verb":"NOPE"})" + "\n" + "not json\n");
    std::ostringstream out;
    server.serve(in, out);
    std::istringstream lines(out.str());
    std::vector<nlohmann::json> replies;
    for (std::string line; std::getline(lines, line);) replies.push_back(nlohmann::json::parse(line));
    ASSERT_EQ(replies.size(), 5u);
    EXPECT_EQ(replies[0]["receipt"], 1);
    EXPECT_EQ(replies[1]["bundles"].size(), 1u);
    EXPECT_EQ(replies[1]["cursor"], 1);
    EXPECT_EQ(replies[2]["appended"], true);
    EXPECT_EQ(replies[3]["status"], "error");
    EXPECT_EQ(replies[4]["status"], "error");
}

}  // namespace
}  // namespace ctxen
