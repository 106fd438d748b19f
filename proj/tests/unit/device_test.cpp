#include <gtest/gtest.h>

#include "ctxen/device.hpp"
#include "ctxen/rng.hpp"

namespace ctxen {
namespace {

constexpr std::uint64_t kT0 = 1577836800;  // day-aligned
constexpr std::uint32_t kDay0 = kT0 / 86400;
const GeoPoint kAlice{42.3601, -71.0942};
const GeoPoint kBob{42.3605, -71.0950};

struct Pair {
    Rng rng{2024};
    Device sender;
    Device receiver;

    Pair(DeviceConfig send_cfg, DeviceConfig recv_cfg)
        : sender(send_cfg, rng), receiver(recv_cfg, rng) {
        sender.provision_day(Enin{kDay0 * kIntervalsPerDay}, rng);
        receiver.provision_day(Enin{kDay0 * kIntervalsPerDay}, rng);
    }

    void contact(std::uint64_t t) {
        receiver.on_receive(sender.tick_broadcast(t, kAlice, rng), t, kBob, rng);
        sender.on_receive(receiver.tick_broadcast(t, kBob, rng), t, kAlice, rng);
    }

    std::vector<ExposureEvent> diagnose_sender(bool consent = true) {
        auto b = sender.make_diagnosis_bundle({kDay0, kDay0}, consent, rng);
        b.receipt = 1;
        return receiver.process_exposures(std::span(&b, 1));
    }
};

DeviceConfig cfg(SchemeKind s) {
    DeviceConfig c;
    c.scheme = s;
    if (uses_blur(s)) c.quantizer = QuantizerConfig(1000.0);
    return c;
}

TEST(DeviceConfig, QuantizerRequiredExactlyForBlurSchemes) {
    DeviceConfig c;
    c.scheme = SchemeKind::blurred_consent;
    EXPECT_THROW(c.validate(), ArgumentError);
    c.quantizer = QuantizerConfig(200.0);
    EXPECT_NO_THROW(c.validate());
    c.scheme = SchemeKind::sym;
    EXPECT_THROW(c.validate(), ArgumentError);
    c.quantizer.reset();
    c.windows_per_key = 7;
    EXPECT_THROW(c.validate(), ArgumentError);
}

TEST(SchemeKind, NamesRoundTrip) {
    for (auto k : {SchemeKind::local_rpi, SchemeKind::local_enin, SchemeKind::local_blurred,
                   SchemeKind::findmy, SchemeKind::asym, SchemeKind::sym, SchemeKind::consent,
                   SchemeKind::blurred_consent}) {
        EXPECT_EQ(scheme_kind_from_string(to_string(k)), k);
    }
    EXPECT_THROW(scheme_kind_from_string("ecies"), ArgumentError);
}

TEST(Device, ProvisionRequiresAlignment) {
    Rng rng(1);
    Device d(cfg(SchemeKind::sym), rng);
    EXPECT_THROW(d.provision_day(Enin{kDay0 * kIntervalsPerDay + 1}, rng), AlignmentError);
    EXPECT_THROW(d.tick_broadcast(kT0, kAlice, rng), StateError);
    d.provision_day(Enin{kDay0 * kIntervalsPerDay}, rng);
    const auto key = d.key_for(enin_from_unix(kT0 + 3600));
    d.provision_day(Enin{kDay0 * kIntervalsPerDay}, rng);
    EXPECT_EQ(d.key_for(enin_from_unix(kT0 + 3600)), key);
    EXPECT_FALSE(d.has_key_for(enin_from_unix(kT0 + 86400)));
}

TEST(Device, ShorterRollingPeriodGivesMoreKeys) {
    Rng rng(2);
    auto c = cfg(SchemeKind::sym);
    c.windows_per_key = 72;
    Device d(c, rng);
    d.provision_day(Enin{kDay0 * kIntervalsPerDay}, rng);
    EXPECT_NE(d.key_for(enin_from_unix(kT0)).key(), d.key_for(enin_from_unix(kT0 + 43200)).key());
    EXPECT_EQ(d.make_diagnosis_bundle({kDay0, kDay0}, true, rng).entries.size(), 2u);
}

TEST(Device, BroadcastSizesPerScheme) {
    const std::pair<SchemeKind, std::size_t> expected[] = {
        {SchemeKind::local_rpi, 21},  {SchemeKind::local_enin, 21}, {SchemeKind::local_blurred, 21},
        {SchemeKind::sym, 65},        {SchemeKind::consent, 65},    {SchemeKind::blurred_consent, 65},
        {SchemeKind::asym, 97},       {SchemeKind::findmy, 48},
    };
    for (const auto& [scheme, size] : expected) {
        Rng rng(3);
        Device d(cfg(scheme), rng);
        d.provision_day(Enin{kDay0 * kIntervalsPerDay}, rng);
        EXPECT_EQ(d.tick_broadcast(kT0 + 60, kAlice, rng).size(), size) << to_string(scheme);
    }
}

TEST(Device, SymmetricExposureRecoversSenderLocation) {
    Pair p(cfg(SchemeKind::sym), cfg(SchemeKind::sym));
    p.contact(kT0 + 1000);
    const auto events = p.diagnose_sender();
    ASSERT_EQ(events.size(), 1u);
    const auto& ev = events[0];
    EXPECT_EQ(ev.scheme, SchemeKind::sym);
    EXPECT_EQ(ev.source, ContextSource::decrypted_peer);
    EXPECT_EQ(ev.day, kDay0);
    EXPECT_EQ(ev.receipt, 1u);
    ASSERT_TRUE(ev.context);
    EXPECT_NEAR(ev.context->location.lat, kAlice.lat, 1e-6);
    EXPECT_EQ(ev.context->enin, enin_from_unix(kT0 + 1000));
}

TEST(Device, DuplicateFramesCountedOnce) {
    Pair p(cfg(SchemeKind::sym), cfg(SchemeKind::sym));
    const auto frame = p.sender.tick_broadcast(kT0 + 10, kAlice, p.rng);
    p.receiver.on_receive(frame, kT0 + 10, kBob, p.rng);
    p.receiver.on_receive(frame, kT0 + 20, kBob, p.rng);
    EXPECT_EQ(p.receiver.counters().received, 2u);
    EXPECT_EQ(p.receiver.counters().duplicates, 1u);
    EXPECT_EQ(p.receiver.scan_log().size(), 1u);
    p.receiver.on_receive(Bytes(30), kT0 + 30, kBob, p.rng);
    EXPECT_EQ(p.receiver.counters().unparseable, 1u);
    EXPECT_EQ(p.diagnose_sender().size(), 1u);
}

TEST(Device, NoEventsWithoutMatchingBundle) {
    Pair p(cfg(SchemeKind::sym), cfg(SchemeKind::sym));
    p.contact(kT0 + 1000);
    Rng other(77);
    Device stranger(cfg(SchemeKind::sym), other);
    stranger.provision_day(Enin{kDay0 * kIntervalsPerDay}, other);
    auto b = stranger.make_diagnosis_bundle({kDay0, kDay0}, true, other);
    EXPECT_TRUE(p.receiver.process_exposures(std::span(&b, 1)).empty());
}

TEST(Device, ConsentWithheldGivesEventWithoutLocation) {
    Pair p(cfg(SchemeKind::consent), cfg(SchemeKind::consent));
    p.contact(kT0 + 500);
    const auto shared = p.diagnose_sender(true);
    ASSERT_EQ(shared.size(), 1u);
    ASSERT_TRUE(shared[0].context);
    const auto withheld = p.diagnose_sender(false);
    ASSERT_EQ(withheld.size(), 1u);
    EXPECT_FALSE(withheld[0].context);
    EXPECT_EQ(withheld[0].source, ContextSource::none);
}

TEST(Device, RevocationVersionSupersedesConsent) {
    Pair p(cfg(SchemeKind::consent), cfg(SchemeKind::consent));
    p.contact(kT0 + 500);
    auto v0 = p.sender.make_diagnosis_bundle({kDay0, kDay0}, true, p.rng);
    v0.receipt = 4;
    auto v1 = v0;
    v1.version = 1;
    for (auto& e : v1.entries) e.consent_secret.reset();
    const std::vector<DiagnosisBundle> log{v0, v1};
    const auto events = p.receiver.process_exposures(log);
    ASSERT_EQ(events.size(), 1u);
    EXPECT_FALSE(events[0].context);
}

TEST(Device, BlurredConsentDisclosesCellCenter) {
    Pair p(cfg(SchemeKind::blurred_consent), cfg(SchemeKind::blurred_consent));
    p.contact(kT0 + 500);
    const auto events = p.diagnose_sender();
    ASSERT_EQ(events.size(), 1u);
    ASSERT_TRUE(events[0].context);
    const auto center = quantize(kAlice, QuantizerConfig(1000.0)).center;
    EXPECT_NEAR(events[0].context->location.lat, center.lat, 1e-6);
    EXPECT_NEAR(events[0].context->location.lon, center.lon, 1e-6);
    EXPECT_EQ(events[0].context->cell_m, 1000.0);
}

TEST(Device, AsymmetricExposure) {
    Pair p(cfg(SchemeKind::asym), cfg(SchemeKind::asym));
    p.contact(kT0 + 7000);
    const auto events = p.diagnose_sender();
    ASSERT_EQ(events.size(), 1u);
    ASSERT_TRUE(events[0].context);
    EXPECT_NEAR(events[0].context->location.lon, kAlice.lon, 1e-6);
    // Without the uploaded master the receiver cannot open the context.
    auto b = p.sender.make_diagnosis_bundle({kDay0, kDay0}, true, p.rng);
    for (auto& e : b.entries) e.asym_master.reset();
    const auto locked = p.receiver.process_exposures(std::span(&b, 1));
    ASSERT_EQ(locked.size(), 1u);
    EXPECT_FALSE(locked[0].context);
}

TEST(Device, LocalApproachesAgree) {
    // Several receptions in one window; both approaches keep the last fix.
    for (auto scheme : {SchemeKind::local_rpi, SchemeKind::local_enin}) {
        Pair p(cfg(SchemeKind::local_rpi), cfg(scheme));
        const std::uint64_t t = kT0 + 1200;
        const auto frame = p.sender.tick_broadcast(t, kAlice, p.rng);
        p.receiver.on_receive(frame, t, {1.0, 1.0}, p.rng);
        p.receiver.on_receive(frame, t + 100, {2.0, 2.0}, p.rng);
        const auto events = p.diagnose_sender();
        ASSERT_EQ(events.size(), 1u) << to_string(scheme);
        ASSERT_TRUE(events[0].context);
        EXPECT_EQ(events[0].source, ContextSource::own_log);
        EXPECT_EQ(events[0].context->location, (GeoPoint{2.0, 2.0})) << to_string(scheme);
    }
}

TEST(Device, LocalBlurredStoresOnlyCell) {
    Pair p(cfg(SchemeKind::local_rpi), cfg(SchemeKind::local_blurred));
    p.contact(kT0 + 1200);
    ASSERT_EQ(p.receiver.local_log().size(), 1u);
    const auto center = quantize(kBob, QuantizerConfig(1000.0)).center;
    EXPECT_EQ(p.receiver.local_log()[0].location, center);
    const auto events = p.diagnose_sender();
    ASSERT_EQ(events.size(), 1u);
    ASSERT_TRUE(events[0].context);
    EXPECT_EQ(events[0].context->location, center);
    EXPECT_EQ(events[0].context->cell_m, 1000.0);
}

TEST(Device, FindMyEncryptsOncePerHeardBeacon) {
    Pair p(cfg(SchemeKind::findmy), cfg(SchemeKind::findmy));
    for (std::uint64_t t = kT0; t < kT0 + 900; t += 60) p.contact(t);
    EXPECT_EQ(p.receiver.counters().findmy_encryptions, 2u);  // two ENINs, one beacon window
    // The sender holds its master; the receiver uploads what it heard.
    auto b = p.receiver.make_diagnosis_bundle({kDay0, kDay0}, true, p.rng);
    b.receipt = 9;
    EXPECT_TRUE(b.entries.empty());
    EXPECT_EQ(b.findmy_records.size(), 2u);
    const auto events = p.sender.process_exposures(std::span(&b, 1));
    ASSERT_EQ(events.size(), 2u);
    EXPECT_EQ(events[0].scheme, SchemeKind::findmy);
    EXPECT_EQ(events[0].receipt, 9u);
    ASSERT_TRUE(events[0].context);
    EXPECT_NEAR(events[0].context->location.lat, kBob.lat, 1e-6);
}

TEST(Device, ContextOutsideToleranceDropped) {
    Pair p(cfg(SchemeKind::sym), cfg(SchemeKind::sym));
    const std::uint64_t t = kT0 + 600 * 20;
    const auto frame = p.sender.tick_broadcast(t, kAlice, p.rng);
    // Heard 12 windows late: still within tolerance.
    p.receiver.on_receive(frame, t + 600 * 12, kBob, p.rng);
    auto events = p.diagnose_sender();
    ASSERT_EQ(events.size(), 1u);
    EXPECT_TRUE(events[0].context);

    Pair q(cfg(SchemeKind::sym), cfg(SchemeKind::sym));
    const auto late = q.sender.tick_broadcast(t, kAlice, q.rng);
    q.receiver.on_receive(late, t + 600 * 13, kBob, q.rng);
    EXPECT_TRUE(q.diagnose_sender().empty());
}

TEST(Device, BundleRangeChecks) {
    Pair p(cfg(SchemeKind::sym), cfg(SchemeKind::sym));
    EXPECT_THROW(p.sender.make_diagnosis_bundle({kDay0 + 1, kDay0}, true, p.rng), ArgumentError);
    EXPECT_THROW(p.sender.make_diagnosis_bundle({kDay0, kDay0 + 1}, true, p.rng), StateError);
    const auto b = p.sender.make_diagnosis_bundle({kDay0, kDay0}, true, p.rng);
    ASSERT_EQ(b.entries.size(), 1u);
    EXPECT_FALSE(b.entries[0].consent_secret);  // sym scheme never shares a consent secret
}

TEST(Device, SnapshotRoundTripAndSealing) {
    for (auto scheme : {SchemeKind::local_rpi, SchemeKind::local_blurred, SchemeKind::findmy,
                        SchemeKind::consent, SchemeKind::asym}) {
        Pair p(cfg(scheme), cfg(scheme));
        for (std::uint64_t t = kT0; t < kT0 + 3600; t += 300) p.contact(t);
        const auto snap = p.receiver.snapshot(p.rng);
        ASSERT_GE(snap.size(), 6u);
        EXPECT_EQ(std::string(snap.begin(), snap.begin() + 4), "CEN1");

        const auto restored = Device::restore(snap, p.receiver.storage_key());
        EXPECT_EQ(restored.config(), p.receiver.config());
        EXPECT_EQ(restored.scan_log().size(), p.receiver.scan_log().size());
        EXPECT_EQ(restored.local_log().size(), p.receiver.local_log().size());
        EXPECT_EQ(restored.counters().received, p.receiver.counters().received);

        auto b = p.sender.make_diagnosis_bundle({kDay0, kDay0}, true, p.rng);
        b.receipt = 1;
        auto& holder = scheme == SchemeKind::findmy ? p.sender : p.receiver;
        if (scheme == SchemeKind::findmy) {
            b = p.receiver.make_diagnosis_bundle({kDay0, kDay0}, true, p.rng);
            b.receipt = 1;
            const auto again = Device::restore(holder.snapshot(p.rng), holder.storage_key());
            EXPECT_EQ(again.process_exposures(std::span(&b, 1)).size(),
                      holder.process_exposures(std::span(&b, 1)).size());
        } else {
            EXPECT_EQ(restored.process_exposures(std::span(&b, 1)).size(),
                      p.receiver.process_exposures(std::span(&b, 1)).size());
        }

        Key16 wrong = p.receiver.storage_key();
        wrong[0] ^= 1;
        EXPECT_THROW(Device::restore(snap, wrong), DecryptError) << to_string(scheme);
        auto bad = snap;
        bad[0] = 'X';
        EXPECT_THROW(Device::restore(bad, p.receiver.storage_key()), FormatError);
        EXPECT_THROW(Device::restore(ByteView(snap).first(snap.size() - 1), p.receiver.storage_key()),
                     Error);
    }
}

}  // namespace
}  // namespace ctxen
