#include "ctxen/device.hpp"

#include <algorithm>
#include <string>

#include "ctxen/rng.hpp"

namespace ctxen {
namespace {

constexpr std::array<std::uint8_t, 4> kSnapshotMagic{'C', 'E', 'N', '1'};
constexpr std::uint16_t kSnapshotVersion = 1;

// GAEN metadata: version 1.0, transmit power -10 dBm.
constexpr ByteArray<4> kAemMetadata{0x40, 0xf6, 0x00, 0x00};

SchemeKind kind_for_tag(SchemeTag tag, SchemeKind fallback) {
    switch (tag) {
        case SchemeTag::asymmetric: return SchemeKind::asym;
        case SchemeTag::symmetric: return SchemeKind::sym;
        case SchemeTag::consent: return SchemeKind::consent;
        case SchemeTag::blurred_consent: return SchemeKind::blurred_consent;
        case SchemeTag::none: break;
    }
    return fallback;
}

Key16 frame_id(const ScanRecord& scan) {
    if (const auto* p = std::get_if<BlePayload>(&scan.payload)) return p->rpi;
    return std::get<FindMyBeacon>(scan.payload).uuid;
}

Bytes frame_bytes(const std::variant<BlePayload, FindMyBeacon>& frame) {
    if (const auto* p = std::get_if<BlePayload>(&frame)) return assemble_payload(*p);
    const auto raw = std::get<FindMyBeacon>(frame).to_bytes();
    return Bytes(raw.begin(), raw.end());
}

std::variant<BlePayload, FindMyBeacon> parse_frame(ByteView raw) {
    if (raw.size() == FindMyBeacon::kSize) return FindMyBeacon::from_bytes(raw);
    return parse_payload(raw);
}

void write_point(ByteWriter& w, const GeoPoint& p) {
    w.f64(p.lat);
    w.f64(p.lon);
}

GeoPoint read_point(ByteReader& r) {
    GeoPoint p;
    p.lat = r.f64();
    p.lon = r.f64();
    return p;
}

}  // namespace

std::string_view to_string(SchemeKind scheme) {
    switch (scheme) {
        case SchemeKind::local_rpi: return "local_rpi";
        case SchemeKind::local_enin: return "local_enin";
        case SchemeKind::local_blurred: return "local_blurred";
        case SchemeKind::findmy: return "findmy";
        case SchemeKind::asym: return "asym";
        case SchemeKind::sym: return "sym";
        case SchemeKind::consent: return "consent";
        case SchemeKind::blurred_consent: return "blurred_consent";
    }
    return "unknown";
}

SchemeKind scheme_kind_from_string(std::string_view name) {
    for (auto k : {SchemeKind::local_rpi, SchemeKind::local_enin, SchemeKind::local_blurred,
                   SchemeKind::findmy, SchemeKind::asym, SchemeKind::sym, SchemeKind::consent,
                   SchemeKind::blurred_consent}) {
        if (to_string(k) == name) return k;
    }
    throw ArgumentError("unknown scheme '" + std::string(name) + "'");
}

bool logs_locally(SchemeKind scheme) {
    return scheme == SchemeKind::local_rpi || scheme == SchemeKind::local_enin ||
           scheme == SchemeKind::local_blurred;
}

bool uses_blur(SchemeKind scheme) {
    return scheme == SchemeKind::local_blurred || scheme == SchemeKind::blurred_consent;
}

SchemeTag broadcast_tag(SchemeKind scheme) {
    switch (scheme) {
        case SchemeKind::asym: return SchemeTag::asymmetric;
        case SchemeKind::sym: return SchemeTag::symmetric;
        case SchemeKind::consent: return SchemeTag::consent;
        case SchemeKind::blurred_consent: return SchemeTag::blurred_consent;
        default: return SchemeTag::none;
    }
}

std::string_view to_string(ContextSource source) {
    switch (source) {
        case ContextSource::own_log: return "own_log";
        case ContextSource::decrypted_peer: return "decrypted_peer";
        case ContextSource::none: return "none";
    }
    return "none";
}

ContextSource context_source_from_string(std::string_view name) {
    if (name == "own_log") return ContextSource::own_log;
    if (name == "decrypted_peer") return ContextSource::decrypted_peer;
    if (name == "none") return ContextSource::none;
    throw FormatError("unknown context source '" + std::string(name) + "'");
}

void DeviceConfig::validate() const {
    if (uses_blur(scheme) != quantizer.has_value()) {
        throw ArgumentError(std::string("scheme ") + std::string(to_string(scheme)) +
                            (quantizer ? " takes no quantizer" : " requires a quantizer"));
    }
    if (windows_per_key == 0 || kIntervalsPerDay % windows_per_key != 0) {
        throw ArgumentError("windows_per_key must divide 144");
    }
}

Device::Device(DeviceConfig config, Rng& rng) : config_(std::move(config)) {
    config_.validate();
    storage_key_ = rng.bytes<16>();
    consent_ = generate_consent_secret(rng);
    findmy_master_ = generate_master_secret(rng);
}

void Device::provision_day(Enin day_start, Rng& rng) {
    if (day_start.value % kIntervalsPerDay != 0) {
        throw AlignmentError("provision_day needs a day-aligned ENIN");
    }
    for (std::uint32_t off = 0; off < kIntervalsPerDay; off += config_.windows_per_key) {
        const Enin start{day_start.value + off};
        if (keys_.contains(start.value)) continue;
        auto key = generate_daily_key(rng, start, config_.windows_per_key);
        std::optional<ConsentSecret> consent;
        if (config_.per_day_consent) consent = generate_consent_secret(rng);
        std::optional<MasterSecret> master;
        if (config_.scheme == SchemeKind::asym) master = generate_master_secret(rng);
        keys_.try_emplace(start.value, KeyMaterial{key, RpiDeriver(key), consent, master});
    }
}

bool Device::has_key_for(Enin at) const {
    const auto it = keys_.upper_bound(at.value);
    return it != keys_.begin() && std::prev(it)->second.key.covers(at);
}

const Device::KeyMaterial& Device::material_for(Enin at) const {
    const auto it = keys_.upper_bound(at.value);
    if (it == keys_.begin() || !std::prev(it)->second.key.covers(at)) {
        throw StateError("no daily key for interval " + std::to_string(at.value));
    }
    return std::prev(it)->second;
}

const DailyKey& Device::key_for(Enin at) const { return material_for(at).key; }

const ConsentSecret& Device::consent_for(const KeyMaterial& m) const {
    return m.consent ? *m.consent : consent_;
}

Bytes Device::tick_broadcast(std::uint64_t t, const GeoPoint& own_gps, Rng& rng) {
    own_gps.checked();
    const Enin now = enin_from_unix(t);
    const auto& m = material_for(now);
    ++counters_.broadcasts;

    if (config_.scheme == SchemeKind::findmy) {
        const auto kp = RotatingKeypair::findmy(findmy_master_);
        const auto window = kp.window_at(t);
        if (!findmy_windows_) {
            findmy_windows_ = {window, window};
        } else {
            findmy_windows_->first = std::min(findmy_windows_->first, window);
            findmy_windows_->second = std::max(findmy_windows_->second, window);
        }
        const auto raw = findmy_beacon(kp, t).to_bytes();
        return Bytes(raw.begin(), raw.end());
    }

    BlePayload payload;
    const Rpi rpi = m.deriver.derive(now);
    payload.rpi = rpi.bytes;
    payload.aem = m.deriver.crypt_aem(rpi, kAemMetadata);
    payload.scheme = broadcast_tag(config_.scheme);

    switch (config_.scheme) {
        case SchemeKind::sym:
            payload.context = encrypt_symmetric(m.key, encode_context(own_gps, now), rng);
            break;
        case SchemeKind::consent:
            payload.context = encrypt_consent(m.key, consent_for(m), encode_context(own_gps, now), rng);
            break;
        case SchemeKind::blurred_consent:
            payload.context =
                encrypt_blurred_consent(m.key, consent_for(m), own_gps, now, *config_.quantizer, rng);
            break;
        case SchemeKind::asym: {
            const auto window_key = RotatingKeypair::asymmetric(*m.asym_master).at_window(now.value);
            payload.context = encrypt_asym(window_key.public_part, encode_context(own_gps, now), rng);
            break;
        }
        default:
            break;
    }
    return assemble_payload(payload);
}

void Device::log_location(const Key16& heard, Enin window, const GeoPoint& own_gps) {
    // One fix per window, last fix wins. Approach 1 keeps one entry per
    // (rpi, window); every entry of the window carries the window's fix.
    switch (config_.scheme) {
        case SchemeKind::local_rpi: {
            const auto key = std::make_pair(heard, window.value);
            if (!local_by_rpi_.contains(key)) {
                local_by_rpi_.emplace(key, local_log_.size());
                local_by_window_[window.value].push_back(local_log_.size());
                local_log_.push_back({heard, own_gps, std::nullopt, window});
            }
            for (auto idx : local_by_window_[window.value]) local_log_[idx].location = own_gps;
            break;
        }
        case SchemeKind::local_enin:
        case SchemeKind::local_blurred: {
            GeoPoint stored = own_gps;
            std::optional<double> cell;
            if (config_.scheme == SchemeKind::local_blurred) {
                const auto f = quantize(own_gps, *config_.quantizer);
                stored = f.center;
                cell = f.cell_m;
            }
            auto& slot = local_by_window_[window.value];
            if (slot.empty()) {
                slot.push_back(local_log_.size());
                local_log_.push_back({window, stored, cell, window});
            } else {
                local_log_[slot.front()].location = stored;
            }
            break;
        }
        default:
            break;
    }
}

void Device::on_receive(ByteView raw, std::uint64_t t, const GeoPoint& own_gps, Rng& rng,
                        std::optional<double> rssi) {
    own_gps.checked();
    const Enin now = enin_from_unix(t);
    ScanRecord scan;
    try {
        scan.payload = parse_frame(raw);
    } catch (const FormatError&) {
        ++counters_.unparseable;
        return;
    }
    ++counters_.received;

    const Key16 id = frame_id(scan);
    if (logs_locally(config_.scheme) && std::holds_alternative<BlePayload>(scan.payload)) {
        log_location(id, now, own_gps);
    }
    if (!seen_.emplace(id, now.value).second) {
        ++counters_.duplicates;
        return;
    }

    scan.observed_at = now;
    scan.rssi = rssi;
    if (config_.scheme == SchemeKind::local_rpi || config_.scheme == SchemeKind::local_enin ||
        config_.scheme == SchemeKind::findmy) {
        scan.own_location = own_gps;
    } else if (config_.scheme == SchemeKind::local_blurred) {
        scan.own_location = quantize(own_gps, *config_.quantizer).center;
    }

    if (config_.scheme == SchemeKind::findmy) {
        if (const auto* beacon = std::get_if<FindMyBeacon>(&scan.payload)) {
            findmy_records_.push_back({findmy_encrypt_heard(*beacon, own_gps, t, rng), now});
            ++counters_.findmy_encryptions;
        }
    }
    scans_.push_back(std::move(scan));
}

DiagnosisBundle Device::make_diagnosis_bundle(DayRange days, bool consent, Rng& rng) const {
    if (days.first_day > days.last_day) throw ArgumentError("empty day range");
    DiagnosisBundle bundle;
    bundle.device_pseudonym = rng.bytes<16>();

    if (config_.scheme == SchemeKind::findmy) {
        for (const auto& stored : findmy_records_) {
            const auto day = stored.heard_at.day();
            if (day >= days.first_day && day <= days.last_day) {
                bundle.findmy_records.push_back(stored.record);
            }
        }
        return bundle;
    }

    const bool shares_consent =
        consent && (config_.scheme == SchemeKind::consent || config_.scheme == SchemeKind::blurred_consent);
    for (std::uint32_t day = days.first_day; day <= days.last_day; ++day) {
        const Enin day_start{day * kIntervalsPerDay};
        for (std::uint32_t off = 0; off < kIntervalsPerDay; off += config_.windows_per_key) {
            const auto it = keys_.find(day_start.value + off);
            if (it == keys_.end()) {
                throw StateError("no key for day " + std::to_string(day));
            }
            const auto& m = it->second;
            DiagnosisEntry entry{m.key.day_start(), m.key.key(), std::nullopt, std::nullopt, std::nullopt};
            if (shares_consent) entry.consent_secret = consent_for(m).secret;
            if (config_.scheme == SchemeKind::asym) entry.asym_master = m.asym_master;
            if (config_.scheme == SchemeKind::blurred_consent) entry.blur_cell_m = config_.quantizer->cell_m();
            bundle.entries.push_back(entry);
        }
    }
    return bundle;
}

std::optional<ExposureContext> Device::recover_context(const ScanRecord& scan, const RpiMatch& match,
                                                       const DailyKey& key,
                                                       const DiagnosisEntry& entry,
                                                       MatchTolerance tol, SchemeKind& scheme) const {
    const auto& payload = std::get<BlePayload>(scan.payload);
    scheme = kind_for_tag(payload.scheme, config_.scheme);

    std::optional<ExposureContext> ctx;
    if (payload.scheme == SchemeTag::none) {
        if (config_.scheme == SchemeKind::local_rpi) {
            const auto it = local_by_rpi_.find({payload.rpi, scan.observed_at.value});
            if (it != local_by_rpi_.end()) {
                const auto& e = local_log_[it->second];
                ctx = ExposureContext{e.location, e.cell_m, e.stored_at};
            }
        } else if (config_.scheme == SchemeKind::local_enin || config_.scheme == SchemeKind::local_blurred) {
            const auto it = local_by_window_.find(scan.observed_at.value);
            if (it != local_by_window_.end() && !it->second.empty()) {
                const auto& e = local_log_[it->second.front()];
                ctx = ExposureContext{e.location, e.cell_m, e.stored_at};
            }
        }
    } else {
        try {
            std::optional<ContextBlob> blob;
            if (const auto* ec = std::get_if<EncryptedContext>(&payload.context)) {
                if (payload.scheme == SchemeTag::symmetric) {
                    blob = decrypt_symmetric(key, *ec);
                } else if (entry.consent_secret) {
                    blob = decrypt_consent(key, ConsentSecret{*entry.consent_secret}, *ec);
                }
            } else if (const auto* ac = std::get_if<AsymEncryptedContext>(&payload.context)) {
                if (entry.asym_master) {
                    const auto wk = RotatingKeypair::asymmetric(*entry.asym_master).at_window(match.window.value);
                    blob = decrypt_asym(wk.private_scalar, *ac);
                }
            }
            if (blob) {
                const auto decoded = decode_context(*blob);
                std::optional<double> cell;
                if (payload.scheme == SchemeTag::blurred_consent) cell = entry.blur_cell_m;
                ctx = ExposureContext{decoded.point, cell, decoded.enin};
            }
        } catch (const DecryptError&) {
        } catch (const FormatError&) {
        }
    }

    if (ctx) {
        const auto a = std::int64_t{ctx->enin.value};
        const auto b = std::int64_t{match.window.value};
        if ((a > b ? a - b : b - a) > std::int64_t{tol.intervals}) ctx.reset();
    }
    return ctx;
}

std::vector<ExposureEvent> Device::process_exposures(std::span<const DiagnosisBundle> bundles,
                                                     MatchTolerance tol) const {
    std::vector<ExposureEvent> events;
    const auto effective = effective_bundles(bundles);

    std::vector<HeardRpi> heard;
    std::vector<std::size_t> scan_index;
    for (std::size_t i = 0; i < scans_.size(); ++i) {
        if (const auto* p = std::get_if<BlePayload>(&scans_[i].payload)) {
            heard.push_back({p->rpi, scans_[i].observed_at});
            scan_index.push_back(i);
        }
    }

    for (const auto& bundle : effective) {
        for (const auto& entry : bundle.entries) {
            std::optional<DailyKey> key;
            try {
                key.emplace(entry.daily_key, entry.day_start, config_.windows_per_key);
            } catch (const Error&) {
                continue;
            }
            for (const auto& match : match_rpis(heard, *key, tol)) {
                const auto& scan = scans_[scan_index[match.heard_index]];
                ExposureEvent ev;
                ev.matched_rpi = heard[match.heard_index].rpi;
                ev.window = match.window;
                ev.day = match.window.day();
                ev.receipt = bundle.receipt;
                ev.context = recover_context(scan, match, *key, entry, tol, ev.scheme);
                if (ev.context) {
                    ev.source = ev.scheme == config_.scheme && logs_locally(config_.scheme)
                                    ? ContextSource::own_log
                                    : ContextSource::decrypted_peer;
                }
                events.push_back(ev);
            }
        }

        if (config_.scheme == SchemeKind::findmy && findmy_windows_ && !bundle.findmy_records.empty()) {
            const auto kp = RotatingKeypair::findmy(findmy_master_);
            const auto recovery =
                findmy_recover(kp, findmy_windows_->first, findmy_windows_->second, bundle.findmy_records);
            for (const auto& r : recovery.recovered) {
                ExposureEvent ev;
                ev.matched_rpi = r.uuid;
                ev.window = r.enin;
                ev.day = r.enin.day();
                ev.scheme = SchemeKind::findmy;
                ev.context = ExposureContext{r.location, std::nullopt, r.enin};
                ev.source = ContextSource::decrypted_peer;
                ev.receipt = bundle.receipt;
                events.push_back(ev);
            }
        }
    }
    return events;
}

Bytes Device::snapshot(Rng& rng) const {
    ByteWriter w;
    w.raw(kSnapshotMagic);
    w.u16(kSnapshotVersion);

    w.u8(static_cast<std::uint8_t>(config_.scheme));
    w.u8(config_.quantizer ? 1 : 0);
    if (config_.quantizer) w.f64(config_.quantizer->cell_m());
    w.u8(config_.consent_default ? 1 : 0);
    w.u8(config_.per_day_consent ? 1 : 0);
    w.u32(config_.windows_per_key);

    w.raw(consent_.secret);
    w.raw(findmy_master_);
    w.u8(findmy_windows_ ? 1 : 0);
    if (findmy_windows_) {
        w.u32(findmy_windows_->first);
        w.u32(findmy_windows_->second);
    }

    w.u32(static_cast<std::uint32_t>(keys_.size()));
    for (const auto& [start, m] : keys_) {
        w.u32(start);
        w.raw(m.key.key());
        w.u8(m.consent ? 1 : 0);
        if (m.consent) w.raw(m.consent->secret);
        w.u8(m.asym_master ? 1 : 0);
        if (m.asym_master) w.raw(*m.asym_master);
    }

    for (auto v : {counters_.broadcasts, counters_.received, counters_.duplicates,
                   counters_.unparseable, counters_.findmy_encryptions}) {
        w.u64(v);
    }

    w.u32(static_cast<std::uint32_t>(scans_.size()));
    for (const auto& s : scans_) {
        w.blob(frame_bytes(s.payload));
        w.u32(s.observed_at.value);
        w.u8(s.rssi ? 1 : 0);
        if (s.rssi) w.f64(*s.rssi);
    }

    w.u32(static_cast<std::uint32_t>(findmy_records_.size()));
    for (const auto& r : findmy_records_) {
        w.raw(r.record.to_bytes());
        w.u32(r.heard_at.value);
    }

    ByteWriter loc;
    loc.u32(static_cast<std::uint32_t>(scans_.size()));
    for (const auto& s : scans_) {
        loc.u8(s.own_location ? 1 : 0);
        if (s.own_location) write_point(loc, *s.own_location);
    }
    loc.u32(static_cast<std::uint32_t>(local_log_.size()));
    for (const auto& e : local_log_) {
        if (const auto* rpi = std::get_if<Key16>(&e.key)) {
            loc.u8(0);
            loc.raw(*rpi);
        } else {
            loc.u8(1);
            loc.u32(std::get<Enin>(e.key).value);
        }
        write_point(loc, e.location);
        loc.u8(e.cell_m ? 1 : 0);
        if (e.cell_m) loc.f64(*e.cell_m);
        loc.u32(e.stored_at.value);
    }

    const auto header = w.bytes();
    const auto nonce = rng.bytes<12>();
    w.raw(nonce);
    w.blob(crypto::aes128_gcm_seal(storage_key_, nonce, loc.bytes(), header));
    return std::move(w).take();
}

Device Device::restore(ByteView snapshot, const Key16& storage_key) {
    ByteReader r(snapshot);
    const auto magic = r.array<4>();
    if (magic != kSnapshotMagic) throw FormatError("not a device snapshot (bad magic)");
    if (const auto version = r.u16(); version != kSnapshotVersion) {
        throw FormatError("unsupported snapshot version " + std::to_string(version));
    }

    Device d;
    d.storage_key_ = storage_key;
    const auto scheme = r.u8();
    if (scheme > static_cast<std::uint8_t>(SchemeKind::blurred_consent)) {
        throw FormatError("bad scheme in snapshot");
    }
    d.config_.scheme = static_cast<SchemeKind>(scheme);
    if (r.u8() != 0) d.config_.quantizer = QuantizerConfig(r.f64());
    d.config_.consent_default = r.u8() != 0;
    d.config_.per_day_consent = r.u8() != 0;
    d.config_.windows_per_key = r.u32();
    d.config_.validate();

    d.consent_.secret = r.array<16>();
    d.findmy_master_ = r.array<32>();
    if (r.u8() != 0) {
        const auto first = r.u32();
        d.findmy_windows_ = {first, r.u32()};
    }

    const auto nkeys = r.u32();
    for (std::uint32_t i = 0; i < nkeys; ++i) {
        const auto start = r.u32();
        const DailyKey key(r.array<16>(), Enin{start}, d.config_.windows_per_key);
        std::optional<ConsentSecret> consent;
        if (r.u8() != 0) consent = ConsentSecret{r.array<16>()};
        std::optional<MasterSecret> master;
        if (r.u8() != 0) master = r.array<32>();
        d.keys_.try_emplace(start, KeyMaterial{key, RpiDeriver(key), consent, master});
    }

    d.counters_.broadcasts = r.u64();
    d.counters_.received = r.u64();
    d.counters_.duplicates = r.u64();
    d.counters_.unparseable = r.u64();
    d.counters_.findmy_encryptions = r.u64();

    const auto nscans = r.u32();
    for (std::uint32_t i = 0; i < nscans; ++i) {
        ScanRecord s;
        s.payload = parse_frame(r.blob());
        s.observed_at = Enin{r.u32()};
        if (r.u8() != 0) s.rssi = r.f64();
        d.scans_.push_back(std::move(s));
    }

    const auto nrecords = r.u32();
    for (std::uint32_t i = 0; i < nrecords; ++i) {
        auto record = FindMyRecord::from_bytes(r.raw(FindMyRecord::kSize));
        d.findmy_records_.push_back({record, Enin{r.u32()}});
    }

    const std::size_t header_size = snapshot.size() - r.remaining();
    const auto header = snapshot.first(header_size);
    const auto nonce = r.array<12>();
    const auto sealed = r.blob();
    if (!r.done()) throw FormatError("trailing bytes after snapshot");
    const auto plain = crypto::aes128_gcm_open(storage_key, nonce, sealed, header);

    ByteReader loc(plain);
    if (loc.u32() != nscans) throw FormatError("snapshot location section out of sync");
    for (auto& s : d.scans_) {
        if (loc.u8() != 0) s.own_location = read_point(loc);
    }
    const auto nlocal = loc.u32();
    for (std::uint32_t i = 0; i < nlocal; ++i) {
        LocalLogEntry e;
        if (loc.u8() == 0) {
            e.key = loc.array<16>();
        } else {
            e.key = Enin{loc.u32()};
        }
        e.location = read_point(loc);
        if (loc.u8() != 0) e.cell_m = loc.f64();
        e.stored_at = Enin{loc.u32()};
        d.local_log_.push_back(e);
    }
    d.rebuild_indexes();
    return d;
}

void Device::rebuild_indexes() {
    seen_.clear();
    for (const auto& s : scans_) seen_.emplace(frame_id(s), s.observed_at.value);
    local_by_window_.clear();
    local_by_rpi_.clear();
    for (std::size_t i = 0; i < local_log_.size(); ++i) {
        const auto& e = local_log_[i];
        local_by_window_[e.stored_at.value].push_back(i);
        if (const auto* rpi = std::get_if<Key16>(&e.key)) local_by_rpi_.emplace(std::make_pair(*rpi, e.stored_at.value), i);
    }
}

}  // namespace ctxen
