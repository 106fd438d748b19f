#include "vectors.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <tuple>
#include <vector>

#include "ctxen/crypto.hpp"
#include "ctxen/error.hpp"
#include "ctxen/gaen.hpp"
#include "ctxen/geo.hpp"
#include "ctxen/rotating.hpp"
#include "ctxen/schemes.hpp"

namespace ctxen::tools {
namespace {

constexpr std::uint32_t kBaseEnin = 2629728;

template <std::size_t N>
ByteArray<N> seed_bytes(std::string_view label, int i) {
    const auto digest = crypto::sha256(crypto::as_bytes("ctxen-vector-" + std::string(label) + "-" + std::to_string(i)));
    static_assert(N <= 32);
    ByteArray<N> out{};
    std::copy_n(digest.begin(), N, out.begin());
    return out;
}

struct Point {
    double lat;
    double lon;
    std::uint32_t enin;
};

const std::array<Point, 7> kPoints{{{0.0, 0.0, 0},
                                    {-90.0, -180.0, 7},
                                    {42.3601, -71.0942, kBaseEnin},
                                    {90.0, 179.999999, 4294967295u},
                                    {-33.8688, 151.2093, 2629800},
                                    {51.5007, -0.1246, 2629801},
                                    {1e-9, -1e-9, 1}}};

ContextBlob blob_of(const Point& p) { return encode_context({p.lat, p.lon}, Enin{p.enin}); }

std::string blob_hex(const Point& p) { return to_hex(blob_of(p).to_bytes()); }

void write_lines(const std::filesystem::path& file, const std::vector<std::string>& lines) {
    std::ofstream out(file, std::ios::binary);
    if (!out) throw Error("cannot write " + file.string());
    for (const auto& l : lines) out << l << '\n';
}

}  // namespace

std::string float_repr(double v) {
    char buf[64];
    const double mag = std::fabs(v);
    const bool sci = mag != 0.0 && (mag < 1e-4 || mag >= 1e16);
    auto res = std::to_chars(buf, buf + sizeof buf, v, sci ? std::chars_format::scientific : std::chars_format::fixed);
    std::string s(buf, res.ptr);
    if (!sci && s.find('.') == std::string::npos) s += ".0";
    return s;
}

void write_vector_files(const std::filesystem::path& dir) {
    std::filesystem::create_directories(dir);

    std::vector<std::string> lines;
    const Key16 zero{};
    lines.push_back(to_hex(zero) + " 0 " + to_hex(derive_rpi(DailyKey(zero, Enin{0}), Enin{0}).bytes));
    for (int i = 0; i < 24; ++i) {
        const auto key = seed_bytes<16>("tek", i);
        const Enin e{kBaseEnin + 6u * static_cast<std::uint32_t>(i)};
        lines.push_back(to_hex(key) + " " + std::to_string(e.value) + " " +
                        to_hex(derive_rpi(DailyKey(key, e.day_start()), e).bytes));
    }
    write_lines(dir / "rpi_vectors.txt", lines);

    lines.clear();
    for (const auto& p : kPoints) {
        lines.push_back(float_repr(p.lat) + " " + float_repr(p.lon) + " " + std::to_string(p.enin) + " " + blob_hex(p));
    }
    write_lines(dir / "context_blob_vectors.txt", lines);

    lines.clear();
    for (int i = 0; i < 4; ++i) {
        const auto key = seed_bytes<16>("aem-key", i);
        const auto meta = seed_bytes<4>("aem-meta", i);
        const Enin e{kBaseEnin + static_cast<std::uint32_t>(i)};
        const DailyKey dk(key, e.day_start());
        lines.push_back("aem " + to_hex(key) + " " + std::to_string(e.value) + " " + to_hex(meta) + " -> " +
                        to_hex(crypt_aem(dk, derive_rpi(dk, e), meta)));
    }
    for (int i = 0; i < 4; ++i) {
        const DailyKey dk(seed_bytes<16>("sym-key", i), Enin{0});
        const auto nonce = seed_bytes<12>("sym-nonce", i);
        const auto& p = kPoints[i % kPoints.size()];
        lines.push_back("sym " + to_hex(dk.key()) + " " + to_hex(nonce) + " " + blob_hex(p) + " -> " +
                        to_hex(fixed_nonce::seal_symmetric(dk, blob_of(p), nonce).to_bytes()));
    }
    for (int i = 0; i < 4; ++i) {
        const DailyKey dk(seed_bytes<16>("consent-key", i), Enin{0});
        const ConsentSecret cs{i ? seed_bytes<16>("consent-secret", i) : Key16{}};
        lines.push_back("consent_key " + to_hex(dk.key()) + " " + to_hex(cs.secret) + " -> " +
                        to_hex(consent_key(dk, cs)));
        const auto nonce = seed_bytes<12>("consent-nonce", i);
        const auto& p = kPoints[(i + 2) % kPoints.size()];
        lines.push_back("consent " + to_hex(dk.key()) + " " + to_hex(cs.secret) + " " + to_hex(nonce) + " " +
                        blob_hex(p) + " -> " + to_hex(fixed_nonce::seal_consent(dk, cs, blob_of(p), nonce).to_bytes()));
    }
    for (int i = 0; i < 4; ++i) {
        const auto rsk = seed_bytes<32>("asym-recipient", i);
        const auto eph = seed_bytes<32>("asym-ephemeral", i);
        const auto nonce = seed_bytes<12>("asym-nonce", i);
        const auto& p = kPoints[(i + 3) % kPoints.size()];
        lines.push_back("asym " + to_hex(rsk) + " " + to_hex(eph) + " " + to_hex(nonce) + " " + blob_hex(p) + " -> " +
                        to_hex(fixed_nonce::seal_asym(crypto::x25519_public(rsk), blob_of(p), eph, nonce).to_bytes()));
    }
    for (int i = 0; i < 4; ++i) {
        const auto master = seed_bytes<32>("findmy-master", i);
        const std::uint32_t window = 1753152 + 37u * static_cast<std::uint32_t>(i);
        const auto kp = RotatingKeypair::findmy(master);
        lines.push_back("findmy " + to_hex(master) + " " + std::to_string(window) + " -> " +
                        to_hex(findmy_uuid(kp, window)) + " " + to_hex(kp.at_window(window).public_part));
    }
    for (int i = 0; i < 4; ++i) {
        const auto master = seed_bytes<32>("asym-master", i);
        const std::uint32_t window = kBaseEnin + 11u * static_cast<std::uint32_t>(i);
        lines.push_back("asym_window " + to_hex(master) + " " + std::to_string(window) + " -> " +
                        to_hex(RotatingKeypair::asymmetric(master).at_window(window).public_part));
    }
    write_lines(dir / "scheme_vectors.txt", lines);

    lines.clear();
    const std::array<std::tuple<double, double, double>, 8> qpoints{{{42.3601, -71.0942, 200.0},
                                                                     {42.3601, -71.0942, 1000.0},
                                                                     {-33.8688, 151.2093, 200.0},
                                                                     {84.9999, 179.9999, 1000.0},
                                                                     {-84.9999, -179.9999, 1000.0},
                                                                     {0.0, 0.0, 200.0},
                                                                     {60.1699, 24.9384, 500.0},
                                                                     {35.6762, 139.6503, 100000.0}}};
    for (const auto& [lat, lon, cell] : qpoints) {
        const auto c = quantize({lat, lon}, QuantizerConfig(cell)).center;
        lines.push_back(float_repr(lat) + " " + float_repr(lon) + " " + float_repr(cell) + " " + float_repr(c.lat) +
                        " " + float_repr(c.lon));
    }
    write_lines(dir / "quantizer_vectors.txt", lines);
}

}  // namespace ctxen::tools
