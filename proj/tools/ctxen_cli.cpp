// ctxen: command-line front end for the context-aware exposure notification
// library. Exit codes: 0 success, 1 runtime failure, 2 usage or validation.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <string>

#include <CLI11.hpp>

#include "ctxen/audit.hpp"
#include "ctxen/bench.hpp"
#include "ctxen/device.hpp"
#include "ctxen/error.hpp"
#include "ctxen/gaen.hpp"
#include "ctxen/geo.hpp"
#include "ctxen/payload.hpp"
#include "ctxen/rng.hpp"
#include "ctxen/rotating.hpp"
#include "ctxen/scenario.hpp"
#include "ctxen/schemes.hpp"
#include "ctxen/server.hpp"
#include "ctxen/sim.hpp"
#include "vectors.hpp"

namespace {

using namespace ctxen;

constexpr int kRuntime = 1;
constexpr int kUsage = 2;

class UsageError : public Error {
public:
    using Error::Error;
};

std::uint64_t seed_or_random(const std::optional<std::uint64_t>& seed) {
    if (seed) return *seed;
    std::random_device rd;
    return (std::uint64_t{rd()} << 32) | rd();
}

template <std::size_t N>
ByteArray<N> hex_arg(const std::string& name, const std::optional<std::string>& value) {
    if (!value) throw UsageError("--" + name + " is required");
    try {
        return array_from_hex<N>(*value);
    } catch (const FormatError&) {
        throw UsageError("--" + name + " must be " + std::to_string(2 * N) + " hex characters");
    }
}

SchemeTag context_scheme(const std::string& name) {
    if (name == "none") return SchemeTag::none;
    if (name == "sym") return SchemeTag::symmetric;
    if (name == "consent") return SchemeTag::consent;
    if (name == "blurred_consent") return SchemeTag::blurred_consent;
    if (name == "asym") return SchemeTag::asymmetric;
    throw UsageError("unknown scheme '" + name + "' (none, sym, consent, blurred_consent, asym)");
}

std::string fmt_deg(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.7f", v);
    return buf;
}

// Options shared by the context encryption commands.
struct CtxArgs {
    std::string scheme = "sym";
    std::optional<std::string> key;        // daily key, 32 hex
    std::optional<std::string> consent;    // consent secret, 32 hex
    std::optional<std::string> recipient;  // X25519 public key, 64 hex
    std::optional<std::string> private_key;
    double lat = 0.0;
    double lon = 0.0;
    std::uint32_t enin = 0;
    double cell_m = 1000.0;
    std::optional<std::uint64_t> seed;
};

BlePayload::Context seal(const CtxArgs& a, SchemeTag tag, Rng& rng) {
    const GeoPoint p{a.lat, a.lon};
    const Enin e{a.enin};
    const auto blob = [&] { return encode_context(p.checked(), e); };
    const auto daily = [&] { return DailyKey(hex_arg<16>("key", a.key), e.day_start()); };
    const auto cs = [&] { return ConsentSecret{hex_arg<16>("consent", a.consent)}; };
    switch (tag) {
        case SchemeTag::none:
            return std::monostate{};
        case SchemeTag::symmetric:
            return encrypt_symmetric(daily(), blob(), rng);
        case SchemeTag::consent:
            return encrypt_consent(daily(), cs(), blob(), rng);
        case SchemeTag::blurred_consent:
            return encrypt_blurred_consent(daily(), cs(), p.checked(), e, QuantizerConfig(a.cell_m), rng);
        case SchemeTag::asymmetric:
            return encrypt_asym(hex_arg<32>("recipient", a.recipient), blob(), rng);
    }
    throw UsageError("unsupported scheme");
}

// nullopt when the caller did not supply the key material for this scheme.
std::optional<DecodedContext> open(const CtxArgs& a, SchemeTag tag, const BlePayload::Context& ctx) {
    if (const auto* ec = std::get_if<EncryptedContext>(&ctx)) {
        if (!a.key) return std::nullopt;
        const DailyKey dk(hex_arg<16>("key", a.key), Enin{0});
        if (tag == SchemeTag::symmetric) return decode_context(decrypt_symmetric(dk, *ec));
        const ConsentSecret cs{a.consent ? hex_arg<16>("consent", a.consent) : Key16{}};
        return decode_context(decrypt_consent(dk, cs, *ec));
    }
    if (const auto* ac = std::get_if<AsymEncryptedContext>(&ctx)) {
        if (!a.private_key) return std::nullopt;
        return decode_context(decrypt_asym(hex_arg<32>("private", a.private_key), *ac));
    }
    return std::nullopt;
}

void print_context(const DecodedContext& c) {
    std::cout << "lat: " << fmt_deg(c.point.lat) << "\nlon: " << fmt_deg(c.point.lon) << "\nenin: " << c.enin.value
              << "\n";
}

void add_ctx_options(CLI::App* cmd, CtxArgs& a, bool sealing) {
    cmd->add_option("--scheme", a.scheme, "none, sym, consent, blurred_consent or asym");
    cmd->add_option("--key", a.key, "daily key (32 hex)");
    cmd->add_option("--consent", a.consent, "consent secret (32 hex)");
    if (sealing) {
        cmd->add_option("--recipient", a.recipient, "recipient X25519 public key (64 hex)");
        cmd->add_option("--lat", a.lat)->required();
        cmd->add_option("--lon", a.lon)->required();
        cmd->add_option("--enin", a.enin)->required();
        cmd->add_option("--cell-m", a.cell_m, "blur cell size in meters");
        cmd->add_option("--seed", a.seed, "seed for nonces and ephemeral keys");
    } else {
        cmd->add_option("--private", a.private_key, "recipient X25519 private key (64 hex)");
    }
}

int cmd_keygen(const std::string& kind, const std::optional<std::uint64_t>& seed, std::uint32_t day_start) {
    Rng rng(seed_or_random(seed), "keygen");
    if (kind == "daily") {
        std::cout << generate_daily_key(rng, Enin{day_start}).to_text() << "\n";
    } else if (kind == "consent") {
        std::cout << to_hex(generate_consent_secret(rng).secret) << "\n";
    } else if (kind == "master") {
        std::cout << to_hex(generate_master_secret(rng)) << "\n";
    } else if (kind == "asym") {
        const auto kp = asym_keypair(rng);
        std::cout << "public: " << to_hex(kp.public_key) << "\nprivate: " << to_hex(kp.private_key) << "\n";
    } else {
        throw UsageError("unknown key kind '" + kind + "' (daily, consent, master, asym)");
    }
    return 0;
}

int cmd_derive_rpis(const std::optional<std::string>& key_hex, std::uint32_t day_start) {
    const DailyKey key(hex_arg<16>("key", key_hex), Enin{day_start});
    for (const auto& r : derive_all_rpis(key)) std::cout << to_hex(r.bytes) << "\n";
    return 0;
}

int cmd_encode_payload(const CtxArgs& a, const std::string& metadata_hex) {
    const auto tag = context_scheme(a.scheme);
    const Enin e{a.enin};
    const DailyKey dk(hex_arg<16>("key", a.key), e.day_start());
    Rng rng(seed_or_random(a.seed), "encode-payload");
    BlePayload p;
    p.rpi = derive_rpi(dk, e).bytes;
    p.aem = crypt_aem(dk, derive_rpi(dk, e), hex_arg<4>("metadata", metadata_hex));
    p.scheme = tag;
    p.context = seal(a, tag, rng);
    std::cout << to_hex(assemble_payload(p)) << "\n";
    return 0;
}

int cmd_decode_payload(const CtxArgs& a, const std::string& hex) {
    const auto bytes = from_hex(hex);
    const auto p = parse_payload(bytes);
    std::cout << "bytes: " << bytes.size() << "\nrpi: " << to_hex(p.rpi) << "\naem: " << to_hex(p.aem)
              << "\nscheme: " << to_string(p.scheme) << "\n";
    if (!p.has_context()) {
        std::cout << "no context\n";
        return 0;
    }
    try {
        const auto c = open(a, p.scheme, p.context);
        if (!c) {
            std::cout << "context: encrypted\n";
            return 0;
        }
        std::cout << "context: decrypted\n";
        print_context(*c);
    } catch (const DecryptError&) {
        std::cout << "context: locked\n";
    }
    return 0;
}

int cmd_encrypt_ctx(const CtxArgs& a) {
    const auto tag = context_scheme(a.scheme);
    if (tag == SchemeTag::none) throw UsageError("encrypt-ctx needs an encrypting scheme");
    Rng rng(seed_or_random(a.seed), "encrypt-ctx");
    const auto ctx = seal(a, tag, rng);
    if (const auto* ec = std::get_if<EncryptedContext>(&ctx)) std::cout << to_hex(ec->to_bytes()) << "\n";
    if (const auto* ac = std::get_if<AsymEncryptedContext>(&ctx)) std::cout << to_hex(ac->to_bytes()) << "\n";
    return 0;
}

int cmd_decrypt_ctx(const CtxArgs& a, const std::string& hex) {
    const auto tag = context_scheme(a.scheme);
    const auto bytes = from_hex(hex);
    BlePayload::Context ctx;
    if (tag == SchemeTag::asymmetric) {
        ctx = AsymEncryptedContext::from_bytes(bytes);
    } else if (tag != SchemeTag::none) {
        ctx = EncryptedContext::from_bytes(bytes);
    } else {
        throw UsageError("decrypt-ctx needs an encrypting scheme");
    }
    const auto c = open(a, tag, ctx);
    if (!c) throw UsageError(tag == SchemeTag::asymmetric ? "--private is required" : "--key is required");
    print_context(*c);
    return 0;
}

int cmd_run(const std::string& scenario_path, const std::string& out_dir) {
    const auto sc = load_scenario(scenario_path);
    const auto report = run(sc);
    write_report(report, out_dir);
    const auto audit = audit_privacy(report);
    std::ofstream(std::filesystem::path(out_dir) / "audit.txt") << audit.table();
    std::cout << "scenario=" << sc.name << " events=" << report.total_events()
              << " disclosures=" << report.total_disclosures() << " audit=" << (audit.passed() ? "PASS" : "FAIL")
              << " out=" << out_dir << "\n";
    return audit.passed() ? 0 : kRuntime;
}

int cmd_audit(const std::string& dir) {
    const auto audit = audit_privacy(load_report(dir));
    std::cout << audit.table();
    return audit.passed() ? 0 : kRuntime;
}

int cmd_bench(std::uint64_t seed, bool json) {
    BenchOptions opts;
    opts.seed = seed;
    const auto r = bench_schemes(opts);
    if (json) {
        std::cout << r.to_json().dump(2) << "\n";
    } else {
        std::cout << r.table();
    }
    return 0;
}

int cmd_serve(const std::optional<std::string>& store, std::uint32_t retention) {
    RegistryOptions opts;
    opts.retention_days = retention;
    if (store) opts.store = *store;
    DiagnosisRegistry registry(opts);
    LineProtocolServer(registry).serve(std::cin, std::cout);
    return 0;
}

void print_error(const char* kind, const std::string& msg) { std::cerr << "error: " << kind << ": " << msg << "\n"; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Context-aware exposure notification toolkit"};
    app.require_subcommand(1);

    std::string key_kind = "daily";
    std::optional<std::uint64_t> seed;
    std::uint32_t day_start = 0;
    auto* keygen = app.add_subcommand("keygen", "generate a daily key, consent secret, master secret or asym key pair");
    keygen->add_option("--kind", key_kind, "daily, consent, master or asym");
    keygen->add_option("--seed", seed);
    keygen->add_option("--day-start", day_start, "ENIN of the day start (daily keys)");

    std::optional<std::string> rpi_key;
    auto* derive = app.add_subcommand("derive-rpis", "print the 144 RPIs of a daily key, one per window");
    derive->add_option("--key", rpi_key)->required();
    derive->add_option("--day-start", day_start)->required();

    CtxArgs enc;
    std::string metadata = "40080000";
    auto* encode = app.add_subcommand("encode-payload", "build an extended advertisement payload");
    add_ctx_options(encode, enc, true);
    encode->add_option("--metadata", metadata, "AEM plaintext (8 hex)");

    CtxArgs dec;
    std::string hex;
    auto* decode = app.add_subcommand("decode-payload", "parse a payload and open its context when keys are given");
    add_ctx_options(decode, dec, false);
    decode->add_option("--hex", hex)->required();

    CtxArgs ectx;
    auto* encrypt = app.add_subcommand("encrypt-ctx", "encrypt a location context");
    add_ctx_options(encrypt, ectx, true);

    CtxArgs dctx;
    auto* decrypt = app.add_subcommand("decrypt-ctx", "decrypt a location context");
    add_ctx_options(decrypt, dctx, false);
    decrypt->add_option("--hex", hex)->required();

    std::string scenario, out_dir, report_dir;
    auto* runc = app.add_subcommand("run", "simulate a scenario and audit the result");
    runc->add_option("--scenario", scenario)->required();
    runc->add_option("--out", out_dir)->required();

    auto* audit = app.add_subcommand("audit", "re-audit a written report directory");
    audit->add_option("--report", report_dir)->required();

    std::uint64_t bench_seed = 1;
    bool json = false;
    auto* bench = app.add_subcommand("bench", "compare scheme sizes and costs");
    bench->add_option("--seed", bench_seed);
    bench->add_flag("--json", json);

    std::string vectors_out;
    auto* vectors = app.add_subcommand("vectors", "regenerate the golden-vector files");
    vectors->add_option("--out", vectors_out)->required();

    std::optional<std::string> store;
    std::uint32_t retention = 14;
    auto* serve = app.add_subcommand("serve", "run the registry line protocol on stdin/stdout");
    serve->add_option("--store", store, "JSON-lines store, replayed on start");
    serve->add_option("--retention-days", retention);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        print_error("usage", e.what());
        return kUsage;
    }

    try {
        if (*keygen) return cmd_keygen(key_kind, seed, day_start);
        if (*derive) return cmd_derive_rpis(rpi_key, day_start);
        if (*encode) return cmd_encode_payload(enc, metadata);
        if (*decode) return cmd_decode_payload(dec, hex);
        if (*encrypt) return cmd_encrypt_ctx(ectx);
        if (*decrypt) return cmd_decrypt_ctx(dctx, hex);
        if (*runc) return cmd_run(scenario, out_dir);
        if (*audit) return cmd_audit(report_dir);
        if (*bench) return cmd_bench(bench_seed, json);
        if (*vectors) {
            tools::write_vector_files(vectors_out);
            return 0;
        }
        if (*serve) return cmd_serve(store, retention);
    } catch (const ValidationError& e) {
        for (const auto& p : e.problems()) print_error("validation", p);
        return kUsage;
    } catch (const DecryptError& e) {
        print_error("decrypt", e.what());
        return kRuntime;
    } catch (const UsageError& e) {
        print_error("usage", e.what());
        return kUsage;
    } catch (const ArgumentError& e) {
        print_error("usage", e.what());
        return kUsage;
    } catch (const FormatError& e) {
        print_error("format", e.what());
        return kUsage;
    } catch (const DomainError& e) {
        print_error("domain", e.what());
        return kUsage;
    } catch (const AlignmentError& e) {
        print_error("alignment", e.what());
        return kUsage;
    } catch (const RangeError& e) {
        print_error("range", e.what());
        return kUsage;
    } catch (const std::exception& e) {
        print_error("runtime", e.what());
        return kRuntime;
    }
    return kUsage;
}
