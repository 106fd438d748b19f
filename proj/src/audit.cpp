#include "ctxen/audit.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

namespace ctxen {
namespace {

// Agent positions at every simulated tick, recomputed from the traces.
class Timeline {
public:
    explicit Timeline(const Scenario& sc) : sc_(sc) {
        for (std::uint64_t t = sc.start_unix; t < sc.start_unix + sc.duration_s; t += sc.tick_s) ticks_.push_back(t);
        pos_.resize(sc.agents.size());
        for (std::size_t a = 0; a < sc.agents.size(); ++a) {
            pos_[a].reserve(ticks_.size());
            for (auto t : ticks_) pos_[a].push_back(sc.agents[a].trace.at(t - sc.start_unix));
        }
    }

    std::size_t ticks() const { return ticks_.size(); }
    std::uint64_t time(std::size_t k) const { return ticks_[k]; }
    const GeoPoint& at(std::size_t agent, std::size_t k) const { return pos_[agent][k]; }

    /// Tick indices [first, last) inside window e.
    std::pair<std::size_t, std::size_t> window(Enin e) const {
        const std::uint64_t lo = std::uint64_t{e.value} * kSecondsPerInterval;
        const std::uint64_t hi = lo + kSecondsPerInterval;
        const auto first = std::lower_bound(ticks_.begin(), ticks_.end(), lo) - ticks_.begin();
        const auto last = std::lower_bound(ticks_.begin(), ticks_.end(), hi) - ticks_.begin();
        return {static_cast<std::size_t>(first), static_cast<std::size_t>(last)};
    }

    /// Smallest distance from p to the agent's positions during window e.
    double min_distance(std::size_t agent, Enin e, const GeoPoint& p) const {
        const auto [first, last] = window(e);
        double best = INFINITY;
        for (auto k = first; k < last; ++k) best = std::min(best, haversine_m(pos_[agent][k], p));
        return best;
    }

private:
    const Scenario& sc_;
    std::vector<std::uint64_t> ticks_;
    std::vector<std::vector<GeoPoint>> pos_;
};

struct Uploaded {
    std::uint64_t receipt = 0;
    std::uint32_t first_day = 0;
    std::uint32_t last_day = 0;
};

std::int64_t gap(std::uint32_t a, std::uint32_t b) {
    return std::abs(std::int64_t{a} - std::int64_t{b});
}

class Auditor {
public:
    Auditor(const SimulationReport& r, const AuditOptions& o) : r_(r), o_(o), tl_(r.scenario) {
        for (const auto& c : r.ground_truth.contacts) by_pair_[{c.a, c.b}].push_back(&c);
        for (const auto& u : r.uploads) {
            if (u.receipt != 0) uploaded_[u.agent] = {u.receipt, u.first_day, u.last_day};
        }
    }

    AuditResult run() {
        AuditResult out;
        disclosure_checks(out);
        consent_check(out);
        plaintext_check(out);
        event_checks(out);
        std::stable_sort(out.checks.begin(), out.checks.end(), [](const auto& x, const auto& y) {
            return rank(x.id) < rank(y.id);
        });
        return out;
    }

private:
    static int rank(const std::string& id) {
        static const std::vector<std::string> order{"a", "b", "c", "d", "e", "soundness", "completeness", "wall"};
        return static_cast<int>(std::find(order.begin(), order.end(), id) - order.begin());
    }

    const std::vector<const Contact*>& contacts(std::uint32_t x, std::uint32_t y) const {
        static const std::vector<const Contact*> none;
        const auto it = by_pair_.find({std::min(x, y), std::max(x, y)});
        return it == by_pair_.end() ? none : it->second;
    }

    // In-range (wall=false) or wall-only (wall=true) contact between x and y
    // within the tolerance of window e.
    bool met(std::uint32_t x, std::uint32_t y, Enin e, bool wall) const {
        for (const auto* c : contacts(x, y)) {
            if (c->via_wall == wall && gap(enin_from_unix(c->t).value, e.value) <= r_.scenario.tolerance) {
                return true;
            }
        }
        return false;
    }

    double slack(const ExposureContext& ctx) const {
        return (ctx.cell_m ? blur_bound_m(*ctx.cell_m) : 0.0) + o_.codec_slack_m;
    }

    void disclosure_checks(AuditResult& out) {
        std::size_t total = 0, matched = 0, blurred = 0, blurred_ok = 0, own = 0, peer = 0;
        std::size_t wall_only = 0;
        std::vector<std::string> a_fail, b_fail, e_fail, wall_notes;

        for (std::uint32_t h = 0; h < r_.agents.size(); ++h) {
            for (const auto& ev : r_.agents[h].events) {
                if (!ev.context) continue;
                ++total;
                const auto& ctx = *ev.context;
                const auto u = r_.uploader_of(ev.receipt);
                const std::string who = r_.agents[h].id + "<-" + (u ? r_.agents[*u].id : std::string("?"));
                if (!u) {
                    a_fail.push_back(who + " receipt " + std::to_string(ev.receipt) + " has no uploader");
                    e_fail.push_back(who + " unattributed");
                    continue;
                }
                const bool own_log = ev.source == ContextSource::own_log;
                const std::uint32_t party = own_log ? h : *u;
                const bool explained = tl_.min_distance(party, ctx.enin, ctx.location) <= slack(ctx);
                own += own_log && explained ? 1 : 0;
                peer += !own_log && explained ? 1 : 0;

                if (explained && met(h, *u, ctx.enin, false)) {
                    ++matched;
                } else if (explained && met(h, *u, ctx.enin, true)) {
                    ++wall_only;
                    if (wall_notes.size() < 4) {
                        const auto [first, last] = tl_.window(ctx.enin);
                        const double apart = first < last ? tl_.min_distance(h, ctx.enin, ctx.location) : NAN;
                        std::ostringstream s;
                        s.precision(1);
                        s << std::fixed << who << " disclosed location " << apart << " m from holder";
                        wall_notes.push_back(s.str());
                    }
                } else {
                    a_fail.push_back(who + " at interval " + std::to_string(ctx.enin.value) +
                                     (explained ? " without an encounter" : " not at the uploader's position"));
                }

                if (!explained) {
                    std::string culprits;
                    for (std::uint32_t x = 0; x < r_.agents.size(); ++x) {
                        if (tl_.min_distance(x, ctx.enin, ctx.location) <= slack(ctx)) {
                            culprits += (culprits.empty() ? "" : ",") + r_.agents[x].id;
                        }
                    }
                    e_fail.push_back(who + " localizes " + (culprits.empty() ? std::string("nobody") : culprits));
                }

                if (ctx.cell_m) {
                    ++blurred;
                    bool ok = false;
                    try {
                        const auto snapped = quantize(ctx.location, QuantizerConfig(*ctx.cell_m)).center;
                        ok = haversine_m(snapped, ctx.location) <= 0.05 &&
                             tl_.min_distance(party, ctx.enin, ctx.location) <= blur_bound_m(*ctx.cell_m) + 0.05;
                    } catch (const Error&) {
                    }
                    if (ok) {
                        ++blurred_ok;
                    } else {
                        b_fail.push_back(who + " at interval " + std::to_string(ctx.enin.value));
                    }
                }
            }
        }

        out.checks.push_back({"a", "disclosures match encounters with the diagnosed",
                              a_fail.empty() ? Verdict::pass : Verdict::fail,
                              a_fail.empty() ? std::to_string(matched) + "/" + std::to_string(total - wall_only) +
                                                   " disclosures matched, " + std::to_string(wall_only) +
                                                   " explained only by a wall pair"
                                             : std::to_string(a_fail.size()) + " unmatched, first: " + a_fail[0]});
        out.checks.push_back({"b", "blurred disclosures are cell centers within bound",
                              b_fail.empty() ? Verdict::pass : Verdict::fail,
                              b_fail.empty() ? std::to_string(blurred_ok) + "/" + std::to_string(blurred) +
                                                   " blurred disclosures within bound"
                                             : std::to_string(b_fail.size()) + " outside, first: " + b_fail[0]});
        out.checks.push_back({"e", "union of disclosures localizes only the diagnosed",
                              e_fail.empty() ? Verdict::pass : Verdict::fail,
                              e_fail.empty() ? std::to_string(peer) + " attributed to uploaders, " +
                                                   std::to_string(own) + " to the holder's own log"
                                             : std::to_string(e_fail.size()) + " unattributed, first: " + e_fail[0]});

        std::string notes = std::to_string(wall_only) + " wall-pair disclosures";
        for (const auto& n : wall_notes) notes += "; " + n;
        out.checks.push_back({"wall", "wall-pair false positives (informational)", Verdict::info, notes});
    }

    void consent_check(AuditResult& out) {
        // (receipt, day) pairs whose consent secret was never shared or later revoked.
        std::set<std::pair<std::uint64_t, std::uint32_t>> withheld;
        for (const auto& u : r_.uploads) {
            const auto scheme = r_.agents[u.agent].scheme;
            const bool consent_scheme = scheme == SchemeKind::consent || scheme == SchemeKind::blurred_consent;
            if (u.receipt == 0 || u.consent || !consent_scheme) continue;
            for (auto d = u.first_day; d <= u.last_day; ++d) withheld.insert({u.receipt, d});
        }
        for (const auto& v : r_.revocations) {
            if (v.receipt == 0) continue;
            for (auto d : v.days) withheld.insert({v.receipt, d});
        }
        if (withheld.empty()) {
            out.checks.push_back({"c", "withheld consent leaves events without locations", Verdict::pass,
                                  "no consent withheld or revoked"});
            return;
        }
        std::size_t events = 0, located = 0;
        for (const auto& a : r_.agents) {
            for (const auto& ev : a.events) {
                if (!withheld.contains({ev.receipt, ev.day})) continue;
                ++events;
                located += ev.context ? 1 : 0;
            }
        }
        out.checks.push_back({"c", "withheld consent leaves events without locations",
                              located == 0 ? Verdict::pass : Verdict::fail,
                              "events=" + std::to_string(events) + " locations=" + std::to_string(located) +
                                  " over " + std::to_string(withheld.size()) + " withheld key-days"});
    }

    void plaintext_check(AuditResult& out) {
        // Positions a report may legitimately reveal: both parties during any
        // window in which they met a diagnosed uploader on an uploaded day.
        std::set<std::pair<double, double>> allowed;
        for (const auto& c : r_.ground_truth.contacts) {
            bool disclosable = false;
            for (const auto x : {c.a, c.b}) {
                const auto it = uploaded_.find(x);
                const auto day = static_cast<std::uint32_t>(c.t / kSecondsPerDay);
                if (it != uploaded_.end() && day >= it->second.first_day && day <= it->second.last_day) {
                    disclosable = true;
                }
            }
            if (!disclosable) continue;
            const auto [first, last] = tl_.window(enin_from_unix(c.t));
            for (auto k = first; k < last; ++k) {
                for (const auto x : {c.a, c.b}) allowed.insert({tl_.at(x, k).lat, tl_.at(x, k).lon});
            }
        }

        std::map<std::pair<double, double>, std::pair<std::uint32_t, std::uint64_t>> every;
        for (std::uint32_t a = 0; a < r_.agents.size(); ++a) {
            for (std::size_t k = 0; k < tl_.ticks(); ++k) {
                every.try_emplace({tl_.at(a, k).lat, tl_.at(a, k).lon}, a, tl_.time(k));
            }
        }
        decltype(every) hidden;
        for (const auto& [p, origin] : every) {
            if (!allowed.contains(p)) hidden.emplace(p, origin);
        }

        const auto all_binary = binary_needles(every);
        const auto hidden_binary = binary_needles(hidden);
        std::size_t files = 0, bytes = 0;
        std::vector<std::string> hits;
        for (const auto& [name, data] : serialized_outputs(r_)) {
            ++files;
            bytes += data.size();
            // Device state must not hold any raw coordinate in the clear.
            const bool snapshot = name.rfind("snapshots/", 0) == 0;
            const auto& binary = snapshot ? all_binary : hidden_binary;
            const auto& points = snapshot ? every : hidden;
            if (const auto hit = scan_binary(data, binary)) hits.push_back(name + ": " + describe(*hit));
            if (const auto hit = scan_text(data, points)) hits.push_back(name + ": " + describe(*hit) + " as text");
        }
        out.checks.push_back({"d", "no plaintext coordinates in serialized state",
                              hits.empty() ? Verdict::pass : Verdict::fail,
                              hits.empty() ? "scanned " + std::to_string(files) + " files, " + std::to_string(bytes) +
                                                 " bytes, " + std::to_string(every.size()) + " positions, 0 hits"
                                           : std::to_string(hits.size()) + " hits, first: " + hits[0]});
    }

    using Origin = std::pair<std::uint32_t, std::uint64_t>;
    using NeedleMap = std::map<std::pair<double, double>, Origin>;

    std::string describe(const Origin& o) const {
        return "position of " + r_.agents[o.first].id + " at t=" + std::to_string(o.second);
    }

    static std::uint64_t word(const std::uint8_t* p) {
        std::uint64_t w;
        std::memcpy(&w, p, 8);
        return w;
    }

    static std::unordered_map<std::uint64_t, Origin> binary_needles(const NeedleMap& points) {
        std::unordered_map<std::uint64_t, Origin> out;
        auto add = [&](const ByteArray<8>& b, const Origin& o) { out.emplace(word(b.data()), o); };
        for (const auto& [p, o] : points) {
            for (const double v : {p.first, p.second}) {
                ByteArray<8> le{};
                std::memcpy(le.data(), &v, 8);
                if constexpr (std::endian::native == std::endian::big) std::reverse(le.begin(), le.end());
                auto be = le;
                std::reverse(be.begin(), be.end());
                add(le, o);
                add(be, o);
            }
            const auto blob = encode_context({p.first, p.second}, Enin{0}).to_bytes();
            ByteArray<8> codes{};
            std::copy_n(blob.begin(), 8, codes.begin());
            add(codes, o);
            ByteArray<8> swapped{};
            for (int i = 0; i < 4; ++i) {
                swapped[i] = codes[3 - i];
                swapped[4 + i] = codes[7 - i];
            }
            add(swapped, o);
        }
        return out;
    }

    static std::optional<Origin> scan_binary(const std::string& data,
                                             const std::unordered_map<std::uint64_t, Origin>& needles) {
        const auto* p = reinterpret_cast<const std::uint8_t*>(data.data());
        for (std::size_t i = 0; i + 8 <= data.size(); ++i) {
            const auto it = needles.find(word(p + i));
            if (it != needles.end()) return it->second;
        }
        return std::nullopt;
    }

    // Decimal numbers in order of appearance; a leak is a coordinate pair
    // printed as two consecutive numbers, in either order.
    std::optional<Origin> scan_text(const std::string& data, const NeedleMap& points) const {
        std::vector<double> numbers;
        for (std::size_t i = 0; i < data.size();) {
            const char c = data[i];
            const bool starts = std::isdigit(static_cast<unsigned char>(c)) ||
                                (c == '-' && i + 1 < data.size() && std::isdigit(static_cast<unsigned char>(data[i + 1])));
            const bool boundary = i == 0 || !(std::isalnum(static_cast<unsigned char>(data[i - 1])) || data[i - 1] == '.');
            if (starts && boundary) {
                std::size_t j = i + 1;
                bool dot = false;
                while (j < data.size() && (std::isdigit(static_cast<unsigned char>(data[j])) || data[j] == '.' ||
                                           data[j] == 'e' || data[j] == 'E' ||
                                           ((data[j] == '-' || data[j] == '+') && (data[j - 1] == 'e' || data[j - 1] == 'E')))) {
                    dot = dot || data[j] == '.';
                    ++j;
                }
                if (dot) numbers.push_back(std::strtod(data.substr(i, j - i).c_str(), nullptr));
                i = j;
            } else {
                ++i;
            }
        }
        const double tol = o_.text_tolerance_deg;
        for (std::size_t k = 0; k + 1 < numbers.size(); ++k) {
            for (const auto& [x, y] : {std::pair{numbers[k], numbers[k + 1]}, std::pair{numbers[k + 1], numbers[k]}}) {
                for (auto it = points.lower_bound({x - tol, -INFINITY}); it != points.end() && it->first.first <= x + tol; ++it) {
                    if (std::abs(it->first.second - y) <= tol) return it->second;
                }
            }
        }
        return std::nullopt;
    }

    void event_checks(AuditResult& out) {
        std::size_t sound = 0, wall = 0;
        std::vector<std::string> unsound;
        for (std::uint32_t h = 0; h < r_.agents.size(); ++h) {
            for (const auto& ev : r_.agents[h].events) {
                const auto u = r_.uploader_of(ev.receipt);
                if (u && met(h, *u, ev.window, false)) {
                    ++sound;
                } else if (u && met(h, *u, ev.window, true)) {
                    ++wall;
                } else {
                    unsound.push_back(r_.agents[h].id + " at interval " + std::to_string(ev.window.value));
                }
            }
        }
        out.checks.push_back({"soundness", "every event has a ground-truth encounter",
                              unsound.empty() ? Verdict::pass : Verdict::fail,
                              unsound.empty() ? std::to_string(sound) + " events from encounters, " +
                                                    std::to_string(wall) + " via wall pairs"
                                              : std::to_string(unsound.size()) + " without encounter, first: " + unsound[0]});

        // Every full window in range of a diagnosed uploader yields an event.
        const std::uint32_t per_window = kSecondsPerInterval / r_.scenario.tick_s;
        std::size_t windows = 0;
        std::vector<std::string> missed;
        for (const auto& [u, up] : uploaded_) {
            for (std::uint32_t h = 0; h < r_.agents.size(); ++h) {
                if (h == u) continue;
                const bool fm_h = r_.agents[h].scheme == SchemeKind::findmy;
                const bool fm_u = r_.agents[u].scheme == SchemeKind::findmy;
                if (fm_h != fm_u) continue;
                std::map<std::uint32_t, std::uint32_t> ticks_in_window;
                for (const auto* c : contacts(h, u)) {
                    const auto day = static_cast<std::uint32_t>(c->t / kSecondsPerDay);
                    if (!c->via_wall && day >= up.first_day && day <= up.last_day) {
                        ++ticks_in_window[enin_from_unix(c->t).value];
                    }
                }
                for (const auto& [w, n] : ticks_in_window) {
                    if (n < per_window) continue;
                    ++windows;
                    const auto& evs = r_.agents[h].events;
                    const bool found = std::any_of(evs.begin(), evs.end(), [&](const ExposureEvent& ev) {
                        return ev.receipt == up.receipt && gap(ev.window.value, w) <= r_.scenario.tolerance;
                    });
                    if (!found) missed.push_back(r_.agents[h].id + "<-" + r_.agents[u].id + " at interval " + std::to_string(w));
                }
            }
        }
        const bool lossless = r_.scenario.channel.drop_prob == 0.0;
        out.checks.push_back({"completeness", "full-window encounters with the diagnosed yield events",
                              missed.empty() ? Verdict::pass : (lossless ? Verdict::fail : Verdict::info),
                              std::to_string(windows - missed.size()) + "/" + std::to_string(windows) +
                                  " full windows notified" + (missed.empty() ? "" : ", first miss: " + missed[0])});
    }

    const SimulationReport& r_;
    const AuditOptions& o_;
    Timeline tl_;
    std::map<std::pair<std::uint32_t, std::uint32_t>, std::vector<const Contact*>> by_pair_;
    std::map<std::uint32_t, Uploaded> uploaded_;
};

}  // namespace

std::string_view to_string(Verdict v) {
    switch (v) {
        case Verdict::pass: return "PASS";
        case Verdict::fail: return "FAIL";
        case Verdict::info: return "INFO";
    }
    return "?";
}

bool AuditResult::passed() const {
    return std::none_of(checks.begin(), checks.end(), [](const auto& c) { return c.verdict == Verdict::fail; });
}

const AuditCheck& AuditResult::check(std::string_view id) const {
    for (const auto& c : checks) {
        if (c.id == id) return c;
    }
    throw ArgumentError("no audit check '" + std::string(id) + "'");
}

std::string AuditResult::table() const {
    std::ostringstream s;
    char line[160];
    std::snprintf(line, sizeof line, "%-13s %-52s %-7s %s\n", "check", "property", "verdict", "evidence");
    s << line;
    for (const auto& c : checks) {
        std::snprintf(line, sizeof line, "%-13s %-52s %-7s ", c.id.c_str(), c.title.c_str(),
                      std::string(to_string(c.verdict)).c_str());
        s << line << c.evidence << '\n';
    }
    s << "overall: " << (passed() ? "PASS" : "FAIL") << '\n';
    return s.str();
}

AuditResult audit_privacy(const SimulationReport& report, const AuditOptions& options) {
    return Auditor(report, options).run();
}

}  // namespace ctxen
