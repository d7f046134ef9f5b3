#include "fdh/events.hpp"

#include <algorithm>
#include <array>
#include <fstream>
#include <limits>

#include "fdh/error.hpp"

namespace fdh {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<EventKind, const char*>, 8> kKindNames = {{
    {EventKind::SuccessReply, "SuccessReply"},
    {EventKind::MissedReply, "MissedReply"},
    {EventKind::EarlyInterrupt, "EarlyInterrupt"},
    {EventKind::SuccessInterrupt, "SuccessInterrupt"},
    {EventKind::FailedInterrupt, "FailedInterrupt"},
    {EventKind::SuccessReplyToInterrupt, "SuccessReplyToInterrupt"},
    {EventKind::MissedReplyToInterrupt, "MissedReplyToInterrupt"},
    {EventKind::NoiseInterrupt, "NoiseInterrupt"},
}};

constexpr Milliseconds kNever = std::numeric_limits<Milliseconds>::max();

// First model segment whose start lies in [lo, hi) (or (lo, hi) when
// open_low). Segments are sorted by start.
const Segment* first_starting_in(const std::vector<Segment>& model, Milliseconds lo, Milliseconds hi,
                                 bool open_low) {
    for (const auto& m : model) {
        const bool after_lo = open_low ? m.start_ms > lo : m.start_ms >= lo;
        if (after_lo && m.start_ms < hi) return &m;
        if (m.start_ms >= hi) break;
    }
    return nullptr;
}

const Segment* active_at(const std::vector<Segment>& model, Milliseconds t) {
    for (const auto& m : model) {
        if (m.contains(t)) return &m;
        if (m.start_ms > t) break;
    }
    return nullptr;
}

} // namespace

std::string to_string(EventKind k) {
    for (const auto& [kind, name] : kKindNames)
        if (kind == k) return name;
    return "?";
}

EventKind parse_event_kind(std::string_view s) {
    for (const auto& [kind, name] : kKindNames)
        if (s == name) return kind;
    throw ParseError("unknown event kind '" + std::string(s) + "'");
}

bool has_timing(EventKind k) {
    return k == EventKind::SuccessReply || k == EventKind::EarlyInterrupt ||
           k == EventKind::SuccessInterrupt || k == EventKind::SuccessReplyToInterrupt;
}

void validate_config(const DetectorConfig& c) {
    if (c.t_early_ms <= 0 || c.t_si_max_ms <= 0 || c.alignment_slack_ms < 0)
        throw InvalidArgument("detector thresholds must be positive");
}

SessionEvents detect_events(const SessionManifest& manifest, const SegmentTimeline& model,
                            const DetectorConfig& config) {
    validate_config(config);
    if (!satisfies_invariants(model))
        throw InvalidArgument("model timeline is not sorted, disjoint and non-empty per segment");

    Milliseconds session_end = manifest.duration_ms();
    for (const auto& u : manifest.segments) session_end = std::max(session_end, u.end_ms);
    for (const auto& g : manifest.gaps) session_end = std::max(session_end, g.end_ms);
    for (const auto& m : model.segments) {
        if (m.end_ms > session_end + config.alignment_slack_ms) {
            throw AlignmentError("model speech ends at " + std::to_string(m.end_ms) +
                                 " ms, past the session end " + std::to_string(session_end) + " ms");
        }
    }

    const auto& ms = model.segments;
    SessionEvents out;
    out.session_id = manifest.session_id;
    auto& ev = out.events;

    for (std::size_t i = 0; i < manifest.segments.size(); ++i) {
        const auto& u = manifest.segments[i];
        const int idx = static_cast<int>(i);
        const Milliseconds s = u.start_ms, e = u.end_ms;
        const Milliseconds next = i + 1 < manifest.segments.size() ? manifest.segments[i + 1].start_ms : kNever;
        ++out.counts.all_inquiries;

        const Segment* active = u.is_interrupt ? active_at(ms, s) : nullptr;
        const Segment* first = first_starting_in(ms, s, next, true);

        if (!active) {
            ++out.counts.non_interrupt_inquiries;
            if (!first) {
                ev.push_back({EventKind::MissedReply, idx, {}, {}});
            } else if (first->start_ms >= e - config.t_early_ms) {
                ev.push_back({EventKind::SuccessReply, idx, {}, e - first->start_ms});
            } else {
                ev.push_back({EventKind::EarlyInterrupt, idx, {}, e - first->start_ms});
            }
            continue;
        }

        ++out.counts.interrupt_inquiries;
        const Milliseconds stop = active->end_ms;
        if (stop <= s + config.t_si_max_ms && stop < next) {
            ev.push_back({EventKind::SuccessInterrupt, idx, {}, stop - s});
            if (const Segment* r = first_starting_in(ms, e, next, false)) {
                ev.push_back({EventKind::SuccessReplyToInterrupt, idx, {}, r->start_ms - e});
            } else {
                ev.push_back({EventKind::MissedReplyToInterrupt, idx, {}, {}});
            }
        } else {
            ev.push_back({EventKind::FailedInterrupt, idx, {}, {}});
        }
        if (first && first->start_ms < e - config.t_early_ms)
            ev.push_back({EventKind::EarlyInterrupt, idx, {}, e - first->start_ms});
    }

    for (std::size_t g = 0; g < manifest.gaps.size(); ++g) {
        const auto& gap = manifest.gaps[g];
        if (!gap.has_noise) continue;
        const Segment* m = active_at(ms, gap.start_ms);
        if (config.ni_denominator == NoiseDenominator::AllGaps || m) ++out.counts.noise_gaps;
        if (m && m->end_ms <= gap.end_ms)
            ev.push_back({EventKind::NoiseInterrupt, {}, static_cast<int>(g), {}});
    }
    return out;
}

json to_json(const InteractionEvent& e) {
    json j{{"kind", to_string(e.kind)}};
    if (e.user_segment_index) j["user_segment_index"] = *e.user_segment_index;
    if (e.gap_index) j["gap_index"] = *e.gap_index;
    if (e.timing_ms) j["timing_ms"] = *e.timing_ms;
    return j;
}

InteractionEvent event_from_json(const json& j) {
    try {
        InteractionEvent e;
        e.kind = parse_event_kind(j.at("kind").get<std::string>());
        if (j.contains("user_segment_index")) e.user_segment_index = j["user_segment_index"].get<int>();
        if (j.contains("gap_index")) e.gap_index = j["gap_index"].get<int>();
        if (j.contains("timing_ms")) e.timing_ms = j["timing_ms"].get<Milliseconds>();
        if (has_timing(e.kind) != e.timing_ms.has_value())
            throw ParseError("event " + to_string(e.kind) + ": timing presence does not match kind");
        return e;
    } catch (const json::exception& ex) {
        throw ParseError(std::string("event: ") + ex.what());
    }
}

json to_json(const SessionCounts& c) {
    return {{"non_interrupt_inquiries", c.non_interrupt_inquiries},
            {"interrupt_inquiries", c.interrupt_inquiries},
            {"all_inquiries", c.all_inquiries},
            {"noise_gaps", c.noise_gaps}};
}

SessionCounts counts_from_json(const json& j) {
    try {
        return {j.at("non_interrupt_inquiries").get<int>(), j.at("interrupt_inquiries").get<int>(),
                j.at("all_inquiries").get<int>(), j.at("noise_gaps").get<int>()};
    } catch (const json::exception& ex) {
        throw ParseError(std::string("counts: ") + ex.what());
    }
}

void save_session_events(const std::filesystem::path& dir, const SessionEvents& s) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / (s.session_id + ".events.jsonl"), std::ios::trunc);
        if (!out) throw Error("cannot write events for " + s.session_id);
        for (const auto& e : s.events) out << to_json(e).dump() << '\n';
    }
    std::ofstream out(dir / (s.session_id + ".counts.json"), std::ios::trunc);
    json j = to_json(s.counts);
    j["session_id"] = s.session_id;
    out << j.dump(2) << '\n';
}

SessionEvents load_session_events(const std::filesystem::path& dir, const std::string& session_id) {
    SessionEvents s;
    s.session_id = session_id;
    const auto events_path = dir / (session_id + ".events.jsonl");
    std::ifstream in(events_path);
    if (!in) throw ParseError("cannot open " + events_path.string());
    std::string line;
    for (int n = 1; std::getline(in, line); ++n) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            s.events.push_back(event_from_json(json::parse(line)));
        } catch (const json::parse_error& e) {
            throw ParseError(events_path.string() + ":" + std::to_string(n) + ": " + e.what());
        }
    }
    const auto counts_path = dir / (session_id + ".counts.json");
    std::ifstream cin(counts_path);
    if (!cin) throw ParseError("cannot open " + counts_path.string());
    try {
        s.counts = counts_from_json(json::parse(cin));
    } catch (const json::parse_error& e) {
        throw ParseError(counts_path.string() + ": " + e.what());
    }
    return s;
}

std::vector<SessionEvents> load_all_session_events(const std::filesystem::path& dir) {
    static constexpr std::string_view kSuffix = ".events.jsonl";
    std::vector<std::string> ids;
    for (const auto& entry : std::filesystem::directory_iterator(dir)) {
        const auto name = entry.path().filename().string();
        if (name.size() > kSuffix.size() && name.ends_with(kSuffix))
            ids.push_back(name.substr(0, name.size() - kSuffix.size()));
    }
    std::sort(ids.begin(), ids.end());
    std::vector<SessionEvents> out;
    for (const auto& id : ids) out.push_back(load_session_events(dir, id));
    return out;
}

} // namespace fdh
