#pragma once

#include <random>

#include "fdh/events.hpp"
#include "fdh/manifest.hpp"
#include "fdh/timeline.hpp"

namespace test {

struct UserSpec {
    fdh::Milliseconds start, end;
    bool interrupt = false;
    std::vector<fdh::InterruptType> types = {};
};

inline fdh::SessionManifest manifest_of(const std::vector<UserSpec>& users, fdh::Milliseconds duration,
                                        const std::vector<std::pair<fdh::Milliseconds, fdh::Milliseconds>>& noise_gaps = {}) {
    fdh::SessionManifest m;
    m.session_id = "t";
    m.duration_samples = fdh::ms_to_samples(duration);
    for (const auto& u : users) {
        fdh::UserSegment s;
        s.start_ms = u.start;
        s.end_ms = u.end;
        s.start_sample = fdh::ms_to_samples(u.start);
        s.end_sample = fdh::ms_to_samples(u.end);
        s.is_interrupt = u.interrupt;
        s.interrupt_types = u.types;
        m.segments.push_back(s);
    }
    for (const auto& [a, b] : noise_gaps) {
        fdh::GapSpan g;
        g.start_ms = a;
        g.end_ms = b;
        g.start_sample = fdh::ms_to_samples(a);
        g.end_sample = fdh::ms_to_samples(b);
        g.has_noise = true;
        m.gaps.push_back(g);
    }
    return m;
}

inline fdh::SegmentTimeline model_of(std::vector<fdh::Segment> segs) {
    return {fdh::Channel::Model, std::move(segs)};
}

struct RandomCase {
    fdh::SessionManifest manifest;
    fdh::SegmentTimeline model;
};

// Random user session (segments separated by gaps, some interrupts, some
// noisy gaps) and a random model timeline over the same span.
inline RandomCase random_case(std::mt19937_64& rng) {
    using fdh::Milliseconds;
    auto uni = [&](Milliseconds lo, Milliseconds hi) {
        return std::uniform_int_distribution<Milliseconds>(lo, hi)(rng);
    };
    RandomCase c;
    auto& m = c.manifest;
    m.session_id = "rand";
    Milliseconds t = uni(0, 3000);
    const int n = static_cast<int>(uni(1, 9));
    for (int i = 0; i < n; ++i) {
        fdh::UserSegment s;
        s.start_ms = t;
        s.end_ms = t + uni(200, 6000);
        s.start_sample = fdh::ms_to_samples(s.start_ms);
        s.end_sample = fdh::ms_to_samples(s.end_ms);
        s.is_interrupt = i > 0 && uni(0, 1) == 1;
        if (s.is_interrupt) {
            s.interrupt_types.push_back(fdh::kAllInterruptTypes[static_cast<std::size_t>(uni(0, 4))]);
            if (uni(0, 3) == 0) {
                auto second = fdh::kAllInterruptTypes[static_cast<std::size_t>(uni(0, 4))];
                if (second != s.interrupt_types[0]) s.interrupt_types.push_back(second);
            }
        }
        m.segments.push_back(s);
        t = s.end_ms;
        if (i + 1 < n) {
            fdh::GapSpan g;
            g.start_ms = t;
            g.end_ms = t + uni(500, 10000);
            g.start_sample = fdh::ms_to_samples(g.start_ms);
            g.end_sample = fdh::ms_to_samples(g.end_ms);
            g.has_noise = uni(0, 1) == 1;
            m.gaps.push_back(g);
            t = g.end_ms;
        }
    }
    const Milliseconds end = t + uni(0, 5000);
    m.duration_samples = fdh::ms_to_samples(end);

    Milliseconds mt = uni(-500, 2000);
    while (mt < end + 5000) {
        const Milliseconds len = uni(1, 9000);
        if (mt + len > end + 20000) break;
        c.model.segments.push_back({mt, mt + len});
        mt += len + uni(1, 6000);
    }
    c.model.channel = fdh::Channel::Model;
    return c;
}

inline RandomCase shifted(const RandomCase& c, fdh::Milliseconds d) {
    RandomCase out = c;
    for (auto& s : out.manifest.segments) {
        s.start_ms += d;
        s.end_ms += d;
        s.start_sample += fdh::ms_to_samples(d);
        s.end_sample += fdh::ms_to_samples(d);
    }
    for (auto& g : out.manifest.gaps) {
        g.start_ms += d;
        g.end_ms += d;
        g.start_sample += fdh::ms_to_samples(d);
        g.end_sample += fdh::ms_to_samples(d);
    }
    out.manifest.duration_samples += fdh::ms_to_samples(d);
    for (auto& s : out.model.segments) {
        s.start_ms += d;
        s.end_ms += d;
    }
    return out;
}

struct InvariantReport {
    bool ok = true;
    std::string detail;
};

// Checks the classification-count and sign rules against an independent
// reading of which segments are interrupt-eligible.
inline InvariantReport check_event_invariants(const RandomCase& c, const fdh::SessionEvents& ev,
                                              const fdh::DetectorConfig& cfg) {
    using fdh::EventKind;
    InvariantReport r;
    auto fail = [&](const std::string& why) {
        if (r.ok) r.detail = why;
        r.ok = false;
    };
    const auto& segs = c.manifest.segments;
    for (std::size_t i = 0; i < segs.size(); ++i) {
        bool eligible = false;
        if (segs[i].is_interrupt)
            for (const auto& m : c.model.segments)
                if (m.start_ms <= segs[i].start_ms && segs[i].start_ms < m.end_ms) eligible = true;
        std::map<EventKind, int> n;
        for (const auto& e : ev.events)
            if (e.user_segment_index == static_cast<int>(i)) ++n[e.kind];
        const std::string at = "segment " + std::to_string(i) + ": ";
        if (eligible) {
            if (n[EventKind::SuccessInterrupt] + n[EventKind::FailedInterrupt] != 1) fail(at + "needs one SI/FI");
            if (n[EventKind::SuccessReplyToInterrupt] + n[EventKind::MissedReplyToInterrupt] != n[EventKind::SuccessInterrupt])
                fail(at + "each SI needs one SRI/MRI");
            if (n[EventKind::SuccessReply] + n[EventKind::MissedReply] != 0) fail(at + "eligible interrupt got a reply event");
            if (n[EventKind::EarlyInterrupt] > 1) fail(at + "more than one EI");
        } else {
            if (n[EventKind::SuccessReply] + n[EventKind::EarlyInterrupt] + n[EventKind::MissedReply] != 1)
                fail(at + "needs exactly one SR/EI/MR");
            if (n[EventKind::SuccessInterrupt] + n[EventKind::FailedInterrupt] + n[EventKind::SuccessReplyToInterrupt] +
                    n[EventKind::MissedReplyToInterrupt] != 0)
                fail(at + "non-eligible segment got interrupt events");
        }
    }
    for (const auto& e : ev.events) {
        if (fdh::has_timing(e.kind) != e.timing_ms.has_value()) fail("timing presence wrong for " + fdh::to_string(e.kind));
        if (!e.timing_ms) continue;
        const auto v = *e.timing_ms;
        switch (e.kind) {
        case EventKind::SuccessInterrupt:
            if (v < 0) fail("negative IRD");
            break;
        case EventKind::SuccessReplyToInterrupt:
            if (v < 0) fail("negative FSED");
            break;
        case EventKind::SuccessReply:
            if (v > cfg.t_early_ms) fail("ERT above the early threshold");
            break;
        case EventKind::EarlyInterrupt:
            if (v <= cfg.t_early_ms) fail("EIT not above the early threshold");
            break;
        default: break;
        }
    }
    int eligible_total = 0;
    for (const auto& e : ev.events)
        if (e.kind == EventKind::SuccessInterrupt || e.kind == EventKind::FailedInterrupt) ++eligible_total;
    if (ev.counts.interrupt_inquiries != eligible_total) fail("interrupt denominator mismatch");
    if (ev.counts.all_inquiries != static_cast<int>(segs.size())) fail("inquiry denominator mismatch");
    if (ev.counts.non_interrupt_inquiries + ev.counts.interrupt_inquiries != ev.counts.all_inquiries)
        fail("denominators do not add up");
    return r;
}

} // namespace test
