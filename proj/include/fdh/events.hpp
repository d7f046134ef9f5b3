#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "manifest.hpp"
#include "timeline.hpp"

namespace fdh {

enum class EventKind {
    SuccessReply,
    MissedReply,
    EarlyInterrupt,
    SuccessInterrupt,
    FailedInterrupt,
    SuccessReplyToInterrupt,
    MissedReplyToInterrupt,
    NoiseInterrupt,
};

std::string to_string(EventKind k);
EventKind parse_event_kind(std::string_view s);

// Kinds that carry a timing: ERT, EIT, IRD and FSED respectively.
bool has_timing(EventKind k);

struct InteractionEvent {
    EventKind kind = EventKind::MissedReply;
    std::optional<int> user_segment_index;
    std::optional<int> gap_index;
    std::optional<Milliseconds> timing_ms;

    bool operator==(const InteractionEvent&) const = default;
};

enum class NoiseDenominator { AllGaps, GapsWithModelSpeech };

struct DetectorConfig {
    Milliseconds t_early_ms = 1000;
    Milliseconds t_si_max_ms = 15000;
    NoiseDenominator ni_denominator = NoiseDenominator::AllGaps;
    // Model speech may run past the end of the user audio by this much
    // before the two timelines are considered misaligned.
    Milliseconds alignment_slack_ms = 60000;
};

void validate_config(const DetectorConfig& c);

// Rate denominators contributed by one session.
struct SessionCounts {
    int non_interrupt_inquiries = 0;  // includes interrupts with nothing to interrupt
    int interrupt_inquiries = 0;      // interrupts with model speech active at onset
    int all_inquiries = 0;
    int noise_gaps = 0;

    bool operator==(const SessionCounts&) const = default;
};

struct SessionEvents {
    std::string session_id;
    std::vector<InteractionEvent> events;
    SessionCounts counts;

    bool operator==(const SessionEvents&) const = default;
};

// Aligns the user timeline of the manifest with the model's speech
// segments. For a user segment [s, e] whose successor starts at n:
//   - an interrupt is eligible only if a model segment is active at s;
//     it then yields SuccessInterrupt (that segment stops by s + t_si_max
//     and before n, IRD = stop - s) or FailedInterrupt. A successful one is
//     followed by SuccessReplyToInterrupt (model speech starting in [e, n),
//     FSED = start - e) or MissedReplyToInterrupt. EarlyInterrupt is also
//     emitted when the first model segment after s starts before
//     e - t_early.
//   - every other segment yields exactly one of SuccessReply
//     (ERT = e - start), EarlyInterrupt (EIT = e - start) or MissedReply,
//     judged on the first model segment starting in (s, n).
//   - a noise gap where model speech is active at the gap start and ends
//     inside the gap yields NoiseInterrupt.
// Throws AlignmentError when model speech extends past the session end
// plus the configured slack.
SessionEvents detect_events(const SessionManifest& manifest, const SegmentTimeline& model,
                            const DetectorConfig& config = {});

nlohmann::json to_json(const InteractionEvent& e);
InteractionEvent event_from_json(const nlohmann::json& j);
nlohmann::json to_json(const SessionCounts& c);
SessionCounts counts_from_json(const nlohmann::json& j);

// <dir>/<id>.events.jsonl and <dir>/<id>.counts.json
void save_session_events(const std::filesystem::path& dir, const SessionEvents& s);
SessionEvents load_session_events(const std::filesystem::path& dir, const std::string& session_id);
// Every session found in a directory, sorted by id.
std::vector<SessionEvents> load_all_session_events(const std::filesystem::path& dir);

} // namespace fdh
