#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "audio.hpp"

namespace fdh {

enum class ClockMode { RealTime, Virtual };
enum class TraceEventKind { ChunkSent, AudioReceived, TextReceived, StreamEnd };

std::string to_string(ClockMode m);
std::string to_string(TraceEventKind k);
ClockMode parse_clock_mode(std::string_view s);

struct TraceEvent {
    Milliseconds t_ms = 0;
    TraceEventKind kind = TraceEventKind::ChunkSent;
    std::int64_t payload_bytes = 0;
    std::optional<std::string> text;
    // Received samples for AudioReceived events; not serialized to the JSONL
    // (the output WAV sidecar carries the audio).
    std::vector<float> audio;

    bool operator==(const TraceEvent&) const = default;
};

struct DuplexTrace {
    std::string session_id;
    Milliseconds chunk_ms = 80;
    ClockMode clock_mode = ClockMode::RealTime;
    std::vector<TraceEvent> events;
    bool complete = true;
    std::optional<std::string> failure;  // where and why an incomplete trace stopped

    std::size_t count(TraceEventKind k) const;
    Milliseconds sent_audio_ms() const;
};

// Appends events from concurrent sender/receiver threads. Times are taken
// by the caller at I/O completion; the recorder keeps them non-decreasing.
class TraceRecorder {
public:
    explicit TraceRecorder(DuplexTrace& trace) : trace_(trace) {}
    void append(TraceEvent ev);

private:
    std::mutex mu_;
    DuplexTrace& trace_;
};

struct Placement {
    Milliseconds receive_t_ms;
    Milliseconds playback_start_ms;
    Milliseconds duration_ms;

    bool operator==(const Placement&) const = default;
};

struct OutputTimeline {
    Waveform waveform;
    std::vector<Placement> placements;
};

// Places each received audio chunk at max(receive time, end of the previous
// chunk's playback), i.e. through a playback buffer that cannot run faster
// than real time. Silence fills everything else.
OutputTimeline reconstruct_output_timeline(const DuplexTrace& trace);
std::vector<Placement> playback_placements(const DuplexTrace& trace);

// <dir>/<id>.trace.jsonl, <id>.trace.meta.json, <id>.out.wav
void save_trace(const std::filesystem::path& dir, const DuplexTrace& trace);
DuplexTrace load_trace(const std::filesystem::path& dir, const std::string& session_id);

} // namespace fdh
