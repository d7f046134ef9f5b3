#include "fdh/trace.hpp"

#include <algorithm>
#include <fstream>

#include "fdh/error.hpp"
#include "json.hpp"

namespace fdh {

using nlohmann::json;

std::string to_string(ClockMode m) {
    return m == ClockMode::RealTime ? "real" : "virtual";
}

std::string to_string(TraceEventKind k) {
    switch (k) {
    case TraceEventKind::ChunkSent: return "ChunkSent";
    case TraceEventKind::AudioReceived: return "AudioReceived";
    case TraceEventKind::TextReceived: return "TextReceived";
    case TraceEventKind::StreamEnd: return "StreamEnd";
    }
    return "?";
}

namespace {

TraceEventKind parse_kind(const std::string& s) {
    for (auto k : {TraceEventKind::ChunkSent, TraceEventKind::AudioReceived,
                   TraceEventKind::TextReceived, TraceEventKind::StreamEnd}) {
        if (to_string(k) == s) return k;
    }
    throw ParseError("unknown trace event kind '" + s + "'");
}

std::int64_t event_samples(const TraceEvent& ev) {
    return ev.audio.empty() ? ev.payload_bytes / 2 : static_cast<std::int64_t>(ev.audio.size());
}

} // namespace

ClockMode parse_clock_mode(std::string_view s) {
    if (s == "real" || s == "realtime") return ClockMode::RealTime;
    if (s == "virtual") return ClockMode::Virtual;
    throw InvalidArgument("unknown clock mode '" + std::string(s) + "'");
}

std::size_t DuplexTrace::count(TraceEventKind k) const {
    return static_cast<std::size_t>(
        std::count_if(events.begin(), events.end(), [k](const TraceEvent& e) { return e.kind == k; }));
}

Milliseconds DuplexTrace::sent_audio_ms() const {
    std::int64_t bytes = 0;
    for (const auto& e : events) {
        if (e.kind == TraceEventKind::ChunkSent) bytes += e.payload_bytes;
    }
    return samples_to_ms(bytes / 2);
}

void TraceRecorder::append(TraceEvent ev) {
    std::lock_guard lock(mu_);
    if (!trace_.events.empty()) ev.t_ms = std::max(ev.t_ms, trace_.events.back().t_ms);
    trace_.events.push_back(std::move(ev));
}

std::vector<Placement> playback_placements(const DuplexTrace& trace) {
    std::vector<Placement> out;
    std::int64_t buffer_end = 0;  // samples
    for (const auto& ev : trace.events) {
        if (ev.kind != TraceEventKind::AudioReceived) continue;
        const std::int64_t n = event_samples(ev);
        const std::int64_t start = std::max(ms_to_samples(ev.t_ms), buffer_end);
        buffer_end = start + n;
        out.push_back({ev.t_ms, samples_to_ms(start), samples_to_ms(n)});
    }
    return out;
}

OutputTimeline reconstruct_output_timeline(const DuplexTrace& trace) {
    OutputTimeline out;
    std::int64_t buffer_end = 0;
    for (const auto& ev : trace.events) {
        if (ev.kind != TraceEventKind::AudioReceived) continue;
        const std::int64_t n = event_samples(ev);
        const std::int64_t start = std::max(ms_to_samples(ev.t_ms), buffer_end);
        buffer_end = start + n;
        auto& s = out.waveform.samples;
        if (static_cast<std::int64_t>(s.size()) < buffer_end) s.resize(static_cast<std::size_t>(buffer_end), 0.0f);
        std::copy(ev.audio.begin(), ev.audio.end(), s.begin() + start);
        out.placements.push_back({ev.t_ms, samples_to_ms(start), samples_to_ms(n)});
    }
    return out;
}

void save_trace(const std::filesystem::path& dir, const DuplexTrace& trace) {
    std::filesystem::create_directories(dir);
    {
        std::ofstream out(dir / (trace.session_id + ".trace.jsonl"), std::ios::trunc);
        if (!out) throw Error("cannot write trace for " + trace.session_id);
        for (const auto& ev : trace.events) {
            json j = {{"t_ms", ev.t_ms}, {"kind", to_string(ev.kind)}, {"payload_bytes", ev.payload_bytes}};
            if (ev.text) j["text"] = *ev.text;
            out << j.dump() << '\n';
        }
    }
    {
        json meta = {{"session_id", trace.session_id},
                     {"chunk_ms", trace.chunk_ms},
                     {"clock_mode", to_string(trace.clock_mode)},
                     {"complete", trace.complete}};
        meta["failure"] = trace.failure ? json(*trace.failure) : json(nullptr);
        std::ofstream out(dir / (trace.session_id + ".trace.meta.json"), std::ios::trunc);
        out << meta.dump(2) << '\n';
    }
    write_wav(dir / (trace.session_id + ".out.wav"), reconstruct_output_timeline(trace).waveform);
}

DuplexTrace load_trace(const std::filesystem::path& dir, const std::string& session_id) {
    DuplexTrace t;
    {
        std::ifstream in(dir / (session_id + ".trace.meta.json"));
        if (!in) throw ParseError("missing trace metadata for " + session_id);
        json meta;
        try {
            in >> meta;
            t.session_id = meta.at("session_id").get<std::string>();
            t.chunk_ms = meta.at("chunk_ms").get<Milliseconds>();
            t.clock_mode = parse_clock_mode(meta.at("clock_mode").get<std::string>());
            t.complete = meta.at("complete").get<bool>();
            if (!meta["failure"].is_null()) t.failure = meta["failure"].get<std::string>();
        } catch (const json::exception& e) {
            throw ParseError("trace metadata for " + session_id + ": " + e.what());
        }
    }
    {
        std::ifstream in(dir / (session_id + ".trace.jsonl"));
        if (!in) throw ParseError("missing trace events for " + session_id);
        std::string line;
        while (std::getline(in, line)) {
            if (line.empty()) continue;
            try {
                const json j = json::parse(line);
                TraceEvent ev;
                ev.t_ms = j.at("t_ms").get<Milliseconds>();
                ev.kind = parse_kind(j.at("kind").get<std::string>());
                ev.payload_bytes = j.at("payload_bytes").get<std::int64_t>();
                if (j.contains("text")) ev.text = j["text"].get<std::string>();
                t.events.push_back(std::move(ev));
            } catch (const json::exception& e) {
                throw ParseError("trace events for " + session_id + ": " + e.what());
            }
        }
    }
    const auto wav_path = dir / (session_id + ".out.wav");
    if (std::filesystem::exists(wav_path)) {
        const Waveform out = read_wav(wav_path);
        std::int64_t buffer_end = 0;
        for (auto& ev : t.events) {
            if (ev.kind != TraceEventKind::AudioReceived) continue;
            const std::int64_t n = ev.payload_bytes / 2;
            const std::int64_t start = std::max(ms_to_samples(ev.t_ms), buffer_end);
            buffer_end = start + n;
            if (buffer_end > static_cast<std::int64_t>(out.size())) {
                throw ParseError("output audio sidecar shorter than trace for " + session_id);
            }
            ev.audio.assign(out.samples.begin() + start, out.samples.begin() + buffer_end);
        }
    }
    return t;
}

} // namespace fdh
