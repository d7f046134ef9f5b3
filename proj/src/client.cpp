#include "fdh/client.hpp"

#include <atomic>
#include <chrono>
#include <mutex>
#include <thread>

#include "fdh/error.hpp"

namespace fdh {

namespace {

using clock_type = std::chrono::steady_clock;

Milliseconds since(clock_type::time_point t0) {
    return std::chrono::duration_cast<std::chrono::milliseconds>(clock_type::now() - t0).count();
}

std::span<const float> chunk_of(const Waveform& w, std::size_t k, std::size_t cs) {
    const std::size_t lo = k * cs;
    const std::size_t hi = std::min(w.size(), lo + cs);
    return std::span<const float>(w.samples).subspan(lo, hi - lo);
}

void check_input(const Waveform& w, const StreamOptions& o) {
    if (w.sample_rate != kSampleRate) throw AudioFormatError("session audio must be 24000 Hz");
    if (o.chunk_ms <= 0) throw InvalidArgument("chunk_ms must be > 0");
}

// First failure wins; later ones are usually consequences of it.
class FailureSlot {
public:
    void set(std::string what) {
        std::lock_guard lock(mu_);
        if (!what_) what_ = std::move(what);
    }
    std::optional<std::string> get() const {
        std::lock_guard lock(mu_);
        return what_;
    }

private:
    mutable std::mutex mu_;
    std::optional<std::string> what_;
};

TraceEvent received(const Frame& f, Milliseconds t) {
    TraceEvent ev;
    ev.t_ms = t;
    ev.payload_bytes = static_cast<std::int64_t>(f.payload.size());
    if (f.type == FrameType::AudioOut) {
        ev.kind = TraceEventKind::AudioReceived;
        ev.audio = f.samples();
    } else {
        ev.kind = TraceEventKind::TextReceived;
        ev.text = f.text();
    }
    return ev;
}

} // namespace

DuplexTrace run_session(const Waveform& waveform, const SessionManifest& manifest,
                        const Endpoint& endpoint, const StreamOptions& options) {
    check_input(waveform, options);
    if (options.clock_mode != ClockMode::RealTime) {
        throw InvalidArgument("the virtual clock is only available with an in-process mock endpoint");
    }
    DuplexTrace trace;
    trace.session_id = manifest.session_id;
    trace.chunk_ms = options.chunk_ms;
    trace.clock_mode = ClockMode::RealTime;
    TraceRecorder rec(trace);

    Socket sock;
    try {
        sock = connect_tcp(endpoint, std::chrono::milliseconds(options.connect_timeout_ms));
    } catch (const Error& e) {
        trace.complete = false;
        trace.failure = std::string("connect: ") + e.what();
        rec.append({0, TraceEventKind::StreamEnd, 0, trace.failure, {}});
        return trace;
    }

    const auto cs = static_cast<std::size_t>(ms_to_samples(options.chunk_ms));
    const std::size_t n_chunks = (waveform.size() + cs - 1) / cs;
    FailureSlot failure;
    std::atomic<bool> got_end{false};
    std::atomic<Milliseconds> end_in_at{-1};
    const auto t0 = clock_type::now();

    std::jthread receiver([&](std::stop_token stop) {
        FrameDecoder decoder;
        try {
            while (!stop.stop_requested()) {
                const Milliseconds sent_end = end_in_at.load();
                if (sent_end >= 0 && since(t0) > sent_end + options.drain_timeout_ms) {
                    failure.set("drain: no EndOut within " + std::to_string(options.drain_timeout_ms) + " ms");
                    return;
                }
                bool eof = false;
                auto bytes = sock.read_some(std::chrono::milliseconds(20), eof);
                if (eof) {
                    failure.set("receive: connection closed by server before EndOut");
                    return;
                }
                if (!bytes) continue;
                const Milliseconds t = since(t0);
                decoder.feed(*bytes);
                while (auto f = decoder.next()) {
                    switch (f->type) {
                    case FrameType::AudioOut:
                    case FrameType::TextOut:
                        rec.append(received(*f, t));
                        break;
                    case FrameType::EndOut:
                        rec.append({t, TraceEventKind::StreamEnd, 0, std::nullopt, {}});
                        got_end = true;
                        return;
                    case FrameType::ErrorOut:
                        failure.set("server error: " + f->text());
                        return;
                    default:
                        throw ProtocolError(std::string("unexpected ") + to_string(f->type) + " from server");
                    }
                }
            }
        } catch (const ProtocolError& e) {
            failure.set(std::string("protocol: ") + e.what());
        } catch (const Error& e) {
            failure.set(std::string("receive: ") + e.what());
        }
    });

    for (std::size_t k = 0; k < n_chunks; ++k) {
        std::this_thread::sleep_until(t0 + std::chrono::milliseconds(static_cast<std::int64_t>(k) * options.chunk_ms));
        if (failure.get()) break;
        const auto frame = Frame::chunk_in(chunk_of(waveform, k, cs));
        try {
            sock.write_all(encode_frame(frame));
        } catch (const Error& e) {
            failure.set("send chunk " + std::to_string(k) + ": " + e.what());
            break;
        }
        rec.append({since(t0), TraceEventKind::ChunkSent, static_cast<std::int64_t>(frame.payload.size()),
                    std::nullopt, {}});
    }
    if (!failure.get()) {
        try {
            sock.write_all(encode_frame(Frame::end_in()));
            end_in_at = since(t0);
        } catch (const Error& e) {
            failure.set(std::string("send end: ") + e.what());
        }
    }
    if (failure.get()) receiver.request_stop();
    receiver.join();

    if (!got_end) {
        trace.complete = false;
        trace.failure = failure.get().value_or("stream ended without EndOut");
        rec.append({since(t0), TraceEventKind::StreamEnd, 0, trace.failure, {}});
    }
    return trace;
}

DuplexTrace run_session_virtual(const Waveform& waveform, const SessionManifest& manifest,
                                const BehaviorScript& behavior, const StreamOptions& options) {
    check_input(waveform, options);
    DuplexTrace trace;
    trace.session_id = manifest.session_id;
    trace.chunk_ms = options.chunk_ms;
    trace.clock_mode = ClockMode::Virtual;
    TraceRecorder rec(trace);

    const auto cs = static_cast<std::size_t>(ms_to_samples(options.chunk_ms));
    const std::size_t n_chunks = (waveform.size() + cs - 1) / cs;
    const std::size_t lookahead = required_lookahead_chunks(behavior, options.chunk_ms);
    MockSession mock(behavior, lookahead);

    // Both directions go through the wire codec so the virtual path
    // exercises the same bytes as the socket path.
    auto to_server = [&](const Frame& f) {
        const Frame got = decode_frame(encode_frame(f));
        if (got.type == FrameType::ChunkIn) {
            mock.push_chunk(got.samples());
        } else if (got.type == FrameType::EndIn) {
            mock.end_input();
        }
    };

    std::size_t pushed = 0;
    bool ended = false;
    const std::size_t max_slots =
        n_chunks + static_cast<std::size_t>(options.drain_timeout_ms / options.chunk_ms) + 1;

    for (std::size_t k = 0;; ++k) {
        const Milliseconds t = static_cast<Milliseconds>(k) * options.chunk_ms;
        if (k < n_chunks) {
            rec.append({t, TraceEventKind::ChunkSent,
                        static_cast<std::int64_t>(chunk_of(waveform, k, cs).size() * 2), std::nullopt, {}});
        }
        while (pushed < n_chunks && pushed <= k + lookahead) {
            to_server(Frame::chunk_in(chunk_of(waveform, pushed, cs)));
            ++pushed;
        }
        if (pushed == n_chunks && !ended) {
            to_server(Frame::end_in());
            ended = true;
        }
        if (mock.finished()) {
            rec.append({t, TraceEventKind::StreamEnd, 0, std::nullopt, {}});
            break;
        }
        if (k >= max_slots) {
            trace.complete = false;
            trace.failure = "drain: no EndOut within " + std::to_string(options.drain_timeout_ms) + " ms";
            rec.append({t, TraceEventKind::StreamEnd, 0, trace.failure, {}});
            break;
        }
        for (const auto& f : mock.step()) {
            rec.append(received(decode_frame(encode_frame(f)), t));
        }
    }
    return trace;
}

DuplexTrace run_session(const Waveform& waveform, const SessionManifest& manifest,
                        const std::string& endpoint, const StreamOptions& options) {
    constexpr std::string_view kMockPrefix = "mock:";
    if (endpoint.starts_with(kMockPrefix)) {
        if (options.clock_mode != ClockMode::Virtual) {
            throw InvalidArgument("in-process mock endpoints run on the virtual clock only");
        }
        return run_session_virtual(waveform, manifest, load_behavior(endpoint.substr(kMockPrefix.size())),
                                   options);
    }
    return run_session(waveform, manifest, parse_endpoint(endpoint), options);
}

} // namespace fdh
