#include "doctest.h"

#include <thread>

#include "fdh/client.hpp"
#include "fdh/error.hpp"
#include "fdh/mock.hpp"
#include "fdh/trace.hpp"
#include "support.hpp"

using namespace fdh;

namespace {

// One 2 s utterance followed by 4 s of silence.
struct Fixture {
    Waveform wave = test::concat({test::tone_ms(2000), test::silence_ms(4000)});
    SessionManifest manifest;

    Fixture() {
        manifest.session_id = "s1";
        manifest.duration_samples = static_cast<std::int64_t>(wave.size());
        manifest.segments.push_back({0, ms_to_samples(2000), 0, 2000, "hello", false, {}});
    }
};

std::vector<Milliseconds> times_of(const DuplexTrace& t, TraceEventKind k) {
    std::vector<Milliseconds> out;
    for (const auto& e : t.events)
        if (e.kind == k) out.push_back(e.t_ms);
    return out;
}

} // namespace

TEST_SUITE("stream") {

TEST_CASE("virtual session paces chunks on the simulated clock") {
    Fixture fx;
    BehaviorScript b;
    b.reply_delay_ms = 400;
    b.reply_duration_ms = 1000;
    StreamOptions o;
    o.chunk_ms = 200;
    o.clock_mode = ClockMode::Virtual;
    const auto trace = run_session_virtual(fx.wave, fx.manifest, b, o);
    CHECK(trace.complete);
    const auto sent = times_of(trace, TraceEventKind::ChunkSent);
    REQUIRE(sent.size() == 30);
    for (std::size_t k = 0; k < sent.size(); ++k) CHECK(sent[k] == static_cast<Milliseconds>(k) * 200);
    CHECK(trace.sent_audio_ms() == 6000);
    CHECK(trace.count(TraceEventKind::TextReceived) == 1);

    const auto out = reconstruct_output_timeline(trace);
    Milliseconds first = -1;
    for (std::size_t i = 0; i < out.waveform.size(); ++i) {
        if (out.waveform.samples[i] != 0.0f) {
            first = samples_to_ms(static_cast<std::int64_t>(i));
            break;
        }
    }
    CHECK(first == 2400);
    CHECK(times_of(trace, TraceEventKind::StreamEnd).size() == 1);
}

TEST_CASE("virtual session is deterministic") {
    Fixture fx;
    StreamOptions o;
    o.clock_mode = ClockMode::Virtual;
    const auto a = run_session_virtual(fx.wave, fx.manifest, BehaviorScript{}, o);
    const auto b = run_session_virtual(fx.wave, fx.manifest, BehaviorScript{}, o);
    CHECK(a.events == b.events);
}

TEST_CASE("trace files round trip") {
    test::TempDir dir;
    Fixture fx;
    StreamOptions o;
    o.clock_mode = ClockMode::Virtual;
    const auto trace = run_session_virtual(fx.wave, fx.manifest, BehaviorScript{}, o);
    save_trace(dir.path(), trace);
    const auto back = load_trace(dir.path(), "s1");
    CHECK(back.events == trace.events);
    CHECK(back.chunk_ms == trace.chunk_ms);
    CHECK(back.clock_mode == ClockMode::Virtual);
    CHECK(read_wav(dir / "s1.out.wav") == reconstruct_output_timeline(trace).waveform);
}

TEST_CASE("playback never overlaps itself") {
    DuplexTrace t;
    t.events.push_back({100, TraceEventKind::AudioReceived, 0, std::nullopt, std::vector<float>(2400, 0.1f)});
    t.events.push_back({120, TraceEventKind::AudioReceived, 0, std::nullopt, std::vector<float>(2400, 0.1f)});
    t.events.push_back({500, TraceEventKind::AudioReceived, 0, std::nullopt, std::vector<float>(240, 0.1f)});
    const auto p = playback_placements(t);
    REQUIRE(p.size() == 3);
    CHECK(p[0].playback_start_ms == 100);
    CHECK(p[1].playback_start_ms == 200);
    CHECK(p[2].playback_start_ms == 500);
}

TEST_CASE("real-time session against the tcp mock server") {
    MockServer server(BehaviorScript{}, 0);
    std::stop_source stop;
    std::jthread th([&] { server.run(stop.get_token()); });

    Waveform wave = test::concat({test::tone_ms(1000), test::silence_ms(1500)});
    SessionManifest m;
    m.session_id = "rt";
    m.duration_samples = static_cast<std::int64_t>(wave.size());
    m.segments.push_back({0, ms_to_samples(1000), 0, 1000, "hi", false, {}});
    StreamOptions o;
    o.chunk_ms = 80;
    o.drain_timeout_ms = 10000;
    const auto trace = run_session(wave, m, Endpoint{"127.0.0.1", server.port()}, o);
    stop.request_stop();

    CHECK(trace.complete);
    CHECK(trace.clock_mode == ClockMode::RealTime);
    CHECK(times_of(trace, TraceEventKind::ChunkSent).size() == 32);
    const auto audio = times_of(trace, TraceEventKind::AudioReceived);
    REQUIRE_FALSE(audio.empty());
    // reply_delay 500 after a 1000 ms utterance, plus detection latency
    CHECK(audio.front() >= 1400);
    CHECK(audio.front() <= 2200);
}

TEST_CASE("unreachable endpoint yields an incomplete trace") {
    std::uint16_t port = 0;
    {
        Listener probe(0);
        port = probe.port();
    }
    Fixture fx;
    StreamOptions o;
    o.connect_timeout_ms = 500;
    const auto trace = run_session(fx.wave, fx.manifest, Endpoint{"127.0.0.1", port}, o);
    CHECK_FALSE(trace.complete);
    REQUIRE(trace.failure.has_value());
    CHECK(trace.failure->find("connect") != std::string::npos);
}

TEST_CASE("endpoint spelling and clock must agree") {
    Fixture fx;
    StreamOptions o;
    o.clock_mode = ClockMode::RealTime;
    CHECK_THROWS_AS(run_session(fx.wave, fx.manifest, std::string("mock:x.json"), o), InvalidArgument);
    CHECK_THROWS_AS(parse_endpoint("nohost"), InvalidArgument);
    CHECK_THROWS_AS(parse_endpoint("host:99999"), InvalidArgument);
    CHECK(parse_endpoint("localhost:9000").port == 9000);
}

}
