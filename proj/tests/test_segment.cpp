#include "doctest.h"

#include <random>

#include "fdh/error.hpp"
#include "fdh/vad.hpp"
#include "http_fixture.hpp"
#include "support.hpp"

using namespace fdh;

TEST_SUITE("segment") {

TEST_CASE("all-zero audio has no speech") {
    EnergyVad vad;
    CHECK(extract_timeline(test::silence_ms(3000), vad).segments.empty());
}

TEST_CASE("empty audio gives an empty timeline") {
    EnergyVad vad;
    CHECK(extract_timeline(Waveform{}, vad).segments.empty());
}

TEST_CASE("tone from 1000 to 2000 ms") {
    EnergyVad vad;
    const auto w = test::concat({test::silence_ms(1000), test::tone_ms(1000, 440.0), test::silence_ms(1000)});
    const auto t = extract_timeline(w, vad);
    REQUIRE(t.segments.size() == 1);
    CHECK(std::abs(t.segments[0].start_ms - 1000) <= EnergyVad::kFrameMs);
    CHECK(std::abs(t.segments[0].end_ms - 2000) <= EnergyVad::kFrameMs);
    CHECK(t.channel == Channel::Model);
}

TEST_CASE("short pauses are merged") {
    EnergyVad vad;
    const auto w = test::concat({test::tone_ms(600), test::silence_ms(100), test::tone_ms(600), test::silence_ms(500)});
    const auto t = extract_timeline(w, vad, VadOptions{0.5, 250, 300});
    REQUIRE(t.segments.size() == 1);
    CHECK(t.segments[0].end_ms == 1300);
}

TEST_CASE("blips shorter than min speech are dropped") {
    EnergyVad vad;
    const auto w = test::concat({test::tone_ms(100), test::silence_ms(1000), test::tone_ms(500)});
    const auto t = extract_timeline(w, vad);
    REQUIRE(t.segments.size() == 1);
    CHECK(t.segments[0].start_ms == 1100);
}

TEST_CASE("energy score mapping") {
    const std::vector<float> quiet(240, 0.0f);
    CHECK(EnergyVad::frame_score(quiet) == 0.0);
    const auto loud = make_tone(240, 440.0, 0.9);
    CHECK(EnergyVad::frame_score(loud) == 1.0);
    // -40 dBFS RMS sits halfway between the floor and the ceiling
    const std::vector<float> mid(240, 0.01f);
    CHECK(EnergyVad::frame_score(mid) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("post-processing always yields a valid timeline") {
    std::mt19937 rng(17);
    for (int iter = 0; iter < 2000; ++iter) {
        std::vector<Segment> raw(rng() % 12);
        for (auto& s : raw) {
            s.start_ms = static_cast<Milliseconds>(rng() % 20000) - 500;
            s.end_ms = s.start_ms + static_cast<Milliseconds>(rng() % 3000) - 200;
        }
        const VadOptions o{0.5, static_cast<Milliseconds>(rng() % 400), static_cast<Milliseconds>(rng() % 600)};
        const SegmentTimeline t{Channel::Model, postprocess_segments(raw, o)};
        REQUIRE(satisfies_invariants(t));
        for (std::size_t i = 0; i < t.segments.size(); ++i) {
            CHECK(t.segments[i].duration() >= o.min_speech_ms);
            CHECK(t.segments[i].start_ms >= 0);
            if (i > 0) CHECK(t.segments[i].start_ms - t.segments[i - 1].end_ms >= o.min_silence_ms);
        }
    }
}

TEST_CASE("timestamp file adapter") {
    test::TempDir dir;
    test::write_text(dir / "ts.json", R"([{"start_ms": 100, "end_ms": 900}, {"start_ms": 1000, "end_ms": 2000}])");
    auto vad = make_vad("file:" + (dir / "ts.json").string());
    const auto t = extract_timeline(test::silence_ms(2500), *vad);
    REQUIRE(t.segments.size() == 1);
    CHECK(t.segments[0] == Segment{100, 2000});

    FileVad missing(dir / "nope.json");
    CHECK_THROWS_AS(missing.detect(test::silence_ms(10), 0.5), VadAdapterError);
}

TEST_CASE("service adapter posts wav and threshold") {
    test::HttpFixture http;
    std::string seen_threshold;
    std::size_t seen_bytes = 0;
    http.server.Post("/vad", [&](const httplib::Request& req, httplib::Response& res) {
        seen_threshold = req.get_param_value("threshold");
        seen_bytes = req.body.size();
        res.set_content(R"([{"start_ms": 0, "end_ms": 500}])", "application/json");
    });
    http.start();
    auto vad = make_vad("service:" + http.url("/vad"));
    const auto t = extract_timeline(test::tone_ms(600), *vad, VadOptions{0.6, 250, 300});
    CHECK(t.segments == std::vector<Segment>{{0, 500}});
    CHECK(std::stod(seen_threshold) == doctest::Approx(0.6));
    CHECK(seen_bytes == 44 + 600 * 24 * 2);
}

TEST_CASE("unreachable service is a distinct adapter error") {
    ServiceVad vad("http://127.0.0.1:1/vad");
    CHECK_THROWS_AS(vad.detect(test::tone_ms(100), 0.5), VadAdapterError);
    CHECK_THROWS_AS(make_vad("silero"), InvalidArgument);
}

}
