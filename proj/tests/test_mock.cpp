#include "doctest.h"

#include "fdh/error.hpp"
#include "fdh/mock.hpp"
#include "support.hpp"

using namespace fdh;

namespace {

struct Output {
    std::vector<std::size_t> audio_slots;  // slots carrying non-silent audio
    std::vector<std::size_t> text_slots;
    bool ended = false;
};

// Feeds the waveform in chunks and collects every slot's output.
Output drive(MockSession& m, const Waveform& w, std::size_t chunk) {
    Output out;
    for (std::size_t off = 0; off < w.size(); off += chunk) {
        const auto n = std::min(chunk, w.size() - off);
        m.push_chunk(std::span<const float>(w.samples).subspan(off, n));
        while (m.ready()) {
            const auto slot = m.next_slot();
            for (const auto& f : m.step()) {
                if (f.type == FrameType::AudioOut && mean_abs(f.samples()) > 0.01) out.audio_slots.push_back(slot);
                if (f.type == FrameType::TextOut) out.text_slots.push_back(slot);
            }
        }
    }
    m.end_input();
    for (int guard = 0; guard < 10000 && !m.finished(); ++guard) {
        const auto slot = m.next_slot();
        for (const auto& f : m.step()) {
            if (f.type == FrameType::AudioOut && mean_abs(f.samples()) > 0.01) out.audio_slots.push_back(slot);
            if (f.type == FrameType::TextOut) out.text_slots.push_back(slot);
            if (f.type == FrameType::EndOut) out.ended = true;
        }
    }
    return out;
}

constexpr std::size_t kChunk = 1920;  // 80 ms

} // namespace

TEST_SUITE("mockd") {

TEST_CASE("silence gets no reply") {
    BehaviorScript b;
    MockSession m(b, required_lookahead_chunks(b, 80));
    const auto out = drive(m, test::silence_ms(3000), kChunk);
    CHECK(out.audio_slots.empty());
    CHECK(out.text_slots.empty());
}

TEST_CASE("reply starts after the scripted delay and lasts its duration") {
    BehaviorScript b;
    b.reply_delay_ms = 800;
    b.reply_duration_ms = 1600;
    MockSession m(b, required_lookahead_chunks(b, 80));
    const auto out = drive(m, test::concat({test::tone_ms(1600), test::silence_ms(4000)}), kChunk);
    REQUIRE_FALSE(out.audio_slots.empty());
    CHECK(out.audio_slots.front() == (1600 + 800) / 80);
    CHECK(out.audio_slots.size() == 1600 / 80);
    REQUIRE(out.text_slots.size() == 1);
    CHECK(out.text_slots.front() == out.audio_slots.front());
}

TEST_CASE("barge-in stops the reply and it resumes after the interruption") {
    BehaviorScript b;
    b.reply_delay_ms = 400;
    b.reply_duration_ms = 8000;
    b.barge_in_stop_delay_ms = 320;
    MockSession m(b, required_lookahead_chunks(b, 80));
    // inquiry 0-1600, reply from 2000, barge-in at 3200-4000
    const auto w = test::concat({test::tone_ms(1600), test::silence_ms(1600), test::tone_ms(800), test::silence_ms(12000)});
    const auto out = drive(m, w, kChunk);
    REQUIRE_FALSE(out.audio_slots.empty());
    CHECK(out.audio_slots.front() == 2000 / 80);
    bool stopped = false;
    for (auto s : out.audio_slots)
        if (s >= (3200 + 320) / 80 && s < 4400 / 80) stopped = true;
    CHECK_FALSE(stopped);
    CHECK(std::find(out.audio_slots.begin(), out.audio_slots.end(), std::size_t{(3200 + 320) / 80 - 1}) !=
          out.audio_slots.end());
    CHECK(std::find(out.audio_slots.begin(), out.audio_slots.end(), std::size_t{4400 / 80}) != out.audio_slots.end());
    CHECK(out.text_slots.size() == 2);
}

TEST_CASE("ignoring barge-in keeps talking") {
    BehaviorScript b;
    b.reply_delay_ms = 400;
    b.reply_duration_ms = 4000;
    b.stop_on_barge_in = false;
    MockSession m(b, required_lookahead_chunks(b, 80));
    const auto w = test::concat({test::tone_ms(1600), test::silence_ms(1600), test::tone_ms(800), test::silence_ms(8000)});
    const auto out = drive(m, w, kChunk);
    for (std::size_t s = 2000 / 80; s < 6000 / 80; ++s)
        CHECK(std::find(out.audio_slots.begin(), out.audio_slots.end(), s) != out.audio_slots.end());
}

TEST_CASE("behavior validation and json") {
    BehaviorScript b;
    b.reply_delay_ms = -1;
    CHECK_THROWS_AS(validate_behavior(b), InvalidArgument);
    b = BehaviorScript{};
    b.early_reply_lead_ms = 2500;
    b.resume_after_interrupt = false;
    const auto back = behavior_from_json(to_json(b));
    CHECK(back.early_reply_lead_ms == 2500);
    CHECK_FALSE(back.resume_after_interrupt);
    CHECK_THROWS_AS(behavior_from_json(nlohmann::json::parse(R"({"reply_delay_ms": "soon"})")), ParseError);
}

TEST_CASE("lookahead covers detection hysteresis and early lead") {
    BehaviorScript b;
    CHECK(required_lookahead_chunks(b, 80) == 3);
    b.early_reply_lead_ms = 2500;
    CHECK(required_lookahead_chunks(b, 80) == 3 + 32);
}

}
