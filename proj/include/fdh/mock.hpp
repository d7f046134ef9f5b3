#pragma once

#include <atomic>
#include <cstdint>
#include <deque>
#include <filesystem>
#include <optional>
#include <stop_token>
#include <string>
#include <vector>

#include "audio.hpp"
#include "json.hpp"
#include "net.hpp"
#include "protocol.hpp"

namespace fdh {

// Scripted reactions of the mock full-duplex server.
struct BehaviorScript {
    Milliseconds reply_delay_ms = 500;        // after detected end of user speech
    Milliseconds reply_duration_ms = 3000;
    bool stop_on_barge_in = true;
    Milliseconds barge_in_stop_delay_ms = 300; // after detected onset of user speech
    bool resume_after_interrupt = true;
    Milliseconds early_reply_lead_ms = 0;     // 0 = never reply early
    double react_to_energy_threshold = 0.02;  // mean |amplitude| per chunk
    double tone_hz = 440.0;
    double tone_amplitude = 0.3;
    std::string reply_text = "Sure, here is what I can tell you about that.";
};

// Throws InvalidArgument when a delay is negative or the threshold is not in (0, 1).
void validate_behavior(const BehaviorScript& b);
nlohmann::json to_json(const BehaviorScript& b);
BehaviorScript behavior_from_json(const nlohmann::json& j);
BehaviorScript load_behavior(const std::filesystem::path& path);

// Input chunks needed ahead of the current output slot so that scheduled
// actions land on time: the 3-chunk hysteresis plus the early-reply lead.
// Only the virtual clock can provide them; over a socket the lookahead is 0
// and actions land late by the detection latency.
std::size_t required_lookahead_chunks(const BehaviorScript& b, Milliseconds chunk_ms);

// One connection's state machine. Time is measured in output slots: slot k
// covers [k*chunk, (k+1)*chunk) on the session clock and is produced after
// input chunk k (plus lookahead) has been seen. The output is a pure
// function of the input chunk sequence.
class MockSession {
public:
    explicit MockSession(BehaviorScript behavior, std::size_t lookahead_chunks = 0);

    void push_chunk(std::span<const float> samples);
    void end_input();

    // True once slot `next_slot()` can be produced.
    bool ready() const;
    std::vector<Frame> step();
    std::size_t next_slot() const { return slot_; }

    // Input ended and nothing left to say.
    bool finished() const;

    std::size_t chunk_samples() const { return chunk_samples_; }
    Milliseconds chunk_ms() const { return static_cast<Milliseconds>(chunk_samples_ / kSamplesPerMs); }

private:
    struct Reply {
        std::int64_t start;  // samples
        std::int64_t end;
        bool text_sent = false;
    };
    enum class SegmentRole { Inquiry, BargeIn, Ignored };

    void advance_detector(std::size_t horizon);
    void on_onset(std::int64_t at);
    void on_end(std::int64_t at);
    void schedule_reply(std::int64_t start);
    bool speaking_at(std::int64_t t) const;

    BehaviorScript b_;
    std::size_t lookahead_;
    std::size_t chunk_samples_ = 0;
    std::vector<bool> raw_;           // per input chunk: mean |x| above threshold
    bool input_ended_ = false;

    // hysteresis detector
    std::size_t det_next_ = 0;        // next chunk whose state is undecided
    bool det_state_ = false;
    std::int64_t onset_ = 0;
    SegmentRole role_ = SegmentRole::Inquiry;

    std::vector<Reply> replies_;  // sorted by start
    std::size_t slot_ = 0;
};

// TCP server speaking the reference protocol, one MockSession per
// connection (lookahead 0).
class MockServer {
public:
    MockServer(BehaviorScript behavior, std::uint16_t port, const std::string& bind_host = "127.0.0.1");
    std::uint16_t port() const { return listener_.port(); }

    // Serves until the token is triggered.
    void run(std::stop_token stop);
    std::size_t connections_served() const { return served_.load(); }

private:
    void handle(Socket conn, std::stop_token stop);

    BehaviorScript behavior_;
    Listener listener_;
    std::atomic<std::size_t> served_{0};
};

} // namespace fdh
