#include "fdh/mock.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <thread>

#include "fdh/error.hpp"

namespace fdh {

using nlohmann::json;

void validate_behavior(const BehaviorScript& b) {
    if (b.reply_delay_ms < 0 || b.barge_in_stop_delay_ms < 0 || b.early_reply_lead_ms < 0) {
        throw InvalidArgument("behavior delays must be >= 0");
    }
    if (b.reply_duration_ms <= 0) throw InvalidArgument("reply_duration_ms must be > 0");
    if (!(b.react_to_energy_threshold > 0.0 && b.react_to_energy_threshold < 1.0)) {
        throw InvalidArgument("react_to_energy_threshold must be in (0, 1)");
    }
    if (b.tone_hz <= 0.0 || b.tone_hz >= kSampleRate / 2.0) throw InvalidArgument("tone_hz out of range");
}

json to_json(const BehaviorScript& b) {
    return {{"reply_delay_ms", b.reply_delay_ms},
            {"reply_duration_ms", b.reply_duration_ms},
            {"stop_on_barge_in", b.stop_on_barge_in},
            {"barge_in_stop_delay_ms", b.barge_in_stop_delay_ms},
            {"resume_after_interrupt", b.resume_after_interrupt},
            {"early_reply_lead_ms", b.early_reply_lead_ms},
            {"react_to_energy_threshold", b.react_to_energy_threshold},
            {"tone_hz", b.tone_hz},
            {"tone_amplitude", b.tone_amplitude},
            {"reply_text", b.reply_text}};
}

BehaviorScript behavior_from_json(const json& j) {
    BehaviorScript b;
    try {
        b.reply_delay_ms = j.value("reply_delay_ms", b.reply_delay_ms);
        b.reply_duration_ms = j.value("reply_duration_ms", b.reply_duration_ms);
        b.stop_on_barge_in = j.value("stop_on_barge_in", b.stop_on_barge_in);
        b.barge_in_stop_delay_ms = j.value("barge_in_stop_delay_ms", b.barge_in_stop_delay_ms);
        b.resume_after_interrupt = j.value("resume_after_interrupt", b.resume_after_interrupt);
        if (j.contains("early_reply_lead_ms") && !j["early_reply_lead_ms"].is_null()) {
            b.early_reply_lead_ms = j["early_reply_lead_ms"].get<Milliseconds>();
        }
        b.react_to_energy_threshold = j.value("react_to_energy_threshold", b.react_to_energy_threshold);
        b.tone_hz = j.value("tone_hz", b.tone_hz);
        b.tone_amplitude = j.value("tone_amplitude", b.tone_amplitude);
        b.reply_text = j.value("reply_text", b.reply_text);
    } catch (const json::exception& e) {
        throw ParseError(std::string("behavior: ") + e.what());
    }
    validate_behavior(b);
    return b;
}

BehaviorScript load_behavior(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return behavior_from_json(j);
}

std::size_t required_lookahead_chunks(const BehaviorScript& b, Milliseconds chunk_ms) {
    if (chunk_ms <= 0) throw InvalidArgument("chunk_ms must be > 0");
    const auto lead_chunks = (b.early_reply_lead_ms + chunk_ms - 1) / chunk_ms;
    return static_cast<std::size_t>(3 + lead_chunks);
}

MockSession::MockSession(BehaviorScript behavior, std::size_t lookahead_chunks)
    : b_(std::move(behavior)), lookahead_(lookahead_chunks) {
    validate_behavior(b_);
}

void MockSession::push_chunk(std::span<const float> samples) {
    if (input_ended_) throw ProtocolError("audio chunk after end of input");
    if (samples.empty()) throw ProtocolError("empty audio chunk");
    if (chunk_samples_ == 0) {
        chunk_samples_ = samples.size();
    } else if (samples.size() > chunk_samples_) {
        throw ProtocolError("chunk size grew from " + std::to_string(chunk_samples_) + " to " +
                            std::to_string(samples.size()) + " samples");
    }
    raw_.push_back(mean_abs(samples) > b_.react_to_energy_threshold);
}

void MockSession::end_input() { input_ended_ = true; }

bool MockSession::ready() const {
    if (chunk_samples_ == 0) return false;
    return input_ended_ || raw_.size() > slot_ + lookahead_;
}

bool MockSession::finished() const {
    if (!input_ended_) return false;
    if (chunk_samples_ == 0) return true;
    return slot_ >= raw_.size() && det_next_ >= raw_.size() && !det_state_ && replies_.empty();
}

bool MockSession::speaking_at(std::int64_t t) const {
    return std::any_of(replies_.begin(), replies_.end(),
                       [t](const Reply& r) { return r.start <= t && t < r.end; });
}

void MockSession::schedule_reply(std::int64_t start) {
    for (const auto& r : replies_) {
        if (r.start <= start && start < r.end) start = r.end;
    }
    const std::int64_t len = ms_to_samples(b_.reply_duration_ms);
    replies_.push_back({start, start + len, false});
    std::sort(replies_.begin(), replies_.end(),
              [](const Reply& a, const Reply& b) { return a.start < b.start; });
}

void MockSession::on_onset(std::int64_t at) {
    onset_ = at;
    if (speaking_at(at)) {
        if (b_.stop_on_barge_in) {
            role_ = SegmentRole::BargeIn;
            const std::int64_t stop = at + ms_to_samples(b_.barge_in_stop_delay_ms);
            for (auto& r : replies_) {
                if (r.start <= at && at < r.end) r.end = std::min(r.end, std::max(stop, r.start + 1));
            }
        } else {
            role_ = SegmentRole::Ignored;
        }
    } else {
        role_ = SegmentRole::Inquiry;
    }
    // The user is talking again: anything not yet started waits for the end.
    std::erase_if(replies_, [at](const Reply& r) { return r.start > at; });
}

void MockSession::on_end(std::int64_t at) {
    switch (role_) {
    case SegmentRole::Inquiry:
        if (b_.early_reply_lead_ms > 0) {
            schedule_reply(std::max(at - ms_to_samples(b_.early_reply_lead_ms), onset_));
        } else {
            schedule_reply(at + ms_to_samples(b_.reply_delay_ms));
        }
        break;
    case SegmentRole::BargeIn:
        if (b_.resume_after_interrupt) schedule_reply(at + ms_to_samples(b_.reply_delay_ms));
        break;
    case SegmentRole::Ignored:
        break;
    }
}

void MockSession::advance_detector(std::size_t horizon) {
    const std::size_t n = raw_.size();
    // Raw flag for chunk j if it is known at this horizon; past the end of
    // input everything is silence.
    auto known = [&](std::size_t j) { return (input_ended_ && j >= n) || (j < n && j <= horizon); };
    auto flag = [&](std::size_t j) { return j < n && raw_[j]; };

    while (known(det_next_ + 2)) {
        const std::size_t j = det_next_;
        if (input_ended_ && j >= n && !det_state_) break;
        const bool a = flag(j), b = flag(j + 1), c = flag(j + 2);
        const auto at = static_cast<std::int64_t>(j * chunk_samples_);
        if (!det_state_ && a && b && c) {
            det_state_ = true;
            on_onset(at);
        } else if (det_state_ && !a && !b && !c) {
            det_state_ = false;
            on_end(at);
        }
        ++det_next_;
    }
}

std::vector<Frame> MockSession::step() {
    if (!ready()) throw Error("mock session stepped before its input was available");
    advance_detector(slot_ + lookahead_);

    const auto cs = static_cast<std::int64_t>(chunk_samples_);
    const std::int64_t lo = static_cast<std::int64_t>(slot_) * cs;
    const std::int64_t hi = lo + cs;
    std::vector<float> out(chunk_samples_, 0.0f);
    std::vector<Frame> frames;
    bool any = false;
    const double w = 2.0 * std::numbers::pi * b_.tone_hz / kSampleRate;

    for (auto& r : replies_) {
        const std::int64_t a = std::max(lo, r.start);
        const std::int64_t e = std::min(hi, r.end);
        if (a >= e) continue;
        if (!r.text_sent) {
            frames.push_back(Frame::text_out(b_.reply_text));
            r.text_sent = true;
        }
        for (std::int64_t t = a; t < e; ++t) {
            out[static_cast<std::size_t>(t - lo)] =
                static_cast<float>(b_.tone_amplitude * std::sin(w * static_cast<double>(t - r.start)));
        }
        any = true;
    }
    if (any) frames.push_back(Frame::audio_out(out));
    std::erase_if(replies_, [hi](const Reply& r) { return r.end <= hi; });
    ++slot_;
    return frames;
}

MockServer::MockServer(BehaviorScript behavior, std::uint16_t port, const std::string& bind_host)
    : behavior_(std::move(behavior)), listener_(port, bind_host) {
    validate_behavior(behavior_);
}

void MockServer::run(std::stop_token stop) {
    std::vector<std::jthread> workers;
    while (!stop.stop_requested()) {
        auto conn = listener_.accept(std::chrono::milliseconds(50));
        if (!conn) continue;
        workers.emplace_back([this, c = std::move(*conn)](std::stop_token st) mutable {
            handle(std::move(c), st);
        });
    }
    for (auto& w : workers) w.request_stop();
}

void MockServer::handle(Socket conn, std::stop_token stop) {
    using clock = std::chrono::steady_clock;
    MockSession session(behavior_, 0);
    FrameDecoder decoder;
    clock::time_point t0{};
    bool started = false;
    ++served_;

    auto send_frames = [&](const std::vector<Frame>& frames) {
        for (const auto& f : frames) conn.write_all(encode_frame(f));
    };

    try {
        bool input_done = false;
        while (!input_done && !stop.stop_requested()) {
            bool eof = false;
            auto bytes = conn.read_some(std::chrono::milliseconds(50), eof);
            if (eof) return;
            if (!bytes) continue;
            decoder.feed(*bytes);
            while (auto f = decoder.next()) {
                if (f->type == FrameType::ChunkIn) {
                    if (!started) {
                        t0 = clock::now();
                        started = true;
                    }
                    session.push_chunk(f->samples());
                    while (session.ready()) send_frames(session.step());
                } else if (f->type == FrameType::EndIn) {
                    session.end_input();
                    input_done = true;
                    break;
                } else {
                    throw ProtocolError(std::string("unexpected ") + to_string(f->type) + " from client");
                }
            }
        }
        // Keep talking in real time until the scripted replies are done.
        while (!session.finished() && !stop.stop_requested()) {
            const auto due = t0 + std::chrono::milliseconds(static_cast<std::int64_t>(session.next_slot()) *
                                                            session.chunk_ms());
            std::this_thread::sleep_until(due);
            send_frames(session.step());
        }
        send_frames({Frame::end_out()});
        conn.shutdown_write();
        // Let the client read everything before the socket goes away.
        bool eof = false;
        for (int i = 0; i < 20 && !eof; ++i) conn.read_some(std::chrono::milliseconds(50), eof);
    } catch (const ProtocolError& e) {
        try {
            conn.write_all(encode_frame(Frame::error_out(e.what())));
        } catch (const Error&) {
        }
    } catch (const Error&) {
        // peer went away
    }
}

} // namespace fdh
