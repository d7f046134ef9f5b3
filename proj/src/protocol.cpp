#include "fdh/protocol.hpp"

#include "fdh/audio.hpp"
#include "fdh/error.hpp"

namespace fdh {

const char* to_string(FrameType t) {
    switch (t) {
    case FrameType::ChunkIn: return "ChunkIn";
    case FrameType::EndIn: return "EndIn";
    case FrameType::AudioOut: return "AudioOut";
    case FrameType::TextOut: return "TextOut";
    case FrameType::ErrorOut: return "ErrorOut";
    case FrameType::EndOut: return "EndOut";
    }
    return "?";
}

bool is_known_frame_type(std::uint8_t t) {
    switch (static_cast<FrameType>(t)) {
    case FrameType::ChunkIn:
    case FrameType::EndIn:
    case FrameType::AudioOut:
    case FrameType::TextOut:
    case FrameType::ErrorOut:
    case FrameType::EndOut:
        return true;
    }
    return false;
}

Frame Frame::chunk_in(std::span<const float> samples) {
    return {FrameType::ChunkIn, to_s16le(samples)};
}

Frame Frame::audio_out(std::span<const float> samples) {
    return {FrameType::AudioOut, to_s16le(samples)};
}

Frame Frame::text_out(std::string_view text) {
    return {FrameType::TextOut, std::vector<std::uint8_t>(text.begin(), text.end())};
}

Frame Frame::error_out(std::string_view message) {
    return {FrameType::ErrorOut, std::vector<std::uint8_t>(message.begin(), message.end())};
}

std::vector<float> Frame::samples() const {
    if (!is_audio()) throw ProtocolError(std::string(to_string(type)) + " frame carries no audio");
    if (payload.size() % 2 != 0) throw ProtocolError("audio payload has odd length");
    return from_s16le(payload);
}

std::string Frame::text() const {
    return std::string(payload.begin(), payload.end());
}

std::vector<std::uint8_t> encode_frame(const Frame& f) {
    if (f.payload.size() > kMaxPayloadBytes) throw ProtocolError("payload too large");
    std::vector<std::uint8_t> out;
    out.reserve(kFrameHeaderSize + f.payload.size());
    const auto len = static_cast<std::uint32_t>(f.payload.size());
    out.insert(out.end(), {kMagic0, kMagic1, static_cast<std::uint8_t>(f.type), 0,
                           static_cast<std::uint8_t>(len), static_cast<std::uint8_t>(len >> 8),
                           static_cast<std::uint8_t>(len >> 16), static_cast<std::uint8_t>(len >> 24)});
    out.insert(out.end(), f.payload.begin(), f.payload.end());
    return out;
}

std::optional<Decoded> try_decode_frame(std::span<const std::uint8_t> b) {
    // Validate as much of the header as has arrived so garbage is rejected
    // early instead of waiting for a bogus length to fill up.
    if (!b.empty() && b[0] != kMagic0) throw ProtocolError("bad magic");
    if (b.size() > 1 && b[1] != kMagic1) throw ProtocolError("bad magic");
    if (b.size() > 2 && !is_known_frame_type(b[2])) {
        throw ProtocolError("unknown frame type " + std::to_string(b[2]));
    }
    if (b.size() > 3 && b[3] != 0) throw ProtocolError("nonzero reserved byte");
    if (b.size() < kFrameHeaderSize) return std::nullopt;

    const std::uint32_t len = static_cast<std::uint32_t>(b[4]) | (static_cast<std::uint32_t>(b[5]) << 8) |
                              (static_cast<std::uint32_t>(b[6]) << 16) |
                              (static_cast<std::uint32_t>(b[7]) << 24);
    if (len > kMaxPayloadBytes) throw ProtocolError("length overflow: " + std::to_string(len));
    if (b.size() < kFrameHeaderSize + len) return std::nullopt;

    Decoded d;
    d.frame.type = static_cast<FrameType>(b[2]);
    d.frame.payload.assign(b.begin() + kFrameHeaderSize, b.begin() + kFrameHeaderSize + len);
    d.consumed = kFrameHeaderSize + len;
    if (d.frame.is_audio() && len % 2 != 0) throw ProtocolError("audio payload has odd length");
    return d;
}

Frame decode_frame(std::span<const std::uint8_t> bytes) {
    auto d = try_decode_frame(bytes);
    if (!d) throw ProtocolError("truncated frame: length mismatch");
    if (d->consumed != bytes.size()) throw ProtocolError("trailing bytes after frame");
    return std::move(d->frame);
}

void FrameDecoder::feed(std::span<const std::uint8_t> bytes) {
    if (pos_ > 0 && pos_ == buf_.size()) {
        buf_.clear();
        pos_ = 0;
    }
    buf_.insert(buf_.end(), bytes.begin(), bytes.end());
}

std::optional<Frame> FrameDecoder::next() {
    auto d = try_decode_frame(std::span(buf_).subspan(pos_));
    if (!d) return std::nullopt;
    pos_ += d->consumed;
    if (pos_ > (1u << 20) && pos_ * 2 > buf_.size()) {
        buf_.erase(buf_.begin(), buf_.begin() + static_cast<std::ptrdiff_t>(pos_));
        pos_ = 0;
    }
    return std::move(d->frame);
}

} // namespace fdh
