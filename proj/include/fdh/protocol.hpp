#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace fdh {

// Reference full-duplex wire protocol. Every frame is
//
//   0xFD 0x01 | type (u8) | reserved (u8, 0) | payload length (u32 LE) | payload
//
// Audio payloads are s16le, 24 kHz, mono. Text payloads are UTF-8.
enum class FrameType : std::uint8_t {
    ChunkIn = 0x01,
    EndIn = 0x0F,
    AudioOut = 0x11,
    TextOut = 0x12,
    ErrorOut = 0x1E,
    EndOut = 0x1F,
};

inline constexpr std::uint8_t kMagic0 = 0xFD;
inline constexpr std::uint8_t kMagic1 = 0x01;
inline constexpr std::size_t kFrameHeaderSize = 8;
inline constexpr std::uint32_t kMaxPayloadBytes = 16u << 20;

const char* to_string(FrameType t);
bool is_known_frame_type(std::uint8_t t);

struct Frame {
    FrameType type = FrameType::ChunkIn;
    std::vector<std::uint8_t> payload;

    bool operator==(const Frame&) const = default;

    static Frame chunk_in(std::span<const float> samples);
    static Frame audio_out(std::span<const float> samples);
    static Frame text_out(std::string_view text);
    static Frame error_out(std::string_view message);
    static Frame end_in() { return {FrameType::EndIn, {}}; }
    static Frame end_out() { return {FrameType::EndOut, {}}; }

    bool is_audio() const { return type == FrameType::ChunkIn || type == FrameType::AudioOut; }
    std::vector<float> samples() const;
    std::string text() const;
};

std::vector<std::uint8_t> encode_frame(const Frame& f);

// Decodes one frame from the front of `bytes`. Returns nullopt when more
// bytes are needed; throws ProtocolError on bad magic, unknown type, a
// nonzero reserved byte or an oversized length.
struct Decoded {
    Frame frame;
    std::size_t consumed;
};
std::optional<Decoded> try_decode_frame(std::span<const std::uint8_t> bytes);

// Decodes exactly one complete frame; trailing or missing bytes are a
// ProtocolError (a truncated payload is a length mismatch).
Frame decode_frame(std::span<const std::uint8_t> bytes);

// Incremental decoder for a byte stream.
class FrameDecoder {
public:
    void feed(std::span<const std::uint8_t> bytes);
    std::optional<Frame> next();
    std::size_t buffered() const { return buf_.size() - pos_; }

private:
    std::vector<std::uint8_t> buf_;
    std::size_t pos_ = 0;
};

} // namespace fdh
