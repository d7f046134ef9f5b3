#include "doctest.h"

#include <random>

#include "fdh/error.hpp"
#include "fdh/protocol.hpp"

using namespace fdh;

TEST_SUITE("protocol") {

TEST_CASE("chunk frame layout") {
    const std::vector<float> s = {0.5f, -0.5f};
    const auto bytes = encode_frame(Frame::chunk_in(s));
    const std::vector<std::uint8_t> expect = {0xFD, 0x01, 0x01, 0x00, 0x04, 0x00, 0x00, 0x00,
                                              0x00, 0x40, 0x00, 0xC0};
    CHECK(bytes == expect);
}

TEST_CASE("80 ms chunk is 3840 payload bytes after an 8 byte header") {
    const std::vector<float> s(1920, 0.1f);
    const auto bytes = encode_frame(Frame::chunk_in(s));
    CHECK(bytes.size() == kFrameHeaderSize + 3840);
}

TEST_CASE("round trip of every frame type") {
    for (const auto& f : {Frame::chunk_in(std::vector<float>{0.25f}), Frame::audio_out(std::vector<float>{-0.25f, 0.0f}),
                          Frame::text_out("héllo"), Frame::error_out("bad"), Frame::end_in(), Frame::end_out()}) {
        CHECK(decode_frame(encode_frame(f)) == f);
    }
    CHECK(decode_frame(encode_frame(Frame::text_out("hi"))).text() == "hi");
}

TEST_CASE("truncated frame is a length mismatch") {
    auto bytes = encode_frame(Frame::chunk_in(std::vector<float>(10, 0.1f)));
    bytes.pop_back();
    CHECK_THROWS_WITH_AS(decode_frame(bytes), doctest::Contains("length mismatch"), ProtocolError);
    CHECK_FALSE(try_decode_frame(bytes).has_value());
}

TEST_CASE("trailing bytes are rejected by the single-frame decoder") {
    auto bytes = encode_frame(Frame::end_in());
    bytes.push_back(0);
    CHECK_THROWS_AS(decode_frame(bytes), ProtocolError);
}

TEST_CASE("header violations") {
    auto good = encode_frame(Frame::end_out());
    auto bad = good;
    bad[0] = 0xFE;
    CHECK_THROWS_AS(try_decode_frame(bad), ProtocolError);
    bad = good;
    bad[2] = 0x55;
    CHECK_THROWS_AS(try_decode_frame(bad), ProtocolError);
    bad = good;
    bad[3] = 1;
    CHECK_THROWS_AS(try_decode_frame(bad), ProtocolError);
    bad = good;
    bad[7] = 0x7F;
    CHECK_THROWS_AS(try_decode_frame(bad), ProtocolError);
}

TEST_CASE("odd audio payload is rejected") {
    std::vector<std::uint8_t> bytes = {0xFD, 0x01, 0x11, 0x00, 0x03, 0x00, 0x00, 0x00, 1, 2, 3};
    CHECK_THROWS_AS(decode_frame(bytes), ProtocolError);
}

TEST_CASE("stream decoder reassembles byte by byte") {
    std::mt19937 rng(3);
    std::vector<Frame> frames;
    std::vector<std::uint8_t> stream;
    for (int i = 0; i < 50; ++i) {
        std::vector<float> s(rng() % 64);
        for (auto& x : s) x = static_cast<float>(static_cast<int>(rng() % 65536) - 32768) / 32768.0f;
        frames.push_back(i % 3 ? Frame::audio_out(s) : Frame::text_out(std::string(rng() % 9, 'x')));
        const auto b = encode_frame(frames.back());
        stream.insert(stream.end(), b.begin(), b.end());
    }
    FrameDecoder dec;
    std::vector<Frame> got;
    for (auto byte : stream) {
        dec.feed(std::span<const std::uint8_t>(&byte, 1));
        while (auto f = dec.next()) got.push_back(*f);
    }
    CHECK(got == frames);
    CHECK(dec.buffered() == 0);
}

}
