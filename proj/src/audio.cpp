#include "fdh/audio.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <numbers>

#include "fdh/error.hpp"

namespace fdh {

namespace {

std::uint32_t read_u32(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint32_t>(b[off]) | (static_cast<std::uint32_t>(b[off + 1]) << 8) |
           (static_cast<std::uint32_t>(b[off + 2]) << 16) |
           (static_cast<std::uint32_t>(b[off + 3]) << 24);
}

std::uint16_t read_u16(std::span<const std::uint8_t> b, std::size_t off) {
    return static_cast<std::uint16_t>(b[off] | (b[off + 1] << 8));
}

void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
    for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

void put_u16(std::vector<std::uint8_t>& out, std::uint16_t v) {
    out.push_back(static_cast<std::uint8_t>(v));
    out.push_back(static_cast<std::uint8_t>(v >> 8));
}

} // namespace

Milliseconds Waveform::duration_ms() const {
    return static_cast<Milliseconds>(samples.size()) * 1000 / sample_rate;
}

std::int16_t float_to_s16(float v) {
    const float clipped = std::clamp(v, -1.0f, 1.0f);
    const long q = std::lround(static_cast<double>(clipped) * 32768.0);
    return static_cast<std::int16_t>(std::clamp<long>(q, -32768, 32767));
}

std::vector<std::uint8_t> to_s16le(std::span<const float> samples) {
    std::vector<std::uint8_t> out;
    out.reserve(samples.size() * 2);
    for (float s : samples) {
        const auto v = static_cast<std::uint16_t>(float_to_s16(s));
        out.push_back(static_cast<std::uint8_t>(v & 0xff));
        out.push_back(static_cast<std::uint8_t>(v >> 8));
    }
    return out;
}

std::vector<float> from_s16le(std::span<const std::uint8_t> bytes) {
    if (bytes.size() % 2 != 0) throw AudioFormatError("odd byte count in s16le payload");
    std::vector<float> out(bytes.size() / 2);
    for (std::size_t i = 0; i < out.size(); ++i) {
        const auto v = static_cast<std::int16_t>(read_u16(bytes, 2 * i));
        out[i] = s16_to_float(v);
    }
    return out;
}

Waveform decode_wav(std::span<const std::uint8_t> b) {
    if (b.size() < 12 || std::memcmp(b.data(), "RIFF", 4) != 0 ||
        std::memcmp(b.data() + 8, "WAVE", 4) != 0) {
        throw AudioFormatError("not a RIFF/WAVE file");
    }
    std::size_t off = 12;
    bool have_fmt = false;
    std::uint16_t format = 0, channels = 0, bits = 0;
    std::uint32_t rate = 0;
    while (off + 8 <= b.size()) {
        const std::uint32_t size = read_u32(b, off + 4);
        const std::size_t body = off + 8;
        if (std::memcmp(b.data() + off, "fmt ", 4) == 0) {
            if (size < 16 || body + 16 > b.size()) throw AudioFormatError("truncated fmt chunk");
            format = read_u16(b, body);
            channels = read_u16(b, body + 2);
            rate = read_u32(b, body + 4);
            bits = read_u16(b, body + 14);
            have_fmt = true;
        } else if (std::memcmp(b.data() + off, "data", 4) == 0) {
            if (!have_fmt) throw AudioFormatError("data chunk before fmt chunk");
            if (format != 1 || bits != 16) throw AudioFormatError("only 16-bit PCM is supported");
            if (channels != 1) throw AudioFormatError("only mono audio is supported");
            // Some writers leave the data size at 0 or oversize it when streaming.
            const std::size_t avail = b.size() - body;
            std::size_t n = size == 0 ? avail : std::min<std::size_t>(size, avail);
            n -= n % 2;
            Waveform w;
            w.sample_rate = static_cast<int>(rate);
            w.samples = from_s16le(b.subspan(body, n));
            return w;
        }
        off = body + size + (size & 1u);
    }
    throw AudioFormatError("no data chunk");
}

Waveform read_wav(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw AudioFormatError("cannot open " + path.string());
    std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)),
                                    std::istreambuf_iterator<char>());
    try {
        return decode_wav(bytes);
    } catch (const AudioFormatError& e) {
        throw AudioFormatError(path.string() + ": " + e.what());
    }
}

std::vector<std::uint8_t> encode_wav(const Waveform& wav) {
    const auto pcm = to_s16le(wav.samples);
    std::vector<std::uint8_t> out;
    out.reserve(44 + pcm.size());
    out.insert(out.end(), {'R', 'I', 'F', 'F'});
    put_u32(out, static_cast<std::uint32_t>(36 + pcm.size()));
    out.insert(out.end(), {'W', 'A', 'V', 'E', 'f', 'm', 't', ' '});
    put_u32(out, 16);
    put_u16(out, 1);
    put_u16(out, 1);
    put_u32(out, static_cast<std::uint32_t>(wav.sample_rate));
    put_u32(out, static_cast<std::uint32_t>(wav.sample_rate * 2));
    put_u16(out, 2);
    put_u16(out, 16);
    out.insert(out.end(), {'d', 'a', 't', 'a'});
    put_u32(out, static_cast<std::uint32_t>(pcm.size()));
    out.insert(out.end(), pcm.begin(), pcm.end());
    return out;
}

void write_wav(const std::filesystem::path& path, const Waveform& wav) {
    const auto bytes = encode_wav(wav);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw AudioFormatError("cannot write " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

double mean_square(std::span<const float> samples) {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (float s : samples) acc += static_cast<double>(s) * s;
    return acc / static_cast<double>(samples.size());
}

double mean_abs(std::span<const float> samples) {
    if (samples.empty()) return 0.0;
    double acc = 0.0;
    for (float s : samples) acc += std::fabs(s);
    return acc / static_cast<double>(samples.size());
}

std::vector<float> make_tone(std::size_t n_samples, double freq_hz, double amplitude,
                             double phase_samples) {
    std::vector<float> out(n_samples);
    const double w = 2.0 * std::numbers::pi * freq_hz / kSampleRate;
    for (std::size_t i = 0; i < n_samples; ++i) {
        out[i] = static_cast<float>(amplitude * std::sin(w * (static_cast<double>(i) + phase_samples)));
    }
    return out;
}

} // namespace fdh
