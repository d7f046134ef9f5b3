#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace fdh {

inline constexpr int kSampleRate = 24000;
inline constexpr int kSamplesPerMs = kSampleRate / 1000;

using Milliseconds = std::int64_t;

// Mono floating-point audio, samples normalized to [-1, 1].
struct Waveform {
    int sample_rate = kSampleRate;
    std::vector<float> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    Milliseconds duration_ms() const;

    bool operator==(const Waveform&) const = default;
};

// Sample index -> ms on the session clock. Floors, so a boundary at sample k
// maps to the millisecond that contains it.
inline Milliseconds samples_to_ms(std::int64_t samples) {
    return samples / kSamplesPerMs;
}

inline std::int64_t ms_to_samples(Milliseconds ms) {
    return ms * kSamplesPerMs;
}

// RIFF/WAVE, 16-bit signed little-endian PCM, mono. Throws AudioFormatError
// for anything else.
Waveform read_wav(const std::filesystem::path& path);
Waveform decode_wav(std::span<const std::uint8_t> bytes);

void write_wav(const std::filesystem::path& path, const Waveform& wav);
std::vector<std::uint8_t> encode_wav(const Waveform& wav);

// s16le conversion used by both the WAV codec and the wire protocol.
std::int16_t float_to_s16(float v);
inline float s16_to_float(std::int16_t v) { return static_cast<float>(v) / 32768.0f; }

std::vector<std::uint8_t> to_s16le(std::span<const float> samples);
std::vector<float> from_s16le(std::span<const std::uint8_t> bytes);

double mean_square(std::span<const float> samples);
double mean_abs(std::span<const float> samples);

// Pure sine tone, handy for tests and for the mock server's reply audio.
std::vector<float> make_tone(std::size_t n_samples, double freq_hz, double amplitude,
                             double phase_samples = 0.0);

} // namespace fdh
