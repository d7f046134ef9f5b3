#pragma once

#include <memory>
#include <string>
#include <vector>

#include "audio.hpp"
#include "error.hpp"
#include "timeline.hpp"

namespace fdh {

// A VAD backend failed (unreachable service, unreadable timestamp file).
class VadAdapterError : public Error {
public:
    using Error::Error;
};

struct VadOptions {
    double threshold = 0.5;
    Milliseconds min_speech_ms = 250;
    Milliseconds min_silence_ms = 300;
};

// Produces raw speech segments; post-processing is shared.
class VadAdapter {
public:
    virtual ~VadAdapter() = default;
    virtual std::vector<Segment> detect(const Waveform& audio, double threshold) = 0;
};

// Frame-energy detector for tests and the mock oracle. Each 10 ms frame is
// scored by mapping its RMS level from [-60, -20] dBFS onto [0, 1].
class EnergyVad : public VadAdapter {
public:
    static constexpr Milliseconds kFrameMs = 10;
    static constexpr double kFloorDb = -60.0;
    static constexpr double kCeilDb = -20.0;

    std::vector<Segment> detect(const Waveform& audio, double threshold) override;
    static double frame_score(std::span<const float> frame);
};

// Precomputed timestamps: JSON list of {start_ms, end_ms}.
class FileVad : public VadAdapter {
public:
    explicit FileVad(std::filesystem::path path) : path_(std::move(path)) {}
    std::vector<Segment> detect(const Waveform& audio, double threshold) override;

private:
    std::filesystem::path path_;
};

// External VAD over HTTP: POSTs the WAV bytes to `url?threshold=T` and
// expects a JSON list of {start_ms, end_ms}.
class ServiceVad : public VadAdapter {
public:
    explicit ServiceVad(std::string url) : url_(std::move(url)) {}
    std::vector<Segment> detect(const Waveform& audio, double threshold) override;

private:
    std::string url_;
};

// "builtin", "file:PATH" or "service:URL".
std::unique_ptr<VadAdapter> make_vad(const std::string& spec);

// Clips, sorts and merges raw segments, fills gaps shorter than
// min_silence_ms, then drops segments shorter than min_speech_ms.
std::vector<Segment> postprocess_segments(std::vector<Segment> raw, const VadOptions& opts);

SegmentTimeline extract_timeline(const Waveform& audio, VadAdapter& vad, const VadOptions& opts = {},
                                 Channel channel = Channel::Model);

} // namespace fdh
