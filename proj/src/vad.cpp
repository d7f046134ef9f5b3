#include "fdh/vad.hpp"

#include <algorithm>
#include <cmath>
#include <optional>

#include "fdh/http.hpp"

namespace fdh {

double EnergyVad::frame_score(std::span<const float> frame) {
    const double rms = std::sqrt(mean_square(frame));
    const double db = 20.0 * std::log10(rms + 1e-12);
    return std::clamp((db - kFloorDb) / (kCeilDb - kFloorDb), 0.0, 1.0);
}

std::vector<Segment> EnergyVad::detect(const Waveform& audio, double threshold) {
    const std::size_t frame = static_cast<std::size_t>(ms_to_samples(kFrameMs));
    std::vector<Segment> out;
    std::optional<Milliseconds> open;
    const std::span<const float> all(audio.samples);
    Milliseconds t = 0;
    for (std::size_t off = 0; off < audio.size(); off += frame, t += kFrameMs) {
        const auto f = all.subspan(off, std::min(frame, audio.size() - off));
        const bool speech = frame_score(f) >= threshold;
        if (speech && !open) open = t;
        if (!speech && open) {
            out.push_back({*open, t});
            open.reset();
        }
    }
    if (open) out.push_back({*open, samples_to_ms(static_cast<std::int64_t>(audio.size()))});
    return out;
}

std::vector<Segment> FileVad::detect(const Waveform&, double) {
    try {
        return load_segments(path_);
    } catch (const Error& e) {
        throw VadAdapterError(std::string("file VAD: ") + e.what());
    }
}

std::vector<Segment> ServiceVad::detect(const Waveform& audio, double threshold) {
    const auto wav = encode_wav(audio);
    const std::string sep = url_.find('?') == std::string::npos ? "?" : "&";
    try {
        const auto resp = http_post(url_ + sep + "threshold=" + std::to_string(threshold),
                                    std::string(wav.begin(), wav.end()), "audio/wav");
        return segments_from_json(nlohmann::json::parse(resp.body));
    } catch (const nlohmann::json::exception& e) {
        throw VadAdapterError(std::string("VAD service returned invalid JSON: ") + e.what());
    } catch (const Error& e) {
        throw VadAdapterError(std::string("VAD service: ") + e.what());
    }
}

std::unique_ptr<VadAdapter> make_vad(const std::string& spec) {
    if (spec == "builtin") return std::make_unique<EnergyVad>();
    if (spec.starts_with("file:")) return std::make_unique<FileVad>(spec.substr(5));
    if (spec.starts_with("service:")) return std::make_unique<ServiceVad>(spec.substr(8));
    throw InvalidArgument("unknown VAD '" + spec + "' (expected builtin, file:PATH or service:URL)");
}

std::vector<Segment> postprocess_segments(std::vector<Segment> raw, const VadOptions& opts) {
    for (auto& s : raw) s.start_ms = std::max<Milliseconds>(s.start_ms, 0);
    std::erase_if(raw, [](const Segment& s) { return s.end_ms <= s.start_ms; });
    std::sort(raw.begin(), raw.end(), [](const Segment& a, const Segment& b) {
        return a.start_ms < b.start_ms || (a.start_ms == b.start_ms && a.end_ms < b.end_ms);
    });

    std::vector<Segment> merged;
    for (const auto& s : raw) {
        if (!merged.empty() && s.start_ms - merged.back().end_ms < opts.min_silence_ms) {
            merged.back().end_ms = std::max(merged.back().end_ms, s.end_ms);
        } else {
            merged.push_back(s);
        }
    }
    std::erase_if(merged, [&](const Segment& s) { return s.duration() < opts.min_speech_ms; });
    return merged;
}

SegmentTimeline extract_timeline(const Waveform& audio, VadAdapter& vad, const VadOptions& opts,
                                 Channel channel) {
    SegmentTimeline t{channel, {}};
    if (audio.empty()) return t;
    t.segments = postprocess_segments(vad.detect(audio, opts.threshold), opts);
    return t;
}

} // namespace fdh
