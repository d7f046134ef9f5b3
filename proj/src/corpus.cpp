#include "fdh/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "fdh/error.hpp"

namespace fdh {

namespace {

char difficulty_letter(Difficulty d) {
    switch (d) {
    case Difficulty::Easy: return 'E';
    case Difficulty::Medium: return 'M';
    case Difficulty::Hard: return 'H';
    }
    return '?';
}

// Concatenated samples of every speech segment.
double speech_power(const Waveform& w, const SessionManifest& m) {
    double acc = 0.0;
    std::int64_t n = 0;
    for (const auto& s : m.segments) {
        const auto lo = std::clamp<std::int64_t>(s.start_sample, 0, static_cast<std::int64_t>(w.size()));
        const auto hi = std::clamp<std::int64_t>(s.end_sample, lo, static_cast<std::int64_t>(w.size()));
        for (auto i = lo; i < hi; ++i) acc += static_cast<double>(w.samples[i]) * w.samples[i];
        n += hi - lo;
    }
    return n == 0 ? 0.0 : acc / static_cast<double>(n);
}

struct Span {
    std::int64_t begin;
    std::int64_t end;
};

std::vector<Span> noise_spans(const Waveform& w, const SessionManifest& m, NoiseMode mode) {
    std::vector<Span> spans;
    if (mode == NoiseMode::Bg) {
        if (!w.empty()) spans.push_back({0, static_cast<std::int64_t>(w.size())});
    } else if (mode == NoiseMode::Gap) {
        for (const auto& g : m.gaps) {
            const auto hi = std::min<std::int64_t>(g.end_sample, static_cast<std::int64_t>(w.size()));
            if (g.start_sample < hi) spans.push_back({g.start_sample, hi});
        }
    }
    return spans;
}

} // namespace

AssembledSession assemble_session(std::span<const Waveform> audio, const ConversationScript& script,
                                  Difficulty difficulty, std::uint64_t rng_seed,
                                  std::string session_id) {
    const auto utterances = user_utterances(script);
    if (audio.size() != utterances.size()) {
        throw InvalidArgument("script " + script.conversation_id + " has " +
                              std::to_string(utterances.size()) + " user utterances but " +
                              std::to_string(audio.size()) + " waveforms were supplied");
    }
    for (std::size_t i = 0; i < audio.size(); ++i) {
        if (audio[i].sample_rate != kSampleRate) {
            throw AudioFormatError("utterance " + std::to_string(i) + " is " +
                                   std::to_string(audio[i].sample_rate) + " Hz, expected 24000 Hz");
        }
        if (audio[i].size() < static_cast<std::size_t>(kSamplesPerMs)) {
            throw AudioFormatError("utterance " + std::to_string(i) + " is empty");
        }
    }

    AssembledSession out;
    auto& m = out.manifest;
    m.session_id = session_id.empty()
                       ? script.conversation_id + "-" + difficulty_letter(difficulty)
                       : std::move(session_id);
    m.difficulty = difficulty;
    m.rng_seed = rng_seed;

    const auto range = gap_range(difficulty);
    std::mt19937_64 rng(rng_seed);
    std::uniform_int_distribution<Milliseconds> gap_ms(range.min_ms, range.max_ms);

    std::size_t total = 0;
    std::vector<std::int64_t> gap_samples(audio.empty() ? 0 : audio.size() - 1);
    for (auto& g : gap_samples) {
        g = ms_to_samples(gap_ms(rng));
        total += static_cast<std::size_t>(g);
    }
    for (const auto& a : audio) total += a.size();
    out.waveform.samples.reserve(total);

    std::int64_t cursor = 0;
    for (std::size_t i = 0; i < audio.size(); ++i) {
        auto& samples = out.waveform.samples;
        samples.insert(samples.end(), audio[i].samples.begin(), audio[i].samples.end());
        UserSegment seg;
        seg.start_sample = cursor;
        seg.end_sample = cursor + static_cast<std::int64_t>(audio[i].size());
        seg.start_ms = samples_to_ms(seg.start_sample);
        seg.end_ms = samples_to_ms(seg.end_sample);
        seg.text = utterances[i].text;
        seg.is_interrupt = utterances[i].is_interrupt;
        seg.interrupt_types = utterances[i].types;
        m.segments.push_back(std::move(seg));
        cursor = m.segments.back().end_sample;

        if (i < gap_samples.size()) {
            samples.insert(samples.end(), static_cast<std::size_t>(gap_samples[i]), 0.0f);
            GapSpan g;
            g.start_sample = cursor;
            g.end_sample = cursor + gap_samples[i];
            g.start_ms = samples_to_ms(g.start_sample);
            g.end_ms = samples_to_ms(g.end_sample);
            m.gaps.push_back(g);
            cursor = g.end_sample;
        }
    }
    m.duration_samples = cursor;
    return out;
}

std::vector<float> draw_noise(std::span<const float> noise, std::size_t length,
                              std::uint64_t noise_seed) {
    if (noise.empty()) throw InvalidArgument("empty noise source");
    std::vector<float> out;
    if (length == 0) return out;
    out.reserve(length);

    std::mt19937_64 rng(noise_seed);
    if (noise.size() >= length) {
        std::uniform_int_distribution<std::size_t> pick(0, noise.size() - length);
        const auto off = pick(rng);
        out.assign(noise.begin() + static_cast<std::ptrdiff_t>(off),
                   noise.begin() + static_cast<std::ptrdiff_t>(off + length));
        return out;
    }

    std::uniform_int_distribution<std::size_t> pick(0, noise.size() - 1);
    const auto off = pick(rng);
    out.assign(noise.begin() + static_cast<std::ptrdiff_t>(off), noise.end());
    const std::size_t xfade = std::min<std::size_t>(ms_to_samples(kNoiseCrossfadeMs), noise.size() / 2);
    while (out.size() < length) {
        const std::size_t k = std::min(xfade, out.size());
        const std::size_t base = out.size() - k;
        for (std::size_t i = 0; i < k; ++i) {
            const float w = static_cast<float>(i + 1) / static_cast<float>(k + 1);
            out[base + i] = out[base + i] * (1.0f - w) + noise[i] * w;
        }
        out.insert(out.end(), noise.begin() + static_cast<std::ptrdiff_t>(k), noise.end());
    }
    out.resize(length);
    return out;
}

NoiseMix mix_noise(const Waveform& waveform, const SessionManifest& manifest, NoiseMode mode,
                   int snr_db, const Waveform& noise, std::uint64_t noise_seed) {
    if (mode == NoiseMode::None) throw InvalidArgument("mix_noise needs mode bg or gap");
    if (noise.empty()) throw InvalidArgument("empty noise source");
    if (noise.sample_rate != kSampleRate) throw AudioFormatError("noise must be 24000 Hz");

    NoiseMix mix;
    mix.signal_power = speech_power(waveform, manifest);
    if (mix.signal_power <= 0.0) {
        throw UndefinedMetricError("SNR undefined: speech segments are silent");
    }

    const auto spans = noise_spans(waveform, manifest, mode);
    std::size_t needed = 0;
    for (const auto& s : spans) needed += static_cast<std::size_t>(s.end - s.begin);
    const auto drawn = draw_noise(noise.samples, needed, noise_seed);

    mix.waveform = waveform;
    mix.manifest = manifest;
    mix.manifest.noise_mode = mode;
    mix.manifest.snr_db = snr_db;
    mix.manifest.noise_seed = noise_seed;
    for (auto& g : mix.manifest.gaps) g.has_noise = true;

    if (drawn.empty()) return mix;
    mix.noise_power = mean_square(drawn);
    if (mix.noise_power <= 0.0) throw UndefinedMetricError("SNR undefined: noise source is silent");
    mix.scale = std::sqrt(mix.signal_power / (mix.noise_power * std::pow(10.0, snr_db / 10.0)));

    std::size_t k = 0;
    for (const auto& s : spans) {
        for (auto i = s.begin; i < s.end; ++i) {
            mix.waveform.samples[i] += static_cast<float>(mix.scale * drawn[k++]);
        }
    }
    return mix;
}

double realized_snr_db(const Waveform& clean, const Waveform& mixed,
                       const SessionManifest& manifest, NoiseMode mode) {
    if (clean.size() != mixed.size()) throw InvalidArgument("waveform length mismatch");
    const double ps = speech_power(clean, manifest);
    double acc = 0.0;
    std::int64_t n = 0;
    for (const auto& s : noise_spans(clean, manifest, mode)) {
        for (auto i = s.begin; i < s.end; ++i) {
            const double d = static_cast<double>(mixed.samples[i]) - clean.samples[i];
            acc += d * d;
        }
        n += s.end - s.begin;
    }
    if (ps <= 0.0 || n == 0 || acc <= 0.0) throw UndefinedMetricError("SNR undefined");
    return 10.0 * std::log10(ps / (acc / static_cast<double>(n)));
}

} // namespace fdh
