#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "audio.hpp"
#include "manifest.hpp"
#include "script.hpp"

namespace fdh {

struct AssembledSession {
    Waveform waveform;
    SessionManifest manifest;
};

// Concatenates one waveform per user utterance (conversational order, see
// user_utterances) with zero-valued gaps drawn uniformly from the
// difficulty's range. Boundaries in the manifest are sample exact and the
// result is a pure function of (inputs, seed).
AssembledSession assemble_session(std::span<const Waveform> utterance_audio,
                                  const ConversationScript& script, Difficulty difficulty,
                                  std::uint64_t rng_seed, std::string session_id = {});

inline constexpr Milliseconds kNoiseCrossfadeMs = 10;

// Draws `length` samples from a noise clip starting at a seeded random
// offset, wrapping around with a short linear crossfade when the clip is
// shorter than requested.
std::vector<float> draw_noise(std::span<const float> noise, std::size_t length,
                              std::uint64_t noise_seed);

struct NoiseMix {
    Waveform waveform;
    SessionManifest manifest;
    double scale = 0.0;        // factor applied to the raw noise
    double signal_power = 0.0; // mean square over the speech segments
    double noise_power = 0.0;  // mean square of the raw inserted noise
};

// Adds noise at the requested SNR. Signal power is measured over the
// manifest's speech segments, noise power over the inserted span before
// scaling. Bg covers the whole session, Gap only the inter-utterance gaps
// (speech samples stay bit identical).
NoiseMix mix_noise(const Waveform& waveform, const SessionManifest& manifest, NoiseMode mode,
                   int snr_db, const Waveform& noise, std::uint64_t noise_seed);

// 10*log10(P_signal / P_noise) where the noise is recovered as
// (mixed - clean) over the noise-bearing spans.
double realized_snr_db(const Waveform& clean, const Waveform& mixed,
                       const SessionManifest& manifest, NoiseMode mode);

} // namespace fdh
