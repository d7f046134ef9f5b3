#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "audio.hpp"
#include "json.hpp"
#include "script.hpp"

namespace fdh {

enum class Difficulty { Easy, Medium, Hard };
enum class NoiseMode { None, Bg, Gap };

struct GapRange {
    Milliseconds min_ms;
    Milliseconds max_ms;
};

// Silence inserted between consecutive user utterances.
//   Easy 6-10 s, Medium 4-6 s, Hard 2-4 s.
GapRange gap_range(Difficulty d);

std::string to_string(Difficulty d);
std::string to_string(NoiseMode m);
Difficulty parse_difficulty(std::string_view s);
NoiseMode parse_noise_mode(std::string_view s);

struct UserSegment {
    std::int64_t start_sample = 0;
    std::int64_t end_sample = 0;
    Milliseconds start_ms = 0;
    Milliseconds end_ms = 0;
    std::string text;
    bool is_interrupt = false;
    std::vector<InterruptType> interrupt_types;

    bool operator==(const UserSegment&) const = default;
};

struct GapSpan {
    std::int64_t start_sample = 0;
    std::int64_t end_sample = 0;
    Milliseconds start_ms = 0;
    Milliseconds end_ms = 0;
    bool has_noise = false;

    bool operator==(const GapSpan&) const = default;
};

struct SessionManifest {
    std::string session_id;
    int sample_rate_hz = kSampleRate;
    Difficulty difficulty = Difficulty::Easy;
    NoiseMode noise_mode = NoiseMode::None;
    std::optional<int> snr_db;
    std::uint64_t rng_seed = 0;
    std::optional<std::uint64_t> noise_seed;
    std::optional<std::string> noise_source;
    std::int64_t duration_samples = 0;
    std::vector<UserSegment> segments;
    std::vector<GapSpan> gaps;

    Milliseconds duration_ms() const { return samples_to_ms(duration_samples); }

    bool operator==(const SessionManifest&) const = default;
};

// Checks every manifest invariant; returns human-readable problems.
std::vector<std::string> check_manifest(const SessionManifest& m);

nlohmann::json to_json(const SessionManifest& m);
SessionManifest manifest_from_json(const nlohmann::json& j);

SessionManifest load_manifest(const std::filesystem::path& path);
void save_manifest(const std::filesystem::path& path, const SessionManifest& m);

} // namespace fdh
