#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "error.hpp"
#include "events.hpp"
#include "manifest.hpp"
#include "vad.hpp"

namespace fdh {

// A pipeline stage failed; what() names the stage and, when known, the
// session.
class StageError : public Error {
public:
    StageError(std::string stage, std::string session, const std::string& detail);
    const std::string& stage() const { return stage_; }
    const std::string& session() const { return session_; }

private:
    std::string stage_;
    std::string session_;
};

struct EndpointConfig {
    std::string name;
    std::string url;  // "mock:BEHAVIOR.json" or "HOST:PORT"
    Milliseconds chunk_ms = 80;
    std::string clock = "virtual";
};

struct PipelineConfig {
    std::filesystem::path work_dir = "fd-work";
    int workers = 4;

    // generate (optional)
    bool generate = false;
    std::filesystem::path topics_file;
    int generate_count = 0;
    std::optional<std::filesystem::path> generate_replay;
    std::optional<std::string> generate_base_url;
    std::string generate_model = "gpt-4o-2024-11-20";

    // build-corpus
    std::filesystem::path scripts_dir;
    std::filesystem::path audio_dir;  // <conversation_id>/<k>.wav
    bool placeholder_audio = false;   // tone bursts when an utterance WAV is missing
    std::vector<Difficulty> difficulties = {Difficulty::Easy};
    std::vector<NoiseMode> noise_modes = {NoiseMode::None};
    std::vector<int> snr_db = {10};
    std::optional<std::filesystem::path> noise_file;
    std::uint64_t seed = 1;

    std::vector<EndpointConfig> endpoints;

    // segment
    std::string vad = "builtin";
    VadOptions vad_options;

    DetectorConfig detector;

    // quality (optional)
    std::optional<std::filesystem::path> scores_file;
    std::optional<std::filesystem::path> judge_replay;
    std::optional<std::string> judge_base_url;
    std::string judge_model = "gpt-4o-2024-11-20";
    double judge_temperature = 0.2;
    int judge_in_flight = 4;
};

// TOML-style key/value document with [pipeline], [generate], [corpus],
// [segment], [events], [analyze], [judge] and one [endpoint.NAME] section
// per model server. Relative paths resolve against `base_dir`.
PipelineConfig parse_pipeline_config(const std::string& text, const std::filesystem::path& base_dir);
PipelineConfig load_pipeline_config(const std::filesystem::path& path);

struct StageTally {
    int ran = 0;
    int skipped = 0;
};

struct PipelineResult {
    std::map<std::string, StageTally> stages;
    std::vector<std::filesystem::path> reports;

    int total_ran() const;
};

using PipelineLog = std::function<void(const std::string&)>;

// Runs generate (if enabled), build-corpus, run, segment, events and
// analyze. Each unit of work is skipped when a stamp records the same
// input hash and its outputs still exist. Throws StageError on the first
// failure; finished artifacts stay on disk.
PipelineResult run_pipeline(const PipelineConfig& config, const PipelineLog& log = {});

// Dataset label for a difficulty / noise combination, e.g. "E", "H-gap10".
std::string dataset_name(Difficulty d, NoiseMode m, std::optional<int> snr_db);

// Deterministic placeholder for a missing utterance recording: a tone
// burst about 300 ms per word.
Waveform placeholder_utterance(const std::string& text, std::uint64_t seed);

} // namespace fdh
