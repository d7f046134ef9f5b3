#pragma once

#include <chrono>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "audio.hpp"
#include "json.hpp"

namespace fdh {

struct WordStamp {
    std::string word;
    Milliseconds start_ms = 0;
    Milliseconds end_ms = 0;

    bool operator==(const WordStamp&) const = default;
};

struct Transcript {
    std::string text;
    std::vector<WordStamp> words;  // may be empty; no metric consumes them

    bool operator==(const Transcript&) const = default;
};

nlohmann::json to_json(const Transcript& t);
Transcript transcript_from_json(const nlohmann::json& j);

class AsrAdapter {
public:
    virtual ~AsrAdapter() = default;
    // Throws ServiceError on failure.
    virtual Transcript transcribe(const Waveform& audio, int beam_size) = 0;
};

// Returns the contents of a transcript file regardless of the audio:
// plain text, or a JSON Transcript when the file ends in .json.
class PrecomputedAsr : public AsrAdapter {
public:
    explicit PrecomputedAsr(std::filesystem::path path) : path_(std::move(path)) {}
    Transcript transcribe(const Waveform& audio, int beam_size) override;

private:
    std::filesystem::path path_;
};

// POSTs WAV bytes to `url?beam_size=N`; the reply is a JSON Transcript
// ({"text": ..., "words": [{"word", "start_ms", "end_ms"}]}).
class ServiceAsr : public AsrAdapter {
public:
    explicit ServiceAsr(std::string url) : url_(std::move(url)) {}
    Transcript transcribe(const Waveform& audio, int beam_size) override;

private:
    std::string url_;
};

struct TranscribeOptions {
    int beam_size = 5;
    std::optional<std::filesystem::path> cache_dir;
    int max_attempts = 3;
    std::chrono::milliseconds retry_backoff{200};
};

// Cache key: SHA-256 of the audio's WAV encoding.
std::string audio_cache_key(const Waveform& audio);

// Cached transcripts win; otherwise the adapter is tried up to
// max_attempts times. `asr` may be null for cache-only lookups. Throws
// ServiceError(retriable = true) when nothing could be produced.
Transcript transcribe(const Waveform& audio, AsrAdapter* asr, const TranscribeOptions& opts = {});

} // namespace fdh
