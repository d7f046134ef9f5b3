#include "fdh/asr.hpp"

#include <fstream>
#include <sstream>
#include <thread>

#include "fdh/error.hpp"
#include "fdh/hash.hpp"
#include "fdh/http.hpp"

namespace fdh {

using nlohmann::json;

json to_json(const Transcript& t) {
    json words = json::array();
    for (const auto& w : t.words) words.push_back({{"word", w.word}, {"start_ms", w.start_ms}, {"end_ms", w.end_ms}});
    return {{"text", t.text}, {"words", words}};
}

Transcript transcript_from_json(const json& j) {
    try {
        Transcript t;
        t.text = j.at("text").get<std::string>();
        if (j.contains("words")) {
            for (const auto& w : j.at("words")) {
                t.words.push_back({w.at("word").get<std::string>(), w.at("start_ms").get<Milliseconds>(),
                                   w.at("end_ms").get<Milliseconds>()});
            }
        }
        return t;
    } catch (const json::exception& e) {
        throw ParseError(std::string("transcript: ") + e.what());
    }
}

namespace {

std::string slurp(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ServiceError("cannot read transcript " + path.string(), false);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::string trim(std::string s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace

Transcript PrecomputedAsr::transcribe(const Waveform&, int) {
    const auto text = slurp(path_);
    if (path_.extension() == ".json") {
        try {
            return transcript_from_json(json::parse(text));
        } catch (const std::exception& e) {
            throw ServiceError(path_.string() + ": " + e.what(), false);
        }
    }
    return {trim(text), {}};
}

Transcript ServiceAsr::transcribe(const Waveform& audio, int beam_size) {
    const auto wav = encode_wav(audio);
    const std::string sep = url_.find('?') == std::string::npos ? "?" : "&";
    const auto resp = http_post(url_ + sep + "beam_size=" + std::to_string(beam_size),
                                std::string(wav.begin(), wav.end()), "audio/wav");
    try {
        return transcript_from_json(json::parse(resp.body));
    } catch (const std::exception& e) {
        throw ServiceError(std::string("ASR service returned an invalid transcript: ") + e.what(), true);
    }
}

std::string audio_cache_key(const Waveform& audio) {
    return sha256_hex(encode_wav(audio));
}

Transcript transcribe(const Waveform& audio, AsrAdapter* asr, const TranscribeOptions& opts) {
    std::optional<std::filesystem::path> cached;
    if (opts.cache_dir) {
        cached = *opts.cache_dir / (audio_cache_key(audio) + ".json");
        if (std::filesystem::exists(*cached)) {
            std::ifstream in(*cached);
            try {
                return transcript_from_json(json::parse(in));
            } catch (const std::exception&) {
                // corrupt cache entry; fall through and recompute
            }
        }
    }
    if (!asr) throw ServiceError("no transcript cached and no ASR backend configured", true);

    std::string last_error;
    auto backoff = opts.retry_backoff;
    for (int attempt = 1; attempt <= std::max(1, opts.max_attempts); ++attempt) {
        try {
            auto t = asr->transcribe(audio, opts.beam_size);
            if (cached) {
                std::filesystem::create_directories(cached->parent_path());
                std::ofstream(*cached, std::ios::trunc) << to_json(t).dump() << '\n';
            }
            return t;
        } catch (const ServiceError& e) {
            last_error = e.what();
            if (!e.retriable()) break;
        }
        if (attempt < opts.max_attempts) {
            std::this_thread::sleep_for(backoff);
            backoff *= 2;
        }
    }
    throw ServiceError("ASR failed: " + last_error, true);
}

} // namespace fdh
