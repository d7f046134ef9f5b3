#pragma once

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "fdh/audio.hpp"
#include "fdh/script.hpp"

namespace test {

// Scratch directory removed on scope exit.
class TempDir {
public:
    TempDir() {
        static std::mt19937_64 rng{std::random_device{}()};
        path_ = std::filesystem::temp_directory_path() / ("fdh-test-" + std::to_string(rng()));
        std::filesystem::create_directories(path_);
    }
    ~TempDir() {
        std::error_code ec;
        std::filesystem::remove_all(path_, ec);
    }
    TempDir(const TempDir&) = delete;
    TempDir& operator=(const TempDir&) = delete;

    const std::filesystem::path& path() const { return path_; }
    std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

private:
    std::filesystem::path path_;
};

inline void write_text(const std::filesystem::path& p, const std::string& text) {
    std::filesystem::create_directories(p.parent_path());
    std::ofstream(p, std::ios::trunc) << text;
}

inline std::string read_text(const std::filesystem::path& p) {
    std::ifstream in(p);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline fdh::Waveform tone_ms(fdh::Milliseconds ms, double freq = 300.0, double amp = 0.3) {
    return {fdh::kSampleRate, fdh::make_tone(static_cast<std::size_t>(fdh::ms_to_samples(ms)), freq, amp)};
}

inline fdh::Waveform silence_ms(fdh::Milliseconds ms) {
    return {fdh::kSampleRate, std::vector<float>(static_cast<std::size_t>(fdh::ms_to_samples(ms)), 0.0f)};
}

inline fdh::Waveform concat(std::initializer_list<fdh::Waveform> parts) {
    fdh::Waveform out;
    for (const auto& p : parts) out.samples.insert(out.samples.end(), p.samples.begin(), p.samples.end());
    return out;
}

// Two rounds: inquiry, interruption (F), inquiry, interruption (A+S).
inline fdh::ConversationScript sample_script(const std::string& id = "conv-test") {
    using fdh::InterruptType;
    fdh::ConversationScript s;
    s.conversation_id = id;
    s.topic = "testing";
    s.rounds.push_back({"first question please", {{{InterruptType::F}, "what about that"}}});
    s.rounds.push_back({"second question", {{{InterruptType::A, InterruptType::S}, "okay and another thing"}}});
    return s;
}

// Independent word-level edit distance: memoized recursion over suffixes.
inline std::size_t edit_distance_oracle(const std::vector<std::string>& a, const std::vector<std::string>& b) {
    std::map<std::pair<std::size_t, std::size_t>, std::size_t> memo;
    std::function<std::size_t(std::size_t, std::size_t)> go = [&](std::size_t i, std::size_t j) -> std::size_t {
        if (i == a.size()) return b.size() - j;
        if (j == b.size()) return a.size() - i;
        const auto key = std::make_pair(i, j);
        if (auto it = memo.find(key); it != memo.end()) return it->second;
        const std::size_t best = std::min({go(i + 1, j + 1) + (a[i] == b[j] ? 0u : 1u), go(i + 1, j) + 1, go(i, j + 1) + 1});
        memo[key] = best;
        return best;
    };
    return go(0, 0);
}

// Median by counting: the value(s) with half the list on either side.
inline std::optional<double> median_oracle(const std::vector<double>& v) {
    if (v.empty()) return std::nullopt;
    std::vector<double> s = v;
    std::sort(s.begin(), s.end());
    const std::size_t lo = (s.size() - 1) / 2, hi = s.size() / 2;
    return (s[lo] + s[hi]) / 2.0;
}

} // namespace test
