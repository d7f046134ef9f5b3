#include "fdh/manifest.hpp"

#include <fstream>
#include <sstream>

#include "fdh/error.hpp"

namespace fdh {

using nlohmann::json;

GapRange gap_range(Difficulty d) {
    switch (d) {
    case Difficulty::Easy: return {6000, 10000};
    case Difficulty::Medium: return {4000, 6000};
    case Difficulty::Hard: return {2000, 4000};
    }
    return {0, 0};
}

std::string to_string(Difficulty d) {
    switch (d) {
    case Difficulty::Easy: return "easy";
    case Difficulty::Medium: return "medium";
    case Difficulty::Hard: return "hard";
    }
    return "?";
}

std::string to_string(NoiseMode m) {
    switch (m) {
    case NoiseMode::None: return "none";
    case NoiseMode::Bg: return "bg";
    case NoiseMode::Gap: return "gap";
    }
    return "?";
}

Difficulty parse_difficulty(std::string_view s) {
    if (s == "easy" || s == "E") return Difficulty::Easy;
    if (s == "medium" || s == "M") return Difficulty::Medium;
    if (s == "hard" || s == "H") return Difficulty::Hard;
    throw InvalidArgument("unknown difficulty '" + std::string(s) + "'");
}

NoiseMode parse_noise_mode(std::string_view s) {
    if (s == "none") return NoiseMode::None;
    if (s == "bg") return NoiseMode::Bg;
    if (s == "gap") return NoiseMode::Gap;
    throw InvalidArgument("unknown noise mode '" + std::string(s) + "'");
}

std::vector<std::string> check_manifest(const SessionManifest& m) {
    std::vector<std::string> problems;
    auto fail = [&](std::string p) { problems.push_back(std::move(p)); };

    if (m.sample_rate_hz != kSampleRate) fail("sample_rate_hz must be 24000");
    for (std::size_t i = 0; i < m.segments.size(); ++i) {
        const auto& s = m.segments[i];
        if (!(s.start_sample < s.end_sample) || !(s.start_ms < s.end_ms)) {
            fail("segment " + std::to_string(i) + " has start >= end");
        }
        if (i > 0 && s.start_sample < m.segments[i - 1].end_sample) {
            fail("segment " + std::to_string(i) + " overlaps its predecessor");
        }
        if (s.end_sample > m.duration_samples) fail("segment " + std::to_string(i) + " past end");
        if (!s.is_interrupt && !s.interrupt_types.empty()) {
            fail("segment " + std::to_string(i) + " has types but is not an interrupt");
        }
    }

    const auto range = gap_range(m.difficulty);
    const std::size_t expected_gaps = m.segments.empty() ? 0 : m.segments.size() - 1;
    if (m.gaps.size() != expected_gaps) {
        fail("expected " + std::to_string(expected_gaps) + " gaps, found " +
             std::to_string(m.gaps.size()));
    }
    for (std::size_t i = 0; i < m.gaps.size(); ++i) {
        const auto& g = m.gaps[i];
        if (!(g.start_sample < g.end_sample)) fail("gap " + std::to_string(i) + " is empty");
        const Milliseconds len = g.end_ms - g.start_ms;
        if (len < range.min_ms || len > range.max_ms) {
            fail("gap " + std::to_string(i) + " duration " + std::to_string(len) +
                 " ms outside difficulty range");
        }
        if (i + 1 < m.segments.size() &&
            (g.start_sample != m.segments[i].end_sample ||
             g.end_sample != m.segments[i + 1].start_sample)) {
            fail("gap " + std::to_string(i) + " does not tile the space between segments");
        }
        if (m.noise_mode == NoiseMode::None && g.has_noise) {
            fail("gap " + std::to_string(i) + " has noise but noise_mode is none");
        }
    }
    if ((m.noise_mode == NoiseMode::None) != !m.snr_db.has_value()) {
        fail("snr_db must be present exactly when noise_mode is not none");
    }
    if (m.snr_db && *m.snr_db != 0 && *m.snr_db != 10 && *m.snr_db != 20) {
        fail("snr_db must be one of 0, 10, 20");
    }
    return problems;
}

json to_json(const SessionManifest& m) {
    json segs = json::array();
    for (const auto& s : m.segments) {
        json types = json::array();
        for (auto t : s.interrupt_types) types.push_back(std::string(1, to_char(t)));
        json js = {{"start_ms", s.start_ms},         {"end_ms", s.end_ms},
                   {"start_sample", s.start_sample}, {"end_sample", s.end_sample},
                   {"text", s.text},                 {"is_interrupt", s.is_interrupt}};
        if (s.is_interrupt) js["interrupt_types"] = types;
        segs.push_back(std::move(js));
    }
    json gaps = json::array();
    for (const auto& g : m.gaps) {
        gaps.push_back({{"start_ms", g.start_ms},
                        {"end_ms", g.end_ms},
                        {"start_sample", g.start_sample},
                        {"end_sample", g.end_sample},
                        {"has_noise", g.has_noise}});
    }
    json j = {{"session_id", m.session_id},
              {"sample_rate_hz", m.sample_rate_hz},
              {"difficulty", to_string(m.difficulty)},
              {"noise_mode", to_string(m.noise_mode)},
              {"rng_seed", m.rng_seed},
              {"duration_samples", m.duration_samples},
              {"duration_ms", m.duration_ms()},
              {"segments", segs},
              {"gaps", gaps}};
    j["snr_db"] = m.snr_db ? json(*m.snr_db) : json(nullptr);
    if (m.noise_seed) j["noise_seed"] = *m.noise_seed;
    if (m.noise_source) j["noise_source"] = *m.noise_source;
    return j;
}

SessionManifest manifest_from_json(const json& j) {
    try {
        SessionManifest m;
        m.session_id = j.at("session_id").get<std::string>();
        m.sample_rate_hz = j.at("sample_rate_hz").get<int>();
        m.difficulty = parse_difficulty(j.at("difficulty").get<std::string>());
        m.noise_mode = parse_noise_mode(j.at("noise_mode").get<std::string>());
        if (j.contains("snr_db") && !j["snr_db"].is_null()) m.snr_db = j["snr_db"].get<int>();
        m.rng_seed = j.at("rng_seed").get<std::uint64_t>();
        if (j.contains("noise_seed")) m.noise_seed = j["noise_seed"].get<std::uint64_t>();
        if (j.contains("noise_source")) m.noise_source = j["noise_source"].get<std::string>();
        m.duration_samples = j.at("duration_samples").get<std::int64_t>();
        for (const auto& js : j.at("segments")) {
            UserSegment s;
            s.start_ms = js.at("start_ms").get<Milliseconds>();
            s.end_ms = js.at("end_ms").get<Milliseconds>();
            s.start_sample = js.value("start_sample", ms_to_samples(s.start_ms));
            s.end_sample = js.value("end_sample", ms_to_samples(s.end_ms));
            s.text = js.value("text", "");
            s.is_interrupt = js.value("is_interrupt", false);
            if (js.contains("interrupt_types")) {
                for (const auto& t : js["interrupt_types"]) {
                    auto s_t = t.get<std::string>();
                    auto parsed = s_t.size() == 1 ? interrupt_type_from_char(s_t[0]) : std::nullopt;
                    if (!parsed) throw ParseError("manifest: unknown interrupt type '" + s_t + "'");
                    s.interrupt_types.push_back(*parsed);
                }
            }
            m.segments.push_back(std::move(s));
        }
        for (const auto& jg : j.at("gaps")) {
            GapSpan g;
            g.start_ms = jg.at("start_ms").get<Milliseconds>();
            g.end_ms = jg.at("end_ms").get<Milliseconds>();
            g.start_sample = jg.value("start_sample", ms_to_samples(g.start_ms));
            g.end_sample = jg.value("end_sample", ms_to_samples(g.end_ms));
            g.has_noise = jg.value("has_noise", false);
            m.gaps.push_back(g);
        }
        return m;
    } catch (const json::exception& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    } catch (const InvalidArgument& e) {
        throw ParseError(std::string("manifest: ") + e.what());
    }
}

SessionManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return manifest_from_json(j);
}

void save_manifest(const std::filesystem::path& path, const SessionManifest& m) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << to_json(m).dump(2) << '\n';
}

} // namespace fdh
