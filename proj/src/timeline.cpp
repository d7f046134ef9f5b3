#include "fdh/timeline.hpp"

#include <fstream>

#include "fdh/error.hpp"

namespace fdh {

using nlohmann::json;

bool satisfies_invariants(const SegmentTimeline& t) {
    for (std::size_t i = 0; i < t.segments.size(); ++i) {
        const auto& s = t.segments[i];
        if (!(s.start_ms < s.end_ms)) return false;
        if (i > 0 && s.start_ms < t.segments[i - 1].end_ms) return false;
    }
    return true;
}

SegmentTimeline user_timeline(const SessionManifest& m) {
    SegmentTimeline t{Channel::User, {}};
    for (const auto& s : m.segments) t.segments.push_back({s.start_ms, s.end_ms});
    return t;
}

json segments_to_json(const std::vector<Segment>& segs) {
    json out = json::array();
    for (const auto& s : segs) out.push_back({{"start_ms", s.start_ms}, {"end_ms", s.end_ms}});
    return out;
}

std::vector<Segment> segments_from_json(const json& j) {
    if (!j.is_array()) throw ParseError("timestamps: expected a JSON list");
    std::vector<Segment> out;
    try {
        for (const auto& e : j) out.push_back({e.at("start_ms").get<Milliseconds>(), e.at("end_ms").get<Milliseconds>()});
    } catch (const json::exception& e) {
        throw ParseError(std::string("timestamps: ") + e.what());
    }
    return out;
}

std::vector<Segment> load_segments(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open " + path.string());
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ParseError(path.string() + ": " + e.what());
    }
    return segments_from_json(j);
}

void save_segments(const std::filesystem::path& path, const std::vector<Segment>& segs) {
    std::ofstream out(path, std::ios::trunc);
    if (!out) throw Error("cannot write " + path.string());
    out << segments_to_json(segs).dump(2) << '\n';
}

} // namespace fdh
