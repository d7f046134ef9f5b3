#pragma once

#include <filesystem>
#include <vector>

#include "audio.hpp"
#include "json.hpp"
#include "manifest.hpp"

namespace fdh {

enum class Channel { User, Model };

struct Segment {
    Milliseconds start_ms = 0;
    Milliseconds end_ms = 0;

    Milliseconds duration() const { return end_ms - start_ms; }
    bool contains(Milliseconds t) const { return start_ms <= t && t < end_ms; }
    bool operator==(const Segment&) const = default;
};

// Sorted, non-overlapping, start < end.
struct SegmentTimeline {
    Channel channel = Channel::Model;
    std::vector<Segment> segments;
};

bool satisfies_invariants(const SegmentTimeline& t);

SegmentTimeline user_timeline(const SessionManifest& m);

// JSON list of {start_ms, end_ms}.
nlohmann::json segments_to_json(const std::vector<Segment>& segs);
std::vector<Segment> segments_from_json(const nlohmann::json& j);
std::vector<Segment> load_segments(const std::filesystem::path& path);
void save_segments(const std::filesystem::path& path, const std::vector<Segment>& segs);

} // namespace fdh
