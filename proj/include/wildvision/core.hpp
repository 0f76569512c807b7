#pragma once

// Shared domain types for the ensemble pipeline. Every value type here is
// validated on construction (or by validate_record) and immutable afterwards.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <compare>
#include <initializer_list>
#include <cstdint>
#include <set>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "wildvision/error.hpp"

namespace wildvision {

inline constexpr int kSchemaVersion = 1;

/// Species label. Normalized to lowercase ASCII at construction.
class ClassLabel {
public:
    explicit ClassLabel(std::string_view raw) : name_(normalize(raw)) {}

    const std::string& str() const noexcept { return name_; }

    friend auto operator<=>(const ClassLabel&, const ClassLabel&) = default;
    friend bool operator==(const ClassLabel&, const ClassLabel&) = default;

private:
    static std::string normalize(std::string_view raw) {
        if (raw.empty()) throw Error(Errc::InvalidLabel, "label is empty");
        std::string out;
        out.reserve(raw.size());
        for (unsigned char c : raw) {
            if (std::isspace(c) || std::iscntrl(c))
                throw Error(Errc::InvalidLabel, "label '" + std::string(raw) + "' contains whitespace");
            out.push_back(static_cast<char>(std::tolower(c)));
        }
        return out;
    }

    std::string name_;
};

using LabelSet = std::set<ClassLabel>;

inline LabelSet make_label_set(std::initializer_list<std::string_view> names) {
    LabelSet out;
    for (auto n : names) out.emplace(n);
    return out;
}

/// Axis-aligned box in absolute pixel coordinates, origin top-left.
struct BBox {
    double x1 = 0, y1 = 0, x2 = 0, y2 = 0;

    double width() const noexcept { return x2 - x1; }
    double height() const noexcept { return y2 - y1; }
    double area() const noexcept { return width() * height(); }

    friend bool operator==(const BBox&, const BBox&) = default;
};

inline bool is_valid(const BBox& b) noexcept {
    const bool finite = std::isfinite(b.x1) && std::isfinite(b.y1) && std::isfinite(b.x2) && std::isfinite(b.y2);
    return finite && b.x1 >= 0 && b.y1 >= 0 && b.x2 > b.x1 && b.y2 > b.y1;
}

struct Detection {
    ClassLabel label;
    double score = 0;
    BBox box;

    friend bool operator==(const Detection&, const Detection&) = default;
};

struct FrameRef {
    std::string segment_id;
    std::int64_t frame_index = 0;
    std::int64_t timestamp_ms = 0;

    friend bool operator==(const FrameRef&, const FrameRef&) = default;
};

/// Frames are identified by (segment, index); the timestamp is derived data.
struct FrameKey {
    std::string segment_id;
    std::int64_t frame_index = 0;

    friend auto operator<=>(const FrameKey&, const FrameKey&) = default;
    friend bool operator==(const FrameKey&, const FrameKey&) = default;
};

inline FrameKey key_of(const FrameRef& f) { return {f.segment_id, f.frame_index}; }

/// Millisecond timestamp of a frame index at a constant frame rate, rounded half-up.
inline std::int64_t timestamp_for(std::int64_t frame_index, double fps) {
    return static_cast<std::int64_t>(std::floor(static_cast<double>(frame_index) * 1000.0 / fps + 0.5));
}

inline bool timestamp_consistent(const FrameRef& f, double fps) {
    const double expected_ms = static_cast<double>(f.frame_index) * 1000.0 / fps;
    return std::abs(static_cast<double>(f.timestamp_ms) - expected_ms) < 1000.0 / fps;
}

class DetectorId {
public:
    explicit DetectorId(std::string name) : name_(std::move(name)) {
        if (name_.empty()) throw Error(Errc::InvalidDetectorId, "detector id is empty");
    }

    const std::string& str() const noexcept { return name_; }

    friend auto operator<=>(const DetectorId&, const DetectorId&) = default;
    friend bool operator==(const DetectorId&, const DetectorId&) = default;

private:
    std::string name_;
};

struct DetectionRecord {
    FrameRef frame;
    DetectorId detector;
    std::vector<Detection> detections;
    int schema_version = kSchemaVersion;

    friend bool operator==(const DetectionRecord&, const DetectionRecord&) = default;
};

inline void validate_detection(const Detection& d) {
    if (!std::isfinite(d.score) || d.score < 0.0 || d.score > 1.0)
        throw Error(Errc::InvalidScore, "score " + std::to_string(d.score) + " for '" + d.label.str() +
                                            "' is outside [0,1]");
    if (!is_valid(d.box))
        throw Error(Errc::InvalidBox, "degenerate or negative box [" + std::to_string(d.box.x1) + "," +
                                          std::to_string(d.box.y1) + "," + std::to_string(d.box.x2) + "," +
                                          std::to_string(d.box.y2) + "] for '" + d.label.str() + "'");
}

/// Returns the record unchanged iff every record invariant holds, throws otherwise.
inline const DetectionRecord& validate_record(const DetectionRecord& record) {
    if (record.schema_version != kSchemaVersion)
        throw Error(Errc::UnknownSchema, "schema_version " + std::to_string(record.schema_version) +
                                             " (expected " + std::to_string(kSchemaVersion) + ")");
    if (record.frame.frame_index < 0 || record.frame.timestamp_ms < 0)
        throw Error(Errc::InvalidArgument, "negative frame_index or timestamp_ms");
    for (const auto& d : record.detections) validate_detection(d);
    return record;
}

}  // namespace wildvision
