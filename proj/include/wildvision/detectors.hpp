#pragma once

// Detector backends, the confidence threshold, and the .detjsonl wire format.
//
// Wire format: JSON Lines, one DetectionRecord per line, fields in this order:
//   {"schema_version":1,"segment_id":"seg","frame_index":0,"timestamp_ms":0,
//    "detector":"D2.A","detections":[{"label":"cacao","score":0.9,"box":[x1,y1,x2,y2]}]}

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <memory>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "wildvision/core.hpp"
#include "wildvision/error.hpp"
#include "wildvision/sampler.hpp"

namespace wildvision {

class ConfidenceThreshold {
public:
    static constexpr double kDefault = 0.5;

    explicit ConfidenceThreshold(double tau = kDefault) : tau_(tau) {
        if (!(tau >= 0.0 && tau <= 1.0))
            throw Error(Errc::InvalidArgument, "threshold " + std::to_string(tau) + " not in [0,1]");
    }

    double value() const noexcept { return tau_; }

    friend auto operator<=>(const ConfidenceThreshold&, const ConfidenceThreshold&) = default;

private:
    double tau_;
};

/// Detections with score >= tau, in their original order.
inline std::vector<Detection> threshold_filter(const std::vector<Detection>& dets, ConfidenceThreshold tau) {
    std::vector<Detection> kept;
    kept.reserve(dets.size());
    for (const auto& d : dets)
        if (d.score >= tau.value()) kept.push_back(d);
    return kept;
}

/// A detector the ensemble can query. detect() must be deterministic for a
/// fixed configuration and frame, and safe to call concurrently.
class DetectorBackend {
public:
    virtual ~DetectorBackend() = default;
    virtual const DetectorId& id() const noexcept = 0;
    virtual std::vector<Detection> detect(const FrameSample& frame) const = 0;
};

using BackendPtr = std::shared_ptr<const DetectorBackend>;

// ---------------------------------------------------------------------------
// Wire format

inline nlohmann::ordered_json encode_json(const DetectionRecord& r) {
    nlohmann::ordered_json dets = nlohmann::ordered_json::array();
    for (const auto& d : r.detections) {
        nlohmann::ordered_json jd;
        jd["label"] = d.label.str();
        jd["score"] = d.score;
        jd["box"] = {d.box.x1, d.box.y1, d.box.x2, d.box.y2};
        dets.push_back(std::move(jd));
    }
    nlohmann::ordered_json j;
    j["schema_version"] = r.schema_version;
    j["segment_id"] = r.frame.segment_id;
    j["frame_index"] = r.frame.frame_index;
    j["timestamp_ms"] = r.frame.timestamp_ms;
    j["detector"] = r.detector.str();
    j["detections"] = std::move(dets);
    return j;
}

/// One wire line, without the trailing newline.
inline std::string encode_line(const DetectionRecord& r) { return encode_json(r).dump(); }

namespace detail {

template <class T>
T field(const nlohmann::json& j, const char* name) {
    const auto it = j.find(name);
    if (it == j.end()) throw Error(Errc::ParseError, std::string("missing field '") + name + "'");
    try {
        return it->get<T>();
    } catch (const nlohmann::json::exception&) {
        throw Error(Errc::ParseError, std::string("field '") + name + "' has the wrong type");
    }
}

}  // namespace detail

/// Parses and validates one wire line.
inline DetectionRecord decode_line(std::string_view line) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::ParseError, std::string("malformed JSON (") + e.what() + ")");
    }
    if (!j.is_object()) throw Error(Errc::ParseError, "record is not a JSON object");

    const auto schema = detail::field<int>(j, "schema_version");
    if (schema != kSchemaVersion)
        throw Error(Errc::UnknownSchema, "schema_version " + std::to_string(schema) + " (expected " +
                                             std::to_string(kSchemaVersion) + ")");
    FrameRef frame{detail::field<std::string>(j, "segment_id"), detail::field<std::int64_t>(j, "frame_index"),
                   detail::field<std::int64_t>(j, "timestamp_ms")};
    DetectionRecord r{std::move(frame), DetectorId(detail::field<std::string>(j, "detector")), {}, schema};

    const auto dets = j.find("detections");
    if (dets == j.end() || !dets->is_array()) throw Error(Errc::ParseError, "'detections' must be an array");
    for (const auto& jd : *dets) {
        if (!jd.is_object()) throw Error(Errc::ParseError, "detection is not an object");
        const auto box = detail::field<std::vector<double>>(jd, "box");
        if (box.size() != 4) throw Error(Errc::ParseError, "box must have 4 coordinates");
        r.detections.push_back({ClassLabel(detail::field<std::string>(jd, "label")),
                                detail::field<double>(jd, "score"), BBox{box[0], box[1], box[2], box[3]}});
    }
    validate_record(r);
    return r;
}

inline void write_wire(std::ostream& out, const std::vector<DetectionRecord>& records) {
    for (const auto& r : records) out << encode_line(r) << '\n';
}

inline void write_wire(const std::filesystem::path& path, const std::vector<DetectionRecord>& records) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    write_wire(out, records);
}

// ---------------------------------------------------------------------------
// Replay

/// Read-only map from (detector, frame) to the recorded detections.
class ReplayStore {
public:
    using Key = std::pair<DetectorId, FrameKey>;

    /// Validates and inserts; a second record for the same key is rejected.
    void insert(DetectionRecord record) {
        validate_record(record);
        Key key{record.detector, key_of(record.frame)};
        if (records_.contains(key))
            throw Error(Errc::DuplicateKey, "detector '" + record.detector.str() + "' frame " +
                                                record.frame.segment_id + "#" +
                                                std::to_string(record.frame.frame_index) + " appears twice");
        records_.emplace(std::move(key), std::move(record));
    }

    const DetectionRecord* find(const DetectorId& id, const FrameKey& frame) const {
        const auto it = records_.find(Key{id, frame});
        return it == records_.end() ? nullptr : &it->second;
    }

    std::set<DetectorId> detectors() const {
        std::set<DetectorId> ids;
        for (const auto& [key, _] : records_) ids.insert(key.first);
        return ids;
    }

    std::vector<DetectionRecord> records() const {
        std::vector<DetectionRecord> out;
        out.reserve(records_.size());
        for (const auto& [_, r] : records_) out.push_back(r);
        return out;
    }

    std::size_t size() const noexcept { return records_.size(); }
    bool empty() const noexcept { return records_.empty(); }

private:
    std::map<Key, DetectionRecord> records_;
};

/// Recorded detections for the key; a missing key means the detector found nothing.
inline std::vector<Detection> replay_detect(const ReplayStore& store, const DetectorId& id, const FrameRef& frame) {
    const DetectionRecord* r = store.find(id, key_of(frame));
    return r ? r->detections : std::vector<Detection>{};
}

/// Parses a wire stream into the store. `source` names the stream in errors.
inline void load_wire_stream(std::istream& in, const std::string& source, ReplayStore& store) {
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.find_first_not_of(" \t") == std::string::npos) continue;
        try {
            store.insert(decode_line(line));
        } catch (const Error& e) {
            throw Error(e.code(), source + ":" + std::to_string(line_no) + ": " + e.what());
        }
    }
}

inline ReplayStore load_wire(const std::vector<std::filesystem::path>& paths) {
    ReplayStore store;
    for (const auto& p : paths) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw Error(Errc::IoError, "cannot open wire file " + p.string());
        load_wire_stream(in, p.string(), store);
    }
    return store;
}

class ReplayBackend final : public DetectorBackend {
public:
    ReplayBackend(DetectorId id, std::shared_ptr<const ReplayStore> store)
        : id_(std::move(id)), store_(std::move(store)) {}

    const DetectorId& id() const noexcept override { return id_; }
    std::vector<Detection> detect(const FrameSample& frame) const override {
        return replay_detect(*store_, id_, frame.frame);
    }

private:
    DetectorId id_;
    std::shared_ptr<const ReplayStore> store_;
};

/// One backend per detector id present in the store.
inline std::vector<BackendPtr> replay_backends(std::shared_ptr<const ReplayStore> store) {
    std::vector<BackendPtr> out;
    for (const auto& id : store->detectors()) out.push_back(std::make_shared<ReplayBackend>(id, store));
    return out;
}

// ---------------------------------------------------------------------------
// Seeded mock detector

struct MockDetectorConfig {
    std::uint64_t seed = 0;
    std::map<FrameKey, LabelSet> true_labels;
    double hit_rate = 1.0;
    double fp_rate = 0.0;
    std::vector<ClassLabel> fp_vocabulary;
    double score_lo = 0.5;
    double score_hi = 1.0;
};

inline void validate_mock_config(const MockDetectorConfig& cfg) {
    auto in_unit = [](double v) { return v >= 0.0 && v <= 1.0; };
    if (!in_unit(cfg.hit_rate) || !in_unit(cfg.fp_rate))
        throw Error(Errc::InvalidArgument, "mock hit_rate and fp_rate must lie in [0,1]");
    if (!in_unit(cfg.score_lo) || !in_unit(cfg.score_hi) || cfg.score_lo > cfg.score_hi)
        throw Error(Errc::InvalidArgument, "mock score_range must satisfy 0 <= lo <= hi <= 1");
}

namespace detail {

constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t fnv1a(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

constexpr double unit_interval(std::uint64_t h) noexcept { return static_cast<double>(h >> 11) * 0x1.0p-53; }

}  // namespace detail

/// Per-(seed, frame, label) random state; stable across platforms and call order.
inline std::uint64_t mock_label_hash(std::uint64_t seed, const FrameKey& frame, const ClassLabel& label) {
    using detail::fnv1a;
    using detail::splitmix64;
    std::uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ fnv1a(frame.segment_id));
    h = splitmix64(h ^ static_cast<std::uint64_t>(frame.frame_index));
    return splitmix64(h ^ fnv1a(label.str()));
}

/// Fixed box covering the central half of the frame (unit box when no pixels).
inline BBox mock_box(const FrameSample& frame) {
    if (frame.pixels.empty()) return {0, 0, 1, 1};
    return attention_crop(frame.pixels.width, frame.pixels.height, AttentionCrop(0.5));
}

/// Each true label is emitted with probability hit_rate, each other vocabulary
/// label with probability fp_rate; scores are uniform in [score_lo, score_hi].
inline std::vector<Detection> mock_detect(const MockDetectorConfig& cfg, const FrameSample& frame) {
    const FrameKey key = key_of(frame.frame);
    const auto truth_it = cfg.true_labels.find(key);
    const LabelSet empty;
    const LabelSet& truth = truth_it == cfg.true_labels.end() ? empty : truth_it->second;
    const BBox box = mock_box(frame);

    std::vector<Detection> out;
    auto draw = [&](const ClassLabel& label, double rate) {
        const std::uint64_t h = mock_label_hash(cfg.seed, key, label);
        if (detail::unit_interval(h) >= rate) return;
        const double u = detail::unit_interval(detail::splitmix64(h));
        out.push_back({label, cfg.score_lo + u * (cfg.score_hi - cfg.score_lo), box});
    };
    for (const auto& label : truth) draw(label, cfg.hit_rate);
    std::set<ClassLabel> seen;
    for (const auto& label : cfg.fp_vocabulary)
        if (!truth.contains(label) && seen.insert(label).second) draw(label, cfg.fp_rate);
    return out;
}

class MockBackend final : public DetectorBackend {
public:
    MockBackend(DetectorId id, MockDetectorConfig cfg) : id_(std::move(id)), cfg_(std::move(cfg)) {
        validate_mock_config(cfg_);
    }

    const DetectorId& id() const noexcept override { return id_; }
    std::vector<Detection> detect(const FrameSample& frame) const override { return mock_detect(cfg_, frame); }
    const MockDetectorConfig& config() const noexcept { return cfg_; }

private:
    DetectorId id_;
    MockDetectorConfig cfg_;
};

}  // namespace wildvision
