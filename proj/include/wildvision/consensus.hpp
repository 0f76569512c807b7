#pragma once

// Cross-frame, cross-detector consensus: tally label votes, rank them by
// frequency, keep the labels seen more than once.

#include <algorithm>
#include <cstdint>
#include <map>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "wildvision/core.hpp"
#include "wildvision/detectors.hpp"
#include "wildvision/error.hpp"
#include "wildvision/parallel.hpp"
#include "wildvision/sampler.hpp"

namespace wildvision {

/// Label -> vote count. Labels with no votes are absent, never zero.
class Tally {
public:
    Tally() = default;
    Tally(std::initializer_list<std::pair<std::string_view, std::int64_t>> counts) {
        for (auto [name, n] : counts) add(ClassLabel(name), n);
    }

    void add(const ClassLabel& label, std::int64_t n = 1) {
        if (n < 1) throw Error(Errc::InvalidArgument, "tally increments must be positive");
        counts_[label] += n;
    }

    void merge(const Tally& other) {
        for (const auto& [label, n] : other.counts_) counts_[label] += n;
    }

    std::int64_t count(const ClassLabel& label) const {
        const auto it = counts_.find(label);
        return it == counts_.end() ? 0 : it->second;
    }

    const std::map<ClassLabel, std::int64_t>& counts() const noexcept { return counts_; }
    bool empty() const noexcept { return counts_.empty(); }
    std::size_t size() const noexcept { return counts_.size(); }

    std::int64_t total() const {
        std::int64_t s = 0;
        for (const auto& [_, n] : counts_) s += n;
        return s;
    }

    friend bool operator==(const Tally&, const Tally&) = default;

private:
    std::map<ClassLabel, std::int64_t> counts_;
};

struct ConsensusConfig {
    ConfidenceThreshold tau{};
    std::int64_t min_count = 2;
    bool dedupe_per_frame_detector = true;
};

inline void validate_config(const ConsensusConfig& cfg) {
    if (cfg.min_count < 1) throw Error(Errc::InvalidArgument, "min_count must be >= 1");
}

/// Votes contributed by one detector on one frame.
inline Tally tally_detections(const std::vector<Detection>& dets, const ConsensusConfig& cfg) {
    Tally t;
    const auto kept = threshold_filter(dets, cfg.tau);
    if (cfg.dedupe_per_frame_detector) {
        std::set<ClassLabel> labels;
        for (const auto& d : kept) labels.insert(d.label);
        for (const auto& l : labels) t.add(l);
    } else {
        for (const auto& d : kept) t.add(d.label);
    }
    return t;
}

inline Tally tally(const std::vector<DetectionRecord>& records, const ConsensusConfig& cfg) {
    validate_config(cfg);
    Tally t;
    for (const auto& r : records) t.merge(tally_detections(r.detections, cfg));
    return t;
}

struct RankedLabel {
    ClassLabel label;
    std::int64_t count = 0;

    friend bool operator==(const RankedLabel&, const RankedLabel&) = default;
};

/// Descending by count, ties by ascending label name.
inline std::vector<RankedLabel> rank(const Tally& t) {
    std::vector<RankedLabel> out;
    out.reserve(t.size());
    for (const auto& [label, n] : t.counts()) out.push_back({label, n});
    std::stable_sort(out.begin(), out.end(), [](const RankedLabel& a, const RankedLabel& b) {
        return a.count != b.count ? a.count > b.count : a.label < b.label;
    });
    return out;
}

/// Labels with count >= min_count, in rank order.
inline std::vector<ClassLabel> final_selection(const Tally& t, const ConsensusConfig& cfg) {
    validate_config(cfg);
    std::vector<ClassLabel> out;
    for (const auto& r : rank(t))
        if (r.count >= cfg.min_count) out.push_back(r.label);
    return out;
}

struct ConsensusResult {
    Tally tally;
    std::vector<RankedLabel> ranked;
    std::vector<ClassLabel> selected;
};

inline ConsensusResult summarize(Tally t, const ConsensusConfig& cfg) {
    auto ranked = rank(t);
    auto selected = final_selection(t, cfg);
    return {std::move(t), std::move(ranked), std::move(selected)};
}

/// Queries every backend on every sample and reduces the votes. The reduction
/// is integer addition, so the result does not depend on backend order or
/// on how the (backend, frame) work is scheduled.
inline ConsensusResult run_pipeline(const std::vector<FrameSample>& samples, const std::vector<BackendPtr>& backends,
                                    const ConsensusConfig& cfg) {
    validate_config(cfg);
    if (samples.empty()) throw Error(Errc::EmptyBatch, "run_pipeline needs at least one frame");
    if (backends.empty()) throw Error(Errc::InvalidArgument, "run_pipeline needs at least one backend");

    const std::size_t jobs = samples.size() * backends.size();
    std::vector<Tally> partial(jobs);
    parallel_for(jobs, [&](std::size_t job) {
        const auto& backend = *backends[job / samples.size()];
        const auto& sample = samples[job % samples.size()];
        const auto context = "detector '" + backend.id().str() + "' on frame " + sample.frame.segment_id + "#" +
                             std::to_string(sample.frame.frame_index) + ": ";
        std::vector<Detection> dets;
        try {
            dets = backend.detect(sample);
            for (const auto& d : dets) validate_detection(d);
        } catch (const Error& e) {
            throw Error(e.code(), context + e.what());
        } catch (const std::exception& e) {
            throw Error(Errc::BackendError, context + e.what());
        }
        partial[job] = tally_detections(dets, cfg);
    });

    Tally total;
    for (const auto& t : partial) total.merge(t);
    return summarize(std::move(total), cfg);
}

// ---------------------------------------------------------------------------
// JSON report: {tally, ranked, selected, config}

inline nlohmann::ordered_json to_json(const Tally& t) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [label, n] : t.counts()) j[label.str()] = n;
    return j;
}

inline nlohmann::ordered_json to_json(const ConsensusConfig& cfg) {
    nlohmann::ordered_json j;
    j["tau"] = cfg.tau.value();
    j["min_count"] = cfg.min_count;
    j["dedupe_per_frame_detector"] = cfg.dedupe_per_frame_detector;
    return j;
}

inline nlohmann::ordered_json consensus_report(const ConsensusResult& result, const ConsensusConfig& cfg) {
    nlohmann::ordered_json ranked = nlohmann::ordered_json::array();
    for (const auto& r : result.ranked) ranked.push_back({{"label", r.label.str()}, {"count", r.count}});
    nlohmann::ordered_json selected = nlohmann::ordered_json::array();
    for (const auto& l : result.selected) selected.push_back(l.str());

    nlohmann::ordered_json j;
    j["tally"] = to_json(result.tally);
    j["ranked"] = std::move(ranked);
    j["selected"] = std::move(selected);
    j["config"] = to_json(cfg);
    return j;
}

}  // namespace wildvision
