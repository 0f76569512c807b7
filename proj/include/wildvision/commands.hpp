#pragma once

// Subcommand implementations behind the `wildvision` CLI. Each command takes
// parsed options, writes its report, and returns a process exit code:
// 0 success, 2 validation/config error, 3 I/O error, 4 internal error.

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wildvision/complexity.hpp"
#include "wildvision/consensus.hpp"
#include "wildvision/core.hpp"
#include "wildvision/detectors.hpp"
#include "wildvision/error.hpp"
#include "wildvision/metrics.hpp"
#include "wildvision/sampler.hpp"

namespace wildvision::cli {

namespace fs = std::filesystem;
using ordered_json = nlohmann::ordered_json;

enum ExitCode : int { kOk = 0, kValidation = 2, kIo = 3, kInternal = 4 };

inline int exit_code_for(const Error& e) {
    switch (e.kind()) {
    case ErrorKind::Validation: return kValidation;
    case ErrorKind::Io: return kIo;
    case ErrorKind::Internal: return kInternal;
    }
    return kInternal;
}

/// Runs a command body, translating exceptions into exit codes and a single
/// diagnostic line on `err`.
template <class Body>
int guarded(std::ostream& err, Body&& body) {
    try {
        return body();
    } catch (const Error& e) {
        err << "error: " << e.what() << '\n';
        return exit_code_for(e);
    } catch (const nlohmann::json::exception& e) {
        err << "error: " << e.what() << '\n';
        return kValidation;
    } catch (const fs::filesystem_error& e) {
        err << "error: " << e.what() << '\n';
        return kIo;
    } catch (const std::exception& e) {
        err << "internal error: " << e.what() << '\n';
        return kInternal;
    }
}

inline std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    std::ostringstream ss;
    ss << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return ss.str();
}

inline void write_text(const fs::path& path, const std::string& text) {
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(Errc::IoError, "cannot write " + path.string());
    out << text;
    if (!out) throw Error(Errc::IoError, "write failed: " + path.string());
}

/// Pretty JSON to `path`, or to `out` when path is empty.
inline void emit_json(const ordered_json& doc, const fs::path& path, std::ostream& out) {
    const std::string text = doc.dump(2) + "\n";
    if (path.empty())
        out << text;
    else
        write_text(path, text);
}

inline fs::path frame_file_name(std::int64_t frame_index) {
    std::ostringstream ss;
    ss << "frame_" << std::setw(6) << std::setfill('0') << frame_index + 1 << ".png";
    return ss.str();
}

/// One sample per second of footage, at least one, at most every frame.
inline std::int64_t default_sample_count(const SegmentManifest& m) {
    const auto per_second = static_cast<std::int64_t>(std::floor(static_cast<double>(m.frame_count) / m.fps + 0.5));
    return std::clamp<std::int64_t>(per_second, 1, m.frame_count);
}

inline ordered_json sample_json(const FrameSample& s) {
    ordered_json j;
    j["frame_index"] = s.frame.frame_index;
    j["timestamp_ms"] = s.frame.timestamp_ms;
    j["width"] = s.pixels.width;
    j["height"] = s.pixels.height;
    j["mean_luma"] = s.mean_luma;
    j["std_luma"] = s.std_luma;
    return j;
}

// ---------------------------------------------------------------------------
// sample

struct SampleOptions {
    fs::path manifest;
    std::optional<std::int64_t> count;
    double crop_fraction = AttentionCrop::kDefaultFraction;
    fs::path out_dir;
};

inline int cmd_sample(const SampleOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        const auto manifest = load_manifest(opt.manifest);
        const AttentionCrop crop(opt.crop_fraction);
        const auto refs = plan_samples(manifest, {opt.count.value_or(default_sample_count(manifest))});
        const auto samples = load_samples(manifest, refs, crop);

        fs::create_directories(opt.out_dir);
        ordered_json frames = ordered_json::array();
        for (const auto& s : samples) {
            const auto name = frame_file_name(s.frame.frame_index);
            write_image(opt.out_dir / name, s.pixels);
            auto j = sample_json(s);
            j["file"] = name.string();
            frames.push_back(std::move(j));
        }
        ordered_json batch;
        batch["segment_id"] = manifest.segment_id;
        batch["fps"] = manifest.fps;
        batch["source_frame_count"] = manifest.frame_count;
        batch["crop_fraction"] = crop.fraction();
        batch["luminance_spread"] = luminance_spread(samples);
        batch["frames"] = std::move(frames);
        emit_json(batch, opt.out_dir / "batch.json", out);
        out << "sampled " << samples.size() << " of " << manifest.frame_count << " frames into "
            << opt.out_dir.string() << '\n';
        return int{kOk};
    });
}

// ---------------------------------------------------------------------------
// classify

struct MockSpec {
    std::string id;
    std::uint64_t seed = 0;
    double hit_rate = 1.0;
    double fp_rate = 0.0;
    std::vector<std::string> fp_vocabulary;
    double score_lo = 0.5;
    double score_hi = 1.0;
    std::vector<std::string> truth;                                  ///< every sampled frame
    std::map<std::int64_t, std::vector<std::string>> frame_truth;   ///< per frame index, overrides `truth`
};

struct PipelineConfig {
    std::optional<fs::path> manifest;
    std::optional<std::int64_t> count;
    double crop_fraction = AttentionCrop::kDefaultFraction;
    std::vector<fs::path> replay;
    std::vector<MockSpec> mocks;
    double tau = ConfidenceThreshold::kDefault;
    std::int64_t min_count = 2;
    bool dedupe = true;
    fs::path output;
    bool timestamp = true;
};

inline MockSpec parse_mock(const nlohmann::json& j) {
    MockSpec m;
    m.id = j.at("id").get<std::string>();
    m.seed = j.value("seed", std::uint64_t{0});
    m.hit_rate = j.value("hit_rate", 1.0);
    m.fp_rate = j.value("fp_rate", 0.0);
    m.fp_vocabulary = j.value("fp_vocabulary", std::vector<std::string>{});
    if (j.contains("score_range")) {
        const auto r = j.at("score_range").get<std::vector<double>>();
        if (r.size() != 2) throw Error(Errc::InvalidArgument, "score_range must be [lo, hi]");
        m.score_lo = r[0];
        m.score_hi = r[1];
    }
    m.truth = j.value("truth", std::vector<std::string>{});
    if (j.contains("true_labels"))
        for (const auto& [key, labels] : j.at("true_labels").items()) {
            std::int64_t index = -1;
            const auto [end, ec] = std::from_chars(key.data(), key.data() + key.size(), index);
            if (ec != std::errc{} || end != key.data() + key.size() || index < 0)
                throw Error(Errc::InvalidArgument, "true_labels key '" + key + "' is not a frame index");
            m.frame_truth[index] = labels.get<std::vector<std::string>>();
        }
    return m;
}

/// Reads a JSON pipeline config. Relative paths resolve against the file's directory.
inline PipelineConfig load_pipeline_config(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open config " + path.string());
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw Error(Errc::ParseError, path.string() + ": " + e.what());
    }
    const auto base = path.parent_path();
    auto resolve = [&](const std::string& p) { return fs::path(p).is_absolute() ? fs::path(p) : base / p; };

    PipelineConfig c;
    if (j.contains("manifest")) c.manifest = resolve(j.at("manifest").get<std::string>());
    if (j.contains("count")) c.count = j.at("count").get<std::int64_t>();
    c.crop_fraction = j.value("crop_fraction", c.crop_fraction);
    for (const auto& p : j.value("replay", std::vector<std::string>{})) c.replay.push_back(resolve(p));
    if (j.contains("mocks"))
        for (const auto& m : j.at("mocks")) c.mocks.push_back(parse_mock(m));
    c.tau = j.value("tau", c.tau);
    c.min_count = j.value("min_count", c.min_count);
    c.dedupe = j.value("dedupe", c.dedupe);
    if (j.contains("output")) c.output = resolve(j.at("output").get<std::string>());
    c.timestamp = j.value("timestamp", c.timestamp);
    return c;
}

inline std::shared_ptr<MockBackend> make_mock_backend(const MockSpec& spec, const std::vector<FrameRef>& frames) {
    MockDetectorConfig cfg;
    cfg.seed = spec.seed;
    cfg.hit_rate = spec.hit_rate;
    cfg.fp_rate = spec.fp_rate;
    cfg.score_lo = spec.score_lo;
    cfg.score_hi = spec.score_hi;
    for (const auto& l : spec.fp_vocabulary) cfg.fp_vocabulary.emplace_back(l);
    for (const auto& f : frames) {
        const auto it = spec.frame_truth.find(f.frame_index);
        const auto& names = it != spec.frame_truth.end() ? it->second : spec.truth;
        LabelSet labels;
        for (const auto& n : names) labels.emplace(n);
        cfg.true_labels[key_of(f)] = std::move(labels);
    }
    return std::make_shared<MockBackend>(DetectorId(spec.id), std::move(cfg));
}

/// Full pipeline: sample frames (when a manifest is given), query every
/// backend, tally, rank and select. Without a manifest the replay records are
/// tallied as they are.
inline ordered_json run_classify(const PipelineConfig& c) {
    const ConsensusConfig cc{ConfidenceThreshold(c.tau), c.min_count, c.dedupe};
    validate_config(cc);
    const AttentionCrop crop(c.crop_fraction);
    auto store = std::make_shared<ReplayStore>(load_wire(c.replay));

    ConsensusResult result;
    ordered_json cues;
    std::vector<std::string> backend_ids;
    std::optional<std::int64_t> sampled_count;

    if (c.manifest) {
        const auto manifest = load_manifest(*c.manifest);
        const auto refs = plan_samples(manifest, {c.count.value_or(default_sample_count(manifest))});
        sampled_count = static_cast<std::int64_t>(refs.size());
        const auto samples = load_samples(manifest, refs, crop);

        auto backends = replay_backends(store);
        for (const auto& m : c.mocks) backends.push_back(make_mock_backend(m, refs));
        for (const auto& b : backends) backend_ids.push_back(b->id().str());
        if (backends.empty()) {
            result = summarize(Tally{}, cc);
        } else {
            result = run_pipeline(samples, backends, cc);
        }
        ordered_json frames = ordered_json::array();
        for (const auto& s : samples) frames.push_back(sample_json(s));
        cues["segment_id"] = manifest.segment_id;
        cues["frames_sampled"] = samples.size();
        cues["crop_fraction"] = crop.fraction();
        cues["luminance_spread"] = luminance_spread(samples);
        cues["frames"] = std::move(frames);
    } else {
        if (!c.mocks.empty()) throw Error(Errc::InvalidArgument, "mock backends need a manifest to sample frames from");
        for (const auto& id : store->detectors()) backend_ids.push_back(id.str());
        result = summarize(tally(store->records(), cc), cc);
        cues["frames_sampled"] = nullptr;
        cues["luminance_spread"] = nullptr;
    }

    ordered_json report = consensus_report(result, cc);
    report["config"]["backends"] = backend_ids;
    report["config"]["crop_fraction"] = crop.fraction();
    report["config"]["count"] = sampled_count ? ordered_json(*sampled_count) : ordered_json(nullptr);
    report["cues"] = std::move(cues);
    if (c.timestamp) report["generated_at"] = utc_timestamp();
    return report;
}

inline int cmd_classify(const PipelineConfig& c, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        emit_json(run_classify(c), c.output, out);
        return int{kOk};
    });
}

// ---------------------------------------------------------------------------
// evaluate

struct EvaluateOptions {
    fs::path pairs;
    fs::path output;   ///< JSON report; stdout when empty
    fs::path csv;      ///< optional CSV table
    bool timestamp = true;
};

inline ordered_json evaluation_report(const std::vector<EvalRow>& rows) {
    if (rows.empty()) throw Error(Errc::EmptyInput, "no evaluation pairs");
    ordered_json groups = ordered_json::array();
    for (const auto& g : evaluate_groups(rows)) {
        ordered_json j;
        j["model"] = g.model;
        j["dataset"] = g.dataset;
        j.update(to_json(g.result));
        groups.push_back(std::move(j));
    }
    std::vector<EvalResult> all;
    all.reserve(rows.size());
    for (const auto& r : rows) all.push_back(evaluate(r.record));
    ordered_json report;
    report["groups"] = std::move(groups);
    report["overall"] = to_json(aggregate(all));
    return report;
}

inline std::string evaluation_csv(const ordered_json& report) {
    std::ostringstream ss;
    ss << std::setprecision(17);
    ss << "model,dataset,n,recall,precision,f-measure\n";
    for (const auto& g : report.at("groups"))
        ss << g.at("model").get<std::string>() << ',' << g.at("dataset").get<std::string>() << ','
           << g.at("n").get<std::size_t>() << ',' << g.at("recall").get<double>() << ','
           << g.at("precision").get<double>() << ',' << g.at("f-measure").get<double>() << '\n';
    return ss.str();
}

inline int cmd_evaluate(const EvaluateOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        auto report = evaluation_report(read_eval_file(opt.pairs));
        if (!opt.csv.empty()) write_text(opt.csv, evaluation_csv(report));
        if (opt.timestamp) report["generated_at"] = utc_timestamp();
        emit_json(report, opt.output, out);
        return int{kOk};
    });
}

// ---------------------------------------------------------------------------
// complexity

struct ComplexityCommandOptions {
    std::vector<fs::path> datasets;  ///< one, or two to compare
    ComplexityOptions measures;
    fs::path output;
    fs::path csv;
    bool timestamp = true;
};

inline std::string complexity_csv(const std::vector<ComplexityReport>& reports) {
    std::ostringstream ss;
    ss << std::setprecision(17) << "metric";
    for (const auto& r : reports) ss << ',' << r.dataset_name;
    if (reports.size() == 2) ss << ",delta";
    ss << '\n';
    const auto first = report_rows(reports.front());
    for (std::size_t i = 0; i < first.size(); ++i) {
        ss << first[i].first;
        for (const auto& r : reports) ss << ',' << report_rows(r)[i].second;
        if (reports.size() == 2) ss << ',' << report_rows(reports[1])[i].second - first[i].second;
        ss << '\n';
    }
    return ss.str();
}

inline int cmd_complexity(const ComplexityCommandOptions& opt, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (opt.datasets.empty() || opt.datasets.size() > 2)
            throw Error(Errc::InvalidArgument, "complexity takes one dataset directory, or two to compare");
        std::vector<ComplexityReport> reports;
        for (const auto& d : opt.datasets) reports.push_back(complexity_report(d, opt.measures));

        ordered_json doc;
        doc["datasets"] = ordered_json::array();
        for (const auto& r : reports) doc["datasets"].push_back(to_json(r));
        if (reports.size() == 2) {
            // Second minus first, per metric.
            ordered_json delta;
            const auto a = report_rows(reports[0]);
            const auto b = report_rows(reports[1]);
            for (std::size_t i = 0; i < a.size(); ++i) delta[a[i].first] = b[i].second - a[i].second;
            doc["delta"] = std::move(delta);
        }
        if (!opt.csv.empty()) write_text(opt.csv, complexity_csv(reports));
        if (opt.timestamp) doc["generated_at"] = utc_timestamp();
        emit_json(doc, opt.output, out);
        return int{kOk};
    });
}

// ---------------------------------------------------------------------------
// validate-wire

inline int cmd_validate_wire(const std::vector<fs::path>& files, std::ostream& out, std::ostream& err) {
    return guarded(err, [&] {
        if (files.empty()) throw Error(Errc::InvalidArgument, "no wire files given");
        std::size_t total = 0;
        for (const auto& f : files) {
            const auto store = load_wire({f});
            out << f.string() << ": " << store.size() << " records OK\n";
            total += store.size();
        }
        if (files.size() > 1) {
            // Keys must also be unique across files, as they are when replayed together.
            load_wire(files);
            out << "total: " << total << " records OK\n";
        }
        return int{kOk};
    });
}

}  // namespace wildvision::cli
