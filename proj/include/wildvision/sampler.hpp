#pragma once

// Turns a segment of pre-extracted frames into a sampled, attention-cropped
// batch with per-frame luminance statistics.
//
// Frame directories follow the extractor contract: one image per frame, names
// that sort in frame order (e.g. frame_000001.png), constant frame rate.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "wildvision/core.hpp"
#include "wildvision/error.hpp"
#include "wildvision/image.hpp"
#include "wildvision/parallel.hpp"

namespace wildvision {

struct SegmentManifest {
    std::string segment_id;
    std::filesystem::path frame_dir;
    double fps = 0;
    std::int64_t frame_count = 0;
};

struct SamplingPlan {
    std::int64_t count = 1;
};

/// Side-length fraction of a centered crop, in (0, 1].
class AttentionCrop {
public:
    static constexpr double kDefaultFraction = 0.6;

    explicit AttentionCrop(double fraction = kDefaultFraction) : fraction_(fraction) {
        if (!(fraction > 0.0 && fraction <= 1.0))
            throw Error(Errc::InvalidArgument, "crop fraction " + std::to_string(fraction) + " not in (0,1]");
    }

    double fraction() const noexcept { return fraction_; }

    friend bool operator==(const AttentionCrop&, const AttentionCrop&) = default;

private:
    double fraction_;
};

struct FrameSample {
    FrameRef frame;
    Image pixels;
    AttentionCrop crop_applied;
    double mean_luma = 0;
    double std_luma = 0;

    friend bool operator==(const FrameSample&, const FrameSample&) = default;
};

struct LumaStats {
    double mean = 0;
    double std = 0;
};

/// BT.601 luma scaled by 1000 so the weighted sum stays an exact integer.
inline std::int64_t luma_milli(std::uint8_t r, std::uint8_t g, std::uint8_t b) noexcept {
    return 299 * std::int64_t{r} + 587 * std::int64_t{g} + 114 * std::int64_t{b};
}

/// Mean and population standard deviation of per-pixel BT.601 luma.
inline LumaStats luma_stats(const Image& rgb) {
    if (rgb.empty() || rgb.channels != 3) throw Error(Errc::EmptyImage, "luma_stats needs a non-empty RGB image");
    const std::size_t n = rgb.pixel_count();
    std::int64_t sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += luma_milli(rgb.data[3 * i], rgb.data[3 * i + 1], rgb.data[3 * i + 2]);
    const double mean_milli = static_cast<double>(sum) / static_cast<double>(n);
    double ss = 0;
    for (std::size_t i = 0; i < n; ++i) {
        const double d = static_cast<double>(luma_milli(rgb.data[3 * i], rgb.data[3 * i + 1], rgb.data[3 * i + 2])) -
                         mean_milli;
        ss += d * d;
    }
    return {mean_milli / 1000.0, std::sqrt(ss / static_cast<double>(n)) / 1000.0};
}

/// Evenly spaced frame refs: index_i = floor((i + 0.5) * frame_count / count).
inline std::vector<FrameRef> plan_samples(const SegmentManifest& manifest, const SamplingPlan& plan) {
    if (plan.count < 1) throw Error(Errc::InvalidArgument, "sample count must be positive");
    if (manifest.frame_count < 1 || !(manifest.fps > 0))
        throw Error(Errc::InvalidArgument, "manifest needs frame_count >= 1 and fps > 0");
    if (plan.count > manifest.frame_count)
        throw Error(Errc::CountExceedsFrames, "requested " + std::to_string(plan.count) + " samples from " +
                                                  std::to_string(manifest.frame_count) + " frames");
    std::vector<FrameRef> refs;
    refs.reserve(static_cast<std::size_t>(plan.count));
    for (std::int64_t i = 0; i < plan.count; ++i) {
        // Exact integer form of the centered-offset rule; step >= 1 keeps indices strictly increasing.
        std::int64_t index = ((2 * i + 1) * manifest.frame_count) / (2 * plan.count);
        index = std::clamp<std::int64_t>(index, 0, manifest.frame_count - 1);
        refs.push_back({manifest.segment_id, index, timestamp_for(index, manifest.fps)});
    }
    return refs;
}

inline std::int64_t round_half_up(double v) { return static_cast<std::int64_t>(std::floor(v + 0.5 + 1e-9)); }

/// Centered crop box of side fraction * dimension; sizes and offsets rounded half-up.
inline BBox attention_crop(int width, int height, const AttentionCrop& crop) {
    if (width < 1 || height < 1) throw Error(Errc::InvalidArgument, "attention_crop needs width, height >= 1");
    const auto cw = std::clamp<std::int64_t>(round_half_up(crop.fraction() * width), 1, width);
    const auto ch = std::clamp<std::int64_t>(round_half_up(crop.fraction() * height), 1, height);
    const auto x1 = round_half_up(static_cast<double>(width - cw) / 2.0);
    const auto y1 = round_half_up(static_cast<double>(height - ch) / 2.0);
    return {static_cast<double>(x1), static_cast<double>(y1), static_cast<double>(x1 + cw),
            static_cast<double>(y1 + ch)};
}

inline Image apply_crop(const Image& img, const AttentionCrop& crop) {
    const BBox b = attention_crop(img.width, img.height, crop);
    return wildvision::crop(img, static_cast<int>(b.x1), static_cast<int>(b.y1), static_cast<int>(b.x2),
                            static_cast<int>(b.y2));
}

inline FrameSample make_sample(FrameRef ref, const Image& full_frame, const AttentionCrop& crop) {
    Image cropped = apply_crop(full_frame, crop);
    const LumaStats stats = luma_stats(cropped);
    return {std::move(ref), std::move(cropped), crop, stats.mean, stats.std};
}

/// Frame files of the segment in frame order. Fewer files than declared is a
/// missing-frame condition; more is a manifest mismatch.
inline std::vector<std::filesystem::path> segment_frames(const SegmentManifest& manifest) {
    auto files = list_images(manifest.frame_dir);
    const auto present = static_cast<std::int64_t>(files.size());
    if (present < manifest.frame_count)
        throw Error(Errc::MissingFrame, "manifest declares " + std::to_string(manifest.frame_count) +
                                            " frames but " + manifest.frame_dir.string() + " holds " +
                                            std::to_string(present));
    if (present > manifest.frame_count)
        throw Error(Errc::FrameCountMismatch, "manifest declares " + std::to_string(manifest.frame_count) +
                                                  " frames but " + manifest.frame_dir.string() + " holds " +
                                                  std::to_string(present));
    return files;
}

/// Loads, crops and measures the referenced frames. Output order equals ref order.
inline std::vector<FrameSample> load_samples(const SegmentManifest& manifest, const std::vector<FrameRef>& refs,
                                             const AttentionCrop& crop) {
    const auto files = segment_frames(manifest);
    for (const auto& r : refs)
        if (r.frame_index < 0 || r.frame_index >= manifest.frame_count)
            throw Error(Errc::MissingFrame, "frame index " + std::to_string(r.frame_index) + " outside segment");
    std::vector<FrameSample> out(refs.size(), FrameSample{{}, {}, crop, 0, 0});
    parallel_for(refs.size(), [&](std::size_t i) {
        const Image full = read_rgb(files[static_cast<std::size_t>(refs[i].frame_index)]);
        out[i] = make_sample(refs[i], full, crop);
    });
    return out;
}

/// Spread of per-frame mean luma across the batch (max - min).
inline double luminance_spread(const std::vector<FrameSample>& samples) {
    if (samples.empty()) throw Error(Errc::EmptyBatch, "luminance_spread of an empty batch");
    auto [lo, hi] = std::minmax_element(samples.begin(), samples.end(),
                                        [](const auto& a, const auto& b) { return a.mean_luma < b.mean_luma; });
    return hi->mean_luma - lo->mean_luma;
}

/// Reads a manifest JSON document: {segment_id, fps, frame_count, frame_dir?}.
/// A relative or absent frame_dir resolves against the manifest's directory.
inline SegmentManifest load_manifest(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(Errc::IoError, "cannot open manifest " + path.string());
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, path.string() + ": " + e.what());
    }
    SegmentManifest m;
    try {
        m.segment_id = doc.at("segment_id").get<std::string>();
        m.fps = doc.at("fps").get<double>();
        m.frame_count = doc.at("frame_count").get<std::int64_t>();
        std::filesystem::path dir = doc.value("frame_dir", std::string{});
        m.frame_dir = dir.is_absolute() ? dir : path.parent_path() / dir;
    } catch (const nlohmann::json::exception& e) {
        throw Error(Errc::ParseError, path.string() + ": " + e.what());
    }
    if (m.segment_id.empty()) throw Error(Errc::InvalidArgument, path.string() + ": segment_id is empty");
    if (!(m.fps > 0)) throw Error(Errc::InvalidArgument, path.string() + ": fps must be positive");
    if (m.frame_count < 1) throw Error(Errc::InvalidArgument, path.string() + ": frame_count must be positive");
    return m;
}

}  // namespace wildvision
