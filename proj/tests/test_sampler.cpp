#include <gtest/gtest.h>

#include <numeric>
#include <random>

#include "support/test_support.hpp"
#include "wildvision/sampler.hpp"

using namespace wildvision;
using wildvision::testing::TempDir;

namespace {

std::vector<std::int64_t> indices(std::int64_t frame_count, std::int64_t count, double fps = 30.0) {
    const SegmentManifest m{"seg", {}, fps, frame_count};
    std::vector<std::int64_t> out;
    for (const auto& r : plan_samples(m, {count})) out.push_back(r.frame_index);
    return out;
}

}  // namespace

TEST(PlanSamples, OnePerSecondOfNineteenSecondClip) {
    std::vector<std::int64_t> expected(19);
    std::iota(expected.begin(), expected.end(), 0);
    EXPECT_EQ(indices(19, 19, 1.0), expected);
}

TEST(PlanSamples, SingleSampleIsMidpoint) { EXPECT_EQ(indices(100, 1), (std::vector<std::int64_t>{50})); }

TEST(PlanSamples, FourOfHundred) { EXPECT_EQ(indices(100, 4), (std::vector<std::int64_t>{12, 37, 62, 87})); }

TEST(PlanSamples, CountExceedsFrames) {
    const SegmentManifest m{"seg", {}, 30.0, 10};
    try {
        plan_samples(m, {11});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::CountExceedsFrames);
    }
}

TEST(PlanSamples, StrictlyIncreasingInRangeForAllCounts) {
    for (std::int64_t fc = 1; fc <= 120; ++fc) {
        for (std::int64_t count = 1; count <= fc; ++count) {
            const auto idx = indices(fc, count);
            ASSERT_EQ(static_cast<std::int64_t>(idx.size()), count);
            for (std::size_t i = 0; i < idx.size(); ++i) {
                ASSERT_GE(idx[i], 0);
                ASSERT_LT(idx[i], fc);
                if (i > 0) {
                    ASSERT_GT(idx[i], idx[i - 1]) << fc << "/" << count;
                }
            }
        }
    }
}

TEST(PlanSamples, TimestampsConsistentWithFps) {
    const SegmentManifest m{"seg", {}, 29.97, 600};
    for (const auto& r : plan_samples(m, {37})) EXPECT_TRUE(timestamp_consistent(r, m.fps));
}

TEST(AttentionCrop, RejectsOutOfRangeFraction) {
    EXPECT_THROW(AttentionCrop(0.0), Error);
    EXPECT_THROW(AttentionCrop(1.01), Error);
    EXPECT_NO_THROW(AttentionCrop(1.0));
}

TEST(AttentionCrop, IdentityAtFullFraction) {
    EXPECT_EQ(attention_crop(1920, 1080, AttentionCrop(1.0)), (BBox{0, 0, 1920, 1080}));
    for (int w = 1; w < 40; ++w)
        for (int h = 1; h < 40; h += 3) EXPECT_EQ(attention_crop(w, h, AttentionCrop(1.0)), (BBox{0, 0, double(w), double(h)}));
}

TEST(AttentionCrop, SixtyPercentOfFullHd) {
    EXPECT_EQ(attention_crop(1920, 1080, AttentionCrop(0.6)), (BBox{384, 216, 1536, 864}));
}

TEST(AttentionCrop, TinyFrameRoundsHalfUp) {
    // 0.5 * 3 = 1.5 -> side 2; offset (3 - 2) / 2 = 0.5 -> 1.
    EXPECT_EQ(attention_crop(3, 3, AttentionCrop(0.5)), (BBox{1, 1, 3, 3}));
}

TEST(AttentionCrop, AlwaysInsideFrameWithPositiveArea) {
    for (double f : {0.01, 0.1, 0.33, 0.5, 0.6, 0.999})
        for (int w = 1; w < 30; ++w)
            for (int h = 1; h < 30; ++h) {
                const auto b = attention_crop(w, h, AttentionCrop(f));
                ASSERT_GE(b.area(), 1.0);
                ASSERT_GE(b.x1, 0);
                ASSERT_GE(b.y1, 0);
                ASSERT_LE(b.x2, w);
                ASSERT_LE(b.y2, h);
            }
}

TEST(LumaStats, BlackFrame) {
    const auto s = luma_stats(wildvision::testing::solid_rgb(8, 8, 0, 0, 0));
    EXPECT_EQ(s.mean, 0.0);
    EXPECT_EQ(s.std, 0.0);
}

TEST(LumaStats, WhiteFrame) {
    const auto s = luma_stats(wildvision::testing::solid_rgb(8, 8, 255, 255, 255));
    EXPECT_EQ(s.mean, 255.0);
    EXPECT_EQ(s.std, 0.0);
}

TEST(LumaStats, HalfBlackHalfWhite) {
    Image img = wildvision::testing::solid_rgb(10, 4, 0, 0, 0);
    for (int y = 0; y < 2; ++y)
        for (int x = 0; x < 10; ++x)
            for (int c = 0; c < 3; ++c) img.at(x, y, c) = 255;
    const auto s = luma_stats(img);
    EXPECT_DOUBLE_EQ(s.mean, 127.5);
    EXPECT_DOUBLE_EQ(s.std, 127.5);
}

TEST(LumaStats, CropThenMeasureEqualsMeasureOfRegion) {
    const Image img = wildvision::testing::random_rgb(50, 37, 11);
    const AttentionCrop crop(0.6);
    const auto sample = make_sample({"s", 0, 0}, img, crop);
    const auto b = attention_crop(img.width, img.height, crop);
    double sum = 0;
    int n = 0;
    for (int y = int(b.y1); y < int(b.y2); ++y)
        for (int x = int(b.x1); x < int(b.x2); ++x, ++n)
            sum += 0.299 * img.at(x, y, 0) + 0.587 * img.at(x, y, 1) + 0.114 * img.at(x, y, 2);
    EXPECT_NEAR(sample.mean_luma, sum / n, 1e-9);
    EXPECT_EQ(sample.pixels.width, int(b.width()));
}

TEST(LuminanceSpread, Examples) {
    auto with_means = [](std::vector<double> means) {
        std::vector<FrameSample> out;
        for (double m : means) out.push_back({{"s", 0, 0}, {}, AttentionCrop(1.0), m, 0});
        return out;
    };
    EXPECT_EQ(luminance_spread(with_means({42})), 0.0);
    EXPECT_EQ(luminance_spread(with_means({100, 120, 111})), 20.0);
    EXPECT_EQ(luminance_spread(with_means({7, 7, 7})), 0.0);
    EXPECT_THROW(luminance_spread({}), Error);
}

TEST(LoadSamples, LoadsInRefOrderAndIsDeterministic) {
    TempDir dir;
    const auto manifest_path = wildvision::testing::make_segment(dir.path(), "clip", 12, 2.0);
    const auto m = load_manifest(manifest_path);
    EXPECT_EQ(m.frame_count, 12);
    const auto refs = plan_samples(m, {4});
    const auto a = load_samples(m, refs, AttentionCrop(0.6));
    const auto b = load_samples(m, refs, AttentionCrop(0.6));
    ASSERT_EQ(a.size(), 4u);
    EXPECT_EQ(a, b);
    for (std::size_t i = 0; i < a.size(); ++i) {
        EXPECT_EQ(a[i].frame, refs[i]);
        // Frame i is a flat gray of level 10*i.
        EXPECT_DOUBLE_EQ(a[i].mean_luma, 10.0 * static_cast<double>(refs[i].frame_index));
        EXPECT_EQ(a[i].pixels.width, 19);  // round(0.6 * 32)
        EXPECT_EQ(a[i].pixels.height, 14);  // round(0.6 * 24)
    }
    EXPECT_DOUBLE_EQ(luminance_spread(a), 10.0 * static_cast<double>(refs.back().frame_index - refs.front().frame_index));
}

TEST(LoadSamples, MissingFrameIsIoError) {
    TempDir dir;
    const auto manifest_path = wildvision::testing::make_segment(dir.path(), "clip", 5, 1.0);
    std::filesystem::remove(dir.path() / "frames" / "frame_000003.png");
    const auto m = load_manifest(manifest_path);
    try {
        load_samples(m, plan_samples(m, {5}), AttentionCrop());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::MissingFrame);
        EXPECT_EQ(e.kind(), ErrorKind::Io);
    }
}

TEST(LoadSamples, UndecodableFrame) {
    TempDir dir;
    const auto manifest_path = wildvision::testing::make_segment(dir.path(), "clip", 3, 1.0);
    wildvision::testing::write_file(dir.path() / "frames" / "frame_000002.png", "not a png");
    const auto m = load_manifest(manifest_path);
    try {
        load_samples(m, plan_samples(m, {3}), AttentionCrop());
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::DecodeError);
    }
}

TEST(LoadManifest, RejectsBadFields) {
    TempDir dir;
    wildvision::testing::write_file(dir / "m.json", R"({"segment_id":"s","fps":0,"frame_count":3})");
    EXPECT_THROW(load_manifest(dir / "m.json"), Error);
    wildvision::testing::write_file(dir / "m2.json", R"({"segment_id":"s","fps":30})");
    EXPECT_THROW(load_manifest(dir / "m2.json"), Error);
}
