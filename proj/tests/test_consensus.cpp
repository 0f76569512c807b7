#include <gtest/gtest.h>

#include <algorithm>
#include <random>

#include "support/generators.hpp"
#include "wildvision/consensus.hpp"

using namespace wildvision;

namespace {

Detection det(const char* label, double score = 0.9) { return {ClassLabel(label), score, {0, 0, 5, 5}}; }

DetectionRecord rec(const char* detector, std::int64_t frame, std::vector<Detection> dets) {
    return {{"clip", frame, frame * 1000}, DetectorId(detector), std::move(dets), 1};
}

std::vector<std::string> names(const std::vector<ClassLabel>& ls) {
    std::vector<std::string> out;
    for (const auto& l : ls) out.push_back(l.str());
    return out;
}

/// Records whose tally reproduces the worked example from a 19-second clip:
/// one vote per (detector, frame) pair.
std::vector<DetectionRecord> worked_example_records() {
    const std::vector<std::pair<const char*, int>> counts{{"sugarpalm", 6}, {"cacao", 4}, {"taro", 1},
                                                           {"banana", 3},    {"bamboo", 1}, {"dragonfruit", 1}};
    const char* detectors[] = {"D2.A", "D2.B", "D2.C", "D2.D"};
    std::vector<DetectionRecord> out;
    int slot = 0;
    for (const auto& [label, n] : counts)
        for (int i = 0; i < n; ++i, ++slot) out.push_back(rec(detectors[slot % 4], slot / 4, {det(label, 0.6 + 0.01 * i)}));
    return out;
}

struct FixedBackend final : DetectorBackend {
    explicit FixedBackend(std::string id, std::vector<Detection> d) : id_(std::move(id)), dets(std::move(d)) {}
    const DetectorId& id() const noexcept override { return id_; }
    std::vector<Detection> detect(const FrameSample&) const override { return dets; }
    DetectorId id_;
    std::vector<Detection> dets;
};

struct ThrowingBackend final : DetectorBackend {
    DetectorId id_{"broken"};
    const DetectorId& id() const noexcept override { return id_; }
    std::vector<Detection> detect(const FrameSample&) const override { throw std::runtime_error("model crashed"); }
};

std::vector<FrameSample> frames(int n) {
    std::vector<FrameSample> out;
    for (int i = 0; i < n; ++i) out.push_back({{"clip", i, i * 1000}, Image(16, 16, 3), AttentionCrop(1.0), 0, 0});
    return out;
}

}  // namespace

TEST(Tally, NoRecordsGiveEmptyTally) { EXPECT_TRUE(tally({}, {}).empty()); }

TEST(Tally, DedupePerDetectorFrame) {
    const std::vector<DetectionRecord> rs{rec("D2.A", 0, {det("banana"), det("banana")})};
    EXPECT_EQ(tally(rs, {}), (Tally{{"banana", 1}}));
    ConsensusConfig off;
    off.dedupe_per_frame_detector = false;
    EXPECT_EQ(tally(rs, off), (Tally{{"banana", 2}}));
}

TEST(Tally, AppliesThreshold) {
    const std::vector<DetectionRecord> rs{rec("D2.A", 0, {det("banana", 0.5), det("taro", 0.49)})};
    EXPECT_EQ(tally(rs, {}), (Tally{{"banana", 1}}));
}

TEST(Tally, WorkedExampleCounts) {
    const Tally expected{{"sugarpalm", 6}, {"cacao", 4}, {"taro", 1}, {"banana", 3}, {"bamboo", 1}, {"dragonfruit", 1}};
    EXPECT_EQ(tally(worked_example_records(), {}), expected);
}

TEST(Tally, RejectsNonPositiveIncrements) {
    Tally t;
    EXPECT_THROW(t.add(ClassLabel("a"), 0), Error);
}

TEST(Rank, WorkedExampleOrder) {
    const Tally t{{"sugarpalm", 6}, {"cacao", 4}, {"taro", 1}, {"banana", 3}, {"bamboo", 1}, {"dragonfruit", 1}};
    const std::vector<RankedLabel> expected{{ClassLabel("sugarpalm"), 6}, {ClassLabel("cacao"), 4},
                                            {ClassLabel("banana"), 3},    {ClassLabel("bamboo"), 1},
                                            {ClassLabel("dragonfruit"), 1}, {ClassLabel("taro"), 1}};
    EXPECT_EQ(rank(t), expected);
}

TEST(Rank, TiesAlphabetical) {
    EXPECT_EQ(rank(Tally{{"b", 2}, {"a", 2}}), (std::vector<RankedLabel>{{ClassLabel("a"), 2}, {ClassLabel("b"), 2}}));
    EXPECT_TRUE(rank(Tally{}).empty());
}

TEST(FinalSelection, AboveSingleInstance) {
    const Tally t{{"sugarpalm", 6}, {"cacao", 4}, {"taro", 1}, {"banana", 3}, {"bamboo", 1}, {"dragonfruit", 1}};
    EXPECT_EQ(names(final_selection(t, {})), (std::vector<std::string>{"sugarpalm", "cacao", "banana"}));
}

TEST(FinalSelection, AllSinglesSelectNothing) {
    EXPECT_TRUE(final_selection(Tally{{"a", 1}, {"b", 1}}, {}).empty());
}

TEST(FinalSelection, MinCountOneKeepsEverythingInRankOrder) {
    const Tally t{{"x", 1}, {"y", 5}, {"z", 2}};
    ConsensusConfig cfg;
    cfg.min_count = 1;
    EXPECT_EQ(names(final_selection(t, cfg)), (std::vector<std::string>{"y", "z", "x"}));
}

TEST(FinalSelection, RejectsZeroMinCount) {
    ConsensusConfig cfg;
    cfg.min_count = 0;
    EXPECT_THROW(final_selection(Tally{}, cfg), Error);
}

TEST(RunPipeline, PerfectMockOnThreeFrames) {
    MockDetectorConfig cfg;
    for (int i = 0; i < 3; ++i) cfg.true_labels[{"clip", i}] = make_label_set({"banana"});
    const std::vector<BackendPtr> backends{std::make_shared<MockBackend>(DetectorId("mock"), cfg)};
    const auto r = run_pipeline(frames(3), backends, {});
    EXPECT_EQ(r.tally, (Tally{{"banana", 3}}));
    EXPECT_EQ(names(r.selected), (std::vector<std::string>{"banana"}));
}

TEST(RunPipeline, NothingDetected) {
    const std::vector<BackendPtr> backends{std::make_shared<FixedBackend>("quiet", std::vector<Detection>{})};
    const auto r = run_pipeline(frames(4), backends, {});
    EXPECT_TRUE(r.tally.empty());
    EXPECT_TRUE(r.selected.empty());
}

TEST(RunPipeline, BackendOrderDoesNotMatter) {
    std::vector<BackendPtr> backends;
    for (int d = 0; d < 4; ++d) {
        MockDetectorConfig cfg;
        cfg.seed = 1000 + d;
        cfg.hit_rate = 0.8;
        cfg.fp_rate = 0.1;
        cfg.score_lo = 0.3;
        for (const auto& l : wildvision::testing::bali_vocabulary()) cfg.fp_vocabulary.emplace_back(l);
        for (int i = 0; i < 8; ++i) cfg.true_labels[{"clip", i}] = make_label_set({"cacao", "banana"});
        backends.push_back(std::make_shared<MockBackend>(DetectorId("mock-" + std::to_string(d)), cfg));
    }
    const auto a = run_pipeline(frames(8), backends, {});
    std::reverse(backends.begin(), backends.end());
    const auto b = run_pipeline(frames(8), backends, {});
    EXPECT_EQ(a.tally, b.tally);
    EXPECT_EQ(a.ranked, b.ranked);
    EXPECT_EQ(a.selected, b.selected);
}

TEST(RunPipeline, BackendErrorsCarryContext) {
    const std::vector<BackendPtr> backends{std::make_shared<ThrowingBackend>()};
    try {
        run_pipeline(frames(2), backends, {});
        FAIL();
    } catch (const Error& e) {
        const std::string msg = e.what();
        EXPECT_NE(msg.find("broken"), std::string::npos);
        EXPECT_NE(msg.find("clip#0"), std::string::npos) << msg;
        EXPECT_EQ(e.code(), Errc::BackendError);
    }
}

TEST(RunPipeline, InvalidBackendOutputRejected) {
    const std::vector<BackendPtr> backends{
        std::make_shared<FixedBackend>("bad", std::vector<Detection>{{ClassLabel("x"), 2.0, {0, 0, 1, 1}}})};
    try {
        run_pipeline(frames(1), backends, {});
        FAIL();
    } catch (const Error& e) {
        EXPECT_EQ(e.code(), Errc::InvalidScore);
    }
}

TEST(RunPipeline, NeedsFramesAndBackends) {
    EXPECT_THROW(run_pipeline({}, {std::make_shared<FixedBackend>("x", std::vector<Detection>{})}, {}), Error);
    EXPECT_THROW(run_pipeline(frames(1), {}, {}), Error);
}

TEST(ConsensusProperties, RandomizedRecordSets) {
    std::mt19937_64 rng(31337);
    for (int trial = 0; trial < 300; ++trial) {
        auto rs = wildvision::testing::random_records(rng);
        ConsensusConfig cfg;
        const Tally base = tally(rs, cfg);

        auto shuffled = rs;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        ASSERT_EQ(tally(shuffled, cfg), base);

        const std::size_t pairs = rs.size();
        for (const auto& [label, n] : base.counts()) ASSERT_LE(static_cast<std::size_t>(n), pairs);

        ConsensusConfig stricter = cfg;
        stricter.tau = ConfidenceThreshold(0.8);
        const Tally high = tally(rs, stricter);
        for (const auto& [label, n] : high.counts()) ASSERT_LE(n, base.count(label));

        ConsensusConfig one = cfg;
        one.min_count = 1;
        ASSERT_EQ(final_selection(base, one).size(), base.size());
    }
}
