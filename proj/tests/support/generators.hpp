#pragma once

// Random inputs for the consensus property checks.

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "wildvision/consensus.hpp"

namespace wildvision::testing {

inline const std::vector<std::string>& bali_vocabulary() {
    static const std::vector<std::string> v{
        "aloevera",    "banana",    "bamboo",     "cacao",       "cinnamon",     "coconut",  "coffee",
        "dragonfruit", "durian",    "elephantgrass", "frangipani", "guava",      "jackfruit", "lemongrass",
        "mango",       "mangosteen", "papaya",    "patchouli",   "pineapple",    "rambutan", "salak",
        "snakefruit",  "sugarpalm", "taro",       "teak",        "vanilla"};
    return v;
}

/// Records over a few detectors and frames with up to 5 boxes each.
inline std::vector<DetectionRecord> random_records(std::mt19937_64& rng, int max_records = 40) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    const auto& vocab = bali_vocabulary();
    const int n_labels = 3 + static_cast<int>(rng() % 6);
    std::vector<DetectionRecord> out;
    const int n = static_cast<int>(rng() % static_cast<std::uint64_t>(max_records + 1));
    for (int i = 0; i < n; ++i) {
        DetectionRecord r{{"seg", static_cast<std::int64_t>(rng() % 19), 0},
                          DetectorId("D2." + std::string(1, static_cast<char>('A' + rng() % 4))), {}, 1};
        r.frame.timestamp_ms = r.frame.frame_index * 1000;
        const int boxes = static_cast<int>(rng() % 6);
        for (int b = 0; b < boxes; ++b)
            r.detections.push_back({ClassLabel(vocab[rng() % n_labels]), u(rng), {0, 0, 1 + 10 * u(rng), 1 + 10 * u(rng)}});
        out.push_back(std::move(r));
    }
    return out;
}

inline bool is_subsequence(const std::vector<ClassLabel>& small, const std::vector<ClassLabel>& big) {
    std::size_t j = 0;
    for (const auto& l : big)
        if (j < small.size() && l == small[j]) ++j;
    return j == small.size();
}

}  // namespace wildvision::testing
