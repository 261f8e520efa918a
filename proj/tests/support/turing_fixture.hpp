#pragma once
// A synthetic Turing-test log whose filtered per-source Human proportions are
// 0.58, 0.60, 0.57, 0.53 and 0.50, with 61 participants of which two are
// extreme taggers.

#include <array>
#include <map>
#include <string>
#include <vector>

#include "sketchpix/eval_store.hpp"

namespace sketchpix::testing {

struct TuringFixture {
    eval::Pool pool;
    std::vector<eval::TagRecord> records;
    std::map<std::string, double> expected;  // filtered per-source proportion
    std::size_t participants = 0;
    std::size_t retained = 0;
};

// 10 items per (source, category) over three categories.
inline eval::Pool fixture_pool() {
    eval::Pool pool;
    const std::array<std::string, 3> cats{"cat", "pig", "rabbit"};
    for (const auto& src : eval::known_sources())
        for (int k = 0; k < 30; ++k) {
            const std::string id = src + "#" + std::to_string(k);
            pool.items.push_back({id, src, cats[k % 3], "<svg/>"});
        }
    return pool;
}

inline TuringFixture turing_fixture() {
    TuringFixture f;
    f.pool = fixture_pool();
    const std::map<std::string, double> target{
        {"Human", 0.58}, {"CNN-KL", 0.60}, {"CNN+KL", 0.57}, {"RNN-KL", 0.53}, {"RNN+KL", 0.50}};
    f.expected = target;

    // Items per source tagged by each ordinary participant; 56*30 + 7 + 7 + 6
    // = 1700 tags per source, so every target is an exact ratio of integers.
    std::vector<std::size_t> per_source(56, 30);
    per_source.insert(per_source.end(), {7, 7, 6});
    const std::size_t slots = 1700;

    std::int64_t t = 0;
    for (const auto& [src, p] : target) {
        const std::size_t human_total = static_cast<std::size_t>(p * 100 + 0.5) * slots / 100;
        std::size_t cum = 0;
        for (std::size_t j = 0; j < per_source.size(); ++j) {
            // Spread Human tags so each participant sits near the source rate.
            const std::size_t before = human_total * cum / slots;
            cum += per_source[j];
            const std::size_t human = human_total * cum / slots - before;
            for (std::size_t k = 0; k < per_source[j]; ++k) {
                const eval::Tag tag = k < human ? eval::Tag::Human : eval::Tag::Computer;
                f.records.push_back({"p" + std::to_string(j), src + "#" + std::to_string(k), tag, ++t});
            }
        }
    }
    // Extreme taggers: everything Human, and 10 of 150 (under 10%) Human.
    std::size_t n = 0;
    for (const auto& it : f.pool.items) {
        f.records.push_back({"all-human", it.id, eval::Tag::Human, ++t});
        f.records.push_back({"mostly-computer", it.id, n++ < 10 ? eval::Tag::Human : eval::Tag::Computer, ++t});
    }
    f.participants = per_source.size() + 2;
    f.retained = per_source.size();
    return f;
}

}  // namespace sketchpix::testing
