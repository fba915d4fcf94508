#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include <nlohmann/json.hpp>

#include "mlat/error.hpp"
#include "mlat/splits.hpp"
#include "support.hpp"

using namespace mlat;
using namespace mlat::splits;

namespace {

std::set<std::string> groups_of(const dataset::Dataset& d, const std::vector<std::size_t>& idx) {
    std::set<std::string> g;
    for (auto i : idx) g.insert(d[i].client_group);
    return g;
}

bool disjoint(const std::set<std::string>& a, const std::set<std::string>& b) {
    for (const auto& x : a)
        if (b.count(x)) return false;
    return true;
}

} // namespace

TEST_CASE("shuffle split on the reference-layout fixture") {
    const auto d = dataset::load_dataset(testing::fixture("data/reference_layout_70.csv"));
    const auto p = group_shuffle_split(d, 0.2, 16);
    CHECK(p.train_indices.size() == 56);
    CHECK(p.test_indices.size() == 14);
    CHECK(disjoint(groups_of(d, p.train_indices), groups_of(d, p.test_indices)));
    CHECK(verify_no_leakage(p, d).ok);
}

TEST_CASE("shuffle split: partition, determinism, sorted output") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 200; ++trial) {
        const auto d = testing::random_dataset(rng, 3 + trial % 30);
        const double f = 0.1 + 0.05 * (trial % 10);
        const auto p = group_shuffle_split(d, f, trial);
        CHECK(p == group_shuffle_split(d, f, trial));
        CHECK(std::is_sorted(p.train_indices.begin(), p.train_indices.end()));
        CHECK(std::is_sorted(p.test_indices.begin(), p.test_indices.end()));
        CHECK(p.train_indices.size() + p.test_indices.size() == d.size());
        CHECK(!p.train_indices.empty());
        CHECK(!p.test_indices.empty());
        std::vector<std::size_t> all(p.train_indices);
        all.insert(all.end(), p.test_indices.begin(), p.test_indices.end());
        std::sort(all.begin(), all.end());
        for (std::size_t i = 0; i < all.size(); ++i) CHECK(all[i] == i);
        CHECK(verify_no_leakage(p, d).ok);
    }
}

TEST_CASE("shuffle split: rejects bad input") {
    std::mt19937_64 rng(1);
    const auto d = testing::random_dataset(rng, 5);
    CHECK_THROWS_AS(group_shuffle_split(d, 0.0, 1), ValidationError);
    CHECK_THROWS_AS(group_shuffle_split(d, 1.0, 1), ValidationError);
    auto one = d;
    for (auto& r : one) r.client_group = "same";
    CHECK_THROWS_AS(group_shuffle_split(one, 0.2, 1), ValidationError);
}

TEST_CASE("kfold: fold shape on the training side of the fixture") {
    const auto d = dataset::load_dataset(testing::fixture("data/reference_layout_70.csv"));
    const auto train = subset(d, group_shuffle_split(d, 0.2, 16).train_indices);
    const auto plan = group_kfold(train, 3);
    REQUIRE(plan.folds.size() == 3);
    CHECK(plan.folds[0].size() == 19);
    CHECK(plan.folds[1].size() == 19);
    CHECK(plan.folds[2].size() == 18);
    CHECK(verify_no_leakage(plan, train).ok);
}

TEST_CASE("kfold: partition, balance and group integrity") {
    std::mt19937_64 rng(12);
    for (int trial = 0; trial < 200; ++trial) {
        const auto d = testing::random_dataset(rng, 6 + trial % 25);
        const std::size_t k = 2 + trial % 4;
        if (dataset::count_groups(d) < k) continue;
        const auto plan = group_kfold(d, k);
        CHECK(plan == group_kfold(d, k));
        CHECK(plan.folds.size() == k);
        std::size_t total = 0, lo = d.size(), hi = 0;
        for (const auto& f : plan.folds) {
            total += f.size();
            lo = std::min(lo, f.size());
            hi = std::max(hi, f.size());
            CHECK(!f.empty());
        }
        CHECK(total == d.size());
        // Greedy smallest-fold assignment: the spread never exceeds the largest group.
        CHECK(hi - lo <= 4);
        CHECK(verify_no_leakage(plan, d).ok);
        for (std::size_t i = 0; i < k; ++i) {
            const auto train = complement(plan, i, d.size());
            CHECK(train.size() + plan.folds[i].size() == d.size());
            CHECK(disjoint(groups_of(d, train), groups_of(d, plan.folds[i])));
        }
    }
}

TEST_CASE("kfold: k outside [2, groups] is rejected") {
    std::mt19937_64 rng(2);
    const auto d = testing::random_dataset(rng, 4);
    CHECK_THROWS_AS(group_kfold(d, 1), ValidationError);
    CHECK_THROWS_AS(group_kfold(d, 5), ValidationError);
}

TEST_CASE("verify_no_leakage flags shared groups") {
    std::mt19937_64 rng(4);
    auto d = testing::random_dataset(rng, 6, 1);
    SplitPlan p;
    p.train_indices = {0, 1, 2};
    p.test_indices = {3, 4, 5};
    CHECK(verify_no_leakage(p, d).ok);
    d[4].client_group = d[1].client_group;
    const auto r = verify_no_leakage(p, d);
    CHECK_FALSE(r.ok);
    CHECK(r.offending_groups == std::vector<std::string>{d[1].client_group});
    p.test_indices.push_back(99);
    CHECK_THROWS_AS(verify_no_leakage(p, d), ValidationError);
}

TEST_CASE("plan JSON round trip") {
    std::mt19937_64 rng(8);
    const auto d = testing::random_dataset(rng, 12);
    const auto sp = group_shuffle_split(d, 0.25, 3);
    CHECK(split_plan_from_json(to_json(sp)) == sp);
    CHECK(split_plan_from_json(nlohmann::json::parse(to_json(sp).dump())) == sp);
    const auto fp = group_kfold(d, 3);
    CHECK(fold_plan_from_json(to_json(fp)) == fp);
    CHECK_THROWS(fold_plan_from_json(to_json(sp)));
}
