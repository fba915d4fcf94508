#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mlat/dataset.hpp"

namespace mlat::splits {

struct SplitPlan {
    std::vector<std::size_t> train_indices; // ascending
    std::vector<std::size_t> test_indices;  // ascending
    std::uint64_t seed = 0;
    double test_fraction = 0.0;

    bool operator==(const SplitPlan&) const = default;
};

struct FoldPlan {
    std::vector<std::vector<std::size_t>> folds; // held-out indices per fold, ascending
    std::size_t k = 0;

    bool operator==(const FoldPlan&) const = default;
};

struct LeakageReport {
    bool ok = true;
    std::vector<std::string> offending_groups; // sorted
};

/// Group-level shuffle split. Groups are visited in seeded random order and
/// moved to the test side until the test count reaches ceil(fraction * N),
/// stopping early when the next group would overshoot by more than the
/// remaining shortfall. Both sides always receive at least one group.
SplitPlan group_shuffle_split(const dataset::Dataset& data, double test_fraction, std::uint64_t seed);

/// Deterministic group k-fold: groups by descending size (ties by first
/// appearance), each to the currently smallest fold (ties to the lowest fold).
FoldPlan group_kfold(const dataset::Dataset& data, std::size_t k);

LeakageReport verify_no_leakage(const SplitPlan& plan, const dataset::Dataset& data);
LeakageReport verify_no_leakage(const FoldPlan& plan, const dataset::Dataset& data);

/// Training indices of fold `fold` (the complement of the held-out list).
std::vector<std::size_t> complement(const FoldPlan& plan, std::size_t fold, std::size_t n);

dataset::Dataset subset(const dataset::Dataset& data, const std::vector<std::size_t>& indices);

nlohmann::json to_json(const SplitPlan& p);
nlohmann::json to_json(const FoldPlan& p);
nlohmann::json to_json(const LeakageReport& r);
SplitPlan split_plan_from_json(const nlohmann::json& j);
FoldPlan fold_plan_from_json(const nlohmann::json& j);

} // namespace mlat::splits
