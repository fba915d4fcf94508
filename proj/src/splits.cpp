#include "mlat/splits.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <set>
#include <unordered_map>

#include <nlohmann/json.hpp>

#include "mlat/error.hpp"
#include "mlat/rng.hpp"

namespace mlat::splits {

namespace {

struct Group {
    std::string name;
    std::vector<std::size_t> members;
};

// Groups in order of first appearance.
std::vector<Group> collect_groups(const dataset::Dataset& data) {
    std::vector<Group> groups;
    std::unordered_map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto [it, inserted] = index.emplace(data[i].client_group, groups.size());
        if (inserted) groups.push_back({data[i].client_group, {}});
        groups[it->second].members.push_back(i);
    }
    return groups;
}

LeakageReport check_partitions(const std::vector<const std::vector<std::size_t>*>& parts,
                               const dataset::Dataset& data) {
    std::unordered_map<std::string, std::size_t> owner;
    std::set<std::string> bad;
    std::vector<int> seen(data.size(), 0);
    for (std::size_t p = 0; p < parts.size(); ++p) {
        for (std::size_t idx : *parts[p]) {
            if (idx >= data.size())
                throw ValidationError("plan index " + std::to_string(idx) + " out of range for " +
                                      std::to_string(data.size()) + " records");
            ++seen[idx];
            const auto [it, inserted] = owner.emplace(data[idx].client_group, p);
            if (!inserted && it->second != p) bad.insert(data[idx].client_group);
        }
    }
    for (std::size_t i = 0; i < seen.size(); ++i) {
        if (seen[i] > 1) bad.insert(data[i].client_group);
    }
    return {bad.empty(), {bad.begin(), bad.end()}};
}

std::vector<std::size_t> index_array(const nlohmann::json& j, const char* key) {
    if (!j.contains(key) || !j[key].is_array()) throw SchemaError(std::string("plan: missing array '") + key + "'");
    return j[key].get<std::vector<std::size_t>>();
}

} // namespace

SplitPlan group_shuffle_split(const dataset::Dataset& data, double test_fraction, std::uint64_t seed) {
    if (!(test_fraction > 0.0 && test_fraction < 1.0))
        throw ValidationError("test_fraction must lie in (0, 1)");
    auto groups = collect_groups(data);
    if (groups.size() < 2) throw ValidationError("cannot split one group");

    Rng rng(seed);
    rng.shuffle(std::span<Group>(groups));

    const auto n = data.size();
    const auto target = static_cast<std::size_t>(std::ceil(test_fraction * static_cast<double>(n) - 1e-9));
    std::size_t taken = 0;
    std::size_t count = 0;
    for (const auto& g : groups) {
        if (count >= target) break;
        const std::size_t size = g.members.size();
        if (count + size <= target) {
            count += size;
            ++taken;
            continue;
        }
        const std::size_t over = count + size - target;
        const std::size_t under = target - count;
        if (over <= under) {
            count += size;
            ++taken;
        }
        break;
    }
    taken = std::clamp<std::size_t>(taken, 1, groups.size() - 1);

    SplitPlan plan;
    plan.seed = seed;
    plan.test_fraction = test_fraction;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        auto& side = g < taken ? plan.test_indices : plan.train_indices;
        side.insert(side.end(), groups[g].members.begin(), groups[g].members.end());
    }
    std::sort(plan.train_indices.begin(), plan.train_indices.end());
    std::sort(plan.test_indices.begin(), plan.test_indices.end());
    return plan;
}

FoldPlan group_kfold(const dataset::Dataset& data, std::size_t k) {
    if (k < 2) throw ValidationError("k must be >= 2");
    auto groups = collect_groups(data);
    if (k > groups.size())
        throw ValidationError("k = " + std::to_string(k) + " exceeds the number of groups (" +
                              std::to_string(groups.size()) + ")");
    std::stable_sort(groups.begin(), groups.end(),
                     [](const Group& a, const Group& b) { return a.members.size() > b.members.size(); });

    FoldPlan plan;
    plan.k = k;
    plan.folds.resize(k);
    for (const auto& g : groups) {
        const auto smallest = std::min_element(
            plan.folds.begin(), plan.folds.end(),
            [](const auto& a, const auto& b) { return a.size() < b.size(); });
        smallest->insert(smallest->end(), g.members.begin(), g.members.end());
    }
    for (auto& f : plan.folds) std::sort(f.begin(), f.end());
    return plan;
}

LeakageReport verify_no_leakage(const SplitPlan& plan, const dataset::Dataset& data) {
    return check_partitions({&plan.train_indices, &plan.test_indices}, data);
}

LeakageReport verify_no_leakage(const FoldPlan& plan, const dataset::Dataset& data) {
    std::vector<const std::vector<std::size_t>*> parts;
    for (const auto& f : plan.folds) parts.push_back(&f);
    return check_partitions(parts, data);
}

std::vector<std::size_t> complement(const FoldPlan& plan, std::size_t fold, std::size_t n) {
    std::vector<char> held(n, 0);
    for (std::size_t idx : plan.folds.at(fold)) held.at(idx) = 1;
    std::vector<std::size_t> out;
    for (std::size_t i = 0; i < n; ++i)
        if (!held[i]) out.push_back(i);
    return out;
}

dataset::Dataset subset(const dataset::Dataset& data, const std::vector<std::size_t>& indices) {
    dataset::Dataset out;
    out.reserve(indices.size());
    for (std::size_t i : indices) out.push_back(data.at(i));
    return out;
}

nlohmann::json to_json(const SplitPlan& p) {
    return {{"kind", "group_shuffle_split"},
            {"seed", p.seed},
            {"test_fraction", p.test_fraction},
            {"train_indices", p.train_indices},
            {"test_indices", p.test_indices}};
}

nlohmann::json to_json(const FoldPlan& p) {
    return {{"kind", "group_kfold"}, {"k", p.k}, {"folds", p.folds}};
}

nlohmann::json to_json(const LeakageReport& r) {
    return {{"ok", r.ok}, {"offending_groups", r.offending_groups}};
}

SplitPlan split_plan_from_json(const nlohmann::json& j) {
    try {
        SplitPlan p;
        p.train_indices = index_array(j, "train_indices");
        p.test_indices = index_array(j, "test_indices");
        p.seed = j.value("seed", std::uint64_t{0});
        p.test_fraction = j.value("test_fraction", 0.0);
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("split plan: ") + e.what());
    }
}

FoldPlan fold_plan_from_json(const nlohmann::json& j) {
    try {
        FoldPlan p;
        if (!j.contains("folds") || !j["folds"].is_array()) throw SchemaError("fold plan: missing array 'folds'");
        p.folds = j["folds"].get<std::vector<std::vector<std::size_t>>>();
        p.k = j.value("k", p.folds.size());
        if (p.k != p.folds.size()) throw SchemaError("fold plan: k does not match the number of folds");
        return p;
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("fold plan: ") + e.what());
    }
}

} // namespace mlat::splits
