#pragma once

#include <cstdint>

#include "mlat/dataset.hpp"
#include "mlat/eval.hpp"
#include "mlat/gbdt.hpp"
#include "mlat/splits.hpp"

/// The pinned desk-scale scenario: the default generator at n = 70, a 20%
/// group split and 3 group folds over the training side. Everything derives
/// from the seeds below, so any process rebuilds identical data and models.
namespace mlat::reference {

inline constexpr std::size_t kRecords = 70;
inline constexpr std::uint64_t kDataSeed = 16;
inline constexpr std::uint64_t kSplitSeed = 16;
inline constexpr double kTestFraction = 0.2;
inline constexpr std::size_t kFolds = 3;

struct DeskScenario {
    dataset::Dataset data;
    splits::SplitPlan split;
    dataset::Dataset train;
    dataset::Dataset test;
    splits::FoldPlan train_folds; // indices into `train`
    double reference_mean = 0.0;  // mean price over `data`
};

DeskScenario desk_scenario();

/// Table-5 GBDT (hp seed 42) trained on the scenario's training side.
gbdt::GbdtModel desk_model(const DeskScenario& s);
inline gbdt::GbdtModel desk_model() { return desk_model(desk_scenario()); }

} // namespace mlat::reference
