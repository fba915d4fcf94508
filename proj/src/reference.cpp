#include "mlat/reference.hpp"

#include <numeric>

namespace mlat::reference {

DeskScenario desk_scenario() {
    auto spec = dataset::GeneratorSpec::defaults();
    spec.seed = kDataSeed;
    DeskScenario s;
    s.data = dataset::generate_synthetic(spec, kRecords);
    s.split = splits::group_shuffle_split(s.data, kTestFraction, kSplitSeed);
    s.train = splits::subset(s.data, s.split.train_indices);
    s.test = splits::subset(s.data, s.split.test_indices);
    s.train_folds = splits::group_kfold(s.train, kFolds);
    const auto p = dataset::prices(s.data);
    s.reference_mean = std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
    return s;
}

gbdt::GbdtModel desk_model(const DeskScenario& s) {
    const auto x = eval::design_matrix(s.train);
    const auto y = dataset::prices(s.train);
    return gbdt::fit(x, y, gbdt::Hyperparameters{});
}

} // namespace mlat::reference
