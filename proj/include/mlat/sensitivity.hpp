#pragma once

#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mlat/dataset.hpp"
#include "mlat/gbdt.hpp"

namespace mlat::sensitivity {

/// A full raw feature assignment. The default is the "typical project":
/// $1M revenue, 8 weeks, pain 3, complexity 3, phase 1, custom stack.
struct BaselineScenario {
    dataset::RawFeatures features{1'000'000.0, 8, 3, 3, 1, dataset::TechStack::Custom};
};

struct CurvePoint {
    std::string label; // value as text ("3", "custom")
    double value = 0.0; // numeric position (enum index for tech_stack)
    double price = 0.0;
};

struct SensitivityCurve {
    std::string feature;
    std::vector<CurvePoint> points;
    BaselineScenario baseline;
};

/// Predicts at baseline-with-feature-replaced for every value. Values must
/// be strictly increasing and in the feature's valid range. For tech_stack
/// the values are enum indices 0..2 (no_code, low_code, custom).
SensitivityCurve univariate_sweep(const gbdt::GbdtModel& model, const BaselineScenario& baseline,
                                  const std::string& feature, const std::vector<double>& values);

/// Every valid value of a bounded feature (pain 1..5, complexity 1..5,
/// phase 1..4, tech_stack's three literals).
std::vector<double> full_range(const std::string& feature);

enum class Direction { NonDecreasing, NonIncreasing };

struct MonotonicityReport {
    bool ok = true;
    std::vector<std::pair<std::size_t, std::size_t>> violations; // adjacent point indices
    double max_violation = 0.0;
};

/// Adjacent-pair comparison with an absolute tolerance of $1.
MonotonicityReport monotonicity_check(const SensitivityCurve& curve, Direction direction);

/// Last price over first price. Throws ValidationError when the first price is not positive.
double sweep_ratio(const SensitivityCurve& curve);

nlohmann::json to_json(const SensitivityCurve& c);
nlohmann::json to_json(const MonotonicityReport& r);
std::string to_csv(const SensitivityCurve& c);
std::string render_table(const SensitivityCurve& c);

} // namespace mlat::sensitivity
