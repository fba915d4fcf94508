#include "mlat/sensitivity.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mlat/error.hpp"
#include "mlat/format.hpp"

namespace mlat::sensitivity {

namespace {

constexpr double kTolerance = 1.0;

int as_int(const std::string& feature, double v) {
    if (v != std::floor(v)) throw ValidationError(feature + ": value " + std::to_string(v) + " is not an integer");
    return static_cast<int>(v);
}

std::string value_label(const std::string& feature, double v) {
    if (feature == "tech_stack") return std::string(dataset::to_string(static_cast<dataset::TechStack>(static_cast<int>(v))));
    std::ostringstream os;
    os.precision(15);
    os << v;
    return os.str();
}

void assign(dataset::RawFeatures& f, const std::string& feature, double v) {
    if (feature == "client_revenue") {
        f.client_revenue = v;
    } else if (feature == "est_duration_weeks") {
        f.est_duration_weeks = as_int(feature, v);
    } else if (feature == "pain_severity_score") {
        f.pain_severity_score = as_int(feature, v);
    } else if (feature == "integration_complexity") {
        f.integration_complexity = as_int(feature, v);
    } else if (feature == "phase") {
        f.phase = as_int(feature, v);
    } else if (feature == "tech_stack") {
        const int t = as_int(feature, v);
        if (t < 0 || t > 2) throw ValidationError("tech_stack: index " + std::to_string(t) + " outside [0,2]");
        f.tech_stack = static_cast<dataset::TechStack>(t);
    } else {
        throw ValidationError("unknown feature '" + feature + "'");
    }
}

} // namespace

SensitivityCurve univariate_sweep(const gbdt::GbdtModel& model, const BaselineScenario& baseline,
                                  const std::string& feature, const std::vector<double>& values) {
    dataset::validate(baseline.features);
    SensitivityCurve curve;
    curve.feature = feature;
    curve.baseline = baseline;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i > 0 && !(values[i] > values[i - 1]))
            throw ValidationError("sweep values must be strictly increasing");
        auto f = baseline.features;
        assign(f, feature, values[i]);
        const auto x = dataset::encode_features(f); // range check
        curve.points.push_back({value_label(feature, values[i]), values[i], model.predict(x.values)});
    }
    return curve;
}

std::vector<double> full_range(const std::string& feature) {
    if (feature == "pain_severity_score" || feature == "integration_complexity") return {1, 2, 3, 4, 5};
    if (feature == "phase") return {1, 2, 3, 4};
    if (feature == "tech_stack") return {0, 1, 2};
    throw ValidationError("feature '" + feature + "' has no bounded default range; pass explicit values");
}

MonotonicityReport monotonicity_check(const SensitivityCurve& curve, Direction direction) {
    MonotonicityReport r;
    for (std::size_t i = 0; i + 1 < curve.points.size(); ++i) {
        const double step = curve.points[i + 1].price - curve.points[i].price;
        const double drop = direction == Direction::NonDecreasing ? -step : step;
        if (drop > kTolerance) {
            r.ok = false;
            r.violations.emplace_back(i, i + 1);
            r.max_violation = std::max(r.max_violation, drop);
        }
    }
    return r;
}

double sweep_ratio(const SensitivityCurve& curve) {
    if (curve.points.empty()) throw ValidationError("sweep_ratio: empty curve");
    const double first = curve.points.front().price;
    if (!(first > 0.0)) throw ValidationError("sweep_ratio: first predicted price is not positive");
    return curve.points.back().price / first;
}

nlohmann::json to_json(const SensitivityCurve& c) {
    nlohmann::json pts = nlohmann::json::array();
    for (const auto& p : c.points) pts.push_back({{"value", p.label}, {"price", p.price}});
    const auto& b = c.baseline.features;
    return {{"feature", c.feature},
            {"baseline",
             {{"client_revenue", b.client_revenue},
              {"est_duration_weeks", b.est_duration_weeks},
              {"pain_severity_score", b.pain_severity_score},
              {"integration_complexity", b.integration_complexity},
              {"phase", b.phase},
              {"tech_stack", dataset::to_string(b.tech_stack)}}},
            {"points", pts}};
}

nlohmann::json to_json(const MonotonicityReport& r) {
    nlohmann::json v = nlohmann::json::array();
    for (const auto& [a, b] : r.violations) v.push_back({a, b});
    return {{"ok", r.ok}, {"violations", v}, {"max_violation", r.max_violation}};
}

std::string to_csv(const SensitivityCurve& c) {
    std::ostringstream os;
    os.precision(17);
    os << "value,price\n";
    for (const auto& p : c.points) os << p.label << ',' << p.price << '\n';
    return os.str();
}

std::string render_table(const SensitivityCurve& c) {
    std::ostringstream os;
    std::string header = c.feature;
    const std::size_t width = std::max<std::size_t>(header.size(), 12) + 2;
    os << header << std::string(width - header.size(), ' ') << "Predicted Price ($)\n";
    for (const auto& p : c.points) {
        os << p.label << std::string(width > p.label.size() ? width - p.label.size() : 1, ' ') << usd(p.price)
           << '\n';
    }
    return os.str();
}

} // namespace mlat::sensitivity
