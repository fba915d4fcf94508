#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mlat/dataset.hpp"
#include "mlat/gbdt.hpp"
#include "mlat/splits.hpp"

namespace mlat::eval {

// Metrics ------------------------------------------------------------------

struct MetricsReport {
    std::optional<double> r2; // empty when y_true has zero variance
    double mae = 0.0;
    double rmse = 0.0;
    double relative_mae = 0.0; // mae / reference_mean
    double reference_mean = 0.0;
    std::size_t n = 0;
};

MetricsReport compute_metrics(std::span<const double> y_true, std::span<const double> y_pred,
                              double reference_mean);

/// train.rmse / test.rmse; empty when test.rmse == 0.
std::optional<double> overfit_ratio(const MetricsReport& train, const MetricsReport& test);
std::optional<double> overfit_ratio(double train_rmse, double test_rmse);

/// Dataset-level ratio: mae over the mean target price, not a per-sample percentage.
double relative_mae(double mae, double reference_mean);

// Design matrices ----------------------------------------------------------

/// Canonical raw feature names accepted by `drop`: the five numeric columns
/// and "tech_stack" (which removes all three one-hot columns).
gbdt::Matrix design_matrix(const dataset::Dataset& data, const std::vector<std::string>& drop = {});

/// Throws ValidationError for a name that is not a raw feature.
void check_droppable(const std::string& feature);

// Ridge --------------------------------------------------------------------

struct LinearModel {
    std::vector<std::string> feature_names;
    std::vector<double> coefficients; // on standardized features
    double intercept = 0.0;
    std::vector<double> feature_mean;
    std::vector<double> feature_std; // zero-variance columns stored as 1
    double alpha = 1.0;

    double predict(std::span<const double> x) const;
    /// Coefficients mapped back to raw feature units.
    std::vector<double> raw_coefficients() const;
    double raw_intercept() const;
};

/// Closed-form ridge on standardized features with an unpenalized intercept.
LinearModel fit_ridge(const gbdt::Matrix& x, std::span<const double> y, double alpha);
nlohmann::json to_json(const LinearModel& m);

// Cross-validation ---------------------------------------------------------

struct RidgeSpec {
    double alpha = 1.0;
};

struct ModelSpec {
    std::string label;
    std::variant<gbdt::Hyperparameters, RidgeSpec> model;
    std::vector<std::string> drop_features;

    static ModelSpec gbdt_default(std::string label = "GBDT");
    static ModelSpec ridge_default(std::string label = "Ridge");
};

/// A trained model of either family, bound to its column selection.
struct Predictor {
    std::variant<gbdt::GbdtModel, LinearModel> model;
    std::vector<std::string> drop_features;

    std::vector<double> predict(const dataset::Dataset& data) const;
};

Predictor train(const ModelSpec& spec, const dataset::Dataset& data);

struct FoldDescriptor {
    std::size_t size = 0;
    double price_min = 0.0;
    double price_max = 0.0;
    double price_mean = 0.0;
};

struct FoldResult {
    FoldDescriptor descriptor;
    MetricsReport metrics;
    std::vector<std::size_t> indices;
    std::vector<double> predictions;
};

struct CvReport {
    std::string label;
    std::vector<FoldResult> folds;
    double r2_mean = 0.0;
    double r2_std = 0.0; // population std across folds
    double mae_mean = 0.0;
    double mae_std = 0.0;
    double relative_mae_mean = 0.0;
    std::size_t undefined_r2_folds = 0;
};

/// Trains on each fold's complement and scores the held-out fold. When
/// `reference_mean` is empty the mean price of `data` is used.
CvReport cross_validate(const dataset::Dataset& data, const ModelSpec& spec, const splits::FoldPlan& plan,
                        std::optional<double> reference_mean = std::nullopt);

struct ComparisonRow {
    std::string label;
    CvReport cv;
    std::optional<MetricsReport> train;
    std::optional<MetricsReport> test;
};

struct ComparisonReport {
    std::vector<ComparisonRow> rows;
};

/// Cross-validates every spec on the training side of `split` (with
/// `train_folds` indexing into that side) and then scores a model trained on
/// the full training side against the test side. Relative MAE is referenced
/// to the mean price of the whole dataset.
ComparisonReport compare_models(const dataset::Dataset& data, const splits::SplitPlan& split,
                                const splits::FoldPlan& train_folds, const std::vector<ModelSpec>& specs);

struct AblationReport {
    std::string dropped;
    CvReport full;
    CvReport ablated;
    double r2_delta() const { return ablated.r2_mean - full.r2_mean; }
};

AblationReport ablation(const dataset::Dataset& data, const splits::FoldPlan& plan, const std::string& drop_feature,
                        const ModelSpec& base = ModelSpec::gbdt_default(),
                        std::optional<double> reference_mean = std::nullopt);

nlohmann::json to_json(const MetricsReport& m);
nlohmann::json to_json(const CvReport& r);
nlohmann::json to_json(const ComparisonReport& r);
nlohmann::json to_json(const AblationReport& r);

std::string render_cv_table(const CvReport& r);
std::string render_comparison_table(const ComparisonReport& r);
std::string render_metrics_table(const MetricsReport& train, const std::optional<MetricsReport>& test);

} // namespace mlat::eval
