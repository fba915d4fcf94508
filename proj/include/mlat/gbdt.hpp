#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json_fwd.hpp>

#include "mlat/error.hpp"

namespace mlat::gbdt {

/// Regularized boosting settings. Defaults are the small-data regime used
/// for the pricing model.
struct Hyperparameters {
    int n_estimators = 50;
    int max_depth = 3;
    double learning_rate = 0.05;
    double subsample = 0.8;
    double colsample_bytree = 0.8;
    double reg_alpha = 0.1;
    double reg_lambda = 1.0;
    double min_child_weight = 3.0;
    double min_split_gain = 0.0;
    std::uint64_t seed = 42;

    bool operator==(const Hyperparameters&) const = default;
};

void validate(const Hyperparameters& hp);
nlohmann::json to_json(const Hyperparameters& hp);
/// Overlays the keys in `j` on `base`; unknown keys are rejected.
Hyperparameters hyperparameters_from_json(const nlohmann::json& j, Hyperparameters base = {});

/// Flat node storage. A node is a leaf when `left < 0`.
struct TreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double weight = 0.0; // leaf value before the learning rate
    double gain = 0.0;   // realized split gain (internal nodes)
    double cover = 0.0;  // hessian sum of the rows that reached this node while training

    bool is_leaf() const { return left < 0; }
};

struct Tree {
    std::vector<TreeNode> nodes; // nodes[0] is the root

    double leaf_value(std::span<const double> x) const;
    int depth() const;
};

struct GbdtModel {
    double base_score = 0.0;
    double learning_rate = 0.05;
    std::vector<std::string> feature_names;
    std::vector<Tree> trees;
    Hyperparameters hyperparameters;
    std::size_t n_train = 0;
    std::string trained_at;

    /// Throws ValidationError on a dimension mismatch.
    double predict(std::span<const double> x) const;
};

/// Row-major design matrix with named columns.
struct Matrix {
    std::vector<double> values;
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<std::string> names;

    std::span<const double> row(std::size_t i) const { return {values.data() + i * cols, cols}; }
    double at(std::size_t i, std::size_t j) const { return values[i * cols + j]; }
};

Matrix make_matrix(const std::vector<std::vector<double>>& rows, std::vector<std::string> names);

/// Squared-error boosting with exact greedy splits. Deterministic per hp.seed.
GbdtModel fit(const Matrix& x, std::span<const double> y, const Hyperparameters& hp);

double predict(const GbdtModel& model, std::span<const double> x);
std::vector<double> predict(const GbdtModel& model, const Matrix& x);

struct FeatureImportance {
    std::string name;
    double share = 0.0;
};

/// Total split gain per feature normalized to sum to 1, in feature order.
std::vector<FeatureImportance> feature_importance(const GbdtModel& model);

// Artifact -----------------------------------------------------------------

inline constexpr const char* kFormatVersion = "mlat-gbdt/1";

class ModelVersionError : public Error {
public:
    using Error::Error;
};
class ModelFormatError : public Error {
public:
    using Error::Error;
};
class ModelConsistencyError : public Error {
public:
    using Error::Error;
};

nlohmann::json to_json(const GbdtModel& model);
GbdtModel model_from_json(const nlohmann::json& j);
void save_model(const GbdtModel& model, const std::filesystem::path& path);
GbdtModel load_model(const std::filesystem::path& path);

/// Stable identifier derived from the artifact content (trained_at excluded).
std::string model_version(const GbdtModel& model);

} // namespace mlat::gbdt
