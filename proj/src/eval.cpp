#include "mlat/eval.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <numeric>
#include <sstream>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "mlat/error.hpp"
#include "mlat/format.hpp"

namespace mlat::eval {

namespace {

using nlohmann::json;

double mean_of(std::span<const double> v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

std::pair<double, double> mean_std(const std::vector<double>& v) {
    if (v.empty()) return {0.0, 0.0};
    const double m = mean_of(v);
    double ss = 0.0;
    for (double x : v) ss += (x - m) * (x - m);
    return {m, std::sqrt(ss / static_cast<double>(v.size()))};
}

void require_finite(const gbdt::Matrix& x, std::span<const double> y) {
    for (double v : x.values)
        if (!std::isfinite(v)) throw ValidationError("non-finite feature value");
    for (double v : y)
        if (!std::isfinite(v)) throw ValidationError("non-finite target value");
}

std::string pad(const std::string& s, std::size_t width) {
    // Widths count code points so that "±" aligns like an ASCII character.
    std::size_t cps = 0;
    for (unsigned char c : s)
        if ((c & 0xC0) != 0x80) ++cps;
    return cps >= width ? s + " " : s + std::string(width - cps, ' ');
}

std::string r2_text(const std::optional<double>& r2) { return r2 ? fixed(*r2, 3) : "undefined"; }

} // namespace

// Metrics ------------------------------------------------------------------

MetricsReport compute_metrics(std::span<const double> y_true, std::span<const double> y_pred, double reference_mean) {
    if (y_true.empty() || y_true.size() != y_pred.size())
        throw ValidationError("compute_metrics: y_true and y_pred must have equal nonzero length");
    if (!(reference_mean > 0.0)) throw ValidationError("compute_metrics: reference_mean must be > 0");
    MetricsReport m;
    m.n = y_true.size();
    m.reference_mean = reference_mean;
    const double mean_true = mean_of(y_true);
    double ss_res = 0.0, ss_tot = 0.0, abs_sum = 0.0;
    for (std::size_t i = 0; i < y_true.size(); ++i) {
        const double e = y_true[i] - y_pred[i];
        ss_res += e * e;
        abs_sum += std::abs(e);
        ss_tot += (y_true[i] - mean_true) * (y_true[i] - mean_true);
    }
    const auto n = static_cast<double>(m.n);
    m.mae = abs_sum / n;
    m.rmse = std::sqrt(ss_res / n);
    m.relative_mae = m.mae / reference_mean;
    if (ss_tot > 0.0) m.r2 = 1.0 - ss_res / ss_tot;
    return m;
}

std::optional<double> overfit_ratio(double train_rmse, double test_rmse) {
    if (!(test_rmse > 0.0)) return std::nullopt;
    return train_rmse / test_rmse;
}

std::optional<double> overfit_ratio(const MetricsReport& train, const MetricsReport& test) {
    return overfit_ratio(train.rmse, test.rmse);
}

double relative_mae(double mae, double reference_mean) {
    if (!(reference_mean > 0.0)) throw ValidationError("relative MAE needs a positive reference mean");
    return mae / reference_mean;
}

// Design matrices ----------------------------------------------------------

void check_droppable(const std::string& feature) {
    for (auto name : dataset::kRawFeatureNames)
        if (name == feature) return;
    throw ValidationError("unknown feature '" + feature +
                          "' (valid: client_revenue, est_duration_weeks, pain_severity_score, "
                          "integration_complexity, phase, tech_stack)");
}

gbdt::Matrix design_matrix(const dataset::Dataset& data, const std::vector<std::string>& drop) {
    for (const auto& d : drop) check_droppable(d);
    auto dropped = [&](std::string_view name) {
        for (const auto& d : drop) {
            if (d == name) return true;
            if (d == "tech_stack" && name.starts_with("tech_")) return true;
        }
        return false;
    };
    std::vector<std::size_t> keep;
    std::vector<std::string> names;
    for (std::size_t j = 0; j < dataset::kNumFeatures; ++j) {
        if (dropped(dataset::kFeatureNames[j])) continue;
        keep.push_back(j);
        names.emplace_back(dataset::kFeatureNames[j]);
    }
    gbdt::Matrix m;
    m.rows = data.size();
    m.cols = keep.size();
    m.names = std::move(names);
    m.values.reserve(m.rows * m.cols);
    for (const auto& r : data) {
        const auto x = dataset::encode_features(r);
        for (std::size_t j : keep) m.values.push_back(x.values[j]);
    }
    return m;
}

// Ridge --------------------------------------------------------------------

double LinearModel::predict(std::span<const double> x) const {
    if (x.size() != coefficients.size())
        throw ValidationError("ridge: feature vector width mismatch");
    double p = intercept;
    for (std::size_t j = 0; j < x.size(); ++j) p += coefficients[j] * (x[j] - feature_mean[j]) / feature_std[j];
    return p;
}

std::vector<double> LinearModel::raw_coefficients() const {
    std::vector<double> out(coefficients.size());
    for (std::size_t j = 0; j < out.size(); ++j) out[j] = coefficients[j] / feature_std[j];
    return out;
}

double LinearModel::raw_intercept() const {
    double b = intercept;
    for (std::size_t j = 0; j < coefficients.size(); ++j) b -= coefficients[j] * feature_mean[j] / feature_std[j];
    return b;
}

LinearModel fit_ridge(const gbdt::Matrix& x, std::span<const double> y, double alpha) {
    if (x.rows < 2 || x.rows != y.size()) throw ValidationError("fit_ridge: need >= 2 rows with matching targets");
    if (!(alpha >= 0.0) || !std::isfinite(alpha)) throw ValidationError("fit_ridge: alpha must be finite and >= 0");
    require_finite(x, y);

    const auto n = static_cast<Eigen::Index>(x.rows);
    const auto d = static_cast<Eigen::Index>(x.cols);
    LinearModel m;
    m.alpha = alpha;
    m.feature_names = x.names;
    m.feature_mean.assign(x.cols, 0.0);
    m.feature_std.assign(x.cols, 1.0);

    Eigen::MatrixXd z(n, d);
    for (Eigen::Index j = 0; j < d; ++j) {
        double mean = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) mean += x.at(i, j);
        mean /= static_cast<double>(n);
        double ss = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) ss += (x.at(i, j) - mean) * (x.at(i, j) - mean);
        double sd = std::sqrt(ss / static_cast<double>(n));
        if (!(sd > 0.0)) sd = 1.0;
        m.feature_mean[j] = mean;
        m.feature_std[j] = sd;
        for (Eigen::Index i = 0; i < n; ++i) z(i, j) = (x.at(i, j) - mean) / sd;
    }
    Eigen::VectorXd yc(n);
    const double y_mean = mean_of(y);
    for (Eigen::Index i = 0; i < n; ++i) yc(i) = y[i] - y_mean;

    Eigen::MatrixXd gram = z.transpose() * z;
    gram.diagonal().array() += alpha;
    const Eigen::VectorXd rhs = z.transpose() * yc;
    // One-hot blocks make the centered Gram matrix singular at alpha = 0; the
    // complete orthogonal decomposition returns the minimum-norm solution there.
    const Eigen::VectorXd beta = alpha > 0.0 ? Eigen::VectorXd(gram.ldlt().solve(rhs))
                                             : Eigen::VectorXd(gram.completeOrthogonalDecomposition().solve(rhs));
    m.coefficients.assign(beta.data(), beta.data() + beta.size());
    m.intercept = y_mean;
    return m;
}

json to_json(const LinearModel& m) {
    return {{"kind", "ridge"},
            {"alpha", m.alpha},
            {"feature_names", m.feature_names},
            {"coefficients", m.coefficients},
            {"intercept", m.intercept},
            {"feature_mean", m.feature_mean},
            {"feature_std", m.feature_std},
            {"raw_coefficients", m.raw_coefficients()},
            {"raw_intercept", m.raw_intercept()}};
}

// Training -----------------------------------------------------------------

ModelSpec ModelSpec::gbdt_default(std::string label) { return {std::move(label), gbdt::Hyperparameters{}, {}}; }

ModelSpec ModelSpec::ridge_default(std::string label) { return {std::move(label), RidgeSpec{}, {}}; }

std::vector<double> Predictor::predict(const dataset::Dataset& data) const {
    const auto x = design_matrix(data, drop_features);
    std::vector<double> out;
    out.reserve(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i)
        out.push_back(std::visit([&](const auto& m) { return m.predict(x.row(i)); }, model));
    return out;
}

Predictor train(const ModelSpec& spec, const dataset::Dataset& data) {
    const auto x = design_matrix(data, spec.drop_features);
    const auto y = dataset::prices(data);
    Predictor p;
    p.drop_features = spec.drop_features;
    if (const auto* hp = std::get_if<gbdt::Hyperparameters>(&spec.model)) {
        p.model = gbdt::fit(x, y, *hp);
    } else {
        p.model = fit_ridge(x, y, std::get<RidgeSpec>(spec.model).alpha);
    }
    return p;
}

// Cross-validation ---------------------------------------------------------

CvReport cross_validate(const dataset::Dataset& data, const ModelSpec& spec, const splits::FoldPlan& plan,
                        std::optional<double> reference_mean) {
    if (plan.folds.size() != plan.k || plan.k < 2) throw ValidationError("cross_validate: malformed fold plan");
    for (const auto& f : plan.folds)
        if (f.size() < 2) throw ValidationError("cross_validate: every fold needs at least 2 records");
    const auto leak = splits::verify_no_leakage(plan, data);
    if (!leak.ok) throw ValidationError("cross_validate: fold plan splits client groups");
    for (const auto& d : spec.drop_features) check_droppable(d);

    const auto all_prices = dataset::prices(data);
    const double ref = reference_mean.value_or(mean_of(all_prices));

    std::vector<std::future<FoldResult>> jobs;
    for (std::size_t k = 0; k < plan.k; ++k) {
        jobs.push_back(std::async(std::launch::async, [&, k] {
            const auto train_idx = splits::complement(plan, k, data.size());
            const auto train_set = splits::subset(data, train_idx);
            const auto test_set = splits::subset(data, plan.folds[k]);
            const auto model = train(spec, train_set);
            FoldResult fr;
            fr.indices = plan.folds[k];
            fr.predictions = model.predict(test_set);
            const auto y = dataset::prices(test_set);
            fr.metrics = compute_metrics(y, fr.predictions, ref);
            fr.descriptor.size = y.size();
            fr.descriptor.price_min = *std::min_element(y.begin(), y.end());
            fr.descriptor.price_max = *std::max_element(y.begin(), y.end());
            fr.descriptor.price_mean = mean_of(y);
            return fr;
        }));
    }

    CvReport report;
    report.label = spec.label;
    std::vector<double> r2s, maes, rels;
    for (auto& j : jobs) {
        report.folds.push_back(j.get());
        const auto& m = report.folds.back().metrics;
        if (m.r2) r2s.push_back(*m.r2);
        else ++report.undefined_r2_folds;
        maes.push_back(m.mae);
        rels.push_back(m.relative_mae);
    }
    std::tie(report.r2_mean, report.r2_std) = mean_std(r2s);
    std::tie(report.mae_mean, report.mae_std) = mean_std(maes);
    report.relative_mae_mean = mean_std(rels).first;
    return report;
}

ComparisonReport compare_models(const dataset::Dataset& data, const splits::SplitPlan& split,
                                const splits::FoldPlan& train_folds, const std::vector<ModelSpec>& specs) {
    if (!splits::verify_no_leakage(split, data).ok) throw ValidationError("compare_models: split leaks client groups");
    const auto train_set = splits::subset(data, split.train_indices);
    const auto test_set = splits::subset(data, split.test_indices);
    const double ref = mean_of(dataset::prices(data));
    ComparisonReport out;
    for (const auto& spec : specs) {
        ComparisonRow row;
        row.label = spec.label;
        row.cv = cross_validate(train_set, spec, train_folds, ref);
        if (!test_set.empty()) {
            const auto model = train(spec, train_set);
            row.train = compute_metrics(dataset::prices(train_set), model.predict(train_set), ref);
            row.test = compute_metrics(dataset::prices(test_set), model.predict(test_set), ref);
        }
        out.rows.push_back(std::move(row));
    }
    return out;
}

AblationReport ablation(const dataset::Dataset& data, const splits::FoldPlan& plan, const std::string& drop_feature,
                        const ModelSpec& base, std::optional<double> reference_mean) {
    check_droppable(drop_feature);
    AblationReport r;
    r.dropped = drop_feature;
    r.full = cross_validate(data, base, plan, reference_mean);
    ModelSpec reduced = base;
    reduced.label = base.label + " (no " + drop_feature + ")";
    reduced.drop_features.push_back(drop_feature);
    r.ablated = cross_validate(data, reduced, plan, reference_mean);
    return r;
}

// Reporting ----------------------------------------------------------------

json to_json(const MetricsReport& m) {
    return {{"r2", m.r2 ? json(*m.r2) : json("undefined")},
            {"mae", m.mae},
            {"rmse", m.rmse},
            {"relative_mae", m.relative_mae},
            {"reference_mean", m.reference_mean},
            {"n", m.n}};
}

json to_json(const CvReport& r) {
    json folds = json::array();
    for (const auto& f : r.folds) {
        folds.push_back({{"size", f.descriptor.size},
                         {"price_min", f.descriptor.price_min},
                         {"price_max", f.descriptor.price_max},
                         {"price_mean", f.descriptor.price_mean},
                         {"metrics", to_json(f.metrics)},
                         {"indices", f.indices},
                         {"predictions", f.predictions}});
    }
    return {{"label", r.label},
            {"fold_metrics", folds},
            {"r2_mean", r.r2_mean},
            {"r2_std", r.r2_std},
            {"mae_mean", r.mae_mean},
            {"mae_std", r.mae_std},
            {"relative_mae_mean", r.relative_mae_mean},
            {"undefined_r2_folds", r.undefined_r2_folds}};
}

json to_json(const ComparisonReport& r) {
    json rows = json::array();
    for (const auto& row : r.rows) {
        rows.push_back({{"label", row.label},
                        {"cv", to_json(row.cv)},
                        {"train", row.train ? to_json(*row.train) : json(nullptr)},
                        {"test", row.test ? to_json(*row.test) : json(nullptr)}});
    }
    return {{"rows", rows}};
}

json to_json(const AblationReport& r) {
    return {{"dropped", r.dropped}, {"full", to_json(r.full)}, {"ablated", to_json(r.ablated)}, {"r2_delta", r.r2_delta()}};
}

std::string render_cv_table(const CvReport& r) {
    std::ostringstream os;
    os << "Cross-validation: " << r.label << '\n';
    os << pad("Fold", 8) << pad("Samples", 9) << pad("Price Range", 22) << pad("Mean Price", 12) << pad("R2", 11)
       << "MAE\n";
    for (std::size_t i = 0; i < r.folds.size(); ++i) {
        const auto& f = r.folds[i];
        os << pad("Fold " + std::to_string(i + 1), 8) << pad(std::to_string(f.descriptor.size), 9)
           << pad(usd(f.descriptor.price_min) + " -- " + usd(f.descriptor.price_max), 22)
           << pad(usd(f.descriptor.price_mean), 12) << pad(r2_text(f.metrics.r2), 11) << usd(f.metrics.mae) << '\n';
    }
    os << "CV R2:  " << fixed(r.r2_mean, 3) << " ± " << fixed(r.r2_std, 3) << '\n';
    os << "CV MAE: " << usd(r.mae_mean) << " ± " << usd(r.mae_std) << '\n';
    os << "Relative MAE: " << fixed(100.0 * r.relative_mae_mean, 1) << "%\n";
    return os.str();
}

std::string render_comparison_table(const ComparisonReport& r) {
    std::ostringstream os;
    std::size_t w = 8;
    for (const auto& row : r.rows) w = std::max(w, row.label.size() + 2);
    os << pad("Model", w) << pad("CV R2", 17) << pad("CV MAE", 20) << "Test R2\n";
    for (const auto& row : r.rows) {
        os << pad(row.label, w) << pad(fixed(row.cv.r2_mean, 3) + " ± " + fixed(row.cv.r2_std, 3), 17)
           << pad(usd(row.cv.mae_mean) + " ± " + usd(row.cv.mae_std), 20)
           << (row.test ? r2_text(row.test->r2) : std::string("---")) << '\n';
    }
    return os.str();
}

std::string render_metrics_table(const MetricsReport& train, const std::optional<MetricsReport>& test) {
    std::ostringstream os;
    os << pad("Metric", 14) << pad("Training Set", 14) << (test ? "Test Set" : "") << '\n';
    auto line = [&](const std::string& name, const std::string& a, const std::string& b) {
        os << pad(name, 14) << pad(a, 14) << (test ? b : "") << '\n';
    };
    line("R2", r2_text(train.r2), test ? r2_text(test->r2) : "");
    line("MAE", usd(train.mae), test ? usd(test->mae) : "");
    line("RMSE", usd(train.rmse), test ? usd(test->rmse) : "");
    line("Relative MAE", fixed(100.0 * train.relative_mae, 1) + "%",
         test ? fixed(100.0 * test->relative_mae, 1) + "%" : "");
    if (test) {
        const auto ratio = overfit_ratio(train, *test);
        os << "Train/test RMSE ratio: " << (ratio ? fixed(*ratio, 2) : std::string("undefined")) << '\n';
    }
    return os.str();
}

} // namespace mlat::eval
