#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include <nlohmann/json.hpp>

#include "mlat/eval.hpp"
#include "mlat/reference.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mlat;
using namespace mlat::eval;
using nlohmann::json;

TEST_CASE("reference metric arithmetic") {
    CHECK(std::abs(100.0 * relative_mae(3688, 16309) - 22.6) <= 0.05);
    const auto ratio = overfit_ratio(2874.0, 4720.0);
    REQUIRE(ratio);
    CHECK(std::abs(*ratio - 0.609) <= 0.001);
}

TEST_CASE("R2 of the mean and perfect predictors") {
    const std::vector<double> y = {10000, 12000, 17000, 25000, 36000};
    const double mean = 20000;
    const std::vector<double> flat(y.size(), mean);
    const auto m = compute_metrics(y, flat, mean);
    REQUIRE(m.r2);
    CHECK(*m.r2 == 0.0);
    const auto p = compute_metrics(y, y, mean);
    CHECK(*p.r2 == 1.0);
    CHECK(p.mae == 0.0);
    CHECK(p.rmse == 0.0);
}

TEST_CASE("metrics match a direct computation") {
    std::mt19937_64 rng(1);
    std::uniform_real_distribution<double> u(1000, 40000), e(-3000, 3000);
    for (int t = 0; t < 100; ++t) {
        std::vector<double> y, p;
        for (int i = 0; i < 2 + t % 20; ++i) {
            y.push_back(u(rng));
            p.push_back(y.back() + e(rng));
        }
        double my = 0;
        for (double v : y) my += v / y.size();
        double ss_res = 0, ss_tot = 0, ae = 0;
        for (std::size_t i = 0; i < y.size(); ++i) {
            ss_res += (y[i] - p[i]) * (y[i] - p[i]);
            ss_tot += (y[i] - my) * (y[i] - my);
            ae += std::abs(y[i] - p[i]);
        }
        const auto m = compute_metrics(y, p, 16309);
        CHECK(testing::rel_close(*m.r2, 1 - ss_res / ss_tot, 1e-9));
        CHECK(testing::rel_close(m.mae, ae / y.size(), 1e-12));
        CHECK(testing::rel_close(m.rmse, std::sqrt(ss_res / y.size()), 1e-12));
        CHECK(testing::rel_close(m.relative_mae, ae / y.size() / 16309, 1e-12));
    }
}

TEST_CASE("undefined R2 and bad input") {
    const std::vector<double> y = {5, 5, 5};
    const std::vector<double> p = {4, 5, 6};
    CHECK_FALSE(compute_metrics(y, p, 5).r2.has_value());
    CHECK_THROWS_AS(compute_metrics(y, std::vector<double>{1, 2}, 5), ValidationError);
    CHECK_THROWS_AS(compute_metrics(y, p, 0), ValidationError);
    CHECK_FALSE(overfit_ratio(1.0, 0.0).has_value());
}

TEST_CASE("ridge: three-point hand example") {
    const auto x = gbdt::make_matrix({{1}, {2}, {3}}, {"x"});
    const std::vector<double> y = {1, 3, 2};
    const auto m = fit_ridge(x, y, 1.0);
    CHECK(testing::rel_close(m.raw_coefficients()[0], 0.375, 1e-12));
    const double a = 1, b = 2, c = 3;
    CHECK(testing::rel_close(m.predict({&a, 1}), 1.625, 1e-12));
    CHECK(testing::rel_close(m.predict({&b, 1}), 2.0, 1e-12));
    CHECK(testing::rel_close(m.predict({&c, 1}), 2.375, 1e-12));
    CHECK(testing::rel_close(m.raw_intercept(), 1.25, 1e-12));
}

TEST_CASE("ridge matches an independent elimination solver") {
    std::mt19937_64 rng(7);
    for (int t = 0; t < 30; ++t) {
        const auto d = testing::random_dataset(rng, 20);
        const auto x = design_matrix(d);
        const auto y = dataset::prices(d);
        const double alpha = 0.1 + t;
        const auto m = fit_ridge(x, y, alpha);
        oracle::Rows rows;
        for (std::size_t i = 0; i < x.rows; ++i) rows.emplace_back(x.row(i).begin(), x.row(i).end());
        // A constant one-hot column is possible on small draws; the oracle treats it like the library (std 1).
        const auto o = oracle::ridge(rows, y, alpha);
        for (std::size_t j = 0; j < o.beta.size(); ++j)
            CHECK(std::abs(m.coefficients[j] - o.beta[j]) <= 1e-6 * std::max(1.0, std::abs(o.beta[j])));
        for (const auto& r : rows) CHECK(testing::rel_close(m.predict(r), o.predict(r), 1e-9));
    }
}

TEST_CASE("ridge with alpha 0 on collinear one-hot columns stays finite") {
    std::mt19937_64 rng(8);
    const auto d = testing::random_dataset(rng, 30);
    const auto m = fit_ridge(design_matrix(d), dataset::prices(d), 0.0);
    for (double c : m.coefficients) CHECK(std::isfinite(c));
}

TEST_CASE("design matrix drops raw features") {
    std::mt19937_64 rng(9);
    const auto d = testing::random_dataset(rng, 5);
    CHECK(design_matrix(d).cols == 8);
    const auto no_cx = design_matrix(d, {"integration_complexity"});
    CHECK(no_cx.cols == 7);
    CHECK(std::find(no_cx.names.begin(), no_cx.names.end(), "integration_complexity") == no_cx.names.end());
    CHECK(design_matrix(d, {"tech_stack"}).cols == 5);
    CHECK_THROWS_AS(design_matrix(d, {"tech_custom"}), ValidationError);
    CHECK_THROWS_AS(check_droppable("price"), ValidationError);
}

TEST_CASE("cross-validation on the desk scenario") {
    const auto s = reference::desk_scenario();
    const auto g = cross_validate(s.train, ModelSpec::gbdt_default(), s.train_folds, s.reference_mean);
    CHECK(g.folds.size() == 3);
    std::size_t total = 0;
    for (const auto& f : g.folds) {
        total += f.descriptor.size;
        CHECK(f.predictions.size() == f.indices.size());
        CHECK(f.metrics.reference_mean == s.reference_mean);
    }
    CHECK(total == s.train.size());
    CHECK(g.undefined_r2_folds == 0);
    const auto again = cross_validate(s.train, ModelSpec::gbdt_default(), s.train_folds, s.reference_mean);
    CHECK(to_json(again) == to_json(g));
    const auto table = render_cv_table(g);
    CHECK(table.find("Fold 3") != std::string::npos);
    CHECK(table.find("±") != std::string::npos);
}

TEST_CASE("cross-validation rejects leaking or tiny folds") {
    std::mt19937_64 rng(10);
    const auto d = testing::random_dataset(rng, 12);
    auto plan = splits::group_kfold(d, 3);
    auto leaky = plan;
    leaky.folds[0].push_back(leaky.folds[1].front());
    CHECK_THROWS_AS(cross_validate(d, ModelSpec::ridge_default(), leaky), ValidationError);
    splits::FoldPlan tiny;
    tiny.k = 2;
    tiny.folds = {{0}, {}};
    for (std::size_t i = 1; i < d.size(); ++i) tiny.folds[1].push_back(i);
    CHECK_THROWS_AS(cross_validate(d, ModelSpec::ridge_default(), tiny), ValidationError);
}

TEST_CASE("comparison and ablation reports") {
    const auto s = reference::desk_scenario();
    const auto cmp = compare_models(s.data, s.split, s.train_folds, {ModelSpec::gbdt_default(), ModelSpec::ridge_default()});
    REQUIRE(cmp.rows.size() == 2);
    CHECK(cmp.rows[0].test.has_value());
    CHECK(cmp.rows[0].test->n == s.test.size());
    CHECK(render_comparison_table(cmp).find("Ridge") != std::string::npos);

    const auto abl = ablation(s.train, s.train_folds, "integration_complexity", ModelSpec::gbdt_default(), s.reference_mean);
    CHECK(abl.r2_delta() == doctest::Approx(abl.ablated.r2_mean - abl.full.r2_mean));
    const auto j = json::parse(to_json(abl).dump());
    CHECK(j["dropped"] == "integration_complexity");
    CHECK(j["full"]["fold_metrics"].size() == 3);
}

TEST_CASE("metrics JSON marks undefined R2") {
    const std::vector<double> y = {5, 5};
    const auto j = to_json(compute_metrics(y, y, 5));
    CHECK(j["r2"] == "undefined");
}
