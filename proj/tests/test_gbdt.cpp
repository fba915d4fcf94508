#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>

#include <nlohmann/json.hpp>

#include "mlat/eval.hpp"
#include "mlat/gbdt.hpp"
#include "mlat/reference.hpp"
#include "oracles.hpp"
#include "support.hpp"

using namespace mlat;
using namespace mlat::gbdt;
using nlohmann::json;

namespace {

Hyperparameters exact_hp() {
    Hyperparameters hp;
    hp.subsample = 1.0;
    hp.colsample_bytree = 1.0;
    hp.reg_alpha = 0.0;
    return hp;
}

Matrix four_points() { return make_matrix({{1}, {2}, {3}, {4}}, {"x"}); }
const std::vector<double> kFourY = {10000, 10000, 30000, 30000};

double rmse(const GbdtModel& m, const Matrix& x, const std::vector<double>& y) {
    const auto p = predict(m, x);
    double s = 0;
    for (std::size_t i = 0; i < y.size(); ++i) s += (p[i] - y[i]) * (p[i] - y[i]);
    return std::sqrt(s / y.size());
}

struct Problem {
    Matrix x;
    std::vector<double> y;
};

Problem random_problem(std::mt19937_64& rng, std::size_t n, std::size_t cols, bool integer_features = false) {
    std::uniform_real_distribution<double> u(0.0, 10.0);
    std::uniform_int_distribution<int> iu(1, 5);
    std::normal_distribution<double> noise(0.0, 1.0);
    std::vector<std::vector<double>> rows;
    std::vector<double> y;
    for (std::size_t i = 0; i < n; ++i) {
        std::vector<double> r;
        for (std::size_t j = 0; j < cols; ++j) r.push_back(integer_features ? iu(rng) : u(rng));
        y.push_back(3.0 * r[0] + (r.size() > 1 && r[1] > 5 ? 10.0 : 0.0) + noise(rng));
        rows.push_back(r);
    }
    std::vector<std::string> names;
    for (std::size_t j = 0; j < cols; ++j) names.push_back("f" + std::to_string(j));
    return {make_matrix(rows, names), y};
}

std::vector<std::vector<double>> rows_of(const Matrix& m) {
    std::vector<std::vector<double>> out;
    for (std::size_t i = 0; i < m.rows; ++i) out.emplace_back(m.row(i).begin(), m.row(i).end());
    return out;
}

} // namespace

TEST_CASE("hand example: four points, one split") {
    auto hp = exact_hp();
    hp.n_estimators = 1;
    hp.max_depth = 1;
    hp.min_child_weight = 1;
    const auto m = fit(four_points(), kFourY, hp);
    CHECK(m.base_score == 20000.0);
    REQUIRE(m.trees.size() == 1);
    const auto& root = m.trees[0].nodes[0];
    CHECK(root.feature == 0);
    CHECK(root.threshold == 2.5);
    CHECK(testing::rel_close(root.gain, 4e8 / 3.0, 1e-12));
    const auto& l = m.trees[0].nodes[root.left];
    const auto& r = m.trees[0].nodes[root.right];
    CHECK(testing::rel_close(l.weight, -20000.0 / 3.0, 1e-6));
    CHECK(testing::rel_close(r.weight, 20000.0 / 3.0, 1e-6));
    const double x1 = 1, x4 = 4;
    CHECK(testing::rel_close(m.predict({&x1, 1}), 20000.0 - 0.05 * 20000.0 / 3.0, 1e-6));
    CHECK(testing::rel_close(m.predict({&x4, 1}), 20000.0 + 0.05 * 20000.0 / 3.0, 1e-6));
    CHECK(std::abs(m.predict({&x1, 1}) - 19666.67) < 0.01);
    const auto imp = feature_importance(m);
    REQUIRE(imp.size() == 1);
    CHECK(imp[0].share == 1.0);
}

TEST_CASE("brute-force oracle equivalence on small instances") {
    std::mt19937_64 rng(2024);
    std::uniform_int_distribution<int> n_dist(4, 20), col_dist(1, 4), depth_dist(1, 2), trees_dist(1, 3);
    std::uniform_real_distribution<double> lam(0.0, 3.0), mcw(0.0, 4.0), lr(0.05, 1.0);
    int cases = 0;
    for (int trial = 0; trial < 300; ++trial) {
        const auto n = static_cast<std::size_t>(n_dist(rng));
        auto prob = random_problem(rng, n, col_dist(rng), trial % 2 == 0);
        auto hp = exact_hp();
        hp.max_depth = depth_dist(rng);
        hp.n_estimators = trees_dist(rng);
        hp.reg_lambda = lam(rng);
        hp.min_child_weight = mcw(rng);
        hp.learning_rate = lr(rng);
        const auto m = fit(prob.x, prob.y, hp);

        oracle::BoostParams p;
        p.n_trees = hp.n_estimators;
        p.max_depth = hp.max_depth;
        p.learning_rate = hp.learning_rate;
        p.lambda = hp.reg_lambda;
        p.min_child_weight = hp.min_child_weight;
        const auto rows = rows_of(prob.x);
        const auto expected = oracle::boost(rows, prob.y, p, rows);
        const auto got = predict(m, prob.x);
        for (std::size_t i = 0; i < n; ++i) CHECK(testing::rel_close(got[i], expected[i], 1e-9));
        ++cases;
    }
    CHECK(cases == 300);
}

TEST_CASE("oracle agrees with L1 soft-thresholding too") {
    std::mt19937_64 rng(77);
    for (int trial = 0; trial < 50; ++trial) {
        auto prob = random_problem(rng, 15, 3);
        auto hp = exact_hp();
        hp.max_depth = 2;
        hp.n_estimators = 3;
        hp.reg_alpha = 5.0;
        hp.learning_rate = 0.5;
        hp.min_child_weight = 1;
        oracle::BoostParams p{3, 2, 0.5, hp.reg_lambda, 5.0, 1.0, 0.0};
        const auto rows = rows_of(prob.x);
        const auto expected = oracle::boost(rows, prob.y, p, rows);
        const auto got = predict(fit(prob.x, prob.y, hp), prob.x);
        for (std::size_t i = 0; i < rows.size(); ++i) CHECK(testing::rel_close(got[i], expected[i], 1e-9));
    }
}

TEST_CASE("constant target and empty ensemble") {
    const auto x = four_points();
    const auto m = fit(x, std::vector<double>(4, 123.5), Hyperparameters{});
    for (double v : {0.0, 1.0, 2.5, 99.0}) CHECK(m.predict({&v, 1}) == 123.5);
    for (const auto& fi : feature_importance(m)) CHECK(fi.share == 0.0);

    Hyperparameters none;
    none.n_estimators = 0;
    const auto e = fit(x, kFourY, none);
    CHECK(e.trees.empty());
    const double v = 7;
    CHECK(e.predict({&v, 1}) == 20000.0);
    CHECK(feature_importance(e)[0].share == 0.0);
}

TEST_CASE("errors: empty, non-finite, dimension mismatch, bad hp") {
    CHECK_THROWS_AS(fit(make_matrix({}, {"x"}), std::vector<double>{}, Hyperparameters{}), ValidationError);
    CHECK_THROWS_AS(fit(four_points(), std::vector<double>{1, 2, std::nan(""), 4}, Hyperparameters{}),
                    ValidationError);
    CHECK_THROWS_AS(fit(four_points(), std::vector<double>{1, 2, 3}, Hyperparameters{}), ValidationError);
    const auto m = fit(four_points(), kFourY, Hyperparameters{});
    const std::vector<double> two = {1, 2};
    CHECK_THROWS_AS(m.predict(two), ValidationError);
    Hyperparameters bad;
    bad.learning_rate = 0;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    bad = {};
    bad.subsample = 1.5;
    CHECK_THROWS_AS(validate(bad), ValidationError);
    CHECK_THROWS_AS(hyperparameters_from_json(json{{"max_dept", 3}}), ValidationError);
}

TEST_CASE("constant columns are never chosen") {
    std::mt19937_64 rng(5);
    auto prob = random_problem(rng, 40, 2);
    std::vector<std::vector<double>> rows = rows_of(prob.x);
    for (auto& r : rows) r.insert(r.begin(), 4.0);
    const auto m = fit(make_matrix(rows, {"const", "a", "b"}), prob.y, Hyperparameters{});
    for (const auto& t : m.trees)
        for (const auto& n : t.nodes)
            if (!n.is_leaf()) CHECK(n.feature != 0);
}

TEST_CASE("determinism: identical inputs give identical artifacts") {
    std::mt19937_64 rng(9);
    auto prob = random_problem(rng, 60, 5);
    const auto a = fit(prob.x, prob.y, Hyperparameters{});
    const auto b = fit(prob.x, prob.y, Hyperparameters{});
    CHECK(to_json(a) == to_json(b));
    CHECK(model_version(a) == model_version(b));
    Hyperparameters other;
    other.seed = 43;
    CHECK(to_json(fit(prob.x, prob.y, other)) != to_json(a));
}

TEST_CASE("property: training RMSE non-increasing in n_estimators without sampling") {
    std::mt19937_64 rng(31);
    for (int trial = 0; trial < 20; ++trial) {
        auto prob = random_problem(rng, 30, 3);
        auto hp = exact_hp();
        double prev = std::numeric_limits<double>::infinity();
        for (int k = 0; k <= 30; k += 5) {
            hp.n_estimators = k;
            const double e = rmse(fit(prob.x, prob.y, hp), prob.x, prob.y);
            CHECK(e <= prev + 1e-9);
            prev = e;
        }
    }
}

TEST_CASE("property: stronger L2 never fits the training data better") {
    std::mt19937_64 rng(32);
    for (int trial = 0; trial < 20; ++trial) {
        auto prob = random_problem(rng, 40, 3);
        auto hp = exact_hp();
        hp.reg_lambda = 0.0;
        const double loose = rmse(fit(prob.x, prob.y, hp), prob.x, prob.y);
        hp.reg_lambda = 10.0;
        const double tight = rmse(fit(prob.x, prob.y, hp), prob.x, prob.y);
        CHECK(tight >= loose - 1e-9);
    }
}

TEST_CASE("property: min_child_weight 3 keeps at least 3 rows per leaf") {
    std::mt19937_64 rng(33);
    for (int trial = 0; trial < 20; ++trial) {
        auto prob = random_problem(rng, 20 + trial, 4);
        const auto m = fit(prob.x, prob.y, Hyperparameters{});
        for (const auto& t : m.trees) {
            CHECK(t.depth() <= 3);
            for (const auto& n : t.nodes)
                if (n.is_leaf()) CHECK(n.cover >= 3.0);
        }
    }
}

TEST_CASE("property: rescaling a feature column leaves predictions unchanged") {
    std::mt19937_64 rng(34);
    for (int trial = 0; trial < 20; ++trial) {
        auto prob = random_problem(rng, 50, 3);
        auto rows = rows_of(prob.x);
        const double c = 0.5 + trial;
        auto scaled = rows;
        for (auto& r : scaled) r[1] *= c;
        const auto a = fit(prob.x, prob.y, Hyperparameters{});
        const auto b = fit(make_matrix(scaled, prob.x.names), prob.y, Hyperparameters{});
        for (std::size_t i = 0; i < rows.size(); ++i)
            CHECK(testing::rel_close(a.predict(rows[i]), b.predict(scaled[i]), 1e-12));
    }
}

TEST_CASE("importance concentrates on the only informative feature") {
    auto spec = dataset::GeneratorSpec::defaults();
    dataset::LinearPricing lin;
    lin.intercept = 4000;
    lin.coefficients = {0, 0, 0, 5000, 0, 0, 0, 0};
    spec.pricing = lin;
    spec.noise_std = 0;
    const auto d = dataset::generate_synthetic(spec, 1000);
    const auto m = fit(eval::design_matrix(d), dataset::prices(d), Hyperparameters{});
    const auto imp = feature_importance(m);
    double total = 0;
    for (const auto& fi : imp) total += fi.share;
    CHECK(total == doctest::Approx(1.0));
    CHECK(imp[3].name == "integration_complexity");
    CHECK(imp[3].share > 0.9);
}

TEST_CASE("artifact round trip is lossless") {
    const auto model = reference::desk_model();
    const auto path = std::filesystem::temp_directory_path() / "mlat_gbdt_roundtrip.json";
    save_model(model, path);
    const auto back = load_model(path);
    std::filesystem::remove(path);
    std::mt19937_64 rng(100);
    std::uniform_real_distribution<double> rev(1e5, 2.5e8);
    std::uniform_int_distribution<int> dur(1, 30), s(1, 5), ph(1, 4), t(0, 2);
    for (int i = 0; i < 100; ++i) {
        const auto x = dataset::encode_features(
            dataset::RawFeatures{rev(rng), dur(rng), s(rng), s(rng), ph(rng), static_cast<dataset::TechStack>(t(rng))});
        CHECK(model.predict(x.values) == back.predict(x.values));
    }
    CHECK(model_version(model) == model_version(back));
}

TEST_CASE("shipped desk artifact matches the pinned scenario") {
    const auto shipped = load_model(testing::fixture("models/desk_model.json"));
    const auto rebuilt = reference::desk_model();
    CHECK(model_version(shipped) == model_version(rebuilt));
    CHECK(shipped.n_train == 56);
    CHECK(shipped.trees.size() == 50);
}

TEST_CASE("artifact errors are distinct") {
    auto j = to_json(reference::desk_model());
    auto wrong_version = j;
    wrong_version["format_version"] = "mlat-gbdt/99";
    CHECK_THROWS_AS(model_from_json(wrong_version), ModelVersionError);

    auto missing = j;
    missing.erase("trees");
    CHECK_THROWS_AS(model_from_json(missing), ModelFormatError);

    // Seven names while some tree still splits on index 7.
    Hyperparameters hp = exact_hp();
    hp.n_estimators = 1;
    hp.max_depth = 1;
    hp.min_child_weight = 1;
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 8; ++i) rows.push_back({0, 0, 0, 0, 0, 0, 0, static_cast<double>(i % 2)});
    const auto m = fit(make_matrix(rows, {"a", "b", "c", "d", "e", "f", "g", "h"}), std::vector<double>{1, 9, 1, 9, 1, 9, 1, 9}, hp);
    auto seven = to_json(m);
    seven["feature_names"].erase(7);
    CHECK_THROWS_AS(model_from_json(seven), ModelConsistencyError);

    const auto path = std::filesystem::temp_directory_path() / "mlat_truncated.json";
    {
        const auto text = j.dump();
        std::ofstream(path) << text.substr(0, text.size() / 2);
    }
    CHECK_THROWS_AS(load_model(path), ModelFormatError);
    std::filesystem::remove(path);
}
