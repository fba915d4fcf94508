#include "mlat/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>

#include "mlat/rng.hpp"

namespace mlat::gbdt {

namespace {

using nlohmann::json;

double soft_threshold(double g, double alpha) {
    if (g > alpha) return g - alpha;
    if (g < -alpha) return g + alpha;
    return 0.0;
}

double leaf_score(double g, double h, const Hyperparameters& hp) {
    const double t = soft_threshold(g, hp.reg_alpha);
    return t * t / (h + hp.reg_lambda);
}

double leaf_weight(double g, double h, const Hyperparameters& hp) {
    return -soft_threshold(g, hp.reg_alpha) / (h + hp.reg_lambda);
}

// Sorted sample of `count` distinct indices from [0, n).
std::vector<std::size_t> sample_without_replacement(Rng& rng, std::size_t n, std::size_t count) {
    std::vector<std::size_t> all(n);
    std::iota(all.begin(), all.end(), 0);
    for (std::size_t i = 0; i < count; ++i) {
        const auto j = i + static_cast<std::size_t>(rng.below(n - i));
        std::swap(all[i], all[j]);
    }
    all.resize(count);
    std::sort(all.begin(), all.end());
    return all;
}

std::size_t sample_count(double rate, std::size_t n) {
    if (rate >= 1.0) return n;
    const auto k = static_cast<std::size_t>(std::lround(rate * static_cast<double>(n)));
    return std::clamp<std::size_t>(k, 1, n);
}

struct Split {
    int feature = -1;
    double threshold = 0.0;
    double gain = 0.0;
};

class TreeBuilder {
public:
    TreeBuilder(const Matrix& x, std::span<const double> grad, const std::vector<std::size_t>& cols,
                const Hyperparameters& hp)
        : x_(x), grad_(grad), cols_(cols), hp_(hp) {}

    Tree build(std::vector<std::size_t> rows) {
        Tree tree;
        grow(tree, std::move(rows), 0);
        return tree;
    }

private:
    int grow(Tree& tree, std::vector<std::size_t> rows, int depth) {
        const int id = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        double g = 0.0;
        for (std::size_t r : rows) g += grad_[r];
        const double h = static_cast<double>(rows.size());
        tree.nodes[id].cover = h;

        Split best;
        if (depth < hp_.max_depth && rows.size() >= 2) best = find_split(rows, g, h);
        if (best.feature < 0) {
            tree.nodes[id].weight = leaf_weight(g, h, hp_);
            return id;
        }

        std::vector<std::size_t> left, right;
        for (std::size_t r : rows)
            (x_.at(r, best.feature) < best.threshold ? left : right).push_back(r);
        rows.clear();
        rows.shrink_to_fit();

        tree.nodes[id].feature = best.feature;
        tree.nodes[id].threshold = best.threshold;
        tree.nodes[id].gain = best.gain;
        const int l = grow(tree, std::move(left), depth + 1);
        const int r = grow(tree, std::move(right), depth + 1);
        tree.nodes[id].left = l;
        tree.nodes[id].right = r;
        return id;
    }

    Split find_split(const std::vector<std::size_t>& rows, double g_total, double h_total) const {
        Split best;
        const double parent = leaf_score(g_total, h_total, hp_);
        std::vector<std::size_t> order(rows);
        for (std::size_t col : cols_) {
            const auto f = col;
            std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
                return x_.at(a, f) < x_.at(b, f);
            });
            double g_left = 0.0;
            for (std::size_t i = 0; i + 1 < order.size(); ++i) {
                g_left += grad_[order[i]];
                const double lo = x_.at(order[i], f);
                const double hi = x_.at(order[i + 1], f);
                if (!(lo < hi)) continue;
                const double h_left = static_cast<double>(i + 1);
                const double h_right = h_total - h_left;
                if (h_left < hp_.min_child_weight || h_right < hp_.min_child_weight) continue;
                const double gain = 0.5 * (leaf_score(g_left, h_left, hp_) +
                                           leaf_score(g_total - g_left, h_right, hp_) - parent) -
                                    hp_.min_split_gain;
                if (gain > best.gain) {
                    double t = lo + (hi - lo) / 2.0;
                    if (!(t > lo)) t = hi;
                    best = {static_cast<int>(f), t, gain};
                }
            }
        }
        return best;
    }

    const Matrix& x_;
    std::span<const double> grad_;
    const std::vector<std::size_t>& cols_;
    const Hyperparameters& hp_;
};

void require(bool cond, const std::string& what) {
    if (!cond) throw ValidationError("hyperparameters: " + what);
}

json node_to_json(const Tree& tree, int id) {
    const auto& n = tree.nodes.at(id);
    if (n.is_leaf()) return {{"w", n.weight}};
    return {{"f", n.feature},
            {"t", n.threshold},
            {"g", n.gain},
            {"l", node_to_json(tree, n.left)},
            {"r", node_to_json(tree, n.right)}};
}

int node_from_json(Tree& tree, const json& j, int depth) {
    if (depth > 64) throw ModelFormatError("tree nesting exceeds 64 levels");
    if (!j.is_object()) throw ModelFormatError("tree node must be an object");
    const int id = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    if (j.contains("w")) {
        if (!j["w"].is_number()) throw ModelFormatError("leaf weight must be a number");
        tree.nodes[id].weight = j["w"].get<double>();
        return id;
    }
    for (const char* key : {"f", "t", "l", "r"})
        if (!j.contains(key)) throw ModelFormatError(std::string("internal node missing '") + key + "'");
    if (!j["f"].is_number_integer() || !j["t"].is_number())
        throw ModelFormatError("internal node has non-numeric f/t");
    tree.nodes[id].feature = j["f"].get<int>();
    tree.nodes[id].threshold = j["t"].get<double>();
    tree.nodes[id].gain = j.contains("g") ? j["g"].get<double>() : 0.0;
    const int l = node_from_json(tree, j["l"], depth + 1);
    const int r = node_from_json(tree, j["r"], depth + 1);
    tree.nodes[id].left = l;
    tree.nodes[id].right = r;
    return id;
}

} // namespace

void validate(const Hyperparameters& hp) {
    require(hp.n_estimators >= 0, "n_estimators must be >= 0");
    require(hp.max_depth >= 1, "max_depth must be >= 1");
    require(hp.learning_rate > 0.0 && hp.learning_rate <= 1.0, "learning_rate must lie in (0, 1]");
    require(hp.subsample > 0.0 && hp.subsample <= 1.0, "subsample must lie in (0, 1]");
    require(hp.colsample_bytree > 0.0 && hp.colsample_bytree <= 1.0, "colsample_bytree must lie in (0, 1]");
    require(hp.reg_alpha >= 0.0, "reg_alpha must be >= 0");
    require(hp.reg_lambda >= 0.0, "reg_lambda must be >= 0");
    require(hp.min_child_weight >= 0.0, "min_child_weight must be >= 0");
    require(hp.min_split_gain >= 0.0, "min_split_gain must be >= 0");
}

json to_json(const Hyperparameters& hp) {
    return {{"n_estimators", hp.n_estimators},
            {"max_depth", hp.max_depth},
            {"learning_rate", hp.learning_rate},
            {"subsample", hp.subsample},
            {"colsample_bytree", hp.colsample_bytree},
            {"reg_alpha", hp.reg_alpha},
            {"reg_lambda", hp.reg_lambda},
            {"min_child_weight", hp.min_child_weight},
            {"min_split_gain", hp.min_split_gain},
            {"seed", hp.seed}};
}

Hyperparameters hyperparameters_from_json(const json& j, Hyperparameters hp) {
    if (!j.is_object()) throw SchemaError("hyperparameters must be a JSON object");
    try {
        for (const auto& [key, v] : j.items()) {
            if (key == "n_estimators") hp.n_estimators = v.get<int>();
            else if (key == "max_depth") hp.max_depth = v.get<int>();
            else if (key == "learning_rate") hp.learning_rate = v.get<double>();
            else if (key == "subsample") hp.subsample = v.get<double>();
            else if (key == "colsample_bytree") hp.colsample_bytree = v.get<double>();
            else if (key == "reg_alpha") hp.reg_alpha = v.get<double>();
            else if (key == "reg_lambda") hp.reg_lambda = v.get<double>();
            else if (key == "min_child_weight") hp.min_child_weight = v.get<double>();
            else if (key == "min_split_gain") hp.min_split_gain = v.get<double>();
            else if (key == "seed") hp.seed = v.get<std::uint64_t>();
            else throw SchemaError("hyperparameters: unknown key '" + key + "'");
        }
    } catch (const json::exception& e) {
        throw SchemaError(std::string("hyperparameters: ") + e.what());
    }
    validate(hp);
    return hp;
}

double Tree::leaf_value(std::span<const double> x) const {
    int id = 0;
    while (!nodes[id].is_leaf()) {
        const auto& n = nodes[id];
        id = x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right;
    }
    return nodes[id].weight;
}

int Tree::depth() const {
    std::vector<int> d(nodes.size(), 0);
    int deepest = 0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        deepest = std::max(deepest, d[i]);
        if (!nodes[i].is_leaf()) {
            d[nodes[i].left] = d[i] + 1;
            d[nodes[i].right] = d[i] + 1;
        }
    }
    return deepest;
}

double GbdtModel::predict(std::span<const double> x) const {
    if (x.size() != feature_names.size())
        throw ValidationError("feature vector has " + std::to_string(x.size()) + " values, model expects " +
                              std::to_string(feature_names.size()));
    double sum = 0.0;
    for (const auto& t : trees) sum += t.leaf_value(x);
    return base_score + learning_rate * sum;
}

Matrix make_matrix(const std::vector<std::vector<double>>& rows, std::vector<std::string> names) {
    Matrix m;
    m.rows = rows.size();
    m.cols = names.size();
    m.names = std::move(names);
    m.values.reserve(m.rows * m.cols);
    for (const auto& r : rows) {
        if (r.size() != m.cols) throw ValidationError("matrix row width does not match column names");
        m.values.insert(m.values.end(), r.begin(), r.end());
    }
    return m;
}

GbdtModel fit(const Matrix& x, std::span<const double> y, const Hyperparameters& hp) {
    validate(hp);
    if (x.rows == 0 || y.empty()) throw ValidationError("fit: empty training data");
    if (x.rows != y.size()) throw ValidationError("fit: X has " + std::to_string(x.rows) + " rows but y has " +
                                                  std::to_string(y.size()));
    if (x.cols == 0 || x.names.size() != x.cols) throw ValidationError("fit: feature names do not match columns");
    for (double v : x.values)
        if (!std::isfinite(v)) throw ValidationError("fit: non-finite feature value");
    for (double v : y)
        if (!std::isfinite(v)) throw ValidationError("fit: non-finite target value");

    GbdtModel model;
    model.feature_names = x.names;
    model.learning_rate = hp.learning_rate;
    model.hyperparameters = hp;
    model.n_train = x.rows;
    model.base_score = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(y.size());

    Rng rng(hp.seed);
    const std::size_t n = x.rows;
    std::vector<double> pred(n, model.base_score);
    std::vector<double> grad(n);
    const std::size_t n_rows = sample_count(hp.subsample, n);
    const std::size_t n_cols = sample_count(hp.colsample_bytree, x.cols);

    for (int t = 0; t < hp.n_estimators; ++t) {
        for (std::size_t i = 0; i < n; ++i) grad[i] = pred[i] - y[i];
        auto rows = sample_without_replacement(rng, n, n_rows);
        const auto cols = sample_without_replacement(rng, x.cols, n_cols);
        TreeBuilder builder(x, grad, cols, hp);
        model.trees.push_back(builder.build(std::move(rows)));
        const auto& tree = model.trees.back();
        for (std::size_t i = 0; i < n; ++i) pred[i] += hp.learning_rate * tree.leaf_value(x.row(i));
    }
    return model;
}

double predict(const GbdtModel& model, std::span<const double> x) { return model.predict(x); }

std::vector<double> predict(const GbdtModel& model, const Matrix& x) {
    std::vector<double> out;
    out.reserve(x.rows);
    for (std::size_t i = 0; i < x.rows; ++i) out.push_back(model.predict(x.row(i)));
    return out;
}

std::vector<FeatureImportance> feature_importance(const GbdtModel& model) {
    std::vector<double> gain(model.feature_names.size(), 0.0);
    for (const auto& t : model.trees)
        for (const auto& n : t.nodes)
            if (!n.is_leaf()) gain.at(static_cast<std::size_t>(n.feature)) += n.gain;
    const double total = std::accumulate(gain.begin(), gain.end(), 0.0);
    std::vector<FeatureImportance> out;
    for (std::size_t i = 0; i < gain.size(); ++i)
        out.push_back({model.feature_names[i], total > 0.0 ? gain[i] / total : 0.0});
    return out;
}

// Artifact -----------------------------------------------------------------

json to_json(const GbdtModel& model) {
    json trees = json::array();
    for (const auto& t : model.trees) trees.push_back(node_to_json(t, 0));
    return {{"format_version", kFormatVersion},
            {"base_score", model.base_score},
            {"learning_rate", model.learning_rate},
            {"feature_names", model.feature_names},
            {"hyperparameters", to_json(model.hyperparameters)},
            {"trees", trees},
            {"trained_at", model.trained_at},
            {"n_train", model.n_train}};
}

GbdtModel model_from_json(const json& j) {
    if (!j.is_object()) throw ModelFormatError("model artifact must be a JSON object");
    if (!j.contains("format_version") || !j["format_version"].is_string())
        throw ModelVersionError("model artifact has no format_version");
    const auto version = j["format_version"].get<std::string>();
    if (version != kFormatVersion)
        throw ModelVersionError("unsupported model format_version '" + version + "' (expected " +
                                kFormatVersion + ")");
    GbdtModel m;
    try {
        m.base_score = j.at("base_score").get<double>();
        m.learning_rate = j.at("learning_rate").get<double>();
        m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
        m.hyperparameters = hyperparameters_from_json(j.at("hyperparameters"));
        m.trained_at = j.value("trained_at", std::string{});
        m.n_train = j.at("n_train").get<std::size_t>();
        const auto& trees = j.at("trees");
        if (!trees.is_array()) throw ModelFormatError("'trees' must be an array");
        for (const auto& t : trees) {
            Tree tree;
            node_from_json(tree, t, 0);
            m.trees.push_back(std::move(tree));
        }
    } catch (const json::exception& e) {
        throw ModelFormatError(std::string("malformed model artifact: ") + e.what());
    } catch (const SchemaError& e) {
        throw ModelFormatError(std::string("malformed model artifact: ") + e.what());
    } catch (const ValidationError& e) {
        throw ModelFormatError(std::string("malformed model artifact: ") + e.what());
    }
    if (!std::isfinite(m.base_score) || !(m.learning_rate > 0.0))
        throw ModelFormatError("model artifact has invalid base_score or learning_rate");
    const auto width = static_cast<int>(m.feature_names.size());
    for (std::size_t t = 0; t < m.trees.size(); ++t) {
        for (const auto& n : m.trees[t].nodes) {
            if (!n.is_leaf() && (n.feature < 0 || n.feature >= width))
                throw ModelConsistencyError("tree " + std::to_string(t) + " splits on feature index " +
                                            std::to_string(n.feature) + " but the artifact names " +
                                            std::to_string(width) + " features");
        }
    }
    return m;
}

void save_model(const GbdtModel& model, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write model: " + path.string());
    out << to_json(model).dump(2) << '\n';
}

GbdtModel load_model(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ModelFormatError("cannot open model artifact: " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::exception& e) {
        throw ModelFormatError("model artifact is not valid JSON: " + std::string(e.what()));
    }
    return model_from_json(j);
}

std::string model_version(const GbdtModel& model) {
    auto j = to_json(model);
    j.erase("trained_at");
    const auto text = j.dump();
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : text) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[32];
    std::snprintf(buf, sizeof buf, "gbdt-%016llx", static_cast<unsigned long long>(h));
    return buf;
}

} // namespace mlat::gbdt
