// mlat: command-line entry point for data generation, evaluation, serving
// and the proposal pipeline.

#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <numeric>
#include <sstream>
#include <thread>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "mlat/dataset.hpp"
#include "mlat/eval.hpp"
#include "mlat/format.hpp"
#include "mlat/gbdt.hpp"
#include "mlat/reference.hpp"
#include "mlat/runtime.hpp"
#include "mlat/schema.hpp"
#include "mlat/sensitivity.hpp"
#include "mlat/service.hpp"
#include "mlat/splits.hpp"

using nlohmann::json;
using namespace mlat;

namespace {

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ValidationError("cannot open " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// "-" is stdout.
void write_text(const std::string& path, const std::string& text) {
    if (path == "-") {
        std::cout << text;
        return;
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << text;
    if (!out) throw Error("write failed for " + path);
}

json parse_json(const std::string& text, const std::string& what) {
    try {
        return json::parse(text);
    } catch (const json::parse_error& e) {
        throw ValidationError(what + " is not valid JSON: " + e.what());
    }
}

/// Inline JSON object or a path to a JSON file.
json json_arg(const std::string& arg, const std::string& what) {
    if (arg.empty()) return json::object();
    const auto first = arg.find_first_not_of(" \t\r\n");
    if (first != std::string::npos && arg[first] == '{') return parse_json(arg, what);
    return parse_json(read_text(arg), what + " (" + arg + ")");
}

void write_json(const std::string& path, const json& j) {
    if (!path.empty()) write_text(path, j.dump(2) + "\n");
}

dataset::Dataset load_data(const std::string& path) {
    if (!std::filesystem::is_regular_file(path)) throw ValidationError("no such data file: " + path);
    auto d = dataset::load_dataset(path);
    dataset::validate(d);
    return d;
}

double mean_price(const dataset::Dataset& d) {
    const auto p = dataset::prices(d);
    return std::accumulate(p.begin(), p.end(), 0.0) / static_cast<double>(p.size());
}

std::vector<double> parse_values(const std::string& csv, const std::string& feature) {
    std::vector<double> out;
    std::stringstream ss(csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
        if (feature == "tech_stack") {
            out.push_back(static_cast<double>(dataset::parse_tech_stack(item)));
            continue;
        }
        try {
            std::size_t used = 0;
            out.push_back(std::stod(item, &used));
            if (used != item.size()) throw std::invalid_argument(item);
        } catch (const std::exception&) {
            throw ValidationError("--values: '" + item + "' is not a number");
        }
    }
    if (out.empty()) throw ValidationError("--values is empty");
    return out;
}

struct SplitArgs {
    std::string plan_path;
    double test_fraction = reference::kTestFraction;
    std::uint64_t seed = reference::kSplitSeed;

    void add(CLI::App* cmd) {
        cmd->add_option("--split", plan_path, "Split plan JSON (from `mlat split`)");
        cmd->add_option("--test-fraction", test_fraction, "Test fraction when no --split is given")
            ->check(CLI::Range(0.0, 1.0));
        cmd->add_option("--seed", seed, "Split seed when no --split is given");
    }
    splits::SplitPlan resolve(const dataset::Dataset& data) const {
        if (plan_path.empty()) return splits::group_shuffle_split(data, test_fraction, seed);
        auto plan = splits::split_plan_from_json(parse_json(read_text(plan_path), "split plan"));
        if (auto r = splits::verify_no_leakage(plan, data); !r.ok)
            throw ValidationError("split plan leaks groups across train/test");
        return plan;
    }
};

eval::ModelSpec model_spec(const std::string& kind, const std::string& hp_overrides, double alpha) {
    if (kind == "gbdt") {
        auto spec = eval::ModelSpec::gbdt_default();
        const auto hp = gbdt::hyperparameters_from_json(json_arg(hp_overrides, "--hp-overrides"));
        gbdt::validate(hp);
        spec.model = hp;
        return spec;
    }
    if (!hp_overrides.empty()) throw ValidationError("--hp-overrides applies to --model gbdt only");
    auto spec = eval::ModelSpec::ridge_default();
    spec.model = eval::RidgeSpec{alpha};
    return spec;
}

int serve(const std::string& model_path, const std::string& bind) {
    const auto [host, port] = service::parse_bind(bind);
    std::shared_ptr<const service::PricingService> svc;
    try {
        svc = std::make_shared<const service::PricingService>(service::PricingService::from_artifact(model_path));
    } catch (const std::exception& e) {
        std::cerr << "mlat serve: refusing to start: " << e.what() << "\n";
        return 1;
    }
    // Block the shutdown signals before the server threads exist so only
    // sigwait below sees them.
    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    service::HttpServer server(svc, host, port);
    std::cerr << "mlat serve: model " << svc->model_version() << " listening on " << host << ":" << server.port()
              << std::endl;
    std::thread worker([&] { server.run(); });
    int sig = 0;
    sigwait(&signals, &sig);
    std::cerr << "mlat serve: signal " << sig << ", shutting down" << std::endl;
    server.stop();
    worker.join();
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"MLAT pricing toolkit: synthetic data, GBDT pricing model, evaluation, serving and proposal pipeline"};
    app.require_subcommand(1);
    app.set_config("--config", "", "TOML/INI file; [section] names match subcommands");
    std::string json_out;
    auto add_json = [&](CLI::App* cmd) { cmd->add_option("--json", json_out, "Also write the report as JSON (- for stdout)"); };

    // gen-data
    auto* gen = app.add_subcommand("gen-data", "Generate a synthetic dataset as canonical CSV");
    std::string gen_spec, gen_out = "-";
    std::size_t gen_n = reference::kRecords;
    std::uint64_t gen_seed = reference::kDataSeed;
    gen->add_option("--spec", gen_spec, "Generator overrides (JSON file or inline object)");
    gen->add_option("--n", gen_n, "Record count")->check(CLI::PositiveNumber);
    gen->add_option("--seed", gen_seed, "Generator seed");
    gen->add_option("--out", gen_out, "Output CSV (- for stdout)");
    add_json(gen);

    // summarize
    auto* summ = app.add_subcommand("summarize", "Summary statistics table");
    std::string data_path;
    summ->add_option("--data", data_path, "Canonical CSV")->required();
    add_json(summ);

    // split / kfold
    auto* split = app.add_subcommand("split", "Group-aware train/test split plan");
    double split_fraction = reference::kTestFraction;
    std::uint64_t split_seed = reference::kSplitSeed;
    std::string plan_out;
    split->add_option("--data", data_path, "Canonical CSV")->required();
    split->add_option("--test-fraction", split_fraction, "Target test share")->check(CLI::Range(0.0, 1.0));
    split->add_option("--seed", split_seed, "Shuffle seed");
    split->add_option("--out", plan_out, "Plan JSON path");
    add_json(split);

    auto* kfold = app.add_subcommand("kfold", "Group k-fold plan");
    std::size_t k = reference::kFolds;
    kfold->add_option("--data", data_path, "Canonical CSV")->required();
    kfold->add_option("--k", k, "Fold count")->check(CLI::Range(2, 1000));
    kfold->add_option("--out", plan_out, "Plan JSON path");
    add_json(kfold);

    // train
    auto* train = app.add_subcommand("train", "Train on the training side of a split and report metrics");
    SplitArgs train_split;
    std::string hp_overrides, model_kind = "gbdt", model_out, plot_out, trained_at;
    double ridge_alpha = 1.0;
    train->add_option("--data", data_path, "Canonical CSV")->required();
    train_split.add(train);
    train->add_option("--hp-overrides", hp_overrides, "Hyperparameter overrides (JSON file or inline object)");
    train->add_option("--model", model_kind, "gbdt or ridge")->check(CLI::IsMember({"gbdt", "ridge"}));
    train->add_option("--alpha", ridge_alpha, "Ridge penalty")->check(CLI::NonNegativeNumber);
    train->add_option("--out-model", model_out, "Write the trained model artifact");
    train->add_option("--trained-at", trained_at, "Timestamp recorded in the artifact");
    train->add_option("--plot-out", plot_out, "Actual vs predicted CSV");
    add_json(train);

    // cv / compare / ablate
    std::size_t folds = reference::kFolds;
    bool cv_whole = false;
    auto* cv = app.add_subcommand("cv", "Group k-fold cross-validation on the training side");
    SplitArgs cv_split;
    cv->add_option("--data", data_path, "Canonical CSV")->required();
    cv->add_option("--folds", folds, "Fold count")->check(CLI::Range(2, 1000));
    cv->add_option("--model", model_kind, "gbdt or ridge")->check(CLI::IsMember({"gbdt", "ridge"}));
    cv->add_option("--hp-overrides", hp_overrides, "Hyperparameter overrides");
    cv->add_option("--alpha", ridge_alpha, "Ridge penalty")->check(CLI::NonNegativeNumber);
    cv->add_flag("--whole", cv_whole, "Cross-validate the whole dataset instead of the training side");
    cv_split.add(cv);
    add_json(cv);

    auto* compare = app.add_subcommand("compare", "GBDT vs ridge: CV on the training side, then test scores");
    SplitArgs cmp_split;
    compare->add_option("--data", data_path, "Canonical CSV")->required();
    compare->add_option("--folds", folds, "Fold count")->check(CLI::Range(2, 1000));
    compare->add_option("--hp-overrides", hp_overrides, "GBDT hyperparameter overrides");
    compare->add_option("--alpha", ridge_alpha, "Ridge penalty")->check(CLI::NonNegativeNumber);
    cmp_split.add(compare);
    add_json(compare);

    auto* ablate = app.add_subcommand("ablate", "CV with and without one feature");
    SplitArgs abl_split;
    std::string drop = "integration_complexity";
    ablate->add_option("--data", data_path, "Canonical CSV")->required();
    ablate->add_option("--folds", folds, "Fold count")->check(CLI::Range(2, 1000));
    ablate->add_option("--drop", drop, "Raw feature to remove");
    ablate->add_option("--hp-overrides", hp_overrides, "GBDT hyperparameter overrides");
    abl_split.add(ablate);
    add_json(ablate);

    // sensitivity
    auto* sens = app.add_subcommand("sensitivity", "Univariate price sweep around a baseline");
    std::string model_path, baseline_arg, feature = "pain_severity_score", values_arg, csv_out;
    sens->add_option("--model", model_path, "Model artifact")->required();
    sens->add_option("--baseline", baseline_arg, "Baseline features (JSON file or inline); default is the typical project");
    sens->add_option("--feature", feature, "Feature to sweep");
    sens->add_option("--values", values_arg, "Comma-separated values; default is the full range");
    sens->add_option("--csv-out", csv_out, "Write value,price CSV");
    add_json(sens);

    // serve
    auto* srv = app.add_subcommand("serve", "Serve POST /predict and GET /health");
    std::string bind = "127.0.0.1:8080";
    srv->add_option("--model", model_path, "Model artifact")->required();
    srv->add_option("--bind", bind, "host:port");

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "Transcript to rendered proposal");
    std::string transcript_path, mock_path, research_path, pricing_url, template_path, doc_out = "-", trace_out;
    bool trace_timestamps = false;
    pipe->add_option("--transcript", transcript_path, "Transcript text file")->required();
    pipe->add_option("--mock-fixtures", mock_path, "Scripted LLM outputs (JSON)")->required();
    pipe->add_option("--research-fixture", research_path, "Research tool stub data (JSON)")->required();
    auto* url_opt = pipe->add_option("--pricing-url", pricing_url, "Pricing service base URL");
    auto* model_opt = pipe->add_option("--model", model_path, "Model artifact for in-process pricing");
    url_opt->excludes(model_opt);
    pipe->add_option("--template", template_path, "Proposal template")->required();
    pipe->add_option("--out", doc_out, "Rendered document (- for stdout)");
    pipe->add_option("--trace-out", trace_out, "Tool-call trace as JSON lines");
    pipe->add_flag("--trace-timestamps", trace_timestamps, "Include timestamps in the trace file");
    add_json(pipe);

    // schema / hp
    auto* schema_cmd = app.add_subcommand("schema", "Shipped JSON schemas");
    schema_cmd->require_subcommand(1);
    auto* dump = schema_cmd->add_subcommand("dump", "Print a schema exactly as shipped");
    std::string schema_name;
    dump->add_option("name", schema_name, "research, draft, transcript_facts, score or price_decision")->required();

    auto* hp_cmd = app.add_subcommand("hp", "Print effective GBDT hyperparameters as JSON");
    hp_cmd->add_option("--hp-overrides", hp_overrides, "Hyperparameter overrides");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "mlat: " << e.what() << "\n";
        return 2;
    }

    try {
        if (*gen) {
            auto spec = dataset::spec_from_json(json_arg(gen_spec, "--spec"));
            spec.seed = gen_seed;
            const auto data = dataset::generate_synthetic(spec, gen_n);
            std::ostringstream csv;
            dataset::write_csv(csv, data);
            write_text(gen_out, csv.str());
            write_json(json_out, {{"spec", dataset::to_json(spec)}, {"n", gen_n},
                                  {"summary", dataset::to_json(dataset::summarize(data))}});
        } else if (*summ) {
            const auto s = dataset::summarize(load_data(data_path));
            std::cout << dataset::render_summary(s);
            write_json(json_out, dataset::to_json(s));
        } else if (*split) {
            const auto data = load_data(data_path);
            const auto plan = splits::group_shuffle_split(data, split_fraction, split_seed);
            const auto leak = splits::verify_no_leakage(plan, data);
            std::cout << "train " << plan.train_indices.size() << " / test " << plan.test_indices.size()
                      << " records; leakage " << (leak.ok ? "none" : "DETECTED") << "\n";
            if (!plan_out.empty()) write_json(plan_out, splits::to_json(plan));
            write_json(json_out, {{"plan", splits::to_json(plan)}, {"leakage", splits::to_json(leak)}});
            if (!leak.ok) return 1;
        } else if (*kfold) {
            const auto data = load_data(data_path);
            const auto plan = splits::group_kfold(data, k);
            const auto leak = splits::verify_no_leakage(plan, data);
            std::cout << "fold sizes:";
            for (const auto& f : plan.folds) std::cout << " " << f.size();
            std::cout << "; leakage " << (leak.ok ? "none" : "DETECTED") << "\n";
            if (!plan_out.empty()) write_json(plan_out, splits::to_json(plan));
            write_json(json_out, {{"plan", splits::to_json(plan)}, {"leakage", splits::to_json(leak)}});
            if (!leak.ok) return 1;
        } else if (*train) {
            const auto data = load_data(data_path);
            const auto plan = train_split.resolve(data);
            const auto tr = splits::subset(data, plan.train_indices);
            const auto te = splits::subset(data, plan.test_indices);
            const double ref = mean_price(data);
            const auto spec = model_spec(model_kind, hp_overrides, ridge_alpha);
            auto predictor = eval::train(spec, tr);
            const auto train_pred = predictor.predict(tr);
            const auto m_train = eval::compute_metrics(dataset::prices(tr), train_pred, ref);
            std::optional<eval::MetricsReport> m_test;
            std::vector<double> test_pred;
            if (!te.empty()) {
                test_pred = predictor.predict(te);
                m_test = eval::compute_metrics(dataset::prices(te), test_pred, ref);
            }
            std::cout << "Model: " << model_kind << " (" << tr.size() << " train / " << te.size() << " test)\n"
                      << eval::render_metrics_table(m_train, m_test);
            json model_json;
            std::string version;
            if (auto* g = std::get_if<gbdt::GbdtModel>(&predictor.model)) {
                g->trained_at = trained_at;
                version = gbdt::model_version(*g);
                model_json = gbdt::to_json(*g);
                std::cout << "model_version " << version << "\n";
            } else {
                model_json = eval::to_json(std::get<eval::LinearModel>(predictor.model));
            }
            if (!model_out.empty()) write_text(model_out, model_json.dump(2) + "\n");
            if (!plot_out.empty()) {
                std::ostringstream os;
                os.precision(17);
                os << "record_id,set,actual,predicted\n";
                for (std::size_t i = 0; i < tr.size(); ++i)
                    os << tr[i].record_id << ",train," << tr[i].price << ',' << train_pred[i] << '\n';
                for (std::size_t i = 0; i < te.size(); ++i)
                    os << te[i].record_id << ",test," << te[i].price << ',' << test_pred[i] << '\n';
                write_text(plot_out, os.str());
            }
            json out = {{"model", model_kind},
                        {"split", splits::to_json(plan)},
                        {"train", {{"metrics", eval::to_json(m_train)}, {"indices", plan.train_indices},
                                   {"predictions", train_pred}}},
                        {"test", {{"metrics", m_test ? eval::to_json(*m_test) : json(nullptr)},
                                  {"indices", plan.test_indices}, {"predictions", test_pred}}}};
            if (auto* hp = std::get_if<gbdt::Hyperparameters>(&spec.model)) out["hyperparameters"] = gbdt::to_json(*hp);
            if (!version.empty()) out["model_version"] = version;
            write_json(json_out, out);
        } else if (*cv) {
            const auto data = load_data(data_path);
            const auto subset = cv_whole ? data : splits::subset(data, cv_split.resolve(data).train_indices);
            const auto plan = splits::group_kfold(subset, folds);
            const auto report =
                eval::cross_validate(subset, model_spec(model_kind, hp_overrides, ridge_alpha), plan, mean_price(data));
            std::cout << eval::render_cv_table(report);
            write_json(json_out, eval::to_json(report));
        } else if (*compare) {
            const auto data = load_data(data_path);
            const auto plan = cmp_split.resolve(data);
            const auto tr = splits::subset(data, plan.train_indices);
            const auto report = eval::compare_models(
                data, plan, splits::group_kfold(tr, folds),
                {model_spec("gbdt", hp_overrides, ridge_alpha), model_spec("ridge", "", ridge_alpha)});
            std::cout << eval::render_comparison_table(report);
            write_json(json_out, eval::to_json(report));
        } else if (*ablate) {
            eval::check_droppable(drop);
            const auto data = load_data(data_path);
            const auto tr = splits::subset(data, abl_split.resolve(data).train_indices);
            const auto report = eval::ablation(tr, splits::group_kfold(tr, folds), drop,
                                               model_spec("gbdt", hp_overrides, ridge_alpha), mean_price(data));
            std::cout << "All features:\n"
                      << eval::render_cv_table(report.full) << "\nWithout " << drop << ":\n"
                      << eval::render_cv_table(report.ablated) << "\nR2 change: "
                      << (report.r2_delta() >= 0 ? "+" : "") << report.r2_delta() << "\n";
            write_json(json_out, eval::to_json(report));
        } else if (*sens) {
            const auto model = gbdt::load_model(model_path);
            sensitivity::BaselineScenario baseline;
            if (!baseline_arg.empty()) baseline.features = service::canonicalize(json_arg(baseline_arg, "--baseline"));
            const auto values = values_arg.empty() ? sensitivity::full_range(feature) : parse_values(values_arg, feature);
            const auto curve = sensitivity::univariate_sweep(model, baseline, feature, values);
            const auto mono = sensitivity::monotonicity_check(curve, sensitivity::Direction::NonDecreasing);
            std::cout << sensitivity::render_table(curve) << "monotone non-decreasing: " << (mono.ok ? "yes" : "no");
            json out = {{"curve", sensitivity::to_json(curve)}, {"monotonicity", sensitivity::to_json(mono)}};
            try {
                const double ratio = sensitivity::sweep_ratio(curve);
                std::cout << "; last/first ratio " << ratio;
                out["sweep_ratio"] = ratio;
            } catch (const ValidationError&) {
                out["sweep_ratio"] = nullptr;
            }
            std::cout << "\n";
            if (!csv_out.empty()) write_text(csv_out, sensitivity::to_csv(curve));
            write_json(json_out, out);
        } else if (*srv) {
            return serve(model_path, bind);
        } else if (*pipe) {
            if (pricing_url.empty() && model_path.empty())
                throw ValidationError("pipeline needs --pricing-url or --model");
            runtime::Tool pricing =
                pricing_url.empty()
                    ? runtime::make_pricing_tool(std::make_shared<const service::PricingService>(
                          service::PricingService::from_artifact(model_path)))
                    : runtime::make_http_pricing_tool(pricing_url);
            const auto registry = runtime::default_registry(
                std::move(pricing), parse_json(read_text(research_path), "research fixture"));
            auto llm = runtime::ScriptedMock::from_file(mock_path);
            const auto result = runtime::run_pipeline(read_text(transcript_path), llm, registry, read_text(template_path));
            write_text(doc_out, result.document);
            if (!trace_out.empty()) write_text(trace_out, runtime::to_jsonl(result.trace, trace_timestamps));
            const auto& d = result.draft.decision;
            std::cerr << "model price " << usd(d.model_price, 2) << ", proposal total " << usd(d.adjusted_price, 2)
                      << (d.clamped ? " (clamped)" : "") << "\n";
            write_json(json_out, {{"findings", schema::to_json(result.research.findings)},
                                  {"facts", schema::to_json(result.research.facts)},
                                  {"decision", {{"model_price", d.model_price}, {"requested_price", d.requested_price},
                                                {"adjusted_price", d.adjusted_price}, {"clamped", d.clamped},
                                                {"adjustment_rationale", d.adjustment_rationale},
                                                {"research_confidence", d.research_confidence}}},
                                  {"proposal", result.draft.proposal}});
        } else if (*schema_cmd) {
            std::cout << schema::schema_text(schema_name);
        } else if (*hp_cmd) {
            const auto hp = gbdt::hyperparameters_from_json(json_arg(hp_overrides, "--hp-overrides"));
            gbdt::validate(hp);
            std::cout << gbdt::to_json(hp).dump(2) << "\n";
        }
    } catch (const ValidationError& e) {
        std::cerr << "mlat: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "mlat: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
