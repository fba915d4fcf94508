#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <future>
#include <iomanip>
#include <thread>

#include "mlat/runtime.hpp"
#include "mlat/service.hpp"
#include "support.hpp"

using namespace mlat;
using namespace mlat::runtime;
using nlohmann::json;

namespace {

std::shared_ptr<const service::PricingService> desk() {
    static const auto s = std::make_shared<const service::PricingService>(
        service::PricingService::from_artifact(testing::fixture("models/desk_model.json")));
    return s;
}

json load(const std::string& rel) { return json::parse(testing::slurp(testing::fixture(rel))); }
std::string transcript() { return testing::slurp(testing::fixture("pipeline/transcript.txt")); }
std::string tmpl() { return testing::slurp(testing::fixture("pipeline/proposal_template.txt")); }

ToolRegistry registry_with(Tool pricing) {
    return default_registry(std::move(pricing), load("pipeline/research_tools.json"));
}
ToolRegistry desk_registry() { return registry_with(make_pricing_tool(desk())); }

/// The real pricing tool's contract with a fixed answer.
Tool fixed_price_tool(double price) {
    Tool t = make_pricing_tool(desk());
    t.invoke = [price](const json& req) {
        return json{{"predicted_price", price},
                    {"currency", "USD"},
                    {"model_version", "fixed"},
                    {"feature_importances", json::object()},
                    {"echo", req}};
    };
    return t;
}

json mock_with_decision(const std::string& type, double value) {
    auto m = load("pipeline/mock_llm.json");
    m["price_decision"] = {{"adjustment_type", type}, {"adjustment_value", value}, {"rationale", "scripted"}};
    return m;
}

std::vector<std::string> tool_sequence(const Trace& t) {
    std::vector<std::string> out;
    for (const auto& e : t)
        if (e.kind == "tool") out.push_back(e.tool_name);
    return out;
}

} // namespace

TEST_CASE("registry: register, lookup, duplicates, order") {
    ToolRegistry r;
    r.register_tool(make_pricing_tool(desk()));
    CHECK(r.contains("pricing_model"));
    CHECK(r.get("pricing_model").name == "pricing_model");
    CHECK_THROWS_AS(r.register_tool(make_pricing_tool(desk())), ValidationError);
    CHECK_THROWS_AS(r.get("nope"), ValidationError);
    CHECK(desk_registry().names() == std::vector<std::string>{"pricing_model", "revenue_lookup", "company_research"});
}

TEST_CASE("registry: call validates both sides") {
    const auto r = desk_registry();
    CHECK_THROWS_AS(r.call("pricing_model", json{{"client_revenue", 1}}), ToolError);
    CHECK_THROWS_AS(r.call("missing", json::object()), ToolError);
    CHECK_THROWS_AS(r.call("revenue_lookup", json{{"company_name", "Unknown Co"}}), ToolError);
    ToolRegistry broken;
    Tool t = make_pricing_tool(desk());
    t.invoke = [](const json&) { return json{{"predicted_price", "cheap"}}; };
    broken.register_tool(t);
    const auto ok = desk_registry().call("pricing_model", service::echo({1e6, 8, 3, 4, 1, dataset::TechStack::Custom}));
    CHECK(ok["predicted_price"].get<double>() == 9674.974567908592);
    CHECK_THROWS_AS(broken.call("pricing_model", service::echo({1e6, 8, 3, 4, 1, dataset::TechStack::Custom})),
                    ToolError);
}

TEST_CASE("scripted mock") {
    ScriptedMock m(json{{"a", json::array({1, 2})}, {"b", json{{"x", 1}}}});
    const auto any = schema::SchemaDoc::parse(json{{"type", "object"}});
    CHECK(m.complete("a", "p", any) == 1);
    CHECK(m.complete("a", "p", any) == 2);
    CHECK_THROWS_AS(m.complete("a", "p", any), Error);
    CHECK(m.complete("b", "p", any) == m.complete("b", "q", any));
    CHECK_THROWS_AS(m.complete("c", "p", any), Error);
    CHECK(m.calls().size() == 6);
    CHECK_THROWS_AS(ScriptedMock(json::array()), ValidationError);
}

TEST_CASE("structured call retries once") {
    const auto& s = schema::score_schema();
    Trace trace;
    ScriptedMock fixes(json{{"score_pain", json::array({json{{"score", 9}}, json{{"score", 2}, {"rationale", "r"}}})}});
    CHECK(structured_call(fixes, "research_agent", "score_pain", "p", s, trace)["score"] == 2);
    REQUIRE(trace.size() == 2);
    CHECK(trace[0].note.find("schema-invalid") == 0);
    CHECK(trace[1].request["attempt"] == 2);

    ScriptedMock never(json{{"score_pain", json{{"score", 9}, {"rationale", "r"}}}});
    try {
        structured_call(never, "research_agent", "score_pain", "p", s, trace);
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == "research_agent/score_pain");
        REQUIRE(e.report());
        CHECK(e.report()->violations.at(0).path == "score");
    }
    CHECK(never.calls().size() == 2);
}

TEST_CASE("external adapter needs a key and is never live") {
    ::unsetenv("MLAT_LLM_API_KEY");
    CHECK_THROWS_AS(ExternalAdapter(), Error);
    ::setenv("MLAT_LLM_API_KEY", "k", 1);
    ExternalAdapter a;
    CHECK_THROWS_AS(a.complete("x", "p", schema::score_schema()), Error);
    ::unsetenv("MLAT_LLM_API_KEY");
}

TEST_CASE("research agent produces the golden findings") {
    ScriptedMock llm(load("pipeline/mock_llm.json"));
    const auto r = run_research_agent(transcript(), llm, desk_registry());
    CHECK(schema::to_json(r.findings) == load("pipeline/golden_findings.json"));
    CHECK(r.facts.pain_severity_score == 3);
    CHECK(r.facts.integration_complexity == 4);
    CHECK(r.context.tool_results.size() == 2);
    CHECK(tool_sequence(r.trace) == std::vector<std::string>{"revenue_lookup", "company_research"});
}

TEST_CASE("research agent errors") {
    ScriptedMock llm(load("pipeline/mock_llm.json"));
    ToolRegistry partial;
    partial.register_tool(make_pricing_tool(desk()));
    partial.register_tool(make_company_research_stub(load("pipeline/research_tools.json")));
    CHECK_THROWS_AS(run_research_agent(transcript(), llm, partial), PipelineError);

    try {
        run_research_agent("  \n", llm, desk_registry());
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == "research_agent/extract_facts");
    }

    auto script = load("pipeline/mock_llm.json");
    script["synthesize_research"]["client_revenue"]["confidence"] = "certain";
    ScriptedMock certain(script);
    try {
        run_research_agent(transcript(), certain, desk_registry());
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == "research_agent/synthesize_research");
        REQUIRE(e.report());
        CHECK(e.report()->violations.at(0).path == "client_revenue.confidence");
        CHECK(e.report()->violations.at(0).rule == "enum");
    }
}

TEST_CASE("draft agent: absolute adjustment on a $16,200 anchor") {
    ScriptedMock llm(mock_with_decision("absolute", 1800));
    ScriptedMock research_llm(load("pipeline/mock_llm.json"));
    const auto reg = registry_with(fixed_price_tool(16200));
    const auto research = run_research_agent(transcript(), research_llm, reg);
    const auto d = run_draft_agent(research.findings, research.facts, llm, reg);
    CHECK(d.decision.model_price == 16200);
    CHECK(d.decision.adjusted_price == 18000);
    CHECK_FALSE(d.decision.clamped);
    CHECK(d.proposal["pricing_section"]["total_price"] == 18000.0);
    CHECK(d.proposal["pricing_section"]["deposit_amount"] == 9000.0);
    CHECK(d.proposal["pricing_section"]["final_amount"] == 9000.0);
    CHECK(d.proposal["pricing_section"]["value_justification"] == "scripted");
}

TEST_CASE("draft agent: zero adjustment keeps the model price exactly") {
    ScriptedMock llm(mock_with_decision("percent", 0));
    ScriptedMock research_llm(load("pipeline/mock_llm.json"));
    const auto research = run_research_agent(transcript(), research_llm, desk_registry());
    const auto d = run_draft_agent(research.findings, research.facts, llm, desk_registry());
    CHECK(d.proposal["pricing_section"]["total_price"].get<double>() == 9674.974567908592);
}

TEST_CASE("draft agent: +40% clamps to +25% and says so") {
    ScriptedMock llm(load("pipeline/mock_llm_adversarial.json"));
    const auto r = run_pipeline(transcript(), llm, desk_registry(), tmpl());
    const auto& d = r.draft.decision;
    CHECK(d.clamped);
    CHECK(d.adjusted_price == 12093.71820988574);
    CHECK(d.adjusted_price == d.model_price * kMaxAdjustment);
    int policy = 0;
    for (const auto& e : r.trace)
        if (e.kind == "policy" && e.tool_name == "price_clamp") ++policy;
    CHECK(policy == 1);
    CHECK(r.document.find("Total: $12,093.72 USD") != std::string::npos);
}

TEST_CASE("clamp bound") {
    CHECK(clamp_to_policy(100, 100) == 100);
    CHECK(clamp_to_policy(100, 200) == 125);
    CHECK(clamp_to_policy(100, 10) == 80);
    CHECK_THROWS_AS(clamp_to_policy(0, 10), ValidationError);
}

TEST_CASE("property: every emitted proposal respects the clamp and the 50/50 split") {
    std::mt19937_64 rng(11);
    std::uniform_real_distribution<double> pct(-90.0, 200.0), price(500.0, 90000.0), abs_adj(-50000, 50000);
    ScriptedMock research_llm(load("pipeline/mock_llm.json"));
    const auto research = run_research_agent(transcript(), research_llm, desk_registry());
    for (int i = 0; i < 100; ++i) {
        const double anchor = std::round(price(rng) * 100) / 100;
        const bool percent = i % 2 == 0;
        ScriptedMock llm(mock_with_decision(percent ? "percent" : "absolute", percent ? pct(rng) : abs_adj(rng)));
        const auto reg = registry_with(fixed_price_tool(anchor));
        const auto d = run_draft_agent(research.findings, research.facts, llm, reg);
        const auto& p = d.proposal["pricing_section"];
        const double total = p["total_price"].get<double>();
        CHECK(total >= anchor / kMaxAdjustment);
        CHECK(total <= anchor * kMaxAdjustment);
        CHECK(p["deposit_amount"].get<double>() + p["final_amount"].get<double>() == doctest::Approx(total));
        INFO(std::setprecision(17) << total << " " << p["deposit_amount"].get<double>() << " " << p["final_amount"].get<double>());
        CHECK(p["deposit_amount"].get<double>() - p["final_amount"].get<double>() > -1e-6);
        CHECK(p["deposit_amount"].get<double>() - p["final_amount"].get<double>() < 0.02); // final = floor-cents(total/2)
        CHECK(schema::validate_proposal(d.proposal).valid());
    }
}

TEST_CASE("pipeline: golden document, golden proposal, trace order") {
    ScriptedMock llm(load("pipeline/mock_llm.json"));
    const auto r = run_pipeline(transcript(), llm, desk_registry(), tmpl());
    CHECK(r.document == testing::slurp(testing::fixture("pipeline/golden_document.txt")));
    CHECK(r.draft.proposal == load("pipeline/golden_proposal.json"));
    CHECK(tool_sequence(r.trace) == std::vector<std::string>{"revenue_lookup", "company_research", "pricing_model"});
    // The pricing call comes after research synthesis.
    std::size_t synth = 0, pricing = 0;
    for (std::size_t i = 0; i < r.trace.size(); ++i) {
        if (r.trace[i].tool_name == "synthesize_research") synth = i;
        if (r.trace[i].tool_name == "pricing_model") pricing = i;
    }
    CHECK(synth < pricing);
}

TEST_CASE("pipeline: every traced tool call satisfies the tool's schemas") {
    ScriptedMock llm(load("pipeline/mock_llm.json"));
    const auto reg = desk_registry();
    const auto r = run_pipeline(transcript(), llm, reg, tmpl());
    int tools = 0;
    for (const auto& e : r.trace) {
        if (e.kind != "tool") continue;
        ++tools;
        const auto& t = reg.get(e.tool_name);
        CHECK(schema::validate(e.request, t.input_schema).valid());
        CHECK(schema::validate(e.response, t.output_schema).valid());
    }
    CHECK(tools == 3);
}

TEST_CASE("pipeline: deterministic across runs and threads") {
    auto run = [] {
        ScriptedMock llm(load("pipeline/mock_llm.json"));
        const auto r = run_pipeline(transcript(), llm, desk_registry(), tmpl());
        return std::make_pair(r.document, to_jsonl(r.trace, false));
    };
    const auto first = run();
    CHECK(run() == first);
    std::vector<std::future<std::pair<std::string, std::string>>> par;
    for (int i = 0; i < 4; ++i) par.push_back(std::async(std::launch::async, run));
    for (auto& f : par) CHECK(f.get() == first);
}

TEST_CASE("pipeline: unreachable pricing service is a labeled error") {
    int port = 0;
    {
        service::HttpServer probe(desk(), "127.0.0.1", 0);
        port = probe.port();
    }
    ScriptedMock llm(load("pipeline/mock_llm.json"));
    const auto reg = registry_with(make_http_pricing_tool("http://127.0.0.1:" + std::to_string(port)));
    try {
        run_pipeline(transcript(), llm, reg, tmpl());
        FAIL("expected PipelineError");
    } catch (const PipelineError& e) {
        CHECK(e.stage() == "draft_agent/pricing_tool");
    }
}

TEST_CASE("pipeline: the http pricing tool gives the in-process answer") {
    service::HttpServer srv(desk(), "127.0.0.1", 0);
    std::thread t([&] { srv.run(); });
    ScriptedMock llm(load("pipeline/mock_llm.json"));
    const auto reg = registry_with(make_http_pricing_tool("http://127.0.0.1:" + std::to_string(srv.port())));
    std::string doc;
    try {
        doc = run_pipeline(transcript(), llm, reg, tmpl()).document;
    } catch (...) {
        srv.stop();
        t.join();
        throw;
    }
    srv.stop();
    t.join();
    CHECK(doc == testing::slurp(testing::fixture("pipeline/golden_document.txt")));
}

TEST_CASE("render") {
    const json doc = {{"pricing_section", {{"total_price", 18000}}}, {"goals_list", {"a", "b"}}};
    CHECK(render_proposal(doc, "Total: {{pricing_section.total_price}}") == "Total: $18,000.00");
    CHECK(render_proposal(doc, "{{goals_list}}") == "- a\n- b");
    try {
        render_proposal(doc, "{{pricing_section.discount}} {{nope}}");
        FAIL("expected ValidationError");
    } catch (const ValidationError& e) {
        const std::string w = e.what();
        CHECK(w.find("pricing_section.discount") != std::string::npos);
        CHECK(w.find("nope") != std::string::npos);
    }
    CHECK(placeholders("{{a}} x {{ b.c }} {{a}}") == std::vector<std::string>{"a", "b.c", "a"});
    CHECK(render_proposal(doc, "no placeholders") == "no placeholders");
}

TEST_CASE("trace serialization") {
    TraceEvent e{"tool", "draft_agent", "pricing_model", json{{"a", 1}}, json{{"b", 2}}, "", "2026-01-01T00:00:00Z"};
    auto other = e;
    other.timestamp = "later";
    CHECK(e == other);
    CHECK(to_json(e, false).contains("timestamp") == false);
    CHECK(to_json(e)["timestamp"] == "2026-01-01T00:00:00Z");
    const auto lines = to_jsonl({e, e}, false);
    CHECK(std::count(lines.begin(), lines.end(), '\n') == 2);
}
