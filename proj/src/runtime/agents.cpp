#include <chrono>
#include <cmath>
#include <ctime>
#include <future>

#include "mlat/format.hpp"
#include "mlat/runtime.hpp"
#include "mlat/service.hpp"

namespace mlat::runtime {

using nlohmann::json;

std::string utc_timestamp() {
    const auto now = std::chrono::system_clock::now();
    const auto t = std::chrono::system_clock::to_time_t(now);
    const auto micros =
        std::chrono::duration_cast<std::chrono::microseconds>(now.time_since_epoch()).count() % 1000000;
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[40];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%S", &tm);
    char out[64];
    std::snprintf(out, sizeof out, "%s.%06lldZ", buf, static_cast<long long>(micros));
    return out;
}

namespace {

constexpr const char* kResearch = "research_agent";
constexpr const char* kDraft = "draft_agent";

/// The facts schema without the two scores, which get their own calls.
const schema::SchemaDoc& extraction_schema() {
    static const schema::SchemaDoc doc = [] {
        json j = json::parse(schema::transcript_facts_schema_text());
        j["properties"].erase("pain_severity_score");
        j["properties"].erase("integration_complexity");
        json req = json::array();
        for (const auto& r : j["required"])
            if (r != "pain_severity_score" && r != "integration_complexity") req.push_back(r);
        j["required"] = req;
        return schema::SchemaDoc::parse(j);
    }();
    return doc;
}

bool blank(const std::string& s) { return s.find_first_not_of(" \t\r\n") == std::string::npos; }

json tool_step(const ToolRegistry& registry, const std::string& agent, const std::string& tool, const json& request,
               Trace& trace, const std::string& stage = "") {
    json response;
    try {
        response = registry.call(tool, request);
    } catch (const std::exception& e) {
        throw PipelineError(agent + "/" + (stage.empty() ? tool : stage), e.what());
    }
    // Measured service time is wall-clock noise; keep it out of the trace.
    json recorded = response;
    if (recorded.is_object()) recorded.erase("latency_micros");
    trace.push_back({"tool", agent, tool, request, std::move(recorded), "", utc_timestamp()});
    return response;
}

double round_down_cents(double v) { return std::floor(v * 100.0 + 1e-7) / 100.0; }

} // namespace

ResearchResult run_research_agent(const std::string& transcript, LlmClient& llm, const ToolRegistry& registry) {
    for (const char* needed : {"revenue_lookup", "company_research"})
        if (!registry.contains(needed))
            throw PipelineError(kResearch, std::string("registry has no '") + needed + "' tool");
    if (blank(transcript)) throw PipelineError(std::string(kResearch) + "/extract_facts", "transcript is empty");

    ResearchResult out;
    out.context.transcript = transcript;
    auto& trace = out.trace;

    json facts = structured_call(llm, kResearch, "extract_facts",
                                 "Extract prospect_name, company_name, phase, est_duration_weeks and tech_stack "
                                 "from this sales call transcript.\n\n" + transcript,
                                 extraction_schema(), trace);
    const json pain = structured_call(llm, kResearch, "score_pain",
                                      "Rate the prospect's pain severity from 1 (mild) to 5 (urgent).\n\n" +
                                          transcript,
                                      schema::score_schema(), trace);
    const json complexity = structured_call(llm, kResearch, "score_complexity",
                                            "Rate the integration complexity from 1 (standalone) to 5 (deeply "
                                            "integrated).\n\n" + transcript,
                                            schema::score_schema(), trace);
    facts["pain_severity_score"] = pain["score"];
    facts["integration_complexity"] = complexity["score"];
    try {
        out.facts = schema::facts_from_json(facts);
    } catch (const schema::ContractViolation& e) {
        throw PipelineError(std::string(kResearch) + "/extract_facts", e.what(), e.report());
    } catch (const std::exception& e) {
        throw PipelineError(std::string(kResearch) + "/extract_facts", e.what());
    }
    out.context.facts = out.facts;

    // Both lookups run concurrently; the trace lists them in launch order.
    const json revenue_req = {{"company_name", out.facts.company_name}};
    const json research_req = {{"company_name", out.facts.company_name}, {"prospect_name", out.facts.prospect_name}};
    Trace revenue_trace, research_trace;
    auto revenue = std::async(std::launch::async, [&] {
        return tool_step(registry, kResearch, "revenue_lookup", revenue_req, revenue_trace);
    });
    auto background = std::async(std::launch::async, [&] {
        return tool_step(registry, kResearch, "company_research", research_req, research_trace);
    });
    std::exception_ptr failure;
    json revenue_res, background_res;
    try {
        revenue_res = revenue.get();
    } catch (...) {
        failure = std::current_exception();
    }
    try {
        background_res = background.get();
    } catch (...) {
        if (!failure) failure = std::current_exception();
    }
    if (failure) std::rethrow_exception(failure);
    trace.insert(trace.end(), revenue_trace.begin(), revenue_trace.end());
    trace.insert(trace.end(), research_trace.begin(), research_trace.end());
    out.context.record("revenue_lookup", revenue_res);
    out.context.record("company_research", background_res);

    const json gathered = {{"facts", schema::to_json(out.facts)},
                           {"revenue_lookup", revenue_res},
                           {"company_research", background_res}};
    const json findings = structured_call(llm, kResearch, "synthesize_research",
                                          "Synthesize the research below into the research schema. Report "
                                          "revenue confidence as low, medium or high.\n\n" + gathered.dump(2),
                                          schema::research_schema(), trace);
    out.findings = schema::findings_from_json(findings);
    return out;
}

double clamp_to_policy(double model_price, double requested) {
    if (!(model_price > 0.0) || !std::isfinite(model_price))
        throw ValidationError("model price must be positive and finite");
    const double lo = model_price / kMaxAdjustment;
    const double hi = model_price * kMaxAdjustment;
    if (!std::isfinite(requested)) return model_price;
    return std::clamp(requested, lo, hi);
}

DraftResult run_draft_agent(const schema::ResearchFindings& findings, const schema::TranscriptFacts& facts,
                            LlmClient& llm, const ToolRegistry& registry) {
    if (!registry.contains("pricing_model")) throw PipelineError(kDraft, "registry has no 'pricing_model' tool");
    DraftResult out;
    auto& trace = out.trace;

    schema::ExtractedFeatures x;
    try {
        x = schema::extract_features(findings, facts);
    } catch (const std::exception& e) {
        throw PipelineError(std::string(kDraft) + "/extract_features", e.what());
    }

    const json priced = tool_step(registry, kDraft, "pricing_model", service::echo(x.features), trace, "pricing_tool");
    auto& d = out.decision;
    d.model_price = priced.at("predicted_price").get<double>();
    d.research_confidence = x.revenue_confidence;
    if (!(d.model_price > 0.0))
        throw PipelineError(std::string(kDraft) + "/pricing_tool",
                            "model price " + usd(d.model_price, 2) + " is not positive");

    const json context = {{"model_price", d.model_price},
                          {"features", service::echo(x.features)},
                          {"revenue_confidence", x.revenue_confidence},
                          {"revenue_source", x.revenue_source},
                          {"findings", schema::to_json(findings)}};
    const json decision = structured_call(llm, kDraft, "price_decision",
                                          "The pricing model predicts " + usd(d.model_price, 2) +
                                              ". Decide an adjustment (absolute USD or percent) and explain it.\n\n" +
                                              context.dump(2),
                                          schema::price_decision_schema(), trace);
    const double value = decision.at("adjustment_value").get<double>();
    d.requested_price = decision.at("adjustment_type") == "percent" ? d.model_price * (1.0 + value / 100.0)
                                                                     : d.model_price + value;
    d.adjustment_rationale = decision.at("rationale").get<std::string>();
    d.adjusted_price = clamp_to_policy(d.model_price, d.requested_price);
    d.clamped = d.adjusted_price != d.requested_price;
    if (d.clamped) {
        trace.push_back({"policy", kDraft, "price_clamp",
                         {{"model_price", d.model_price}, {"requested_price", d.requested_price}},
                         {{"adjusted_price", d.adjusted_price}},
                         "clamped to the +/-25% bound around the model price",
                         utc_timestamp()});
    }

    const json brief = {{"facts", schema::to_json(facts)},
                        {"findings", schema::to_json(findings)},
                        {"total_price", d.adjusted_price},
                        {"value_justification", d.adjustment_rationale}};
    json proposal = structured_call(llm, kDraft, "generate_proposal",
                                    "Write the full proposal in the draft schema.\n\n" + brief.dump(2),
                                    schema::draft_schema(), trace);
    auto& pricing = proposal["pricing_section"];
    const double final_amount = round_down_cents(d.adjusted_price / 2.0);
    pricing["total_price"] = d.adjusted_price;
    pricing["currency"] = "USD";
    pricing["deposit_amount"] = d.adjusted_price - final_amount;
    pricing["final_amount"] = final_amount;
    pricing["value_justification"] = d.adjustment_rationale;
    if (auto r = schema::validate_proposal(proposal); !r.valid())
        throw PipelineError(std::string(kDraft) + "/generate_proposal", r.summary(), r);
    out.proposal = std::move(proposal);
    return out;
}

PipelineResult run_pipeline(const std::string& transcript, LlmClient& llm, const ToolRegistry& registry,
                            const std::string& tmpl) {
    PipelineResult out;
    out.research = run_research_agent(transcript, llm, registry);
    out.draft = run_draft_agent(out.research.findings, out.research.facts, llm, registry);
    try {
        out.document = render_proposal(out.draft.proposal, tmpl);
    } catch (const std::exception& e) {
        throw PipelineError("render", e.what());
    }
    out.trace = out.research.trace;
    out.trace.insert(out.trace.end(), out.draft.trace.begin(), out.draft.trace.end());
    return out;
}

} // namespace mlat::runtime
