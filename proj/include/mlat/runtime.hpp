#pragma once

#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlat/error.hpp"
#include "mlat/schema.hpp"

namespace mlat::service {
class PricingService;
}

namespace mlat::runtime {

// Trace --------------------------------------------------------------------

struct TraceEvent {
    std::string kind; // "llm", "tool" or "policy"
    std::string agent;
    std::string tool_name; // tool name, or the prompt tag for llm events
    nlohmann::json request;
    nlohmann::json response;
    std::string note;
    std::string timestamp; // UTC, ISO-8601

    /// Compared without the timestamp.
    bool operator==(const TraceEvent& o) const;
};

using Trace = std::vector<TraceEvent>;

nlohmann::json to_json(const TraceEvent& e, bool with_timestamp = true);
/// One event per line.
std::string to_jsonl(const Trace& trace, bool with_timestamps = true);

// Errors ---------------------------------------------------------------------

/// A tool invocation failed, or its request/response broke the declared schema.
class ToolError : public Error {
public:
    ToolError(std::string tool, const std::string& what) : Error(tool + ": " + what), tool_(std::move(tool)) {}
    const std::string& tool() const { return tool_; }

private:
    std::string tool_;
};

/// Any failure inside a pipeline run, labeled with where it happened
/// ("research_agent/extract_facts", "draft_agent/pricing_tool", "render").
class PipelineError : public Error {
public:
    PipelineError(std::string stage, const std::string& what,
                  std::optional<schema::ValidationReport> report = std::nullopt)
        : Error(stage + ": " + what), stage_(std::move(stage)), report_(std::move(report)) {}
    const std::string& stage() const { return stage_; }
    const std::optional<schema::ValidationReport>& report() const { return report_; }

private:
    std::string stage_;
    std::optional<schema::ValidationReport> report_;
};

// Tools ----------------------------------------------------------------------

struct Tool {
    std::string name;
    std::string description;
    schema::SchemaDoc input_schema;
    schema::SchemaDoc output_schema;
    std::function<nlohmann::json(const nlohmann::json&)> invoke;
};

class ToolRegistry {
public:
    /// Throws ValidationError on a duplicate name.
    void register_tool(Tool tool);
    bool contains(const std::string& name) const;
    const Tool& get(const std::string& name) const;
    /// Insertion order.
    std::vector<std::string> names() const;

    /// Validates the request, invokes, validates the response. Every failure is a ToolError.
    nlohmann::json call(const std::string& name, const nlohmann::json& request) const;

private:
    std::vector<Tool> tools_;
};

/// Calls the service in-process.
Tool make_pricing_tool(std::shared_ptr<const service::PricingService> service);
/// POSTs to `<base_url>/predict`, e.g. "http://127.0.0.1:8080".
Tool make_http_pricing_tool(const std::string& base_url);

/// Deterministic research stand-ins. The fixture has two maps keyed by
/// company name: "revenue_lookup" -> {annual_revenue, currency, source, year}
/// and "company_research" -> {company_summary, prospect_summary}.
Tool make_revenue_lookup_stub(const nlohmann::json& fixture);
Tool make_company_research_stub(const nlohmann::json& fixture);

/// Pricing tool plus both stubs, in that order.
ToolRegistry default_registry(Tool pricing_tool, const nlohmann::json& research_fixture);

// LLM ------------------------------------------------------------------------

class LlmClient {
public:
    virtual ~LlmClient() = default;
    /// `tag` names the step ("extract_facts", "price_decision", ...).
    virtual nlohmann::json complete(const std::string& tag, const std::string& prompt,
                                    const schema::SchemaDoc& output_schema) = 0;
};

/// Replays canned outputs by tag. A JSON array value is consumed in order
/// (exhaustion is an error); any other value is returned on every call.
/// Outputs are not checked here, so fixtures can script contract breaches.
class ScriptedMock : public LlmClient {
public:
    explicit ScriptedMock(nlohmann::json script);
    static ScriptedMock from_file(const std::filesystem::path& path);

    nlohmann::json complete(const std::string& tag, const std::string& prompt,
                            const schema::SchemaDoc& output_schema) override;

    /// Prompts received, in call order.
    std::vector<std::pair<std::string, std::string>> calls() const;

private:
    nlohmann::json script_;
    std::map<std::string, std::size_t> cursor_;
    std::vector<std::pair<std::string, std::string>> calls_;
    mutable std::mutex mu_;
};

/// Placeholder for a hosted model. Requires MLAT_LLM_API_KEY and is not wired
/// to any provider in this build; complete() always throws.
class ExternalAdapter : public LlmClient {
public:
    ExternalAdapter();
    nlohmann::json complete(const std::string& tag, const std::string& prompt,
                            const schema::SchemaDoc& output_schema) override;
};

/// Asks once, re-asks once if the output breaks the schema, then throws a
/// PipelineError (stage "<agent>/<tag>") carrying the last report.
nlohmann::json structured_call(LlmClient& llm, const std::string& agent, const std::string& tag,
                               const std::string& prompt, const schema::SchemaDoc& output_schema, Trace& trace);

// Agents ---------------------------------------------------------------------

/// What an agent has learned so far. Append-only.
struct AgentContext {
    std::string transcript;
    std::optional<schema::TranscriptFacts> facts;
    std::vector<std::pair<std::string, nlohmann::json>> tool_results;

    void record(std::string tool, nlohmann::json result) { tool_results.emplace_back(std::move(tool), std::move(result)); }
};

struct ResearchResult {
    schema::TranscriptFacts facts;
    schema::ResearchFindings findings;
    AgentContext context;
    Trace trace;
};

/// Facts and scores from the transcript, revenue_lookup and company_research
/// in parallel, then synthesis under the research schema.
ResearchResult run_research_agent(const std::string& transcript, LlmClient& llm, const ToolRegistry& registry);

inline constexpr double kMaxAdjustment = 1.25;

struct PricingDecision {
    double model_price = 0.0;
    double requested_price = 0.0; // before the policy bound
    double adjusted_price = 0.0;
    bool clamped = false;
    std::string adjustment_rationale;
    std::string research_confidence;
};

/// Moves `requested` into [model / 1.25, model * 1.25].
double clamp_to_policy(double model_price, double requested);

struct DraftResult {
    nlohmann::json proposal;
    PricingDecision decision;
    Trace trace;
};

/// Features, one pricing call, a bounded adjustment, then the proposal. The
/// pricing section is always rewritten from the decision: total = adjusted
/// price, final = half rounded down to cents, deposit = the rest.
DraftResult run_draft_agent(const schema::ResearchFindings& findings, const schema::TranscriptFacts& facts,
                            LlmClient& llm, const ToolRegistry& registry);

// Rendering ------------------------------------------------------------------

/// Replaces every {{dot.path}} in `tmpl`. Numbers render as $#,###.##,
/// string arrays as "- item" lines, timeline_breakdown as week blocks.
/// Unknown paths raise ValidationError listing all of them.
std::string render_proposal(const nlohmann::json& proposal, const std::string& tmpl);

/// Placeholder paths in template order, duplicates kept.
std::vector<std::string> placeholders(const std::string& tmpl);

// Pipeline -------------------------------------------------------------------

struct PipelineResult {
    std::string document;
    ResearchResult research;
    DraftResult draft;
    Trace trace; // research then draft
};

PipelineResult run_pipeline(const std::string& transcript, LlmClient& llm, const ToolRegistry& registry,
                            const std::string& tmpl);

} // namespace mlat::runtime
