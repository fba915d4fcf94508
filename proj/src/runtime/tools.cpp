#include <chrono>
#include <ctime>
#include <sstream>

#include <httplib.h>

#include "mlat/runtime.hpp"
#include "mlat/service.hpp"

namespace mlat::runtime {

using nlohmann::json;

bool TraceEvent::operator==(const TraceEvent& o) const {
    return kind == o.kind && agent == o.agent && tool_name == o.tool_name && request == o.request &&
           response == o.response && note == o.note;
}

json to_json(const TraceEvent& e, bool with_timestamp) {
    json j = {{"kind", e.kind},
              {"agent", e.agent},
              {"tool_name", e.tool_name},
              {"request", e.request},
              {"response", e.response}};
    if (!e.note.empty()) j["note"] = e.note;
    if (with_timestamp) j["timestamp"] = e.timestamp;
    return j;
}

std::string to_jsonl(const Trace& trace, bool with_timestamps) {
    std::string out;
    for (const auto& e : trace) out += to_json(e, with_timestamps).dump() + "\n";
    return out;
}

void ToolRegistry::register_tool(Tool tool) {
    if (tool.name.empty()) throw ValidationError("tool name must not be empty");
    if (contains(tool.name)) throw ValidationError("tool '" + tool.name + "' is already registered");
    if (!tool.invoke) throw ValidationError("tool '" + tool.name + "' has no implementation");
    tools_.push_back(std::move(tool));
}

bool ToolRegistry::contains(const std::string& name) const {
    for (const auto& t : tools_)
        if (t.name == name) return true;
    return false;
}

const Tool& ToolRegistry::get(const std::string& name) const {
    for (const auto& t : tools_)
        if (t.name == name) return t;
    throw ValidationError("no tool named '" + name + "'");
}

std::vector<std::string> ToolRegistry::names() const {
    std::vector<std::string> out;
    for (const auto& t : tools_) out.push_back(t.name);
    return out;
}

json ToolRegistry::call(const std::string& name, const json& request) const {
    const Tool* tool = nullptr;
    for (const auto& t : tools_)
        if (t.name == name) tool = &t;
    if (!tool) throw ToolError(name, "not registered");
    if (auto r = schema::validate(request, tool->input_schema); !r.valid())
        throw ToolError(name, "request breaks input schema: " + r.summary());
    json response;
    try {
        response = tool->invoke(request);
    } catch (const ToolError&) {
        throw;
    } catch (const std::exception& e) {
        throw ToolError(name, e.what());
    }
    if (auto r = schema::validate(response, tool->output_schema); !r.valid())
        throw ToolError(name, "response breaks output schema: " + r.summary());
    return response;
}

namespace {

const schema::SchemaDoc& predict_request_schema() {
    static const auto doc = schema::SchemaDoc::parse(json::parse(R"({
      "type": "object",
      "properties": {
        "client_revenue": { "type": "number" },
        "est_duration_weeks": { "type": "integer" },
        "pain_severity_score": { "type": "integer" },
        "integration_complexity": { "type": "integer" },
        "phase": { "type": "integer" },
        "tech_stack": { "type": "string", "enum": ["no_code", "low_code", "custom"] }
      },
      "required": ["client_revenue", "est_duration_weeks", "pain_severity_score",
                   "integration_complexity", "phase", "tech_stack"]
    })"));
    return doc;
}

const schema::SchemaDoc& predict_response_schema() {
    static const auto doc = schema::SchemaDoc::parse(json::parse(R"({
      "type": "object",
      "properties": {
        "predicted_price": { "type": "number" },
        "currency": { "type": "string", "enum": ["USD"] },
        "model_version": { "type": "string" },
        "feature_importances": { "type": "object" },
        "echo": { "type": "object" },
        "latency_micros": { "type": "integer" }
      },
      "required": ["predicted_price", "currency", "model_version", "feature_importances", "echo"]
    })"));
    return doc;
}

std::string describe_error(const json& body) {
    if (body.is_object() && body.contains("error")) {
        std::string s = body["error"].is_string() ? body["error"].get<std::string>() : body["error"].dump();
        if (body.contains("details") && !body["details"].empty()) s += " " + body["details"].dump();
        return s;
    }
    return body.dump();
}

Tool pricing_tool_shell() {
    Tool t;
    t.name = "pricing_model";
    t.description = "Predicts a project price in USD from the six raw deal features.";
    t.input_schema = predict_request_schema();
    t.output_schema = predict_response_schema();
    return t;
}

const json& lookup(const json& fixture, const char* section, const json& request, const char* tool) {
    const auto company = request.at("company_name").get<std::string>();
    if (!fixture.contains(section) || !fixture[section].contains(company))
        throw ToolError(tool, "no record for company '" + company + "'");
    return fixture[section][company];
}

} // namespace

Tool make_pricing_tool(std::shared_ptr<const service::PricingService> svc) {
    if (!svc) throw ValidationError("pricing tool needs a service");
    Tool t = pricing_tool_shell();
    t.invoke = [svc](const json& request) {
        auto r = svc->handle_predict(request);
        if (r.status != 200)
            throw ToolError("pricing_model", "HTTP " + std::to_string(r.status) + ": " + describe_error(r.body));
        return r.body;
    };
    return t;
}

Tool make_http_pricing_tool(const std::string& base_url) {
    Tool t = pricing_tool_shell();
    t.invoke = [base_url](const json& request) {
        httplib::Client client(base_url);
        client.set_connection_timeout(2, 0);
        client.set_read_timeout(10, 0);
        auto res = client.Post("/predict", request.dump(), "application/json");
        if (!res)
            throw ToolError("pricing_model",
                            "pricing service unreachable at " + base_url + " (" + httplib::to_string(res.error()) + ")");
        json body;
        try {
            body = json::parse(res->body);
        } catch (const json::parse_error&) {
            throw ToolError("pricing_model", "non-JSON response (HTTP " + std::to_string(res->status) + ")");
        }
        if (res->status != 200)
            throw ToolError("pricing_model", "HTTP " + std::to_string(res->status) + ": " + describe_error(body));
        return body;
    };
    return t;
}

Tool make_revenue_lookup_stub(const json& fixture) {
    Tool t;
    t.name = "revenue_lookup";
    t.description = "Annual revenue of a company with source and year.";
    t.input_schema = schema::SchemaDoc::parse(json::parse(R"({
      "type": "object",
      "properties": { "company_name": { "type": "string" } },
      "required": ["company_name"]
    })"));
    t.output_schema = schema::SchemaDoc::parse(json::parse(R"({
      "type": "object",
      "properties": {
        "annual_revenue": { "type": "number" },
        "currency": { "type": "string" },
        "source": { "type": "string" },
        "year": { "type": "string" }
      },
      "required": ["annual_revenue", "currency", "source", "year"]
    })"));
    t.invoke = [fixture](const json& request) { return lookup(fixture, "revenue_lookup", request, "revenue_lookup"); };
    return t;
}

Tool make_company_research_stub(const json& fixture) {
    Tool t;
    t.name = "company_research";
    t.description = "Background on a company and the prospect.";
    t.input_schema = schema::SchemaDoc::parse(json::parse(R"({
      "type": "object",
      "properties": {
        "company_name": { "type": "string" },
        "prospect_name": { "type": "string" }
      },
      "required": ["company_name", "prospect_name"]
    })"));
    t.output_schema = schema::SchemaDoc::parse(json::parse(R"({
      "type": "object",
      "properties": {
        "company_summary": { "type": "string" },
        "prospect_summary": { "type": "string" }
      },
      "required": ["company_summary", "prospect_summary"]
    })"));
    t.invoke = [fixture](const json& request) {
        return lookup(fixture, "company_research", request, "company_research");
    };
    return t;
}

ToolRegistry default_registry(Tool pricing_tool, const json& research_fixture) {
    ToolRegistry r;
    r.register_tool(std::move(pricing_tool));
    r.register_tool(make_revenue_lookup_stub(research_fixture));
    r.register_tool(make_company_research_stub(research_fixture));
    return r;
}

} // namespace mlat::runtime
