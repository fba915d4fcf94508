#include <cstdlib>
#include <fstream>

#include "mlat/runtime.hpp"

namespace mlat::runtime {

using nlohmann::json;

std::string utc_timestamp(); // agents.cpp

ScriptedMock::ScriptedMock(json script) : script_(std::move(script)) {
    if (!script_.is_object()) throw ValidationError("mock script must be a JSON object keyed by prompt tag");
}

ScriptedMock ScriptedMock::from_file(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open mock fixture " + path.string());
    try {
        return ScriptedMock(json::parse(in));
    } catch (const json::parse_error& e) {
        throw ValidationError("mock fixture " + path.string() + " is not valid JSON: " + e.what());
    }
}

json ScriptedMock::complete(const std::string& tag, const std::string& prompt, const schema::SchemaDoc&) {
    std::lock_guard lock(mu_);
    calls_.emplace_back(tag, prompt);
    const auto it = script_.find(tag);
    if (it == script_.end()) throw Error("mock has no output scripted for '" + tag + "'");
    if (!it->is_array()) return *it;
    auto& pos = cursor_[tag];
    if (pos >= it->size()) throw Error("mock script for '" + tag + "' is exhausted");
    return (*it)[pos++];
}

std::vector<std::pair<std::string, std::string>> ScriptedMock::calls() const {
    std::lock_guard lock(mu_);
    return calls_;
}

ExternalAdapter::ExternalAdapter() {
    const char* key = std::getenv("MLAT_LLM_API_KEY");
    if (!key || !*key) throw Error("external LLM adapter needs MLAT_LLM_API_KEY");
}

json ExternalAdapter::complete(const std::string& tag, const std::string&, const schema::SchemaDoc&) {
    throw Error("external LLM adapter is not available in this build (step '" + tag + "')");
}

json structured_call(LlmClient& llm, const std::string& agent, const std::string& tag, const std::string& prompt,
                     const schema::SchemaDoc& output_schema, Trace& trace) {
    const std::string stage = agent + "/" + tag;
    schema::ValidationReport last;
    for (int attempt = 1; attempt <= 2; ++attempt) {
        json out;
        try {
            out = llm.complete(tag, prompt, output_schema);
        } catch (const std::exception& e) {
            throw PipelineError(stage, e.what());
        }
        last = schema::validate(out, output_schema);
        TraceEvent ev{"llm", agent, tag, {{"prompt", prompt}, {"attempt", attempt}}, out, "", utc_timestamp()};
        if (!last.valid()) ev.note = "schema-invalid: " + last.summary();
        trace.push_back(std::move(ev));
        if (last.valid()) return out;
    }
    throw PipelineError(stage, "output breaks its schema after one retry: " + last.summary(), last);
}

} // namespace mlat::runtime
