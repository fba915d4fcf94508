#include "mlat/schema.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "mlat/embedded_schemas.hpp"

namespace mlat::schema {

using nlohmann::json;

namespace {

Type parse_type(const json& t, const std::string& where) {
    if (!t.is_string()) throw SchemaDefinitionError(where + ": \"type\" must be a string");
    const auto s = t.get<std::string>();
    if (s == "object") return Type::Object;
    if (s == "array") return Type::Array;
    if (s == "string") return Type::String;
    if (s == "number") return Type::Number;
    if (s == "integer") return Type::Integer;
    throw SchemaDefinitionError(where + ": unsupported type \"" + s + "\"");
}

bool matches_type(const json& v, Type t) {
    switch (t) {
    case Type::Object: return v.is_object();
    case Type::Array: return v.is_array();
    case Type::String: return v.is_string();
    case Type::Number: return v.is_number();
    case Type::Integer:
        if (v.is_number_integer()) return true;
        if (v.is_number_float()) {
            const double d = v.get<double>();
            return std::isfinite(d) && d == std::floor(d);
        }
        return false;
    }
    return false;
}

std::string kind_of(const json& v) {
    if (v.is_number_integer()) return "integer";
    if (v.is_number_float()) return "number";
    return v.type_name();
}

std::shared_ptr<const SchemaNode> parse_node(const json& j, const std::string& where) {
    if (!j.is_object()) throw SchemaDefinitionError(where + ": schema node must be an object");
    for (const auto& [key, _] : j.items()) {
        if (key != "type" && key != "properties" && key != "required" && key != "items" && key != "enum" &&
            key != "title" && key != "description")
            throw SchemaDefinitionError(where + ": unsupported keyword \"" + key + "\"");
    }
    if (!j.contains("type")) throw SchemaDefinitionError(where + ": missing \"type\"");
    auto node = std::make_shared<SchemaNode>();
    node->type = parse_type(j.at("type"), where);

    if (j.contains("properties")) {
        if (node->type != Type::Object) throw SchemaDefinitionError(where + ": \"properties\" on a non-object");
        const auto& props = j.at("properties");
        if (!props.is_object()) throw SchemaDefinitionError(where + ": \"properties\" must be an object");
        for (const auto& [name, sub] : props.items()) {
            node->properties.emplace_back(name, parse_node(sub, where.empty() ? name : where + "." + name));
        }
    }
    if (j.contains("required")) {
        if (node->type != Type::Object) throw SchemaDefinitionError(where + ": \"required\" on a non-object");
        const auto& req = j.at("required");
        if (!req.is_array()) throw SchemaDefinitionError(where + ": \"required\" must be an array");
        for (const auto& r : req) {
            if (!r.is_string()) throw SchemaDefinitionError(where + ": \"required\" entries must be strings");
            const auto name = r.get<std::string>();
            if (!node->property(name))
                throw SchemaDefinitionError(where + ": required \"" + name + "\" is not a declared property");
            node->required.push_back(name);
        }
    }
    if (node->type == Type::Array) {
        if (!j.contains("items")) throw SchemaDefinitionError(where + ": array without \"items\"");
        node->items = parse_node(j.at("items"), where + "[]");
    } else if (j.contains("items")) {
        throw SchemaDefinitionError(where + ": \"items\" on a non-array");
    }
    if (j.contains("enum")) {
        const auto& e = j.at("enum");
        if (!e.is_array() || e.empty()) throw SchemaDefinitionError(where + ": \"enum\" must be a non-empty array");
        std::vector<json> values;
        for (const auto& v : e) {
            if (!matches_type(v, node->type))
                throw SchemaDefinitionError(where + ": enum value " + v.dump() + " does not match the declared type");
            values.push_back(v);
        }
        node->enum_values = std::move(values);
    }
    return node;
}

std::string child(const std::string& path, const std::string& name) {
    return path.empty() ? name : path + "." + name;
}

std::string display(const std::string& path) { return path.empty() ? "$" : path; }

void check(const json& v, const SchemaNode& node, const std::string& path, std::vector<Violation>& out) {
    if (!matches_type(v, node.type)) {
        out.push_back({display(path), "type",
                       "expected " + std::string(to_string(node.type)) + ", got " + kind_of(v)});
        return;
    }
    if (node.enum_values) {
        const auto& allowed = *node.enum_values;
        if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
            std::string list;
            for (const auto& a : allowed) list += (list.empty() ? "" : ", ") + a.dump();
            out.push_back({display(path), "enum", v.dump() + " not in [" + list + "]"});
        }
    }
    if (node.type == Type::Object) {
        for (const auto& name : node.required) {
            if (!v.contains(name)) out.push_back({child(path, name), "required", "missing required property"});
        }
        for (const auto& [name, sub] : node.properties) {
            const auto it = v.find(name);
            if (it != v.end()) check(*it, *sub, child(path, name), out);
        }
    } else if (node.type == Type::Array) {
        for (std::size_t i = 0; i < v.size(); ++i)
            check(v[i], *node.items, path + "[" + std::to_string(i) + "]", out);
    }
}

std::vector<std::string> split_path(const std::string& path) {
    std::vector<std::string> parts;
    std::string cur;
    for (char c : path) {
        if (c == '.') {
            parts.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    parts.push_back(cur);
    return parts;
}

const std::string& text_field(const json& j, const char* key) { return j.at(key).get_ref<const std::string&>(); }

} // namespace

std::string_view to_string(Type t) {
    switch (t) {
    case Type::Object: return "object";
    case Type::Array: return "array";
    case Type::String: return "string";
    case Type::Number: return "number";
    case Type::Integer: return "integer";
    }
    return "?";
}

const SchemaNode* SchemaNode::property(std::string_view name) const {
    for (const auto& [n, sub] : properties)
        if (n == name) return sub.get();
    return nullptr;
}

bool SchemaNode::is_required(std::string_view name) const {
    return std::find(required.begin(), required.end(), name) != required.end();
}

SchemaDoc SchemaDoc::parse(const json& j) {
    SchemaDoc doc;
    doc.root_ = parse_node(j, "");
    doc.source_ = j;
    return doc;
}

SchemaDoc SchemaDoc::parse(std::string_view text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::parse_error& e) {
        throw SchemaDefinitionError(std::string("schema is not valid JSON: ") + e.what());
    }
    return parse(j);
}

std::string ValidationReport::summary() const {
    std::string s;
    for (const auto& v : violations) {
        if (!s.empty()) s += "; ";
        s += v.path + ": " + v.rule + " (" + v.detail + ")";
    }
    return s;
}

ValidationReport validate(const json& document, const SchemaDoc& schema) {
    ValidationReport r;
    check(document, schema.root(), "", r.violations);
    return r;
}

void require_valid(const json& document, const SchemaDoc& schema, const std::string& context) {
    auto r = validate(document, schema);
    if (!r.valid()) throw ContractViolation(context, std::move(r));
}

std::string_view research_schema_text() { return embedded::k_research; }
std::string_view draft_schema_text() { return embedded::k_draft; }
std::string_view transcript_facts_schema_text() { return embedded::k_transcript_facts; }
std::string_view score_schema_text() { return embedded::k_score; }
std::string_view price_decision_schema_text() { return embedded::k_price_decision; }

const SchemaDoc& research_schema() {
    static const SchemaDoc doc = SchemaDoc::parse(research_schema_text());
    return doc;
}
const SchemaDoc& draft_schema() {
    static const SchemaDoc doc = SchemaDoc::parse(draft_schema_text());
    return doc;
}
const SchemaDoc& transcript_facts_schema() {
    static const SchemaDoc doc = SchemaDoc::parse(transcript_facts_schema_text());
    return doc;
}
const SchemaDoc& score_schema() {
    static const SchemaDoc doc = SchemaDoc::parse(score_schema_text());
    return doc;
}
const SchemaDoc& price_decision_schema() {
    static const SchemaDoc doc = SchemaDoc::parse(price_decision_schema_text());
    return doc;
}

std::string_view schema_text(std::string_view name) {
    if (name == "research") return research_schema_text();
    if (name == "draft") return draft_schema_text();
    if (name == "transcript_facts") return transcript_facts_schema_text();
    if (name == "score") return score_schema_text();
    if (name == "price_decision") return price_decision_schema_text();
    throw ValidationError("unknown schema '" + std::string(name) +
                          "' (expected research, draft, transcript_facts, score or price_decision)");
}

ContractReport check_contract(const SchemaDoc& producer, const std::vector<std::string>& consumer_paths) {
    ContractReport report;
    for (const auto& path : consumer_paths) {
        const SchemaNode* node = &producer.root();
        std::string failure;
        for (auto seg : split_path(path)) {
            bool into_items = false;
            if (seg.size() > 2 && seg.compare(seg.size() - 2, 2, "[]") == 0) {
                seg.resize(seg.size() - 2);
                into_items = true;
            }
            if (seg.empty()) {
                failure = "empty path segment";
                break;
            }
            if (node->type != Type::Object) {
                failure = "'" + seg + "' is below a non-object";
                break;
            }
            const SchemaNode* next = node->property(seg);
            if (!next) {
                failure = "'" + seg + "' is not declared";
                break;
            }
            if (!node->is_required(seg)) {
                failure = "'" + seg + "' is optional";
                break;
            }
            node = next;
            if (into_items) {
                if (node->type != Type::Array) {
                    failure = "'" + seg + "' is not an array";
                    break;
                }
                node = node->items.get();
            }
        }
        if (!failure.empty()) {
            report.ok = false;
            report.failures.emplace_back(path, failure);
        }
    }
    return report;
}

const std::vector<std::string>& draft_consumer_paths() {
    static const std::vector<std::string> paths = {
        "client_revenue.annual_revenue", "client_revenue.currency", "client_revenue.source",
        "client_revenue.confidence",     "company_summary",         "prospect_summary"};
    return paths;
}

ResearchFindings findings_from_json(const json& j) {
    require_valid(j, research_schema(), "research findings");
    const auto& rev = j.at("client_revenue");
    ResearchFindings f;
    f.client_revenue.annual_revenue = rev.at("annual_revenue").get<double>();
    f.client_revenue.currency = text_field(rev, "currency");
    f.client_revenue.source = text_field(rev, "source");
    f.client_revenue.confidence = text_field(rev, "confidence");
    f.client_revenue.year = text_field(rev, "year");
    f.company_summary = text_field(j, "company_summary");
    f.prospect_summary = text_field(j, "prospect_summary");
    return f;
}

json to_json(const ResearchFindings& f) {
    json j = {{"client_revenue",
               {{"annual_revenue", f.client_revenue.annual_revenue},
                {"currency", f.client_revenue.currency},
                {"source", f.client_revenue.source},
                {"confidence", f.client_revenue.confidence},
                {"year", f.client_revenue.year}}},
              {"company_summary", f.company_summary},
              {"prospect_summary", f.prospect_summary}};
    require_valid(j, research_schema(), "research findings");
    return j;
}

TranscriptFacts facts_from_json(const json& j) {
    require_valid(j, transcript_facts_schema(), "transcript facts");
    TranscriptFacts f;
    f.prospect_name = text_field(j, "prospect_name");
    f.company_name = text_field(j, "company_name");
    f.phase = static_cast<int>(j.at("phase").get<double>());
    f.est_duration_weeks = static_cast<int>(j.at("est_duration_weeks").get<double>());
    f.pain_severity_score = static_cast<int>(j.at("pain_severity_score").get<double>());
    f.integration_complexity = static_cast<int>(j.at("integration_complexity").get<double>());
    f.tech_stack = dataset::parse_tech_stack(text_field(j, "tech_stack"));
    return f;
}

json to_json(const TranscriptFacts& f) {
    return {{"prospect_name", f.prospect_name},
            {"company_name", f.company_name},
            {"phase", f.phase},
            {"est_duration_weeks", f.est_duration_weeks},
            {"pain_severity_score", f.pain_severity_score},
            {"integration_complexity", f.integration_complexity},
            {"tech_stack", dataset::to_string(f.tech_stack)}};
}

ExtractedFeatures extract_features(const ResearchFindings& findings, const TranscriptFacts& facts) {
    if (findings.client_revenue.currency != "USD")
        throw ValidationError("client_revenue.currency is \"" + findings.client_revenue.currency +
                              "\"; currency conversion out of scope (USD only)");
    ExtractedFeatures out;
    out.features.client_revenue = findings.client_revenue.annual_revenue;
    out.features.est_duration_weeks = facts.est_duration_weeks;
    out.features.pain_severity_score = facts.pain_severity_score;
    out.features.integration_complexity = facts.integration_complexity;
    out.features.phase = facts.phase;
    out.features.tech_stack = facts.tech_stack;
    dataset::validate(out.features);
    out.revenue_confidence = findings.client_revenue.confidence;
    out.revenue_source = findings.client_revenue.source;
    return out;
}

ValidationReport validate_proposal(const json& proposal) {
    auto r = validate(proposal, draft_schema());
    if (!r.valid()) return r;
    const auto& p = proposal.at("pricing_section");
    const double total = p.at("total_price").get<double>();
    const double deposit = p.at("deposit_amount").get<double>();
    const double final_amount = p.at("final_amount").get<double>();
    if (std::abs(deposit + final_amount - total) > 0.005) {
        std::ostringstream os;
        os.precision(12);
        os << "deposit_amount + final_amount = " << deposit + final_amount << " but total_price = " << total;
        r.violations.push_back({"pricing_section", "consistency", os.str()});
    }
    return r;
}

} // namespace mlat::schema
