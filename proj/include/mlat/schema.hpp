#pragma once

#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "mlat/dataset.hpp"
#include "mlat/error.hpp"

namespace mlat::schema {

/// The schema itself is malformed (as opposed to a document failing it).
class SchemaDefinitionError : public Error {
public:
    using Error::Error;
};

enum class Type { Object, Array, String, Number, Integer };
std::string_view to_string(Type t);

struct SchemaNode {
    Type type = Type::Object;
    std::vector<std::pair<std::string, std::shared_ptr<const SchemaNode>>> properties; // declaration order
    std::vector<std::string> required;
    std::shared_ptr<const SchemaNode> items;
    std::optional<std::vector<nlohmann::json>> enum_values;

    const SchemaNode* property(std::string_view name) const;
    bool is_required(std::string_view name) const;
};

/// Parsed schema in the supported subset: type (object, array, string,
/// number, integer), properties, required, items and enum. "title" and
/// "description" are tolerated; any other keyword is a SchemaDefinitionError.
class SchemaDoc {
public:
    static SchemaDoc parse(const nlohmann::json& j);
    static SchemaDoc parse(std::string_view text);

    const SchemaNode& root() const { return *root_; }
    const nlohmann::json& source() const { return source_; }

private:
    std::shared_ptr<const SchemaNode> root_;
    nlohmann::json source_;
};

struct Violation {
    std::string path; // "client_revenue.source", "timeline_breakdown[0].week", "$" for the root
    std::string rule; // type, required, enum, consistency
    std::string detail;

    bool operator==(const Violation&) const = default;
};

struct ValidationReport {
    std::vector<Violation> violations;

    bool valid() const { return violations.empty(); }
    /// "path: rule (detail); ..." on one line.
    std::string summary() const;
};

/// Depth-first; every violation is collected.
ValidationReport validate(const nlohmann::json& document, const SchemaDoc& schema);

/// A document failed its schema. Carries the full report.
class ContractViolation : public ValidationError {
public:
    ContractViolation(const std::string& what, ValidationReport report)
        : ValidationError(what + ": " + report.summary()), report_(std::move(report)) {}
    const ValidationReport& report() const { return report_; }

private:
    ValidationReport report_;
};

/// Throws ContractViolation prefixed with `context` when invalid.
void require_valid(const nlohmann::json& document, const SchemaDoc& schema, const std::string& context);

// Embedded schemas ----------------------------------------------------------

/// Exact text of the shipped schema files.
std::string_view research_schema_text();
std::string_view draft_schema_text();
std::string_view transcript_facts_schema_text();
std::string_view score_schema_text();
std::string_view price_decision_schema_text();

/// Parsed once on first use.
const SchemaDoc& research_schema();
const SchemaDoc& draft_schema();
const SchemaDoc& transcript_facts_schema();
const SchemaDoc& score_schema();
const SchemaDoc& price_decision_schema();

/// Text by name: research, draft, transcript_facts, score, price_decision.
std::string_view schema_text(std::string_view name);

// Contracts ----------------------------------------------------------------

struct ContractReport {
    bool ok = true;
    std::vector<std::pair<std::string, std::string>> failures; // path, reason
};

/// Each consumer path ("a.b", "a[].b") must resolve in the producer schema
/// with every step listed as required.
ContractReport check_contract(const SchemaDoc& producer, const std::vector<std::string>& consumer_paths);

/// Fields the draft side reads from research output.
const std::vector<std::string>& draft_consumer_paths();

// Typed documents ------------------------------------------------------------

struct RevenueFinding {
    double annual_revenue = 0.0;
    std::string currency;
    std::string source;
    std::string confidence; // low, medium, high
    std::string year;
};

struct ResearchFindings {
    RevenueFinding client_revenue;
    std::string company_summary;
    std::string prospect_summary;
};

/// Both directions validate against the research schema.
ResearchFindings findings_from_json(const nlohmann::json& j);
nlohmann::json to_json(const ResearchFindings& f);

struct TranscriptFacts {
    std::string prospect_name;
    std::string company_name;
    int phase = 1;
    int est_duration_weeks = 0;
    int pain_severity_score = 0;
    int integration_complexity = 0;
    dataset::TechStack tech_stack = dataset::TechStack::Custom;
};

TranscriptFacts facts_from_json(const nlohmann::json& j);
nlohmann::json to_json(const TranscriptFacts& f);

struct ExtractedFeatures {
    dataset::RawFeatures features;
    std::string revenue_confidence; // metadata only
    std::string revenue_source;
};

/// Revenue from the research output, everything else from the transcript.
/// Non-USD revenue and out-of-range scores raise ValidationError.
ExtractedFeatures extract_features(const ResearchFindings& findings, const TranscriptFacts& facts);

/// Draft-schema validation plus deposit_amount + final_amount == total_price
/// (to within half a cent).
ValidationReport validate_proposal(const nlohmann::json& proposal);

} // namespace mlat::schema
