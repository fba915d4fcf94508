"""Writes one mutated copy of a golden document per file.

Each file: {"schema", "expect": {"path", "rule"}, "document"}.
"""
import copy
import json
import pathlib

here = pathlib.Path(__file__).resolve().parent
pipeline = here.parent.parent / "pipeline"
findings = json.loads((pipeline / "golden_findings.json").read_text())
proposal = json.loads((pipeline / "golden_proposal.json").read_text())


def research(name, path, rule, edit):
    doc = copy.deepcopy(findings)
    edit(doc)
    return name, "research", path, rule, doc


def draft(name, path, rule, edit):
    doc = copy.deepcopy(proposal)
    edit(doc)
    return name, "draft", path, rule, doc


def setter(keys, value):
    def edit(doc):
        cur = doc
        for k in keys[:-1]:
            cur = cur[k]
        cur[keys[-1]] = value
    return edit


def dropper(keys):
    def edit(doc):
        cur = doc
        for k in keys[:-1]:
            cur = cur[k]
        del cur[keys[-1]]
    return edit


cases = [
    research("research_missing_source", "client_revenue.source", "required", dropper(["client_revenue", "source"])),
    research("research_missing_company_summary", "company_summary", "required", dropper(["company_summary"])),
    research("research_confidence_certain", "client_revenue.confidence", "enum",
             setter(["client_revenue", "confidence"], "certain")),
    research("research_confidence_uppercase", "client_revenue.confidence", "enum",
             setter(["client_revenue", "confidence"], "HIGH")),
    research("research_revenue_string", "client_revenue.annual_revenue", "type",
             setter(["client_revenue", "annual_revenue"], "1M")),
    research("research_year_number", "client_revenue.year", "type", setter(["client_revenue", "year"], 2024)),
    draft("draft_missing_total_price", "pricing_section.total_price", "required",
          dropper(["pricing_section", "total_price"])),
    draft("draft_missing_week", "timeline_breakdown[0].week", "required", dropper(["timeline_breakdown", 0, "week"])),
    draft("draft_goal_not_string", "goals_list[1]", "type", setter(["goals_list", 1], 5)),
    draft("draft_activities_not_array", "timeline_breakdown[2].activities", "type",
          setter(["timeline_breakdown", 2, "activities"], "ERP write-back")),
    draft("draft_timeline_item_not_object", "timeline_breakdown[1]", "type", setter(["timeline_breakdown", 1], "weeks 3-5")),
    draft("draft_deposit_string", "pricing_section.deposit_amount", "type",
          setter(["pricing_section", "deposit_amount"], "half")),
]

for name, schema, path, rule, doc in cases:
    out = {"schema": schema, "expect": {"path": path, "rule": rule}, "document": doc}
    (here / f"{name}.json").write_text(json.dumps(out, indent=2) + "\n")
print(len(cases))
