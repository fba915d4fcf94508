#include <algorithm>
#include <optional>
#include <regex>

#include "mlat/format.hpp"
#include "mlat/runtime.hpp"

namespace mlat::runtime {

using nlohmann::json;

namespace {

const std::regex& placeholder_re() {
    static const std::regex re(R"(\{\{\s*([A-Za-z0-9_.\[\]]+)\s*\}\})");
    return re;
}

const json* resolve(const json& doc, const std::string& path) {
    const json* cur = &doc;
    std::size_t start = 0;
    while (start <= path.size()) {
        const auto dot = path.find('.', start);
        const auto seg = path.substr(start, dot == std::string::npos ? std::string::npos : dot - start);
        if (seg.empty() || !cur->is_object()) return nullptr;
        const auto it = cur->find(seg);
        if (it == cur->end()) return nullptr;
        cur = &*it;
        if (dot == std::string::npos) break;
        start = dot + 1;
    }
    return cur;
}

std::string bullets(const json& arr) {
    std::string out;
    for (std::size_t i = 0; i < arr.size(); ++i) {
        if (i) out += '\n';
        out += "- " + (arr[i].is_string() ? arr[i].get<std::string>() : arr[i].dump());
    }
    return out;
}

std::string week_blocks(const json& weeks) {
    std::string out;
    for (std::size_t i = 0; i < weeks.size(); ++i) {
        const auto& w = weeks[i];
        if (i) out += "\n\n";
        out += "Week " + w.at("week").get<std::string>() + ": " + w.at("title").get<std::string>() + "\n";
        out += "Focus: " + w.at("focus_goal").get<std::string>() + "\n";
        out += "Activities:\n" + bullets(w.at("activities")) + "\n";
        out += "Deliverables:\n" + bullets(w.at("deliverables"));
    }
    return out;
}

std::optional<std::string> render_value(const std::string& path, const json& v) {
    if (v.is_string()) return v.get<std::string>();
    if (v.is_number()) return usd(v.get<double>(), 2);
    if (v.is_array()) {
        if (path == "timeline_breakdown") return week_blocks(v);
        for (const auto& item : v)
            if (!item.is_string()) return std::nullopt;
        return bullets(v);
    }
    return std::nullopt;
}

} // namespace

std::vector<std::string> placeholders(const std::string& tmpl) {
    std::vector<std::string> out;
    for (std::sregex_iterator it(tmpl.begin(), tmpl.end(), placeholder_re()), end; it != end; ++it)
        out.push_back((*it)[1].str());
    return out;
}

std::string render_proposal(const json& proposal, const std::string& tmpl) {
    std::vector<std::string> unknown;
    std::string out;
    auto last = tmpl.cbegin();
    for (std::sregex_iterator it(tmpl.begin(), tmpl.end(), placeholder_re()), end; it != end; ++it) {
        const auto& m = *it;
        out.append(last, m[0].first);
        last = m[0].second;
        const auto path = m[1].str();
        const json* v = resolve(proposal, path);
        std::optional<std::string> text = v ? render_value(path, *v) : std::nullopt;
        if (!text) {
            if (std::find(unknown.begin(), unknown.end(), path) == unknown.end()) unknown.push_back(path);
            continue;
        }
        out += *text;
    }
    out.append(last, tmpl.cend());
    if (!unknown.empty()) {
        std::string list;
        for (const auto& u : unknown) list += (list.empty() ? "" : ", ") + u;
        throw ValidationError("template placeholders with no matching field: " + list);
    }
    // Substituted text comes from the proposal, so a leftover here means a
    // field value itself looked like a placeholder.
    if (std::regex_search(out, placeholder_re()))
        throw std::logic_error("rendered document still contains a placeholder");
    return out;
}

} // namespace mlat::runtime
