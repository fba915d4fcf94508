#include "mlat/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include <nlohmann/json.hpp>

#include "mlat/error.hpp"
#include "mlat/format.hpp"
#include "mlat/rng.hpp"

namespace mlat::dataset {

namespace {

constexpr std::array<std::string_view, 3> kTechLiterals = {"no_code", "low_code", "custom"};

std::string range_message(std::string_view field, double value, int lo, int hi) {
    std::ostringstream os;
    os << field << " = " << value << " outside [" << lo << "," << hi << "]";
    return os.str();
}

void check_int_range(std::string_view field, int v, int lo, int hi) {
    if (v < lo || v > hi) throw ValidationError(range_message(field, v, lo, hi));
}

std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(',', start);
        if (pos == std::string_view::npos) {
            out.push_back(line.substr(start));
            break;
        }
        out.push_back(line.substr(start, pos - start));
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view field, std::string_view text) {
    const std::string s(text);
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        throw ValidationError(std::string(field) + ": not a number: '" + s + "'");
    }
    if (used != s.size() || !std::isfinite(v))
        throw ValidationError(std::string(field) + ": not a finite number: '" + s + "'");
    return v;
}

int parse_int(std::string_view field, std::string_view text) {
    const double v = parse_double(field, text);
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw ValidationError(std::string(field) + ": not an integer: '" + std::string(text) + "'");
    return static_cast<int>(v);
}

std::string format_number(double v) {
    std::ostringstream os;
    os.precision(17);
    if (v == std::floor(v) && std::abs(v) < 1e15) {
        os << static_cast<long long>(v);
    } else {
        os << v;
    }
    return os.str();
}

double sample_moments(Rng& rng, const FeatureMoments& m) {
    double v = 0.0;
    if (m.shape == Shape::LogNormal) {
        const double cv2 = (m.std / m.mean) * (m.std / m.mean);
        const double sigma2 = std::log1p(cv2);
        const double mu = std::log(m.mean) - 0.5 * sigma2;
        v = std::exp(mu + std::sqrt(sigma2) * rng.normal());
    } else {
        v = m.mean + m.std * rng.normal();
    }
    return std::clamp(v, m.min, m.max);
}

int sample_int(Rng& rng, const FeatureMoments& m) {
    return static_cast<int>(std::lround(sample_moments(rng, m)));
}

TechStack sample_tech(Rng& rng, const std::array<double, 3>& probs) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        acc += probs[i];
        if (u < acc) return static_cast<TechStack>(i);
    }
    return TechStack::Custom;
}

constexpr std::array<std::string_view, 22> kIndustries = {
    "agriculture", "automotive",   "construction", "consulting",   "ecommerce",
    "education",   "energy",       "finance",      "fitness",      "healthcare",
    "hospitality", "insurance",    "legal",        "logistics",    "manufacturing",
    "marketing",   "media",        "nonprofit",    "real_estate",  "retail",
    "saas",        "telecom"};

void check_moments(std::string_view name, const FeatureMoments& m) {
    if (!(m.min < m.max))
        throw ValidationError(std::string(name) + ": min must be < max");
    if (m.mean < m.min || m.mean > m.max)
        throw ValidationError(std::string(name) + ": mean outside [min,max]");
    if (!(m.std >= 0.0)) throw ValidationError(std::string(name) + ": std must be >= 0");
    if (m.shape == Shape::LogNormal && !(m.mean > 0.0))
        throw ValidationError(std::string(name) + ": log-normal mean must be > 0");
}

} // namespace

std::string_view to_string(TechStack t) { return kTechLiterals[static_cast<std::size_t>(t)]; }

std::string_view to_string(Provenance p) { return p == Provenance::Real ? "real" : "synthetic"; }

TechStack parse_tech_stack(std::string_view s) {
    for (std::size_t i = 0; i < kTechLiterals.size(); ++i)
        if (s == kTechLiterals[i]) return static_cast<TechStack>(i);
    throw ValidationError("tech_stack: unknown value '" + std::string(s) +
                          "' (valid: no_code, low_code, custom)");
}

Provenance parse_provenance(std::string_view s) {
    if (s == "real") return Provenance::Real;
    if (s == "synthetic") return Provenance::Synthetic;
    throw ValidationError("provenance: unknown value '" + std::string(s) +
                          "' (valid: real, synthetic)");
}

void validate(const RawFeatures& f) {
    if (!std::isfinite(f.client_revenue) || f.client_revenue <= 0.0)
        throw ValidationError("client_revenue must be a positive finite number");
    if (f.est_duration_weeks < 1)
        throw ValidationError("est_duration_weeks must be >= 1");
    check_int_range("pain_severity_score", f.pain_severity_score, 1, 5);
    check_int_range("integration_complexity", f.integration_complexity, 1, 5);
    check_int_range("phase", f.phase, 1, 4);
    const auto t = static_cast<int>(f.tech_stack);
    if (t < 0 || t > 2) throw ValidationError("tech_stack: invalid enum value");
}

FeatureVector encode_features(const RawFeatures& f) {
    validate(f);
    FeatureVector v;
    v.values = {f.client_revenue,
                static_cast<double>(f.est_duration_weeks),
                static_cast<double>(f.pain_severity_score),
                static_cast<double>(f.integration_complexity),
                static_cast<double>(f.phase),
                0.0,
                0.0,
                0.0};
    v.values[5 + static_cast<std::size_t>(f.tech_stack)] = 1.0;
    return v;
}

// CSV ----------------------------------------------------------------------

Dataset read_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw SchemaError("empty CSV: missing header row");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);

    const auto header = split_commas(line);
    const auto expected = split_commas(kCsvHeader);
    for (const auto& col : expected) {
        if (std::find(header.begin(), header.end(), col) == header.end())
            throw SchemaError("missing column '" + std::string(col) + "'");
    }
    for (const auto& col : header) {
        if (std::find(expected.begin(), expected.end(), col) == expected.end())
            throw SchemaError("unknown column '" + std::string(col) + "'");
    }
    if (header != expected) throw SchemaError("columns out of canonical order: " + line);

    Dataset data;
    std::size_t line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto cells = split_commas(line);
        const std::string where = "row " + std::to_string(line_no) + ": ";
        if (cells.size() != expected.size())
            throw SchemaError(where + "expected " + std::to_string(expected.size()) +
                              " fields, got " + std::to_string(cells.size()));
        try {
            DealRecord r;
            r.record_id = std::string(cells[0]);
            r.client_group = std::string(cells[1]);
            r.industry = std::string(cells[2]);
            if (r.record_id.empty()) throw ValidationError("record_id is empty");
            if (r.client_group.empty()) throw ValidationError("client_group is empty");
            r.features.client_revenue = parse_double("client_revenue", cells[3]);
            r.features.est_duration_weeks = parse_int("est_duration_weeks", cells[4]);
            r.features.pain_severity_score = parse_int("pain_severity_score", cells[5]);
            r.features.integration_complexity = parse_int("integration_complexity", cells[6]);
            r.features.phase = parse_int("phase", cells[7]);
            r.features.tech_stack = parse_tech_stack(cells[8]);
            r.price = parse_double("price", cells[9]);
            r.provenance = parse_provenance(cells[10]);
            validate(r.features);
            if (!(r.price > 0.0)) throw ValidationError("price must be > 0");
            data.push_back(std::move(r));
        } catch (const SchemaError&) {
            throw;
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
    }
    validate(data);
    return data;
}

Dataset load_dataset(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open dataset: " + path.string());
    return read_csv(in);
}

void write_csv(std::ostream& out, const Dataset& data) {
    out << kCsvHeader << '\n';
    for (const auto& r : data) {
        out << r.record_id << ',' << r.client_group << ',' << r.industry << ','
            << format_number(r.features.client_revenue) << ',' << r.features.est_duration_weeks
            << ',' << r.features.pain_severity_score << ',' << r.features.integration_complexity
            << ',' << r.features.phase << ',' << to_string(r.features.tech_stack) << ','
            << format_number(r.price) << ',' << to_string(r.provenance) << '\n';
    }
}

void save_dataset(const std::filesystem::path& path, const Dataset& data) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write dataset: " + path.string());
    write_csv(out, data);
}

void validate(const Dataset& data) {
    std::unordered_set<std::string> ids;
    std::unordered_map<std::string, Provenance> group_origin;
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& r = data[i];
        const std::string where = "record " + r.record_id + ": ";
        try {
            validate(r.features);
        } catch (const ValidationError& e) {
            throw ValidationError(where + e.what());
        }
        if (!(r.price > 0.0) || !std::isfinite(r.price))
            throw ValidationError(where + "price must be a positive finite number");
        if (!ids.insert(r.record_id).second)
            throw ValidationError("duplicate record_id '" + r.record_id + "'");
        const auto [it, inserted] = group_origin.emplace(r.client_group, r.provenance);
        if (!inserted && it->second != r.provenance)
            throw ValidationError("client_group '" + r.client_group +
                                  "' mixes real and synthetic records");
    }
}

// Summary ------------------------------------------------------------------

const ColumnStats& DatasetSummary::column(std::string_view name) const {
    for (const auto& c : columns)
        if (c.name == name) return c;
    throw Error("no summary column '" + std::string(name) + "'");
}

ColumnStats column_stats(std::string name, const std::vector<double>& values) {
    if (values.empty()) throw ValidationError("cannot summarize an empty column");
    ColumnStats s;
    s.name = std::move(name);
    const auto n = static_cast<double>(values.size());
    s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.std = std::sqrt(ss / n);
    const auto [lo, hi] = std::minmax_element(values.begin(), values.end());
    s.min = *lo;
    s.max = *hi;
    // Summation rounding can push the mean a hair outside [min, max] on constant columns.
    s.mean = std::clamp(s.mean, s.min, s.max);
    return s;
}

DatasetSummary summarize(const Dataset& data) {
    if (data.empty()) throw ValidationError("cannot summarize an empty dataset");
    DatasetSummary s;
    s.n = data.size();
    std::vector<double> rev, dur, pain, cx, price, phase;
    for (const auto& r : data) {
        (r.provenance == Provenance::Real ? s.n_real : s.n_synthetic) += 1;
        rev.push_back(r.features.client_revenue);
        dur.push_back(r.features.est_duration_weeks);
        pain.push_back(r.features.pain_severity_score);
        cx.push_back(r.features.integration_complexity);
        price.push_back(r.price);
        phase.push_back(r.features.phase);
    }
    s.n_groups = count_groups(data);
    s.columns.push_back(column_stats("client_revenue", rev));
    s.columns.push_back(column_stats("est_duration_weeks", dur));
    s.columns.push_back(column_stats("pain_severity_score", pain));
    s.columns.push_back(column_stats("integration_complexity", cx));
    s.columns.push_back(column_stats("price", price));
    s.columns.push_back(column_stats("phase", phase));
    return s;
}

nlohmann::json to_json(const DatasetSummary& s) {
    nlohmann::json cols = nlohmann::json::array();
    for (const auto& c : s.columns)
        cols.push_back({{"name", c.name}, {"mean", c.mean}, {"std", c.std}, {"min", c.min}, {"max", c.max}});
    return {{"n", s.n},
            {"n_real", s.n_real},
            {"n_synthetic", s.n_synthetic},
            {"n_groups", s.n_groups},
            {"columns", cols}};
}

std::vector<double> prices(const Dataset& data) {
    std::vector<double> out;
    out.reserve(data.size());
    for (const auto& r : data) out.push_back(r.price);
    return out;
}

std::size_t count_groups(const Dataset& data) {
    std::set<std::string_view> groups;
    for (const auto& r : data) groups.insert(r.client_group);
    return groups.size();
}

// Synthetic generation -----------------------------------------------------

double latent_price(const LatentPricing& pricing, const RawFeatures& f) {
    if (const auto* lin = std::get_if<LinearPricing>(&pricing)) {
        const auto x = encode_features(f);
        double p = lin->intercept;
        for (std::size_t i = 0; i < kNumFeatures; ++i) p += lin->coefficients[i] * x.values[i];
        return p;
    }
    const auto& m = std::get<MultiplicativePricing>(pricing);
    std::size_t bracket = 0;
    while (bracket < m.revenue_breaks.size() && f.client_revenue >= m.revenue_breaks[bracket]) ++bracket;
    const double revenue_mult =
        m.revenue_multipliers.empty() ? 1.0 : m.revenue_multipliers.at(bracket);
    return m.base * std::pow(m.complexity_ratio, f.integration_complexity - 3) *
           std::pow(m.pain_ratio, f.pain_severity_score - 3) *
           std::pow(f.est_duration_weeks / 8.0, m.duration_exponent) * revenue_mult *
           m.tech_multipliers[static_cast<std::size_t>(f.tech_stack)] *
           std::pow(m.phase_ratio, f.phase - 1);
}

GeneratorSpec GeneratorSpec::defaults() {
    GeneratorSpec s;
    s.client_revenue = {8'105'790.0, 30'768'920.0, 100'000.0, 250'000'000.0, Shape::LogNormal};
    s.est_duration_weeks = {8.4, 4.5, 3.0, 20.0, Shape::LogNormal};
    s.pain_severity_score = {3.6, 0.9, 2.0, 5.0, Shape::Normal};
    s.integration_complexity = {3.9, 0.9, 2.0, 5.0, Shape::Normal};
    s.phase = {1.6, 0.7, 1.0, 4.0, Shape::Normal};
    s.price = {16'309.0, 11'485.0, 2'738.0, 40'000.0, Shape::Normal};
    s.tech_stack_probs = {0.2, 0.3, 0.5};
    MultiplicativePricing m;
    m.base = 8'600.0;
    m.complexity_ratio = 1.75;
    m.pain_ratio = 1.45;
    m.duration_exponent = 0.3;
    m.revenue_breaks = {3'000'000.0};
    m.revenue_multipliers = {0.6, 1.6};
    m.tech_multipliers = {0.8, 0.9, 1.0};
    m.phase_ratio = 1.0;
    s.pricing = m;
    s.noise_std = 800.0;
    s.multi_phase_clients = 6;
    s.phases_per_client = 3;
    s.seed = 16;
    return s;
}

void validate(const GeneratorSpec& spec, std::size_t n) {
    if (n < 1) throw ValidationError("generator: n must be >= 1");
    check_moments("client_revenue", spec.client_revenue);
    check_moments("est_duration_weeks", spec.est_duration_weeks);
    check_moments("pain_severity_score", spec.pain_severity_score);
    check_moments("integration_complexity", spec.integration_complexity);
    check_moments("phase", spec.phase);
    check_moments("price", spec.price);
    if (spec.client_revenue.min <= 0.0) throw ValidationError("client_revenue: min must be > 0");
    if (spec.est_duration_weeks.min < 1.0) throw ValidationError("est_duration_weeks: min must be >= 1");
    if (spec.pain_severity_score.min < 1.0 || spec.pain_severity_score.max > 5.0)
        throw ValidationError("pain_severity_score: range must lie in [1,5]");
    if (spec.integration_complexity.min < 1.0 || spec.integration_complexity.max > 5.0)
        throw ValidationError("integration_complexity: range must lie in [1,5]");
    if (spec.phase.min < 1.0 || spec.phase.max > 4.0)
        throw ValidationError("phase: range must lie in [1,4]");
    if (spec.price.min <= 0.0) throw ValidationError("price: min must be > 0");
    double total = 0.0;
    for (double p : spec.tech_stack_probs) {
        if (!(p >= 0.0)) throw ValidationError("tech_stack_probs must be non-negative");
        total += p;
    }
    if (std::abs(total - 1.0) > 1e-9) throw ValidationError("tech_stack_probs must sum to 1");
    if (!(spec.noise_std >= 0.0)) throw ValidationError("noise_std must be >= 0");
    if (spec.multi_phase_clients < 0) throw ValidationError("multi_phase_clients must be >= 0");
    if (spec.multi_phase_clients > 0 && (spec.phases_per_client < 2 || spec.phases_per_client > 4))
        throw ValidationError("phases_per_client must be in [2,4]");
    if (static_cast<std::size_t>(spec.multi_phase_clients) *
            static_cast<std::size_t>(std::max(spec.phases_per_client, 1)) > n &&
        spec.multi_phase_clients > 0)
        throw ValidationError("multi-phase group structure needs more records than n");
    if (const auto* m = std::get_if<MultiplicativePricing>(&spec.pricing)) {
        if (!(m->base > 0.0)) throw ValidationError("pricing.base must be > 0");
        if (m->revenue_multipliers.size() != m->revenue_breaks.size() + 1 &&
            !m->revenue_multipliers.empty())
            throw ValidationError("pricing.revenue_multipliers needs revenue_breaks.size()+1 entries");
        if (!std::is_sorted(m->revenue_breaks.begin(), m->revenue_breaks.end()))
            throw ValidationError("pricing.revenue_breaks must be ascending");
    }
}

Dataset generate_synthetic(const GeneratorSpec& spec, std::size_t n) {
    validate(spec, n);
    Rng rng(spec.seed);
    Dataset out;
    out.reserve(n);

    const auto grouped = static_cast<std::size_t>(spec.multi_phase_clients) *
                         static_cast<std::size_t>(spec.phases_per_client);
    std::size_t group_no = 0;
    auto group_name = [&](std::size_t g) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%s-g%03zu", spec.id_prefix.c_str(), g);
        return std::string(buf);
    };

    DealRecord client{}; // shared client attributes inside a multi-phase group
    for (std::size_t i = 0; i < n; ++i) {
        DealRecord r;
        char id[32];
        std::snprintf(id, sizeof id, "%s-%04zu", spec.id_prefix.c_str(), i + 1);
        r.record_id = id;
        r.provenance = Provenance::Synthetic;

        const bool in_multi = spec.multi_phase_clients > 0 && i < grouped;
        const int phase_in_group = in_multi ? static_cast<int>(i % spec.phases_per_client) + 1 : 0;
        if (!in_multi || phase_in_group == 1) {
            client.client_group = group_name(++group_no);
            client.industry = std::string(kIndustries[rng.below(kIndustries.size())]);
            client.features.client_revenue = std::round(sample_moments(rng, spec.client_revenue));
            client.features.tech_stack = sample_tech(rng, spec.tech_stack_probs);
        }
        r.client_group = client.client_group;
        r.industry = client.industry;
        r.features.client_revenue = client.features.client_revenue;
        r.features.tech_stack = client.features.tech_stack;
        r.features.est_duration_weeks = sample_int(rng, spec.est_duration_weeks);
        r.features.pain_severity_score = sample_int(rng, spec.pain_severity_score);
        r.features.integration_complexity = sample_int(rng, spec.integration_complexity);
        const int sampled_phase = sample_int(rng, spec.phase);
        r.features.phase = in_multi ? phase_in_group : sampled_phase;

        const double noise = rng.normal() * spec.noise_std;
        const double latent = latent_price(spec.pricing, r.features);
        r.price = std::clamp(latent + noise, spec.price.min, spec.price.max);
        if (spec.noise_std > 0.0) r.price = std::round(r.price);
        out.push_back(std::move(r));
    }
    return out;
}

// JSON ---------------------------------------------------------------------

namespace {

nlohmann::json moments_json(const FeatureMoments& m) {
    return {{"mean", m.mean},
            {"std", m.std},
            {"min", m.min},
            {"max", m.max},
            {"shape", m.shape == Shape::LogNormal ? "lognormal" : "normal"}};
}

void apply_moments(const nlohmann::json& j, FeatureMoments& m) {
    if (j.contains("mean")) m.mean = j.at("mean").get<double>();
    if (j.contains("std")) m.std = j.at("std").get<double>();
    if (j.contains("min")) m.min = j.at("min").get<double>();
    if (j.contains("max")) m.max = j.at("max").get<double>();
    if (j.contains("shape")) {
        const auto s = j.at("shape").get<std::string>();
        if (s == "lognormal") m.shape = Shape::LogNormal;
        else if (s == "normal") m.shape = Shape::Normal;
        else throw ValidationError("shape must be 'normal' or 'lognormal'");
    }
}

} // namespace

nlohmann::json to_json(const GeneratorSpec& spec) {
    nlohmann::json j;
    j["client_revenue"] = moments_json(spec.client_revenue);
    j["est_duration_weeks"] = moments_json(spec.est_duration_weeks);
    j["pain_severity_score"] = moments_json(spec.pain_severity_score);
    j["integration_complexity"] = moments_json(spec.integration_complexity);
    j["phase"] = moments_json(spec.phase);
    j["price"] = moments_json(spec.price);
    j["tech_stack_probs"] = spec.tech_stack_probs;
    if (const auto* m = std::get_if<MultiplicativePricing>(&spec.pricing)) {
        j["pricing"] = {{"kind", "multiplicative"},
                        {"base", m->base},
                        {"complexity_ratio", m->complexity_ratio},
                        {"pain_ratio", m->pain_ratio},
                        {"duration_exponent", m->duration_exponent},
                        {"revenue_breaks", m->revenue_breaks},
                        {"revenue_multipliers", m->revenue_multipliers},
                        {"tech_multipliers", m->tech_multipliers},
                        {"phase_ratio", m->phase_ratio}};
    } else {
        const auto& l = std::get<LinearPricing>(spec.pricing);
        j["pricing"] = {{"kind", "linear"}, {"intercept", l.intercept}, {"coefficients", l.coefficients}};
    }
    j["noise_std"] = spec.noise_std;
    j["multi_phase_clients"] = spec.multi_phase_clients;
    j["phases_per_client"] = spec.phases_per_client;
    j["seed"] = spec.seed;
    j["id_prefix"] = spec.id_prefix;
    return j;
}

GeneratorSpec spec_from_json(const nlohmann::json& o, GeneratorSpec s) {
    if (!o.is_object()) throw SchemaError("generator spec must be a JSON object");
    static const std::set<std::string> known = {
        "client_revenue", "est_duration_weeks", "pain_severity_score", "integration_complexity",
        "phase", "price", "tech_stack_probs", "pricing", "noise_std", "multi_phase_clients",
        "phases_per_client", "seed", "id_prefix"};
    for (const auto& [k, _] : o.items())
        if (!known.count(k)) throw SchemaError("generator spec: unknown key '" + k + "'");
    try {
        if (o.contains("client_revenue")) apply_moments(o["client_revenue"], s.client_revenue);
        if (o.contains("est_duration_weeks")) apply_moments(o["est_duration_weeks"], s.est_duration_weeks);
        if (o.contains("pain_severity_score")) apply_moments(o["pain_severity_score"], s.pain_severity_score);
        if (o.contains("integration_complexity"))
            apply_moments(o["integration_complexity"], s.integration_complexity);
        if (o.contains("phase")) apply_moments(o["phase"], s.phase);
        if (o.contains("price")) apply_moments(o["price"], s.price);
        if (o.contains("tech_stack_probs")) s.tech_stack_probs = o["tech_stack_probs"].get<std::array<double, 3>>();
        if (o.contains("noise_std")) s.noise_std = o["noise_std"].get<double>();
        if (o.contains("multi_phase_clients")) s.multi_phase_clients = o["multi_phase_clients"].get<int>();
        if (o.contains("phases_per_client")) s.phases_per_client = o["phases_per_client"].get<int>();
        if (o.contains("seed")) s.seed = o["seed"].get<std::uint64_t>();
        if (o.contains("id_prefix")) s.id_prefix = o["id_prefix"].get<std::string>();
        if (o.contains("pricing")) {
            const auto& p = o["pricing"];
            const auto kind = p.value("kind", std::string(std::holds_alternative<LinearPricing>(s.pricing)
                                                              ? "linear"
                                                              : "multiplicative"));
            if (kind == "linear") {
                LinearPricing l = std::holds_alternative<LinearPricing>(s.pricing)
                                      ? std::get<LinearPricing>(s.pricing)
                                      : LinearPricing{};
                if (p.contains("intercept")) l.intercept = p["intercept"].get<double>();
                if (p.contains("coefficients"))
                    l.coefficients = p["coefficients"].get<std::array<double, kNumFeatures>>();
                s.pricing = l;
            } else if (kind == "multiplicative") {
                MultiplicativePricing m = std::holds_alternative<MultiplicativePricing>(s.pricing)
                                              ? std::get<MultiplicativePricing>(s.pricing)
                                              : MultiplicativePricing{};
                if (p.contains("base")) m.base = p["base"].get<double>();
                if (p.contains("complexity_ratio")) m.complexity_ratio = p["complexity_ratio"].get<double>();
                if (p.contains("pain_ratio")) m.pain_ratio = p["pain_ratio"].get<double>();
                if (p.contains("duration_exponent")) m.duration_exponent = p["duration_exponent"].get<double>();
                if (p.contains("revenue_breaks")) m.revenue_breaks = p["revenue_breaks"].get<std::vector<double>>();
                if (p.contains("revenue_multipliers"))
                    m.revenue_multipliers = p["revenue_multipliers"].get<std::vector<double>>();
                if (p.contains("tech_multipliers"))
                    m.tech_multipliers = p["tech_multipliers"].get<std::array<double, 3>>();
                if (p.contains("phase_ratio")) m.phase_ratio = p["phase_ratio"].get<double>();
                s.pricing = m;
            } else {
                throw ValidationError("pricing.kind must be 'multiplicative' or 'linear'");
            }
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(std::string("generator spec: ") + e.what());
    }
    return s;
}

std::string render_summary(const DatasetSummary& s) {
    std::ostringstream os;
    os << "Dataset summary (N = " << s.n << ", " << s.n_real << " real, " << s.n_synthetic << " synthetic, "
       << s.n_groups << " client groups)\n";
    auto cell = [](const std::string& text, std::size_t w, bool right) {
        if (text.size() >= w) return text + " ";
        return right ? std::string(w - text.size(), ' ') + text : text + std::string(w - text.size(), ' ');
    };
    os << cell("Feature", 28, false) << cell("Mean", 14, true) << cell("Std", 14, true) << cell("Min", 14, true)
       << cell("Max", 14, true) << '\n';
    for (const auto& c : s.columns) {
        const bool money = c.name == "client_revenue" || c.name == "price";
        auto num = [&](double v, bool moment) {
            if (money) return usd(v).substr(1);
            return fixed(v, moment ? 1 : 0);
        };
        std::string label = c.name;
        if (c.name == "client_revenue") label += " ($)";
        if (c.name == "price") label += " ($, target)";
        os << cell(label, 28, false) << cell(num(c.mean, true), 14, true) << cell(num(c.std, true), 14, true)
           << cell(num(c.min, false), 14, true) << cell(num(c.max, false), 14, true) << '\n';
    }
    return os.str();
}

} // namespace mlat::dataset
