#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include <nlohmann/json_fwd.hpp>

namespace mlat::dataset {

enum class TechStack { NoCode, LowCode, Custom };
enum class Provenance { Real, Synthetic };

std::string_view to_string(TechStack t);
std::string_view to_string(Provenance p);
/// Throws ValidationError listing the accepted literals.
TechStack parse_tech_stack(std::string_view s);
Provenance parse_provenance(std::string_view s);

inline constexpr std::size_t kNumFeatures = 8;

/// Encoded column order. The three trailing columns are the tech_stack one-hot block.
inline constexpr std::array<std::string_view, kNumFeatures> kFeatureNames = {
    "client_revenue",         "est_duration_weeks", "pain_severity_score",
    "integration_complexity", "phase",              "tech_no_code",
    "tech_low_code",          "tech_custom"};

/// Raw (pre-encoding) feature names, in request/CSV order.
inline constexpr std::array<std::string_view, 6> kRawFeatureNames = {
    "client_revenue", "est_duration_weeks",     "pain_severity_score",
    "integration_complexity", "phase", "tech_stack"};

struct RawFeatures {
    double client_revenue = 0.0;
    int est_duration_weeks = 0;
    int pain_severity_score = 0;
    int integration_complexity = 0;
    int phase = 0;
    TechStack tech_stack = TechStack::Custom;

    bool operator==(const RawFeatures&) const = default;
};

/// Throws ValidationError naming the first out-of-range field.
void validate(const RawFeatures& f);

struct DealRecord {
    std::string record_id;
    std::string client_group;
    std::string industry;
    RawFeatures features;
    double price = 0.0;
    Provenance provenance = Provenance::Real;

    bool operator==(const DealRecord&) const = default;
};

using Dataset = std::vector<DealRecord>;

struct FeatureVector {
    std::array<double, kNumFeatures> values{};

    static constexpr const std::array<std::string_view, kNumFeatures>& names() {
        return kFeatureNames;
    }
    bool operator==(const FeatureVector&) const = default;
};

/// Validates and encodes one raw input. Numerics pass through unscaled.
FeatureVector encode_features(const RawFeatures& f);
inline FeatureVector encode_features(const DealRecord& r) { return encode_features(r.features); }

// CSV ----------------------------------------------------------------------

inline constexpr std::string_view kCsvHeader =
    "record_id,client_group,industry,client_revenue,est_duration_weeks,"
    "pain_severity_score,integration_complexity,phase,tech_stack,price,provenance";

/// Parses the canonical CSV. Errors carry the 1-based line number.
Dataset read_csv(std::istream& in);
Dataset load_dataset(const std::filesystem::path& path);
void write_csv(std::ostream& out, const Dataset& data);
void save_dataset(const std::filesystem::path& path, const Dataset& data);

/// Record-level and cross-record checks: ranges, unique ids, and no
/// client_group shared between real and synthetic provenance.
void validate(const Dataset& data);

// Summary ------------------------------------------------------------------

struct ColumnStats {
    std::string name;
    double mean = 0.0;
    double std = 0.0; // population (n denominator)
    double min = 0.0;
    double max = 0.0;
};

struct DatasetSummary {
    std::size_t n = 0;
    std::size_t n_real = 0;
    std::size_t n_synthetic = 0;
    std::size_t n_groups = 0;
    std::vector<ColumnStats> columns; // revenue, duration, pain, complexity, price, phase

    const ColumnStats& column(std::string_view name) const;
};

DatasetSummary summarize(const Dataset& data);
ColumnStats column_stats(std::string name, const std::vector<double>& values);
/// Feature / Mean / Std / Min / Max text table.
std::string render_summary(const DatasetSummary& s);

// Synthetic generation -----------------------------------------------------

enum class Shape { Normal, LogNormal };

/// Target moments for one sampled column. Integer columns are rounded after
/// sampling; every draw is clamped to [min, max].
struct FeatureMoments {
    double mean = 0.0;
    double std = 0.0;
    double min = 0.0;
    double max = 0.0;
    Shape shape = Shape::Normal;
};

/// price = base * complexity_ratio^(c - 3) * pain_ratio^(p - 3)
///       * (duration / 8)^duration_exponent * revenue_multiplier(bracket)
///       * tech_multiplier * phase_ratio^(phase - 1)
struct MultiplicativePricing {
    double base = 8000.0;
    double complexity_ratio = 1.0;
    double pain_ratio = 1.0;
    double duration_exponent = 0.0;
    std::vector<double> revenue_breaks;      // ascending, USD
    std::vector<double> revenue_multipliers; // revenue_breaks.size() + 1 entries
    std::array<double, 3> tech_multipliers{1.0, 1.0, 1.0};
    double phase_ratio = 1.0;
};

/// price = intercept + sum(coefficients[i] * encoded_feature[i]).
struct LinearPricing {
    double intercept = 0.0;
    std::array<double, kNumFeatures> coefficients{};
};

using LatentPricing = std::variant<MultiplicativePricing, LinearPricing>;

double latent_price(const LatentPricing& pricing, const RawFeatures& f);

struct GeneratorSpec {
    FeatureMoments client_revenue;
    FeatureMoments est_duration_weeks;
    FeatureMoments pain_severity_score;
    FeatureMoments integration_complexity;
    FeatureMoments phase;
    FeatureMoments price; // min/max clamp the target; mean/std are reporting targets
    std::array<double, 3> tech_stack_probs{0.2, 0.3, 0.5};
    LatentPricing pricing;
    double noise_std = 0.0;
    int multi_phase_clients = 0;
    int phases_per_client = 1;
    std::uint64_t seed = 0;
    std::string id_prefix = "syn";

    /// Reference deal-sheet moments with the default monotone pricing function.
    static GeneratorSpec defaults();
};

/// Throws ValidationError when the spec is infeasible.
void validate(const GeneratorSpec& spec, std::size_t n);

Dataset generate_synthetic(const GeneratorSpec& spec, std::size_t n);

nlohmann::json to_json(const GeneratorSpec& spec);
/// Applies the keys present in `overrides` on top of `base`.
GeneratorSpec spec_from_json(const nlohmann::json& overrides, GeneratorSpec base = GeneratorSpec::defaults());

nlohmann::json to_json(const DatasetSummary& s);

std::vector<double> prices(const Dataset& data);
std::size_t count_groups(const Dataset& data);

} // namespace mlat::dataset
