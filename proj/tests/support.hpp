#pragma once

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <string>

#include "mlat/dataset.hpp"

namespace testing {

inline std::string fixture(const std::string& rel) { return std::string(MLAT_FIXTURES_DIR) + "/" + rel; }

inline std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline bool rel_close(double a, double b, double tol) {
    return std::abs(a - b) <= tol * std::max({1.0, std::abs(a), std::abs(b)});
}

/// Random valid dataset: `groups` client groups of 1..max_group records.
inline mlat::dataset::Dataset random_dataset(std::mt19937_64& rng, int groups, int max_group = 4) {
    using namespace mlat::dataset;
    std::uniform_int_distribution<int> size(1, max_group), dur(3, 20), score(1, 5), phase(1, 4), tech(0, 2);
    std::lognormal_distribution<double> rev(14.5, 1.2);
    std::uniform_real_distribution<double> price(2000.0, 40000.0);
    Dataset d;
    int rec = 0;
    for (int g = 0; g < groups; ++g) {
        const int k = size(rng);
        const auto prov = (g % 3 == 0) ? Provenance::Synthetic : Provenance::Real;
        for (int i = 0; i < k; ++i) {
            DealRecord r;
            r.record_id = "r" + std::to_string(rec++);
            r.client_group = "g" + std::to_string(g);
            r.industry = "retail";
            r.features = {std::round(rev(rng)), dur(rng), score(rng), score(rng), phase(rng),
                          static_cast<TechStack>(tech(rng))};
            r.price = std::round(price(rng));
            r.provenance = prov;
            d.push_back(r);
        }
    }
    return d;
}

} // namespace testing
