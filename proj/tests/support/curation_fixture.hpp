#pragma once

// Engineered 20-sample dataset for the curation contract, with the removal
// sets recomputed by brute force.

#include "fixtures.hpp"
#include "oracles.hpp"

#include "synthline/mock_provider.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <set>
#include <string>
#include <vector>

namespace curation_fixture {

inline constexpr std::uint64_t kSeed = 2024;

/// Oracle answers for the default parameters and kSeed.
inline const std::vector<std::string> kDuplicateIds{"1", "2", "14"};
inline const std::vector<std::string> kSimilarIds{"0", "6", "7"};
inline const std::vector<std::string> kBalanceIds{"3", "4"};

inline synthline::Dataset dataset() {
    return fixtures::make_dataset({
        {"the portal shall encrypt patient records at rest", "Security"},
        {"the portal shall encrypt patient records at rest", "Security"},
        {"the portal shall encrypt patient records at rest  ", "Security"},
        {"operators rotate signing keys every quarter", "Security"},
        {"audit trails capture each failed login attempt", "Security"},
        {"backups are stored offsite in sealed vaults", "Security"},
        {"the portal shall encrypt patient records in transit", "Security"},
        {"the portal shall encrypt patient records nightly", "Security"},
        {"mobile clients pin server certificates", "Security"},
        {"passwords expire after ninety days", "Security"},
        {"sessions time out after fifteen idle minutes", "Security"},
        {"administrators approve new role assignments", "Security"},
        {"reports render within two seconds", "Non-Security"},
        {"the dashboard lists upcoming appointments", "Non-Security"},
        {"reports render within two seconds", "Non-Security"},
        {"invoices export to spreadsheet format", "Non-Security"},
        {"the scheduler supports recurring meetings", "Non-Security"},
        {"the dashboard lists upcoming appointments for clinicians", "Non-Security"},
        {"passwords expire after ninety days", "Non-Security"},
        {"firewall rules deny unknown inbound ports", "Security"},
    });
}

/// Ids of later repeats of a (label, trimmed text) pair. The fixture is
/// ASCII, so NFC is the identity on it.
inline std::vector<std::string> duplicate_ids(const synthline::Dataset& ds) {
    std::vector<std::string> out;
    for (std::size_t i = 0; i < ds.size(); ++i) {
        auto strip = [](std::string s) {
            while (!s.empty() && s.back() == ' ') s.pop_back();
            while (!s.empty() && s.front() == ' ') s.erase(s.begin());
            return s;
        };
        for (std::size_t j = 0; j < i; ++j) {
            if (ds.samples[j].label == ds.samples[i].label && strip(ds.samples[j].text) == strip(ds.samples[i].text)) {
                out.push_back(ds.samples[i].id);
                break;
            }
        }
    }
    return out;
}

/// Removes the k highest mean-similarity samples one at a time, each time
/// scanning for the maximum and preferring the later index on a tie.
inline std::vector<std::string> similar_ids(const synthline::Dataset& ds, double fraction) {
    synthline::MockProvider mock;
    const auto vectors = mock.embed(ds.texts());
    const std::size_t n = vectors.size();
    if (n < 2) return {};
    std::vector<long double> mean(n);
    for (std::size_t i = 0; i < n; ++i) {
        long double s = 0;
        for (std::size_t j = 0; j < n; ++j) {
            if (i != j) s += oracle::cosine(vectors[i].values, vectors[j].values);
        }
        mean[i] = s / static_cast<long double>(n - 1);
    }
    std::size_t k = 0;
    while (static_cast<double>(k + 1) <= fraction * static_cast<double>(n) + 1e-9) ++k;
    std::vector<bool> gone(n, false);
    std::vector<std::string> out;
    for (std::size_t r = 0; r < k; ++r) {
        std::size_t best = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (gone[i]) continue;
            // Scores within 1e-15 are ties; the library uses double sums.
            if (best == n || mean[i] > mean[best] + 1e-15L || std::fabs(mean[i] - mean[best]) <= 1e-15L) best = i;
        }
        gone[best] = true;
        out.push_back(ds.samples[best].id);
    }
    std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return std::stoi(a) < std::stoi(b); });
    return out;
}

inline synthline::Dataset without(const synthline::Dataset& ds, const std::vector<std::string>& ids) {
    const std::set<std::string> drop(ids.begin(), ids.end());
    synthline::Dataset out;
    out.labels = ds.labels;
    for (const auto& s : ds.samples) {
        if (!drop.count(s.id)) out.samples.push_back(s);
    }
    return out;
}

}  // namespace curation_fixture
