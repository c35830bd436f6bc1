#include "synthline/curation.hpp"

#include "synthline/diversity.hpp"
#include "synthline/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>
#include <stdexcept>

namespace synthline {

using nlohmann::json;

void CurationParams::validate() const {
    if (!(removal_fraction >= 0.0 && removal_fraction < 1.0)) {
        throw std::invalid_argument("removal_fraction must be in [0, 1)");
    }
}

json CurationReport::to_json() const {
    return {{"input_count", input_count},
            {"after_dedup", after_dedup},
            {"after_filter", after_filter},
            {"after_balance", after_balance},
            {"removed_duplicate_ids", removed_duplicate_ids},
            {"removed_similar_ids", removed_similar_ids},
            {"removed_balance_ids", removed_balance_ids},
            {"counts_before", counts_before},
            {"counts_after", counts_after},
            {"stages", stages},
            {"removal_fraction", removal_fraction},
            {"balance", balance},
            {"random_seed", random_seed},
            {"scope", scope},
            {"embedding_provider_id", embedding_provider_id},
            {"warnings", warnings}};
}

StageResult dedup_exact(const Dataset& dataset) {
    StageResult r;
    r.dataset.labels = dataset.labels;
    std::set<std::pair<std::string, std::string>> seen;
    for (const auto& s : dataset.samples) {
        if (seen.emplace(s.label, text::nfc(text::trim(s.text))).second) {
            r.dataset.samples.push_back(s);
        } else {
            r.removed_ids.push_back(s.id);
        }
    }
    return r;
}

std::size_t similarity_removal_count(std::size_t n, double fraction) {
    // The epsilon absorbs binary rounding such as 0.29 * 100 = 28.999...
    return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(n) + 1e-9));
}

namespace {

/// Indices (into `members`) ranked for removal: highest mean similarity
/// first, later sample first on ties.
std::vector<std::size_t> removal_ranking(const std::vector<EmbeddingVector>& vectors) {
    const std::size_t n = vectors.size();
    std::vector<double> sim(n * n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            sim[i * n + j] = sim[j * n + i] = cosine_similarity(vectors[i], vectors[j]);
        }
    }
    std::vector<double> mean(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
        double sum = 0.0;
        for (std::size_t j = 0; j < n; ++j) {
            if (j != i) sum += sim[i * n + j];
        }
        mean[i] = sum / static_cast<double>(n - 1);
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        if (mean[a] != mean[b]) return mean[a] > mean[b];
        return a > b;
    });
    return order;
}

}  // namespace

StageResult similarity_filter(const Dataset& dataset, double fraction, LlmGateway& gateway, SimilarityScope scope) {
    if (!(fraction >= 0.0 && fraction < 1.0)) throw std::invalid_argument("fraction must be in [0, 1)");
    StageResult r;
    r.dataset.labels = dataset.labels;
    const std::size_t n = dataset.size();
    if (n < 2) {
        r.dataset = dataset;
        r.warnings.push_back("similarity filter skipped: fewer than 2 samples");
        return r;
    }

    // Groups of sample indices ranked independently.
    std::vector<std::vector<std::size_t>> groups;
    if (scope == SimilarityScope::Global) {
        groups.emplace_back(n);
        std::iota(groups.back().begin(), groups.back().end(), std::size_t{0});
    } else {
        for (const auto& label : dataset.class_order()) {
            std::vector<std::size_t> g;
            for (std::size_t i = 0; i < n; ++i) {
                if (dataset.samples[i].label == label) g.push_back(i);
            }
            if (!g.empty()) groups.push_back(std::move(g));
        }
    }

    const auto texts = dataset.texts();
    const auto vectors = gateway.embed_batch(texts);
    std::vector<bool> removed(n, false);
    for (const auto& g : groups) {
        if (g.size() < 2) {
            r.warnings.push_back("similarity filter skipped a group with fewer than 2 samples");
            continue;
        }
        std::vector<EmbeddingVector> members;
        for (auto i : g) members.push_back(vectors[i]);
        const auto ranking = removal_ranking(members);
        const std::size_t k = similarity_removal_count(g.size(), fraction);
        for (std::size_t r_i = 0; r_i < k; ++r_i) removed[g[ranking[r_i]]] = true;
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (removed[i]) r.removed_ids.push_back(dataset.samples[i].id);
        else r.dataset.samples.push_back(dataset.samples[i]);
    }
    return r;
}

namespace {

/// Uniform draw in [0, bound) by rejection; independent of the standard
/// library's distribution implementation.
std::uint64_t uniform_below(std::mt19937_64& rng, std::uint64_t bound) {
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t x;
    do {
        x = rng();
    } while (x >= limit);
    return x % bound;
}

}  // namespace

StageResult balance_classes(const Dataset& dataset, std::uint64_t seed) {
    StageResult r;
    r.dataset.labels = dataset.labels;
    const auto classes = dataset.class_order();
    std::map<std::string, std::vector<std::size_t>> members;
    for (std::size_t i = 0; i < dataset.size(); ++i) members[dataset.samples[i].label].push_back(i);

    std::size_t minimum = std::numeric_limits<std::size_t>::max();
    for (const auto& c : classes) minimum = std::min(minimum, members[c].size());
    if (classes.empty()) minimum = 0;

    std::mt19937_64 rng(seed);
    std::vector<bool> keep(dataset.size(), false);
    for (const auto& c : classes) {
        auto idx = members[c];
        // Partial Fisher-Yates: the first `minimum` slots are a uniform sample.
        for (std::size_t i = 0; i < minimum && i < idx.size(); ++i) {
            auto j = i + static_cast<std::size_t>(uniform_below(rng, idx.size() - i));
            std::swap(idx[i], idx[j]);
        }
        for (std::size_t i = 0; i < minimum; ++i) keep[idx[i]] = true;
    }
    for (std::size_t i = 0; i < dataset.size(); ++i) {
        if (keep[i]) r.dataset.samples.push_back(dataset.samples[i]);
        else r.removed_ids.push_back(dataset.samples[i].id);
    }
    return r;
}

CurationResult curate(const Dataset& dataset, const CurationParams& params, LlmGateway& gateway) {
    params.validate();
    CurationReport report;
    report.input_count = dataset.size();
    report.counts_before = dataset.counts_by_label();
    report.removal_fraction = params.removal_fraction;
    report.balance = params.balance;
    report.random_seed = params.random_seed;
    report.scope = params.scope == SimilarityScope::Global ? "global" : "per-label";
    report.embedding_provider_id = gateway.embedding_provider_id();

    auto dedup = dedup_exact(dataset);
    report.stages.push_back("dedup");
    report.after_dedup = dedup.dataset.size();
    report.removed_duplicate_ids = std::move(dedup.removed_ids);

    auto filtered = similarity_filter(dedup.dataset, params.removal_fraction, gateway, params.scope);
    report.stages.push_back("filter");
    report.after_filter = filtered.dataset.size();
    report.removed_similar_ids = std::move(filtered.removed_ids);
    report.warnings.insert(report.warnings.end(), filtered.warnings.begin(), filtered.warnings.end());

    Dataset out = std::move(filtered.dataset);
    if (params.balance) {
        auto balanced = balance_classes(out, params.random_seed);
        report.stages.push_back("balance");
        report.removed_balance_ids = std::move(balanced.removed_ids);
        out = std::move(balanced.dataset);
    }
    report.after_balance = out.size();
    report.counts_after = out.counts_by_label();
    return {std::move(out), std::move(report)};
}

}  // namespace synthline
