#pragma once

#include "synthline/dataset.hpp"
#include "synthline/llm_gateway.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace synthline {

enum class SimilarityScope { Global, PerLabel };

struct CurationParams {
    double removal_fraction = 0.2;
    bool balance = true;
    std::uint64_t random_seed = 0;
    SimilarityScope scope = SimilarityScope::Global;

    void validate() const;
};

/// Output of one curation stage: the surviving dataset and the ids removed.
struct StageResult {
    Dataset dataset;
    std::vector<std::string> removed_ids;
    std::vector<std::string> warnings;
};

struct CurationReport {
    std::size_t input_count = 0;
    std::size_t after_dedup = 0;
    std::size_t after_filter = 0;
    std::size_t after_balance = 0;
    std::vector<std::string> removed_duplicate_ids;
    std::vector<std::string> removed_similar_ids;
    std::vector<std::string> removed_balance_ids;
    std::map<std::string, std::size_t> counts_before;
    std::map<std::string, std::size_t> counts_after;
    std::vector<std::string> stages;  // in execution order
    double removal_fraction = 0.2;
    bool balance = true;
    std::uint64_t random_seed = 0;
    std::string scope;
    std::string embedding_provider_id;
    std::vector<std::string> warnings;

    nlohmann::json to_json() const;
};

struct CurationResult {
    Dataset dataset;
    CurationReport report;
};

/// Drops exact duplicates within a label: texts are compared after NFC
/// normalisation and trimming; the first occurrence is kept. Identical texts
/// under different labels are all kept.
StageResult dedup_exact(const Dataset& dataset);

/// Number of samples the similarity filter removes from n.
std::size_t similarity_removal_count(std::size_t n, double fraction);

/// Removes the floor(fraction * n) samples with the highest mean cosine
/// similarity to all other samples. Ties remove the later sample first. Fewer
/// than two samples is a no-op with a warning.
StageResult similarity_filter(const Dataset& dataset, double fraction, LlmGateway& gateway,
                              SimilarityScope scope = SimilarityScope::Global);

/// Undersamples every class to the size of the smallest one by seeded uniform
/// sampling without replacement; survivors stay in canonical order.
StageResult balance_classes(const Dataset& dataset, std::uint64_t seed);

/// dedup_exact, then similarity_filter, then (if enabled) balance_classes.
CurationResult curate(const Dataset& dataset, const CurationParams& params, LlmGateway& gateway);

}  // namespace synthline
