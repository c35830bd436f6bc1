#pragma once

#include "synthline/error.hpp"
#include "synthline/llm_gateway.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>

namespace synthline {

/// A metric's precondition does not hold (e.g. fewer than two samples).
class MetricUndefined : public Error {
public:
    explicit MetricUndefined(const std::string& message) : Error("Undefined", message) {}
};

struct NgramStats {
    double ingf = 0.0;
    std::size_t unique_ngrams = 0;
    std::size_t short_samples = 0;  // samples with fewer than n tokens
};

/// Inter-sample n-gram frequency: every sample contributes the set of its
/// word n-grams; the result is the mean, over the distinct n-grams of the
/// dataset, of how many samples contain each one. 1 means no n-gram is shared.
NgramStats ngram_stats(std::span<const std::string> texts, int n = 3);
double ingf(std::span<const std::string> texts, int n = 3);

/// Mean cosine similarity over all unordered pairs i < j, summed in a fixed
/// order so the value does not depend on scheduling.
double mean_pairwise_cosine(std::span<const EmbeddingVector> vectors);

/// Average pairwise similarity of the texts' embeddings.
double aps(std::span<const std::string> texts, LlmGateway& gateway);

struct DiversityReport {
    std::optional<double> ingf;
    std::optional<double> aps;
    std::size_t n_samples = 0;
    std::size_t n_unique_ngrams = 0;
    std::size_t short_samples = 0;
    int ngram_order = 3;
    std::string embedding_provider_id;

    bool ingf_undefined() const { return !ingf.has_value(); }
    bool aps_undefined() const { return !aps.has_value(); }
    nlohmann::json to_json() const;
};

DiversityReport diversity_report(std::span<const std::string> texts, LlmGateway& gateway, int n = 3);

}  // namespace synthline
