#include "synthline/diversity.hpp"

#include "synthline/text.hpp"

#include <set>
#include <unordered_map>

namespace synthline {

NgramStats ngram_stats(std::span<const std::string> texts, int n) {
    if (n < 1) throw std::invalid_argument("n-gram order must be >= 1");
    std::unordered_map<std::string, std::size_t> document_frequency;
    NgramStats stats;
    for (const auto& t : texts) {
        auto tokens = text::word_tokens(t);
        if (tokens.size() < static_cast<std::size_t>(n)) {
            ++stats.short_samples;
            continue;
        }
        std::set<std::string> grams;
        for (std::size_t i = 0; i + static_cast<std::size_t>(n) <= tokens.size(); ++i) {
            std::string g = tokens[i];
            for (int k = 1; k < n; ++k) g += ' ' + tokens[i + static_cast<std::size_t>(k)];
            grams.insert(std::move(g));
        }
        for (const auto& g : grams) ++document_frequency[g];
    }
    if (document_frequency.empty()) {
        throw MetricUndefined("no sample has at least " + std::to_string(n) + " tokens");
    }
    std::size_t total = 0;
    for (const auto& [_, df] : document_frequency) total += df;
    stats.unique_ngrams = document_frequency.size();
    stats.ingf = static_cast<double>(total) / static_cast<double>(stats.unique_ngrams);
    return stats;
}

double ingf(std::span<const std::string> texts, int n) {
    return ngram_stats(texts, n).ingf;
}

double mean_pairwise_cosine(std::span<const EmbeddingVector> vectors) {
    const std::size_t n = vectors.size();
    if (n < 2) throw MetricUndefined("pairwise similarity needs at least 2 samples");
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) sum += cosine_similarity(vectors[i], vectors[j]);
    }
    const double pairs = static_cast<double>(n) * static_cast<double>(n - 1) / 2.0;
    return sum / pairs;
}

double aps(std::span<const std::string> texts, LlmGateway& gateway) {
    if (texts.size() < 2) throw MetricUndefined("APS needs at least 2 samples");
    auto vectors = gateway.embed_batch(texts);
    return mean_pairwise_cosine(vectors);
}

nlohmann::json DiversityReport::to_json() const {
    nlohmann::json j = {{"n_samples", n_samples},
                        {"n_unique_ngrams", n_unique_ngrams},
                        {"short_samples", short_samples},
                        {"ngram_order", ngram_order},
                        {"embedding_provider_id", embedding_provider_id},
                        {"ingf_undefined", ingf_undefined()},
                        {"aps_undefined", aps_undefined()}};
    j["ingf"] = ingf ? nlohmann::json(*ingf) : nlohmann::json();
    j["aps"] = aps ? nlohmann::json(*aps) : nlohmann::json();
    return j;
}

DiversityReport diversity_report(std::span<const std::string> texts, LlmGateway& gateway, int n) {
    DiversityReport r;
    r.n_samples = texts.size();
    r.ngram_order = n;
    r.embedding_provider_id = gateway.embedding_provider_id();
    try {
        auto stats = ngram_stats(texts, n);
        r.ingf = stats.ingf;
        r.n_unique_ngrams = stats.unique_ngrams;
        r.short_samples = stats.short_samples;
    } catch (const MetricUndefined&) {
        r.short_samples = texts.size();
    }
    try {
        r.aps = aps(texts, gateway);
    } catch (const MetricUndefined&) {
    }
    return r;
}

}  // namespace synthline
