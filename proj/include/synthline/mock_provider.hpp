#pragma once

#include "synthline/llm_gateway.hpp"

#include <cstdint>
#include <string_view>

namespace synthline {

struct MockOptions {
    std::uint64_t seed = 0;
    /// Repeat a single sentence per batch unless the prompt carries
    /// kMockDiversityDirective.
    bool low_diversity = false;
    std::size_t embedding_dimension = 64;
};

/// Sentence the mock update step appends when a critique reports repetition;
/// the mock actor only varies its output in low-diversity mode when the
/// prompt contains it.
inline constexpr std::string_view kMockDiversityDirective =
    "Make every requirement distinct from the others in wording, actor, and intent.";

/// Deterministic offline provider: every response is a pure function of
/// (seed, request). Chat responses depend on the request purpose:
///  - generation/actor/scoring: `k` pseudo-requirements (JSON array when the
///    prompt asks for several) drawn from a pool keyed by the prompt text;
///  - critic: a rule-based critique of the batch between <batch> tags;
///  - update: the prompt between <prompt> tags, revised per the critiques.
/// Embeddings are token feature hashes, L2-normalised.
class MockProvider : public ChatProvider, public EmbeddingProvider {
public:
    explicit MockProvider(MockOptions options = {}) : options_(options) {}

    std::string complete(const ChatRequest& request) override;
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
    std::string id() const override;

    EmbeddingVector embed_one(std::string_view text) const;
    const MockOptions& options() const { return options_; }

private:
    std::string generate(const ChatRequest& request) const;
    std::string critique(const ChatRequest& request) const;
    std::string revise(const ChatRequest& request) const;

    MockOptions options_;
};

}  // namespace synthline
