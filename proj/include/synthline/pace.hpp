#pragma once

#include "synthline/feature_model.hpp"
#include "synthline/llm_gateway.hpp"
#include "synthline/promptline.hpp"

#include <nlohmann/json.hpp>

#include <optional>
#include <span>
#include <string>
#include <vector>

namespace synthline {

/// Prompt actor-critic editing parameters. Defaults: 4 actor-critic pairs,
/// 3 iterations, 2 candidates per iteration, temperature 0, top-p 1.
struct PaceConfig {
    int n_pairs = 4;
    int iterations = 3;
    int candidates_per_iteration = 2;
    double actor_temperature = 0.0;
    double critic_temperature = 0.0;
    double update_temperature = 0.0;
    double top_p = 1.0;
    /// 0 selects max(2, prompt.requested_count).
    int scoring_batch_size = 0;
    std::string model;
    std::uint64_t seed = 0;
    int parallelism = 1;
    int max_parse_attempts = 3;

    void validate() const;
    static PaceConfig from_selection(const ConfigSelection& selection);
};

struct PaceCandidate {
    PromptSpec prompt;
    std::optional<double> score;  // nullopt: score unavailable
    bool selected = false;
};

struct PaceIteration {
    int iteration = 0;
    std::vector<std::string> critiques;
    std::vector<PaceCandidate> candidates;
    bool incumbent_retained = true;
    std::optional<double> selected_score;
};

struct PaceState {
    PromptSpec incumbent_prompt;
    std::optional<double> incumbent_score;
    std::optional<double> initial_score;
    int iteration_index = 0;
    std::vector<PaceIteration> trace;

    /// Selected score after each iteration.
    std::vector<std::optional<double>> score_series() const;
    nlohmann::json to_json() const;
};

struct PaceResult {
    PromptSpec prompt;
    PaceState state;
};

class ScoreUnavailable : public Error {
public:
    explicit ScoreUnavailable(const std::string& message) : Error("ScoreUnavailable", message) {}
};

class OptimizationFailed : public Error {
public:
    OptimizationFailed(const std::string& message, PaceState partial)
        : Error("OptimizationFailed", message), state_(std::move(partial)) {}
    const PaceState& state() const noexcept { return state_; }

private:
    PaceState state_;
};

/// 1 - mean pairwise cosine similarity: the mean pairwise cosine distance of
/// a batch, in [0, 2].
double batch_diversity_score(std::span<const EmbeddingVector> vectors);

/// Iterative prompt optimisation: actors execute the incumbent prompt,
/// critics review each batch, an update step turns the pooled critiques into
/// candidate prompts, and the best-scoring prompt (incumbent included) is kept.
class PaceOptimizer {
public:
    PaceOptimizer(LlmGateway& gateway, PaceConfig config,
                  const PromptTemplates& templates = PromptTemplates::builtin());

    const PaceConfig& config() const { return config_; }
    int default_batch_size(const PromptSpec& prompt) const;

    double score_prompt(const PromptSpec& prompt, int batch_size);
    double score_prompt(const PromptSpec& prompt) { return score_prompt(prompt, default_batch_size(prompt)); }

    std::vector<std::string> run_actor(const PromptSpec& prompt, std::uint64_t seed = 0);
    std::string run_critic(const PromptSpec& prompt, const std::vector<std::string>& batch);
    std::vector<PromptSpec> update_prompt(const PromptSpec& prompt, const std::vector<std::string>& critiques, int k);

    PaceResult optimize(const PromptSpec& initial);

private:
    std::vector<std::string> execute(const PromptSpec& prompt, CallPurpose purpose, std::uint64_t seed);
    std::optional<double> try_score(const PromptSpec& prompt);

    LlmGateway& gateway_;
    PaceConfig config_;
    const PromptTemplates& templates_;
};

}  // namespace synthline
