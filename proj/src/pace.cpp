#include "synthline/pace.hpp"

#include "synthline/diversity.hpp"
#include "synthline/parallel.hpp"
#include "synthline/text.hpp"

#include <stdexcept>

namespace synthline {

using nlohmann::json;

void PaceConfig::validate() const {
    if (n_pairs < 1) throw std::invalid_argument("PACE needs at least one actor-critic pair");
    if (iterations < 1) throw std::invalid_argument("PACE needs at least one iteration");
    if (candidates_per_iteration < 1) throw std::invalid_argument("PACE needs at least one candidate per iteration");
    if (scoring_batch_size != 0 && scoring_batch_size < 2) throw std::invalid_argument("scoring batch size must be >= 2");
    if (max_parse_attempts < 1) throw std::invalid_argument("max_parse_attempts must be >= 1");
}

PaceConfig PaceConfig::from_selection(const ConfigSelection& selection) {
    PaceConfig cfg;
    if (selection.generation.pace) {
        cfg.n_pairs = selection.generation.pace->actors;
        cfg.iterations = selection.generation.pace->iterations;
        cfg.candidates_per_iteration = selection.generation.pace->candidates;
    }
    cfg.model = selection.generation.llm_model;
    return cfg;
}

std::vector<std::optional<double>> PaceState::score_series() const {
    std::vector<std::optional<double>> out;
    for (const auto& it : trace) out.push_back(it.selected_score);
    return out;
}

json PaceState::to_json() const {
    auto opt = [](const std::optional<double>& v) { return v ? json(*v) : json(); };
    json iterations = json::array();
    for (const auto& it : trace) {
        json candidates = json::array();
        for (const auto& c : it.candidates) {
            candidates.push_back({{"prompt", synthline::to_json(c.prompt)}, {"score", opt(c.score)}, {"selected", c.selected}});
        }
        iterations.push_back({{"iteration", it.iteration},
                              {"critiques", it.critiques},
                              {"candidates", std::move(candidates)},
                              {"incumbent_retained", it.incumbent_retained},
                              {"selected_score", opt(it.selected_score)}});
    }
    return {{"initial_score", opt(initial_score)},
            {"incumbent_score", opt(incumbent_score)},
            {"incumbent_prompt", synthline::to_json(incumbent_prompt)},
            {"iterations_completed", iteration_index},
            {"trace", std::move(iterations)}};
}

double batch_diversity_score(std::span<const EmbeddingVector> vectors) {
    return 1.0 - mean_pairwise_cosine(vectors);
}

PaceOptimizer::PaceOptimizer(LlmGateway& gateway, PaceConfig config, const PromptTemplates& templates)
    : gateway_(gateway), config_(std::move(config)), templates_(templates) {
    config_.validate();
}

int PaceOptimizer::default_batch_size(const PromptSpec& prompt) const {
    return config_.scoring_batch_size > 0 ? config_.scoring_batch_size : std::max(2, prompt.requested_count);
}

std::vector<std::string> PaceOptimizer::execute(const PromptSpec& prompt, CallPurpose purpose, std::uint64_t seed) {
    ChatRequest req;
    req.model = config_.model;
    req.messages = {{Role::System, prompt.system_text}, {Role::User, prompt.user_text}};
    req.temperature = config_.actor_temperature;
    req.top_p = config_.top_p;
    req.seed = seed;
    req.purpose = purpose;
    for (int attempt = 1;; ++attempt) {
        try {
            return parse_generation(gateway_.chat_complete(req), prompt.requested_count);
        } catch (const ParseError&) {
            if (attempt >= config_.max_parse_attempts) throw;
        }
    }
}

std::vector<std::string> PaceOptimizer::run_actor(const PromptSpec& prompt, std::uint64_t seed) {
    return execute(prompt, CallPurpose::Actor, seed);
}

double PaceOptimizer::score_prompt(const PromptSpec& prompt, int batch_size) {
    if (batch_size < 2) throw std::invalid_argument("score_prompt: batch_size must be >= 2");
    std::vector<std::string> batch;
    try {
        while (static_cast<int>(batch.size()) < batch_size) {
            // Every scoring call uses the configured seed.
            auto items = execute(prompt, CallPurpose::Scoring, config_.seed);
            for (auto& item : items) {
                if (static_cast<int>(batch.size()) == batch_size) break;
                batch.push_back(std::move(item));
            }
        }
    } catch (const ParseError& e) {
        throw ScoreUnavailable(std::string("actor output unparseable: ") + e.what());
    }
    auto vectors = gateway_.embed_batch(batch);
    return batch_diversity_score(vectors);
}

std::string PaceOptimizer::run_critic(const PromptSpec& prompt, const std::vector<std::string>& batch) {
    if (batch.empty()) throw std::invalid_argument("run_critic: batch must not be empty");
    ChatRequest req;
    req.model = config_.model;
    req.messages = {{Role::User, render_template(templates_.critic, {{"prompt", prompt.user_text},
                                                                    {"batch_size", std::to_string(batch.size())},
                                                                    {"batch_json", json(batch).dump(2)},
                                                                    {"label_name", prompt.label_name}})}};
    req.temperature = config_.critic_temperature;
    req.top_p = config_.top_p;
    req.seed = config_.seed;
    req.purpose = CallPurpose::Critic;
    auto critique = text::trim(gateway_.chat_complete(req));
    if (critique.empty()) throw ProviderError("critic returned an empty critique");
    return critique;
}

std::vector<PromptSpec> PaceOptimizer::update_prompt(const PromptSpec& prompt, const std::vector<std::string>& critiques,
                                                     int k) {
    if (k < 1) throw std::invalid_argument("update_prompt: k must be >= 1");
    if (critiques.empty()) throw std::invalid_argument("update_prompt: at least one critique required");
    std::string pooled;
    for (const auto& c : critiques) pooled += "<critique>\n" + c + "\n</critique>\n";
    if (!pooled.empty()) pooled.pop_back();

    std::vector<PromptSpec> out;
    for (int i = 1; i <= k; ++i) {
        ChatRequest req;
        req.model = config_.model;
        req.messages = {{Role::User, render_template(templates_.update, {{"prompt", prompt.user_text},
                                                                        {"critiques", pooled},
                                                                        {"candidate_number", std::to_string(i)},
                                                                        {"candidate_total", std::to_string(k)}})}};
        req.temperature = config_.update_temperature;
        req.top_p = config_.top_p;
        req.seed = config_.seed;
        req.purpose = CallPurpose::Update;
        const std::string reply = gateway_.chat_complete(req);

        auto open = reply.find("<prompt>");
        auto close = reply.rfind("</prompt>");
        if (open == std::string::npos || close == std::string::npos || close < open) continue;
        auto revised = text::trim(std::string_view(reply).substr(open + 8, close - open - 8));
        if (revised.empty()) continue;
        PromptSpec candidate = prompt;
        candidate.user_text = std::move(revised);
        out.push_back(std::move(candidate));
    }
    return out;
}

std::optional<double> PaceOptimizer::try_score(const PromptSpec& prompt) {
    try {
        return score_prompt(prompt);
    } catch (const AuthError&) {
        throw;
    } catch (const ScoreUnavailable&) {
        return std::nullopt;
    } catch (const ProviderError&) {
        return std::nullopt;
    }
}

PaceResult PaceOptimizer::optimize(const PromptSpec& initial) {
    PaceState state;
    state.incumbent_prompt = initial;
    state.initial_score = try_score(initial);
    state.incumbent_score = state.initial_score;
    bool any_scored = state.initial_score.has_value();

    for (int iteration = 1; iteration <= config_.iterations; ++iteration) {
        PaceIteration entry;
        entry.iteration = iteration;

        // Independent actor-critic pairs over the incumbent; critiques pooled
        // in pair order.
        std::vector<std::optional<std::string>> critiques(static_cast<std::size_t>(config_.n_pairs));
        parallel_for(critiques.size(), config_.parallelism, [&](std::size_t pair) {
            const std::uint64_t seed =
                text::fnv1a64(std::to_string(iteration) + ":" + std::to_string(pair), config_.seed + 1);
            try {
                auto batch = run_actor(state.incumbent_prompt, seed);
                critiques[pair] = run_critic(state.incumbent_prompt, batch);
            } catch (const AuthError&) {
                throw;
            } catch (const ParseError&) {
            } catch (const ProviderError&) {
            }
        });
        for (auto& c : critiques) {
            if (c) entry.critiques.push_back(std::move(*c));
        }

        std::vector<PromptSpec> candidates;
        if (!entry.critiques.empty()) {
            try {
                candidates = update_prompt(state.incumbent_prompt, entry.critiques, config_.candidates_per_iteration);
            } catch (const AuthError&) {
                throw;
            } catch (const ProviderError&) {
            }
        }

        std::vector<std::optional<double>> scores(candidates.size());
        parallel_for(candidates.size(), config_.parallelism,
                     [&](std::size_t i) { scores[i] = try_score(candidates[i]); });

        // argmax over {incumbent} + candidates; ties keep the incumbent, then
        // the lowest candidate index.
        std::optional<double> best = state.incumbent_score;
        int selected = -1;
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            if (!scores[i]) continue;
            any_scored = true;
            if (!best || *scores[i] > *best) {
                best = scores[i];
                selected = static_cast<int>(i);
            }
        }
        for (std::size_t i = 0; i < candidates.size(); ++i) {
            entry.candidates.push_back({candidates[i], scores[i], static_cast<int>(i) == selected});
        }
        if (selected >= 0) {
            state.incumbent_prompt = candidates[static_cast<std::size_t>(selected)];
            state.incumbent_score = best;
        }
        entry.incumbent_retained = selected < 0;
        entry.selected_score = state.incumbent_score;
        state.trace.push_back(std::move(entry));
        state.iteration_index = iteration;
    }

    if (!any_scored) throw OptimizationFailed("every scoring call failed", std::move(state));
    return {state.incumbent_prompt, std::move(state)};
}

}  // namespace synthline
