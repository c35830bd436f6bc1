#pragma once

#include "synthline/dataset.hpp"
#include "synthline/feature_model.hpp"
#include "synthline/llm_gateway.hpp"
#include "synthline/promptline.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <string>
#include <vector>

namespace synthline {

enum class Phase { Expanding, Optimizing, Generating, Curating, Persisting, Done, Failed };
std::string_view to_string(Phase phase);
Phase phase_from_string(std::string_view s);

struct ProgressEvent {
    std::string run_id;
    Phase phase = Phase::Expanding;
    std::size_t completed_cells = 0;
    std::size_t total_cells = 0;
    std::string message;
    std::string timestamp;
    std::string cell;  // "<label>/<atomic config id>" for per-cell events
    bool degraded = false;

    nlohmann::json to_json() const;
    static ProgressEvent from_json(const nlohmann::json& j);
};

using EventSink = std::function<void(const ProgressEvent&)>;

struct CellOutcome {
    std::size_t cell_index = 0;
    std::string label;
    std::string config_id;
    int quota = 0;
    int produced = 0;
    int calls = 0;
    bool degraded = false;
    std::string error;
};

struct GenerationResult {
    Dataset dataset;
    std::vector<CellOutcome> cells;

    int shortfall() const;
    std::vector<CellOutcome> degraded_cells() const;
};

/// Supplies the prompt for a cell when `count` more items are wanted.
using PromptSource = std::function<PromptSpec(const QuotaPlan::Cell& cell, int count)>;

/// Renders the shipped generation template for each request.
PromptSource template_prompts(const ConfigSelection& selection, const std::vector<AtomicConfiguration>& configs,
                              const PromptTemplates& templates = PromptTemplates::builtin());

struct GenerationOptions {
    std::string run_id;
    int parallelism = 1;
    std::string template_version;
    const Clock* clock = nullptr;  // SystemClock when null
    EventSink on_event;
    std::uint64_t seed = 0;
    int max_parse_attempts = 3;
};

/// The provider failed in a way no retry can fix (e.g. rejected credentials).
class RunFailed : public Error {
public:
    explicit RunFailed(const std::string& message) : Error("RunFailed", message) {}
};

/// Walks the quota plan cell by cell, requesting min(samples_per_prompt,
/// remaining) items per call until each quota is met. A cell whose calls keep
/// failing is marked degraded and its shortfall reported; the run continues.
/// Samples come back in canonical cell order, arrival order within a cell.
GenerationResult run_generation(const ConfigSelection& selection, const QuotaPlan& plan, const PromptSource& prompts,
                                LlmGateway& gateway, const GenerationOptions& options);

}  // namespace synthline
