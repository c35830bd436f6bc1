#include "synthline/generator.hpp"

#include "synthline/parallel.hpp"
#include "synthline/text.hpp"

#include <mutex>
#include <stdexcept>

namespace synthline {

using nlohmann::json;

namespace {

constexpr std::array<std::pair<Phase, std::string_view>, 7> kPhaseNames{{
    {Phase::Expanding, "expanding"},
    {Phase::Optimizing, "optimizing"},
    {Phase::Generating, "generating"},
    {Phase::Curating, "curating"},
    {Phase::Persisting, "persisting"},
    {Phase::Done, "done"},
    {Phase::Failed, "failed"},
}};

}  // namespace

std::string_view to_string(Phase phase) {
    for (const auto& [p, name] : kPhaseNames) {
        if (p == phase) return name;
    }
    return "failed";
}

Phase phase_from_string(std::string_view s) {
    for (const auto& [p, name] : kPhaseNames) {
        if (name == s) return p;
    }
    throw std::invalid_argument("unknown phase '" + std::string(s) + "'");
}

json ProgressEvent::to_json() const {
    json j = {{"run_id", run_id},
              {"phase", to_string(phase)},
              {"completed_cells", completed_cells},
              {"total_cells", total_cells},
              {"message", message},
              {"timestamp", timestamp}};
    if (!cell.empty()) j["cell"] = cell;
    if (degraded) j["degraded"] = true;
    return j;
}

ProgressEvent ProgressEvent::from_json(const json& j) {
    ProgressEvent e;
    e.run_id = j.value("run_id", std::string());
    e.phase = phase_from_string(j.at("phase").get<std::string>());
    e.completed_cells = j.value("completed_cells", std::size_t{0});
    e.total_cells = j.value("total_cells", std::size_t{0});
    e.message = j.value("message", std::string());
    e.timestamp = j.value("timestamp", std::string());
    e.cell = j.value("cell", std::string());
    e.degraded = j.value("degraded", false);
    return e;
}

int GenerationResult::shortfall() const {
    int s = 0;
    for (const auto& c : cells) s += c.quota - c.produced;
    return s;
}

std::vector<CellOutcome> GenerationResult::degraded_cells() const {
    std::vector<CellOutcome> out;
    for (const auto& c : cells) {
        if (c.degraded) out.push_back(c);
    }
    return out;
}

PromptSource template_prompts(const ConfigSelection& selection, const std::vector<AtomicConfiguration>& configs,
                              const PromptTemplates& templates) {
    return [labels = selection.labels, &configs, &templates](const QuotaPlan::Cell& cell, int count) {
        return build_prompt(labels.at(cell.label_index), configs.at(cell.config_index), count, templates);
    };
}

namespace {

void check_plan(const ConfigSelection& selection, const QuotaPlan& plan) {
    if (plan.labels().size() != selection.labels.size()) {
        throw std::invalid_argument("quota plan labels do not match the selection");
    }
    for (std::size_t i = 0; i < selection.labels.size(); ++i) {
        if (plan.labels()[i] != selection.labels[i].name) {
            throw std::invalid_argument("quota plan labels do not match the selection");
        }
    }
    if (plan.config_ids().size() != atomic_count(selection)) {
        throw std::invalid_argument("quota plan does not cover the selection's atomic configurations");
    }
}

}  // namespace

GenerationResult run_generation(const ConfigSelection& selection, const QuotaPlan& plan, const PromptSource& prompts,
                                LlmGateway& gateway, const GenerationOptions& options) {
    check_plan(selection, plan);
    SystemClock system_clock;
    const Clock& clock = options.clock ? *options.clock : system_clock;
    const auto& cells = plan.cells();
    const auto& gen = selection.generation;

    std::vector<CellOutcome> outcomes(cells.size());
    std::vector<std::vector<SyntheticSample>> per_cell(cells.size());
    std::mutex event_mutex;
    std::size_t completed = 0;

    parallel_for(cells.size(), options.parallelism, [&](std::size_t ci) {
        const auto& cell = cells[ci];
        CellOutcome& out = outcomes[ci];
        out.cell_index = ci;
        out.label = cell.label;
        out.config_id = cell.config_id;
        out.quota = cell.quota;

        int remaining = cell.quota;
        while (remaining > 0 && !out.degraded) {
            const int count = std::min(gen.samples_per_prompt, remaining);
            const PromptSpec prompt = prompts(cell, count);
            const int call_no = out.calls++;
            ChatRequest req;
            req.model = gen.llm_model;
            req.messages = {{Role::System, prompt.system_text}, {Role::User, prompt.user_text}};
            req.temperature = gen.temperature;
            req.top_p = gen.top_p;
            req.seed = text::fnv1a64(std::to_string(ci) + ":" + std::to_string(call_no), options.seed + 1);
            req.purpose = CallPurpose::Generation;

            std::vector<std::string> items;
            for (int attempt = 1; attempt <= options.max_parse_attempts; ++attempt) {
                try {
                    items = parse_generation(gateway.chat_complete(req), prompt.requested_count);
                    break;
                } catch (const ParseError& e) {
                    if (attempt == options.max_parse_attempts) {
                        out.degraded = true;
                        out.error = e.what();
                    }
                } catch (const AuthError& e) {
                    throw RunFailed(std::string("provider rejected credentials: ") + e.what());
                } catch (const ProviderError& e) {
                    out.degraded = true;
                    out.error = e.what();
                    break;
                }
            }
            const std::string call_id = "c" + std::to_string(ci) + "-" + std::to_string(call_no);
            for (auto& item : items) {
                if (remaining == 0) break;  // surplus from an over-generating model is dropped
                SyntheticSample s;
                s.text = std::move(item);
                s.label = cell.label;
                s.atomic_config_id = cell.config_id;
                s.prompt_call_id = call_id;
                s.template_version = options.template_version;
                s.created_at = clock.now_iso();
                per_cell[ci].push_back(std::move(s));
                --remaining;
            }
        }
        out.produced = cell.quota - remaining;

        std::lock_guard lock(event_mutex);
        ++completed;
        if (options.on_event) {
            ProgressEvent ev;
            ev.run_id = options.run_id;
            ev.phase = Phase::Generating;
            ev.completed_cells = completed;
            ev.total_cells = cells.size();
            ev.cell = cell.label + "/" + cell.config_id;
            ev.degraded = out.degraded;
            ev.message = out.degraded ? "degraded cell " + ev.cell + ": produced " + std::to_string(out.produced) + " of " +
                                            std::to_string(out.quota) + " (" + out.error + ")"
                                      : "cell " + ev.cell + " complete (" + std::to_string(out.produced) + " samples)";
            ev.timestamp = clock.now_iso();
            options.on_event(ev);
        }
    });

    GenerationResult result;
    for (const auto& l : selection.labels) result.dataset.labels.push_back(l.name);
    for (auto& samples : per_cell) {
        for (auto& s : samples) {
            s.id = std::to_string(result.dataset.samples.size());
            result.dataset.samples.push_back(std::move(s));
        }
    }
    result.cells = std::move(outcomes);
    return result;
}

}  // namespace synthline
