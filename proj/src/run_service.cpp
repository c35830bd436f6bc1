#include "synthline/run_service.hpp"

#include "synthline/text.hpp"

#include <stdexcept>

namespace synthline {

using nlohmann::json;
namespace fs = std::filesystem;

std::string derive_run_id(const ConfigSelection& selection, std::uint64_t seed, const std::string& provider_id) {
    const auto digest = text::sha256_hex(config_hash(selection) + "\n" + std::to_string(seed) + "\n" + provider_id);
    return "run-" + digest.substr(0, 12);
}

namespace {

std::string describe(const std::exception_ptr& ep) {
    try {
        std::rethrow_exception(ep);
    } catch (const Error& e) {
        return e.code() + ": " + e.what();
    } catch (const std::exception& e) {
        return e.what();
    } catch (...) {
        return "unknown error";
    }
}

/// Thread-safe event collector. Each event is timestamped and forwarded.
class EventLog {
public:
    EventLog(std::string run_id, const Clock& clock, EventSink forward)
        : run_id_(std::move(run_id)), clock_(clock), forward_(std::move(forward)) {}

    void emit(Phase phase, std::size_t completed, std::size_t total, std::string message) {
        ProgressEvent e;
        e.phase = phase;
        e.completed_cells = completed;
        e.total_cells = total;
        e.message = std::move(message);
        push(std::move(e));
    }

    void push(ProgressEvent e) {
        e.run_id = run_id_;
        if (e.timestamp.empty()) e.timestamp = clock_.now_iso();
        std::lock_guard lock(mutex_);
        events_.push_back(e);
        if (forward_) forward_(e);
    }

    std::string jsonl() const {
        std::lock_guard lock(mutex_);
        std::string out;
        for (const auto& e : events_) out += e.to_json().dump() + "\n";
        return out;
    }

private:
    std::string run_id_;
    const Clock& clock_;
    EventSink forward_;
    mutable std::mutex mutex_;
    std::vector<ProgressEvent> events_;
};

}  // namespace

RunOutput execute_run(const ConfigSelection& selection, LlmGateway& gateway, const fs::path& out_dir,
                      const RunOptions& options) {
    SystemClock system_clock;
    const Clock& clock = options.clock ? *options.clock : system_clock;
    const PromptTemplates& templates = options.templates ? *options.templates : PromptTemplates::builtin();
    const std::string run_id =
        options.run_id.empty() ? derive_run_id(selection, options.seed, gateway.chat_provider_id()) : options.run_id;
    EventLog log(run_id, clock, options.on_event);

    RunOutput out;
    std::size_t total = 0;
    try {
        const auto configs = expand_atomic(selection);
        const auto plan = allocate_quotas(selection.labels, configs, selection.subset_size);
        const auto& cells = plan.cells();
        total = cells.size();
        log.emit(Phase::Expanding, 0, total,
                 std::to_string(configs.size()) + " atomic configurations, " + std::to_string(total) + " cells");

        std::map<std::size_t, PromptSpec> optimized;
        if (selection.generation.prompt_approach == PromptApproach::Pace) {
            std::size_t done = 0;
            for (const auto& cell : cells) {
                ++done;
                if (cell.quota == 0) {
                    log.emit(Phase::Optimizing, done, total, "cell " + cell.label + "/" + cell.config_id + " skipped (quota 0)");
                    continue;
                }
                auto cfg = PaceConfig::from_selection(selection);
                cfg.seed = text::fnv1a64("pace:" + std::to_string(cell.index), options.seed + 1);
                cfg.parallelism = options.parallelism;
                PaceOptimizer pace(gateway, cfg, templates);
                const auto initial = build_prompt(selection.labels.at(cell.label_index), configs.at(cell.config_index),
                                                  selection.generation.samples_per_prompt, templates);
                PaceState state;
                std::string note;
                try {
                    auto result = pace.optimize(initial);
                    optimized.emplace(cell.index, result.prompt);
                    state = std::move(result.state);
                } catch (const OptimizationFailed& e) {
                    state = e.state();
                    note = std::string("; optimisation failed, default prompt kept: ") + e.what();
                } catch (const AuthError& e) {
                    throw RunFailed(std::string("provider rejected credentials: ") + e.what());
                }
                json trace = state.to_json();
                trace["label"] = cell.label;
                trace["atomic_config_id"] = cell.config_id;
                write_text_file(out_dir / "pace" / ("cell-" + std::to_string(cell.index) + ".json"), trace.dump(2) + "\n");
                auto score = state.incumbent_score ? std::to_string(*state.incumbent_score) : std::string("n/a");
                log.emit(Phase::Optimizing, done, total, "cell " + cell.label + "/" + cell.config_id + " score " + score + note);
                out.pace_traces.emplace(cell.index, std::move(state));
            }
        }

        PromptSource prompts = [&](const QuotaPlan::Cell& cell, int count) {
            if (auto it = optimized.find(cell.index); it != optimized.end()) return it->second;
            return build_prompt(selection.labels.at(cell.label_index), configs.at(cell.config_index), count, templates);
        };
        GenerationOptions gen;
        gen.run_id = run_id;
        gen.parallelism = options.parallelism;
        gen.template_version = templates.version;
        gen.clock = &clock;
        gen.seed = options.seed;
        gen.on_event = [&](const ProgressEvent& e) { log.push(e); };
        out.generation = run_generation(selection, plan, prompts, gateway, gen);
        out.dataset = out.generation.dataset;

        if (options.curation) {
            log.emit(Phase::Curating, total, total, "curating " + std::to_string(out.dataset.size()) + " samples");
            auto curated = curate(out.dataset, *options.curation, gateway);
            write_text_file(out_dir / "curation_report.json", curated.report.to_json().dump(2) + "\n");
            out.dataset = std::move(curated.dataset);
            out.curation = std::move(curated.report);
        }

        log.emit(Phase::Persisting, total, total, "writing " + std::to_string(out.dataset.size()) + " samples");
        DatasetManifest manifest;
        manifest.dataset_id = run_id;
        manifest.run_id = run_id;
        manifest.config_hash = config_hash(selection);
        manifest.template_version = templates.version;
        manifest.provider_profile_id = gateway.chat_provider_id();
        manifest.created_at = clock.now_iso();
        manifest.seed = options.seed;
        manifest.shortfall = out.generation.shortfall();
        for (const auto& c : out.generation.degraded_cells()) manifest.degraded_cells.push_back(c.label + "/" + c.config_id);
        if (out.curation) manifest.curation_report = "curation_report.json";
        if (options.compute_metrics) {
            out.diversity = diversity_report(out.dataset.texts(), gateway, options.ngram_order);
            write_text_file(out_dir / "diversity_report.json", out.diversity->to_json().dump(2) + "\n");
            manifest.diversity_report = "diversity_report.json";
        }
        write_text_file(out_dir / "selection.json", serialize_selection(selection).dump(2) + "\n");
        out.data_file = persist_dataset(out.dataset, selection.output_format, out_dir, manifest);
        out.manifest = DatasetManifest::from_json(json::parse(read_text_file(out_dir / "manifest.json")));

        std::string summary = std::to_string(out.dataset.size()) + " samples";
        if (manifest.shortfall > 0) summary += ", shortfall " + std::to_string(manifest.shortfall);
        log.emit(Phase::Done, total, total, summary);
        write_text_file(out_dir / "events.jsonl", log.jsonl());
        return out;
    } catch (...) {
        log.emit(Phase::Failed, 0, total, describe(std::current_exception()));
        try {
            write_text_file(out_dir / "events.jsonl", log.jsonl());
        } catch (const std::exception&) {
        }
        throw;
    }
}

CurateOutput curate_persisted(const fs::path& data_file, const CurationParams& params, LlmGateway& gateway,
                              const fs::path& out_dir, const std::string& dataset_id, const Clock& clock) {
    const Dataset input = load_dataset(data_file);
    DatasetManifest manifest;
    const auto source_manifest = data_file.parent_path() / "manifest.json";
    if (fs::exists(source_manifest)) {
        manifest = DatasetManifest::from_json(json::parse(read_text_file(source_manifest)));
    }
    auto curated = curate(input, params, gateway);

    CurateOutput out;
    out.dataset = std::move(curated.dataset);
    out.report = std::move(curated.report);
    write_text_file(out_dir / "curation_report.json", out.report.to_json().dump(2) + "\n");

    manifest.dataset_id = dataset_id;
    manifest.curation_report = "curation_report.json";
    manifest.diversity_report.reset();
    manifest.created_at = clock.now_iso();
    if (manifest.provider_profile_id.empty()) manifest.provider_profile_id = gateway.embedding_provider_id();
    const auto format = data_file.extension() == ".json" ? OutputFormat::Json : OutputFormat::Csv;
    out.data_file = persist_dataset(out.dataset, format, out_dir, manifest);
    out.manifest = DatasetManifest::from_json(json::parse(read_text_file(out_dir / "manifest.json")));
    return out;
}

// ---------------------------------------------------------------------------
// RunManager
// ---------------------------------------------------------------------------

std::string_view to_string(RunStatus status) {
    switch (status) {
    case RunStatus::Queued: return "queued";
    case RunStatus::Running: return "running";
    case RunStatus::Done: return "done";
    case RunStatus::Failed: return "failed";
    }
    return "failed";
}

json RunSnapshot::to_json() const {
    json j = {{"run_id", run_id},
              {"status", to_string(status)},
              {"selection", selection},
              {"event_count", event_count},
              {"dataset_id", dataset_id ? json(*dataset_id) : json()},
              {"last_event", last_event ? last_event->to_json() : json()}};
    if (!error.empty()) j["error"] = error;
    return j;
}

struct RunManager::Run {
    std::string id;
    json selection;
    RunStatus status = RunStatus::Queued;
    std::vector<ProgressEvent> events;
    std::optional<std::string> dataset_id;
    std::string error;
    mutable std::mutex mutex;
    mutable std::condition_variable changed;

    bool terminal() const { return status == RunStatus::Done || status == RunStatus::Failed; }
};

RunManager::RunManager(RunManagerOptions options) : options_(std::move(options)) {
    if (!options_.gateways) throw std::invalid_argument("RunManager needs a gateway factory");
    std::error_code ec;
    fs::create_directories(options_.data_dir, ec);
    if (ec) throw IoError("cannot create " + options_.data_dir.string() + ": " + ec.message());
}

RunManager::~RunManager() {
    workers_.clear();
}

const Clock& RunManager::clock() const {
    return options_.clock ? *options_.clock : system_clock_;
}

std::string RunManager::submit(RunSubmission submission) {
    auto run = std::make_shared<Run>();
    run->selection = serialize_selection(submission.selection);
    std::lock_guard lock(mutex_);
    run->id = derive_run_id(submission.selection, submission.seed, options_.provider_id) + "-" +
              std::to_string(++sequence_);
    runs_.emplace(run->id, run);
    workers_.emplace_back([this, run, sub = std::move(submission)]() mutable { execute(run, std::move(sub)); });
    return run->id;
}

void RunManager::execute(std::shared_ptr<Run> run, RunSubmission submission) {
    {
        std::lock_guard lock(run->mutex);
        run->status = RunStatus::Running;
    }
    run->changed.notify_all();
    auto append = [&](const ProgressEvent& e) {
        {
            std::lock_guard lock(run->mutex);
            run->events.push_back(e);
        }
        run->changed.notify_all();
    };
    const fs::path dir = options_.data_dir / run->id;
    try {
        auto gateway = options_.gateways(submission.seed);
        RunOptions opts;
        opts.run_id = run->id;
        opts.seed = submission.seed;
        opts.parallelism = options_.parallelism;
        opts.curation = submission.curation;
        opts.compute_metrics = submission.compute_metrics;
        opts.clock = &clock();
        opts.on_event = append;
        auto out = execute_run(submission.selection, *gateway, dir, opts);
        {
            std::lock_guard lock(mutex_);
            datasets_[run->id] = {dir, out.manifest, submission.seed};
        }
        std::lock_guard lock(run->mutex);
        run->dataset_id = run->id;
        run->status = RunStatus::Done;
    } catch (...) {
        const auto message = describe(std::current_exception());
        std::lock_guard lock(run->mutex);
        const bool reported = !run->events.empty() && run->events.back().phase == Phase::Failed;
        if (!reported) {
            ProgressEvent e;
            e.run_id = run->id;
            e.phase = Phase::Failed;
            e.message = message;
            e.timestamp = clock().now_iso();
            run->events.push_back(std::move(e));
        }
        run->error = message;
        run->status = RunStatus::Failed;
    }
    run->changed.notify_all();
}

std::shared_ptr<RunManager::Run> RunManager::find(const std::string& run_id) const {
    std::lock_guard lock(mutex_);
    auto it = runs_.find(run_id);
    if (it == runs_.end()) throw NotFound("no run '" + run_id + "'");
    return it->second;
}

RunSnapshot RunManager::snapshot(const std::string& run_id) const {
    auto run = find(run_id);
    std::lock_guard lock(run->mutex);
    RunSnapshot s;
    s.run_id = run->id;
    s.selection = run->selection;
    s.status = run->status;
    s.event_count = run->events.size();
    s.dataset_id = run->dataset_id;
    if (!run->events.empty()) s.last_event = run->events.back();
    s.error = run->error;
    return s;
}

std::vector<ProgressEvent> RunManager::events(const std::string& run_id, std::size_t from,
                                              std::chrono::milliseconds timeout) const {
    auto run = find(run_id);
    std::unique_lock lock(run->mutex);
    run->changed.wait_for(lock, timeout, [&] { return run->events.size() > from || run->terminal(); });
    if (from >= run->events.size()) return {};
    return {run->events.begin() + static_cast<std::ptrdiff_t>(from), run->events.end()};
}

bool RunManager::finished(const std::string& run_id) const {
    auto run = find(run_id);
    std::lock_guard lock(run->mutex);
    return run->terminal();
}

RunStatus RunManager::wait(const std::string& run_id) const {
    auto run = find(run_id);
    std::unique_lock lock(run->mutex);
    run->changed.wait(lock, [&] { return run->terminal(); });
    return run->status;
}

RunManager::DatasetEntry RunManager::dataset_entry(const std::string& dataset_id) const {
    std::lock_guard lock(mutex_);
    auto it = datasets_.find(dataset_id);
    if (it != datasets_.end()) return it->second;
    if (auto run = runs_.find(dataset_id); run != runs_.end()) {
        throw NotReady("run '" + dataset_id + "' has not produced a dataset yet");
    }
    throw NotFound("no dataset '" + dataset_id + "'");
}

fs::path RunManager::dataset_file(const std::string& dataset_id) const {
    auto entry = dataset_entry(dataset_id);
    return entry.dir / entry.manifest.data_file;
}

DatasetManifest RunManager::dataset_manifest(const std::string& dataset_id) const {
    return dataset_entry(dataset_id).manifest;
}

fs::path RunManager::dataset_file(const std::string& dataset_id, OutputFormat format) {
    auto entry = dataset_entry(dataset_id);
    const auto wanted = entry.dir / dataset_file_name(format);
    if (entry.manifest.data_file == dataset_file_name(format)) return wanted;
    std::lock_guard lock(mutex_);
    if (!fs::exists(wanted)) {
        const auto ds = load_dataset(entry.dir / entry.manifest.data_file);
        write_text_file(wanted, format == OutputFormat::Json ? to_json_document(ds) : to_csv(ds));
    }
    return wanted;
}

std::pair<std::string, CurationReport> RunManager::curate(const std::string& dataset_id, const CurationParams& params) {
    auto entry = dataset_entry(dataset_id);
    std::string id;
    {
        std::lock_guard lock(mutex_);
        for (int n = 1;; ++n) {
            id = dataset_id + "-curated-" + std::to_string(n);
            if (!datasets_.count(id)) break;
        }
        datasets_[id] = {};  // reserve the id
    }
    try {
        auto gateway = options_.gateways(entry.seed);
        auto out = curate_persisted(entry.dir / entry.manifest.data_file, params, *gateway, options_.data_dir / id, id,
                                    clock());
        std::lock_guard lock(mutex_);
        datasets_[id] = {options_.data_dir / id, out.manifest, entry.seed};
        return {id, std::move(out.report)};
    } catch (...) {
        std::lock_guard lock(mutex_);
        datasets_.erase(id);
        throw;
    }
}

DiversityReport RunManager::metrics(const std::string& dataset_id, int ngram_order) {
    auto entry = dataset_entry(dataset_id);
    const auto ds = load_dataset(entry.dir / entry.manifest.data_file);
    auto gateway = options_.gateways(entry.seed);
    auto report = diversity_report(ds.texts(), *gateway, ngram_order);
    write_text_file(entry.dir / "diversity_report.json", report.to_json().dump(2) + "\n");
    return report;
}

}  // namespace synthline
