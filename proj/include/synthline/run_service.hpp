#pragma once

#include "synthline/curation.hpp"
#include "synthline/dataset.hpp"
#include "synthline/diversity.hpp"
#include "synthline/feature_model.hpp"
#include "synthline/generator.hpp"
#include "synthline/llm_gateway.hpp"
#include "synthline/pace.hpp"
#include "synthline/persistence.hpp"
#include "synthline/promptline.hpp"

#include <nlohmann/json.hpp>

#include <condition_variable>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

namespace synthline {

/// "run-" followed by 12 hex digits derived from the selection, seed and
/// provider; identical inputs give identical ids.
std::string derive_run_id(const ConfigSelection& selection, std::uint64_t seed, const std::string& provider_id);

struct RunOptions {
    std::string run_id;
    std::uint64_t seed = 0;
    int parallelism = 1;
    std::optional<CurationParams> curation;
    bool compute_metrics = false;
    int ngram_order = 3;
    const Clock* clock = nullptr;  // SystemClock when null
    const PromptTemplates* templates = nullptr;  // builtin when null
    EventSink on_event;
};

struct RunOutput {
    Dataset dataset;
    DatasetManifest manifest;
    std::filesystem::path data_file;
    GenerationResult generation;
    std::map<std::size_t, PaceState> pace_traces;  // by cell index
    std::optional<CurationReport> curation;
    std::optional<DiversityReport> diversity;
};

/// The full pipeline: expand, optionally optimise prompts, generate,
/// optionally curate, persist. Writes into `out_dir`:
///   dataset.csv | dataset.json, manifest.json, selection.json, events.jsonl,
///   pace/cell-<n>.json (PACE only), curation_report.json, diversity_report.json.
/// Emits a `failed` event and rethrows when any stage throws.
RunOutput execute_run(const ConfigSelection& selection, LlmGateway& gateway, const std::filesystem::path& out_dir,
                      const RunOptions& options);

/// Curates a persisted dataset into `out_dir` (dataset, manifest and
/// curation_report.json). The new manifest keeps the source provenance.
struct CurateOutput {
    Dataset dataset;
    CurationReport report;
    DatasetManifest manifest;
    std::filesystem::path data_file;
};
CurateOutput curate_persisted(const std::filesystem::path& data_file, const CurationParams& params, LlmGateway& gateway,
                              const std::filesystem::path& out_dir, const std::string& dataset_id, const Clock& clock);

// ---------------------------------------------------------------------------
// Background runs
// ---------------------------------------------------------------------------

enum class RunStatus { Queued, Running, Done, Failed };
std::string_view to_string(RunStatus status);

struct RunSnapshot {
    std::string run_id;
    nlohmann::json selection;
    RunStatus status = RunStatus::Queued;
    std::size_t event_count = 0;
    std::optional<std::string> dataset_id;
    std::optional<ProgressEvent> last_event;
    std::string error;

    nlohmann::json to_json() const;
};

struct RunSubmission {
    ConfigSelection selection;
    std::uint64_t seed = 0;
    std::optional<CurationParams> curation;
    bool compute_metrics = false;
};

/// Makes the gateway for one run or dataset operation; the argument is the
/// run seed.
using GatewayFactory = std::function<std::unique_ptr<LlmGateway>(std::uint64_t seed)>;

struct RunManagerOptions {
    std::filesystem::path data_dir;
    GatewayFactory gateways;
    std::string provider_id;
    int parallelism = 1;
    const Clock* clock = nullptr;
};

class NotFound : public Error {
public:
    explicit NotFound(const std::string& message) : Error("NotFound", message) {}
};

class NotReady : public Error {
public:
    explicit NotReady(const std::string& message) : Error("NotReady", message) {}
};

/// Owns background runs and the registry of persisted datasets. Each run has
/// its own task and gateway; its event log is append-only and readers block
/// on new events with a timeout.
class RunManager {
public:
    explicit RunManager(RunManagerOptions options);
    ~RunManager();
    RunManager(const RunManager&) = delete;
    RunManager& operator=(const RunManager&) = delete;

    std::string submit(RunSubmission submission);
    RunSnapshot snapshot(const std::string& run_id) const;

    /// Events from index `from` on. Waits up to `timeout` when none are
    /// available yet and the run is still active.
    std::vector<ProgressEvent> events(const std::string& run_id, std::size_t from,
                                      std::chrono::milliseconds timeout = std::chrono::milliseconds(0)) const;
    bool finished(const std::string& run_id) const;

    /// Blocks until the run is done or failed.
    RunStatus wait(const std::string& run_id) const;

    std::filesystem::path dataset_file(const std::string& dataset_id) const;
    DatasetManifest dataset_manifest(const std::string& dataset_id) const;
    /// Data file of the run's dataset in the requested format, written on
    /// demand when the run persisted the other format.
    std::filesystem::path dataset_file(const std::string& dataset_id, OutputFormat format);

    std::pair<std::string, CurationReport> curate(const std::string& dataset_id, const CurationParams& params);
    DiversityReport metrics(const std::string& dataset_id, int ngram_order = 3);

private:
    struct Run;
    struct DatasetEntry {
        std::filesystem::path dir;
        DatasetManifest manifest;
        std::uint64_t seed = 0;
    };

    void execute(std::shared_ptr<Run> run, RunSubmission submission);
    std::shared_ptr<Run> find(const std::string& run_id) const;
    DatasetEntry dataset_entry(const std::string& dataset_id) const;
    const Clock& clock() const;

    RunManagerOptions options_;
    SystemClock system_clock_;
    mutable std::mutex mutex_;
    std::map<std::string, std::shared_ptr<Run>> runs_;
    std::map<std::string, DatasetEntry> datasets_;
    std::uint64_t sequence_ = 0;
    std::vector<std::jthread> workers_;
};

}  // namespace synthline
