#include "synthline/curation.hpp"
#include "synthline/diversity.hpp"
#include "synthline/feature_model.hpp"
#include "synthline/http_api.hpp"
#include "synthline/pace.hpp"
#include "synthline/persistence.hpp"
#include "synthline/providers.hpp"
#include "synthline/run_service.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <csignal>
#include <filesystem>
#include <iostream>

using namespace synthline;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Common {
    std::string provider = "mock";
    std::uint64_t seed = 0;
    int parallelism = 1;
};

ProviderProfile resolve_provider(const Common& c) {
    if (c.provider == "mock") return ProviderProfile::mock_profile(c.seed);
    if (c.provider == "mock-low-diversity") return ProviderProfile::mock_profile(c.seed, true);
    auto profile = ProviderProfile::load(c.provider);
    if (profile.kind == ProviderProfile::Kind::Mock) profile.mock.seed = c.seed;
    return profile;
}

std::unique_ptr<Clock> clock_for(const ProviderProfile& profile) {
    if (profile.kind == ProviderProfile::Kind::Mock) return std::make_unique<FixedClock>(FixedClock::from_environment());
    return std::make_unique<SystemClock>();
}

ConfigSelection load_selection(const std::string& path) {
    const auto body = read_text_file(path);
    json raw = json::parse(body, nullptr, false);
    if (raw.is_discarded()) throw std::invalid_argument(path + " is not valid JSON");
    return validate_selection(default_feature_model(), raw);
}

void add_common(CLI::App* cmd, Common& c) {
    cmd->add_option("--provider", c.provider, "mock, mock-low-diversity, or a provider profile JSON file")
        ->capture_default_str();
    cmd->add_option("--seed", c.seed, "Seed for generation, sampling and the mock provider")->capture_default_str();
    cmd->add_option("--parallelism", c.parallelism, "Concurrent cells / actor pairs")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
}

CurationParams make_curation(double fraction, bool no_balance, const std::string& scope, std::uint64_t seed) {
    CurationParams p;
    p.removal_fraction = fraction;
    p.balance = !no_balance;
    p.random_seed = seed;
    p.scope = scope == "per-label" ? SimilarityScope::PerLabel : SimilarityScope::Global;
    p.validate();
    return p;
}

int cmd_generate(const Common& c, const std::string& config, const fs::path& out, bool curate_flag, double fraction,
                 bool metrics) {
    const auto selection = load_selection(config);
    const auto profile = resolve_provider(c);
    auto gateway = make_gateway(profile);
    const auto clock = clock_for(profile);

    RunOptions opts;
    opts.seed = c.seed;
    opts.parallelism = c.parallelism;
    opts.clock = clock.get();
    opts.compute_metrics = metrics;
    if (curate_flag) opts.curation = make_curation(fraction, false, "global", c.seed);
    opts.on_event = [](const ProgressEvent& e) {
        std::cerr << "[" << to_string(e.phase) << " " << e.completed_cells << "/" << e.total_cells << "] " << e.message
                  << "\n";
    };
    auto result = execute_run(selection, *gateway, out, opts);
    std::cout << json{{"run_id", result.manifest.run_id},
                      {"data_file", result.data_file.string()},
                      {"samples", result.dataset.size()},
                      {"label_counts", result.manifest.label_counts},
                      {"shortfall", result.manifest.shortfall}}
                     .dump(2)
              << "\n";
    return 0;
}

int cmd_curate(const Common& c, const fs::path& in, fs::path out, double fraction, bool no_balance,
               const std::string& scope) {
    const auto profile = resolve_provider(c);
    auto gateway = make_gateway(profile);
    const auto clock = clock_for(profile);
    if (out.empty()) out = in.parent_path() / "curated";
    const auto params = make_curation(fraction, no_balance, scope, c.seed);
    auto result = curate_persisted(in, params, *gateway, out, "curated-" + in.stem().string(), *clock);
    json summary = result.report.to_json();
    summary["data_file"] = result.data_file.string();
    std::cout << summary.dump(2) << "\n";
    return 0;
}

int cmd_metrics(const Common& c, const fs::path& in, fs::path out, int ngram) {
    const auto profile = resolve_provider(c);
    auto gateway = make_gateway(profile);
    const auto ds = load_dataset(in);
    const auto report = diversity_report(ds.texts(), *gateway, ngram);
    if (out.empty()) out = in.parent_path() / "diversity_report.json";
    write_text_file(out, report.to_json().dump(2) + "\n");
    std::cout << report.to_json().dump(2) << "\n";
    return 0;
}

int cmd_pace(const Common& c, const std::string& config, const fs::path& out, std::size_t cell_index) {
    const auto selection = load_selection(config);
    const auto profile = resolve_provider(c);
    auto gateway = make_gateway(profile);
    const auto configs = expand_atomic(selection);
    const auto plan = allocate_quotas(selection.labels, configs, selection.subset_size);
    if (cell_index >= plan.cells().size()) {
        throw std::invalid_argument("--cell must be below " + std::to_string(plan.cells().size()));
    }
    const auto& cell = plan.cells()[cell_index];

    auto cfg = PaceConfig::from_selection(selection);
    cfg.seed = c.seed;
    cfg.parallelism = c.parallelism;
    PaceOptimizer pace(*gateway, cfg);
    const auto initial = build_prompt(selection.labels.at(cell.label_index), configs.at(cell.config_index),
                                      selection.generation.samples_per_prompt);
    const auto result = pace.optimize(initial);

    json trace = result.state.to_json();
    trace["label"] = cell.label;
    trace["atomic_config_id"] = cell.config_id;
    write_text_file(out / "pace_trace.json", trace.dump(2) + "\n");

    json series = json::array();
    for (const auto& s : result.state.score_series()) series.push_back(s ? json(*s) : json());
    std::cout << json{{"cell", cell.label + "/" + cell.config_id},
                      {"initial_score", trace["initial_score"]},
                      {"final_score", trace["incumbent_score"]},
                      {"score_series", series},
                      {"actor_calls", gateway->successful_calls(CallPurpose::Actor)},
                      {"critic_calls", gateway->successful_calls(CallPurpose::Critic)},
                      {"update_calls", gateway->successful_calls(CallPurpose::Update)},
                      {"trace_file", (out / "pace_trace.json").string()}}
                     .dump(2)
              << "\n";
    return 0;
}

ApiServer* g_server = nullptr;

int cmd_serve(const Common& c, const std::string& host, int port, const fs::path& data_dir) {
    const auto profile = resolve_provider(c);
    const auto clock = clock_for(profile);
    RunManagerOptions opts;
    opts.data_dir = data_dir;
    opts.provider_id = profile.id();
    opts.parallelism = c.parallelism;
    opts.clock = clock.get();
    opts.gateways = [profile](std::uint64_t seed) {
        auto p = profile;
        if (p.kind == ProviderProfile::Kind::Mock) p.mock.seed = seed;
        return make_gateway(p);
    };
    RunManager runs(opts);
    ApiServer server(runs, default_feature_model());
    const int bound = server.bind(host, port);
    std::cerr << json{{"listening", host + ":" + std::to_string(bound)}, {"data_dir", data_dir.string()}}.dump() << "\n";
    g_server = &server;
    std::signal(SIGINT, [](int) {
        if (g_server) g_server->stop();
    });
    std::signal(SIGTERM, [](int) {
        if (g_server) g_server->stop();
    });
    server.serve();
    g_server = nullptr;
    return 0;
}

void report_error(const std::string& code, const std::string& message, const json& extra = json::object()) {
    json line = {{"error", code}, {"message", message}};
    line.update(extra);
    std::cerr << line.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"synthline: synthetic requirements generation"};
    app.require_subcommand(1);
    Common common;

    std::string config;
    std::string out;
    std::string in;
    double fraction = 0.2;
    bool no_balance = false;
    bool curate_flag = false;
    bool metrics_flag = false;
    std::string scope = "global";
    int ngram = 3;
    std::size_t cell = 0;
    std::string host = "127.0.0.1";
    int port = 8080;
    std::string data_dir = "runs";

    auto* generate = app.add_subcommand("generate", "Expand a configuration and generate a dataset");
    generate->add_option("--config", config, "Configuration JSON")->required()->check(CLI::ExistingFile);
    generate->add_option("--out", out, "Output directory")->required();
    generate->add_flag("--curate", curate_flag, "Curate before persisting");
    generate->add_option("--fraction", fraction, "Similarity removal fraction when curating")->capture_default_str();
    generate->add_flag("--metrics", metrics_flag, "Compute INGF/APS and reference them from the manifest");
    add_common(generate, common);

    auto* curate_cmd = app.add_subcommand("curate", "Deduplicate, filter and balance a dataset");
    curate_cmd->add_option("--in", in, "Dataset file (.csv or .json)")->required()->check(CLI::ExistingFile);
    curate_cmd->add_option("--out", out, "Output directory (default: <input dir>/curated)");
    curate_cmd->add_option("--fraction", fraction, "Fraction removed by the similarity filter")->capture_default_str();
    curate_cmd->add_flag("--no-balance", no_balance, "Skip class balancing");
    curate_cmd->add_option("--scope", scope, "Similarity scope")
        ->check(CLI::IsMember({"global", "per-label"}))
        ->capture_default_str();
    add_common(curate_cmd, common);

    auto* metrics_cmd = app.add_subcommand("metrics", "Compute INGF and APS for a dataset");
    metrics_cmd->add_option("--in", in, "Dataset file (.csv or .json)")->required()->check(CLI::ExistingFile);
    metrics_cmd->add_option("--out", out, "Report path (default: <input dir>/diversity_report.json)");
    metrics_cmd->add_option("--ngram", ngram, "n-gram order")->capture_default_str()->check(CLI::PositiveNumber);
    add_common(metrics_cmd, common);

    auto* pace_cmd = app.add_subcommand("pace", "Optimise the prompt of one cell and write its trace");
    pace_cmd->add_option("--config", config, "Configuration JSON")->required()->check(CLI::ExistingFile);
    pace_cmd->add_option("--out", out, "Output directory")->required();
    pace_cmd->add_option("--cell", cell, "Cell index in canonical order")->capture_default_str();
    add_common(pace_cmd, common);

    auto* serve_cmd = app.add_subcommand("serve", "Run the HTTP API");
    serve_cmd->add_option("--host", host)->capture_default_str();
    serve_cmd->add_option("--port", port)->capture_default_str()->check(CLI::Range(0, 65535));
    serve_cmd->add_option("--data-dir", data_dir, "Directory for run artifacts")->capture_default_str();
    add_common(serve_cmd, common);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        report_error("UsageError", e.what());
        return 2;
    }

    try {
        if (*generate) return cmd_generate(common, config, out, curate_flag, fraction, metrics_flag);
        if (*curate_cmd) return cmd_curate(common, in, out, fraction, no_balance, scope);
        if (*metrics_cmd) return cmd_metrics(common, in, out, ngram);
        if (*pace_cmd) return cmd_pace(common, config, out, cell);
        if (*serve_cmd) return cmd_serve(common, host, port, data_dir);
    } catch (const ValidationError& e) {
        report_error(e.code(), e.what(), {{"violations", e.to_json()}});
        return 1;
    } catch (const Error& e) {
        report_error(e.code(), e.what());
        return 1;
    } catch (const json::exception& e) {
        report_error("BadInput", e.what());
        return 1;
    } catch (const std::exception& e) {
        report_error("Error", e.what());
        return 1;
    }
    return 1;
}
