#include "synthline/http_api.hpp"

#include <httplib.h>

#include <thread>

namespace synthline {

using nlohmann::json;

namespace {

void send_json(httplib::Response& res, int status, const json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

void send_error(httplib::Response& res, int status, const std::string& code, const std::string& message) {
    send_json(res, status, {{"error", code}, {"message", message}});
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    json j = json::parse(req.body, nullptr, false);
    if (j.is_discarded()) throw std::invalid_argument("request body is not valid JSON");
    return j;
}

CurationParams curation_params(const json& j) {
    CurationParams p;
    p.removal_fraction = j.value("removal_fraction", j.value("fraction", p.removal_fraction));
    p.balance = j.value("balance", p.balance);
    p.random_seed = j.value("random_seed", j.value("seed", p.random_seed));
    const auto scope = j.value("scope", std::string("global"));
    if (scope == "per-label") p.scope = SimilarityScope::PerLabel;
    else if (scope != "global") throw std::invalid_argument("scope must be 'global' or 'per-label'");
    p.validate();
    return p;
}

bool terminal(Phase p) {
    return p == Phase::Done || p == Phase::Failed;
}

std::string sse_frame(std::size_t index, const ProgressEvent& e) {
    return "id: " + std::to_string(index) + "\nevent: progress\ndata: " + e.to_json().dump() + "\n\n";
}

}  // namespace

struct ApiServer::Impl {
    RunManager& runs;
    const FeatureModel& model;
    httplib::Server server;
    std::jthread thread;

    Impl(RunManager& r, const FeatureModel& m) : runs(r), model(m) { routes(); }

    /// Runs `fn` and maps library errors onto HTTP status codes.
    template <typename Fn>
    static void guarded(httplib::Response& res, Fn&& fn) {
        try {
            fn();
        } catch (const ValidationError& e) {
            send_json(res, 422, {{"error", e.code()}, {"message", e.what()}, {"violations", e.to_json()}});
        } catch (const NotFound& e) {
            send_error(res, 404, e.code(), e.what());
        } catch (const NotReady& e) {
            send_error(res, 409, e.code(), e.what());
        } catch (const json::exception& e) {
            send_error(res, 400, "BadRequest", e.what());
        } catch (const std::invalid_argument& e) {
            send_error(res, 400, "BadRequest", e.what());
        } catch (const Error& e) {
            send_error(res, 500, e.code(), e.what());
        } catch (const std::exception& e) {
            send_error(res, 500, "InternalError", e.what());
        }
    }

    void routes() {
        server.set_post_routing_handler([](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Origin", "*");
        });
        server.Options(R"(/api/v1/.*)", [](const httplib::Request&, httplib::Response& res) {
            res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
            res.set_header("Access-Control-Allow-Headers", "Content-Type, Last-Event-ID");
            res.status = 204;
        });

        server.Get("/api/v1/feature-model", [this](const httplib::Request&, httplib::Response& res) {
            send_json(res, 200, model.to_json());
        });

        server.Post("/api/v1/selections/validate", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                try {
                    auto selection = validate_selection(model, parse_body(req));
                    send_json(res, 200, {{"valid", true},
                                         {"violations", json::array()},
                                         {"atomic_count", atomic_count(selection)},
                                         {"config_hash", config_hash(selection)}});
                } catch (const ValidationError& e) {
                    send_json(res, 200, {{"valid", false}, {"violations", e.to_json()}});
                }
            });
        });

        server.Post("/api/v1/runs", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const json body = parse_body(req);
                const bool wrapped = body.is_object() && body.contains("config") && body.at("config").is_object();
                RunSubmission sub;
                sub.selection = validate_selection(model, wrapped ? body.at("config") : body);
                if (wrapped) {
                    sub.seed = body.value("seed", std::uint64_t{0});
                    if (body.contains("curation") && !body.at("curation").is_null()) {
                        sub.curation = curation_params(body.at("curation"));
                    }
                    sub.compute_metrics = body.value("metrics", false);
                }
                const auto id = runs.submit(std::move(sub));
                res.set_header("Location", "/api/v1/runs/" + id);
                send_json(res, 201, {{"run_id", id}, {"status", "queued"}});
            });
        });

        server.Get(R"(/api/v1/runs/([^/]+))", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] { send_json(res, 200, runs.snapshot(req.matches[1]).to_json()); });
        });

        server.Get(R"(/api/v1/runs/([^/]+)/events)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                runs.snapshot(id);  // 404 for unknown runs
                if (req.get_param_value("mode") == "poll") {
                    std::size_t from = 0;
                    if (req.has_param("from")) from = std::stoul(req.get_param_value("from"));
                    json arr = json::array();
                    for (const auto& e : runs.events(id, from)) arr.push_back(e.to_json());
                    send_json(res, 200, arr);
                    return;
                }
                std::size_t start = 0;
                if (req.has_header("Last-Event-ID")) start = std::stoul(req.get_header_value("Last-Event-ID")) + 1;
                res.set_header("Cache-Control", "no-cache");
                res.set_chunked_content_provider(
                    "text/event-stream",
                    [this, id, next = start](std::size_t, httplib::DataSink& sink) mutable {
                        const bool was_finished = runs.finished(id);
                        auto batch = runs.events(id, next, std::chrono::milliseconds(250));
                        for (const auto& e : batch) {
                            const auto frame = sse_frame(next, e);
                            if (!sink.write(frame.data(), frame.size())) return false;
                            ++next;
                            if (terminal(e.phase)) {
                                sink.done();
                                return true;
                            }
                        }
                        if (batch.empty() && was_finished) sink.done();
                        return true;
                    });
            });
        });

        server.Get(R"(/api/v1/runs/([^/]+)/dataset)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const std::string id = req.matches[1];
                const auto snap = runs.snapshot(id);
                if (snap.status != RunStatus::Done || !snap.dataset_id) {
                    send_error(res, 409, "NotReady", "run '" + id + "' is " + std::string(to_string(snap.status)));
                    return;
                }
                const auto format = req.has_param("format") ? req.get_param_value("format") : std::string("csv");
                if (format != "csv" && format != "json") throw std::invalid_argument("format must be csv or json");
                const auto path = runs.dataset_file(*snap.dataset_id, format == "json" ? OutputFormat::Json : OutputFormat::Csv);
                res.status = 200;
                res.set_content(read_text_file(path), format == "json" ? "application/json" : "text/csv; charset=utf-8");
            });
        });

        server.Post(R"(/api/v1/datasets/([^/]+)/curate)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                const auto params = curation_params(parse_body(req));
                auto [id, report] = runs.curate(req.matches[1], params);
                send_json(res, 201, {{"dataset_id", id}, {"report", report.to_json()}});
            });
        });

        server.Get(R"(/api/v1/datasets/([^/]+)/metrics)", [this](const httplib::Request& req, httplib::Response& res) {
            guarded(res, [&] {
                int n = 3;
                if (req.has_param("ngram")) n = std::stoi(req.get_param_value("ngram"));
                if (n < 1) throw std::invalid_argument("ngram must be >= 1");
                send_json(res, 200, runs.metrics(req.matches[1], n).to_json());
            });
        });
    }
};

ApiServer::ApiServer(RunManager& runs, const FeatureModel& model) : impl_(std::make_unique<Impl>(runs, model)) {}

ApiServer::~ApiServer() {
    stop();
}

int ApiServer::bind(const std::string& host, int port) {
    if (port == 0) {
        const int bound = impl_->server.bind_to_any_port(host);
        if (bound < 0) throw BindError("cannot bind " + host + " on any port");
        return bound;
    }
    if (!impl_->server.bind_to_port(host, port)) {
        throw BindError("cannot bind " + host + ":" + std::to_string(port));
    }
    return port;
}

void ApiServer::serve() {
    impl_->server.listen_after_bind();
}

void ApiServer::start() {
    impl_->thread = std::jthread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
}

void ApiServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
}

}  // namespace synthline
