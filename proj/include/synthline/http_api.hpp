#pragma once

#include "synthline/error.hpp"
#include "synthline/feature_model.hpp"
#include "synthline/run_service.hpp"

#include <memory>
#include <string>

namespace synthline {

class BindError : public Error {
public:
    explicit BindError(const std::string& message) : Error("BindError", message) {}
};

/// JSON-over-HTTP front end for a RunManager.
///
///   GET  /api/v1/feature-model
///   POST /api/v1/selections/validate
///   POST /api/v1/runs                        -> 201 {run_id} | 422 {violations}
///   GET  /api/v1/runs/{id}
///   GET  /api/v1/runs/{id}/events            server-sent events; ?mode=poll for a JSON array
///   GET  /api/v1/runs/{id}/dataset?format=csv|json
///   POST /api/v1/datasets/{id}/curate
///   GET  /api/v1/datasets/{id}/metrics
class ApiServer {
public:
    ApiServer(RunManager& runs, const FeatureModel& model);
    ~ApiServer();
    ApiServer(const ApiServer&) = delete;
    ApiServer& operator=(const ApiServer&) = delete;

    /// Binds the listening socket; port 0 picks a free port. Returns the
    /// bound port.
    int bind(const std::string& host, int port);

    /// Serves until stop(); requires bind().
    void serve();
    void start();  // serve() on a background thread
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
};

}  // namespace synthline
