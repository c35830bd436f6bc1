#include "synthline/http_api.hpp"

#include "../support/fixtures.hpp"
#include "../support/sse.hpp"
#include "../support/stubs.hpp"

#include <doctest.h>
#include <httplib.h>

using namespace synthline;
using nlohmann::json;

namespace {

struct Harness {
    std::filesystem::path dir = fixtures::temp_dir("api");
    FixedClock clock{0};
    RunManager runs;
    ApiServer server;
    int port = 0;

    Harness()
        : runs([this] {
              RunManagerOptions o;
              o.data_dir = dir;
              o.gateways = [](std::uint64_t) { return stubs::mock_gateway(); };
              o.provider_id = "mock";
              o.clock = &clock;
              return o;
          }()),
          server(runs, default_feature_model()) {
        port = server.bind("127.0.0.1", 0);
        server.start();
    }
    ~Harness() {
        server.stop();
        std::filesystem::remove_all(dir);
    }

    httplib::Client client() const {
        httplib::Client c("127.0.0.1", port);
        c.set_read_timeout(std::chrono::seconds(30));
        return c;
    }

    std::string submit(const json& body) {
        auto res = client().Post("/api/v1/runs", body.dump(), "application/json");
        REQUIRE(res);
        REQUIRE(res->status == 201);
        return json::parse(res->body)["run_id"];
    }
};

}  // namespace

TEST_SUITE("http_api") {

TEST_CASE("feature model and selection validation") {
    Harness h;
    auto c = h.client();
    auto fm = c.Get("/api/v1/feature-model");
    REQUIRE(fm);
    CHECK(fm->status == 200);
    CHECK(json::parse(fm->body).is_object());
    CHECK(fm->get_header_value("Access-Control-Allow-Origin") == "*");

    auto ok = c.Post("/api/v1/selections/validate", fixtures::base_selection().dump(), "application/json");
    REQUIRE(ok);
    auto body = json::parse(ok->body);
    CHECK(body["valid"] == true);
    CHECK(body["atomic_count"] == 72);

    auto bad_sel = fixtures::base_selection();
    bad_sel["specification_format"] = json::array({"Haiku"});
    bad_sel.erase("labels");
    auto bad = c.Post("/api/v1/selections/validate", bad_sel.dump(), "application/json");
    REQUIRE(bad);
    auto bad_body = json::parse(bad->body);
    CHECK(bad_body["valid"] == false);
    CHECK(bad_body["violations"].size() == 2);
}

TEST_CASE("run submission: 201 with a Location, then an event stream ending in done") {
    Harness h;
    auto c = h.client();
    auto res = c.Post("/api/v1/runs", json{{"config", fixtures::small_selection(8, 2)}, {"seed", 4}}.dump(),
                      "application/json");
    REQUIRE(res);
    CHECK(res->status == 201);
    const std::string id = json::parse(res->body)["run_id"];
    CHECK(res->get_header_value("Location") == "/api/v1/runs/" + id);

    auto stream = c.Get("/api/v1/runs/" + id + "/events");
    REQUIRE(stream);
    CHECK(stream->status == 200);
    CHECK(stream->get_header_value("Content-Type").rfind("text/event-stream", 0) == 0);
    auto frames = sse::parse(stream->body);
    REQUIRE_FALSE(frames.empty());
    std::size_t prev = 0;
    for (std::size_t i = 0; i < frames.size(); ++i) {
        CHECK(frames[i].id == std::to_string(i));
        CHECK(frames[i].event == "progress");
        CHECK(frames[i].data["completed_cells"].get<std::size_t>() >= prev);
        prev = frames[i].data["completed_cells"];
    }
    CHECK(frames.back().data["phase"] == "done");

    httplib::Headers resume{{"Last-Event-ID", std::to_string(frames.size() - 2)}};
    auto tail = c.Get("/api/v1/runs/" + id + "/events", resume);
    REQUIRE(tail);
    auto tail_frames = sse::parse(tail->body);
    REQUIRE(tail_frames.size() == 1);
    CHECK(tail_frames[0].data["phase"] == "done");

    auto poll = c.Get("/api/v1/runs/" + id + "/events?mode=poll&from=1");
    REQUIRE(poll);
    CHECK(json::parse(poll->body).size() == frames.size() - 1);

    auto snap = c.Get("/api/v1/runs/" + id);
    REQUIRE(snap);
    CHECK(json::parse(snap->body)["status"] == "done");
}

TEST_CASE("invalid configuration: 422 listing every violation") {
    Harness h;
    auto sel = fixtures::base_selection();
    sel["specification_format"] = json::array({"Haiku"});
    sel["subset_size"] = "many";
    sel["language"] = json::array();
    auto res = h.client().Post("/api/v1/runs", sel.dump(), "application/json");
    REQUIRE(res);
    CHECK(res->status == 422);
    auto body = json::parse(res->body);
    CHECK(body["error"] == "ValidationError");
    CHECK(body["violations"].size() == 3);
}

TEST_CASE("malformed JSON is a 400 and unknown ids are 404") {
    Harness h;
    auto c = h.client();
    auto res = c.Post("/api/v1/runs", "{not json", "application/json");
    REQUIRE(res);
    CHECK(res->status == 400);
    auto missing = c.Get("/api/v1/runs/run-000000000000");
    REQUIRE(missing);
    CHECK(missing->status == 404);
    CHECK(c.Get("/api/v1/runs/run-000000000000/events")->status == 404);
    CHECK(c.Get("/api/v1/datasets/nope/metrics")->status == 404);
    CHECK(c.Post("/api/v1/datasets/nope/curate", "{}", "application/json")->status == 404);
}

TEST_CASE("dataset download in CSV and JSON") {
    Harness h;
    auto c = h.client();
    const std::string id = h.submit(json{{"config", fixtures::base_selection(500)}});
    h.runs.wait(id);
    auto csv = c.Get("/api/v1/runs/" + id + "/dataset?format=csv");
    REQUIRE(csv);
    CHECK(csv->status == 200);
    CHECK(csv->body.rfind("text,label\r\n", 0) == 0);
    auto js = c.Get("/api/v1/runs/" + id + "/dataset?format=json");
    REQUIRE(js);
    CHECK(json::parse(js->body).size() == 1000);
    CHECK(c.Get("/api/v1/runs/" + id + "/dataset?format=xml")->status == 400);
}

TEST_CASE("a pending run's dataset is not ready") {
    Harness h;
    auto chat = std::make_shared<stubs::FnChat>([](const ChatRequest&, int) -> std::string {
        std::this_thread::sleep_for(std::chrono::milliseconds(100));
        return "x";
    });
    // A separate manager whose runs are slow enough to observe.
    auto dir = fixtures::temp_dir("api-slow");
    RunManagerOptions o;
    o.data_dir = dir;
    o.gateways = [chat](std::uint64_t) {
        return std::make_unique<LlmGateway>(chat, std::make_shared<MockProvider>(), stubs::no_sleep());
    };
    RunManager slow(std::move(o));
    ApiServer server(slow, default_feature_model());
    const int port = server.bind("127.0.0.1", 0);
    server.start();
    httplib::Client c("127.0.0.1", port);
    auto res = c.Post("/api/v1/runs", fixtures::small_selection(4, 1).dump(), "application/json");
    REQUIRE(res);
    const std::string id = json::parse(res->body)["run_id"];
    auto early = c.Get("/api/v1/runs/" + id + "/dataset");
    REQUIRE(early);
    CHECK(early->status == 409);
    CHECK(json::parse(early->body)["error"] == "NotReady");
    slow.wait(id);
    CHECK(c.Get("/api/v1/runs/" + id + "/dataset")->status == 200);
    server.stop();
    std::filesystem::remove_all(dir);
}

TEST_CASE("curate and metrics endpoints") {
    Harness h;
    auto c = h.client();
    const std::string id = h.submit(json{{"config", fixtures::small_selection(10, 3)}, {"seed", 1}});
    h.runs.wait(id);
    const std::string dataset_id = *h.runs.snapshot(id).dataset_id;

    auto curated = c.Post("/api/v1/datasets/" + dataset_id + "/curate", json{{"removal_fraction", 0.2}}.dump(),
                          "application/json");
    REQUIRE(curated);
    CHECK(curated->status == 201);
    auto body = json::parse(curated->body);
    CHECK(body["report"]["input_count"] == 20);
    CHECK(body["report"]["stages"] == json::array({"dedup", "filter", "balance"}));

    auto metrics = c.Get("/api/v1/datasets/" + body["dataset_id"].get<std::string>() + "/metrics?ngram=2");
    REQUIRE(metrics);
    CHECK(metrics->status == 200);
    auto m = json::parse(metrics->body);
    CHECK(m["ngram_order"] == 2);
    CHECK(m["n_samples"] == body["report"]["after_balance"]);
    CHECK(c.Get("/api/v1/datasets/" + dataset_id + "/metrics?ngram=0")->status == 400);
}

}  // TEST_SUITE
