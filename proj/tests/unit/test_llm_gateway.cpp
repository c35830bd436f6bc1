#include "synthline/llm_gateway.hpp"
#include "synthline/providers.hpp"

#include "../support/stubs.hpp"

#include <doctest.h>
#include <httplib.h>

#include <atomic>
#include <cstdlib>
#include <thread>

using namespace synthline;
using namespace std::chrono_literals;

namespace {

/// Local OpenAI-compatible endpoint that answers with a scripted status
/// sequence, then 200.
class StubServer {
public:
    explicit StubServer(std::vector<int> statuses) : statuses_(std::move(statuses)) {
        server_.Post("/v1/chat/completions", [this](const httplib::Request& req, httplib::Response& res) {
            const int n = hits_++;
            last_auth_ = req.get_header_value("Authorization");
            last_body_ = req.body;
            if (n < static_cast<int>(statuses_.size()) && statuses_[n] != 200) {
                res.status = statuses_[n];
                res.set_content(R"({"error":{"message":"scripted"}})", "application/json");
                return;
            }
            res.set_content(R"({"choices":[{"message":{"role":"assistant","content":"hello"}}]})", "application/json");
        });
        server_.Post("/v1/embeddings", [this](const httplib::Request&, httplib::Response& res) {
            ++hits_;
            res.set_content(R"({"data":[{"index":1,"embedding":[0,1]},{"index":0,"embedding":[1,0]}]})",
                            "application/json");
        });
        port_ = server_.bind_to_any_port("127.0.0.1");
        thread_ = std::thread([this] { server_.listen_after_bind(); });
        server_.wait_until_ready();
    }
    ~StubServer() {
        server_.stop();
        thread_.join();
    }
    std::string base_url() const { return "http://127.0.0.1:" + std::to_string(port_) + "/v1"; }
    int hits() const { return hits_; }
    std::string last_auth() const { return last_auth_; }
    std::string last_body() const { return last_body_; }

private:
    std::vector<int> statuses_;
    httplib::Server server_;
    std::thread thread_;
    int port_ = 0;
    std::atomic<int> hits_{0};
    std::string last_auth_;
    std::string last_body_;
};

std::unique_ptr<LlmGateway> remote_gateway(const std::string& base_url, std::vector<std::chrono::milliseconds>* sleeps) {
    ProviderProfile p;
    p.kind = ProviderProfile::Kind::Remote;
    p.base_url = base_url;
    p.chat_model = "stub-model";
    p.embedding_model = "stub-embed";
    p.timeout = std::chrono::seconds(5);
    GatewayOptions o;
    o.sleep = [sleeps](std::chrono::milliseconds d) {
        if (sleeps) sleeps->push_back(d);
    };
    return make_gateway(p, o);
}

}  // namespace

TEST_SUITE("llm_gateway") {

TEST_CASE("HTTP 429 twice then 200 succeeds on the third attempt") {
    StubServer server({429, 429, 200});
    ::setenv(kApiKeyEnv, "test-key", 1);
    std::vector<std::chrono::milliseconds> sleeps;
    auto gw = remote_gateway(server.base_url(), &sleeps);
    CHECK(gw->chat_complete(stubs::user_request("hi")) == "hello");
    CHECK(server.hits() == 3);
    CHECK(server.last_auth() == "Bearer test-key");
    auto log = gw->call_log();
    REQUIRE(log.size() == 3);
    CHECK_FALSE(log[0].ok);
    CHECK(log[0].error == "TransientError:429");
    CHECK(log[1].attempt == 2);
    CHECK(log[2].ok);
    REQUIRE(sleeps.size() == 2);
    // 500 ms base doubled, with at most 25% jitter either way
    CHECK(sleeps[0] >= 375ms);
    CHECK(sleeps[0] <= 625ms);
    CHECK(sleeps[1] >= 750ms);
    CHECK(sleeps[1] <= 1250ms);
    ::unsetenv(kApiKeyEnv);
}

TEST_CASE("HTTP 401 is an AuthError with no retry") {
    StubServer server({401});
    std::vector<std::chrono::milliseconds> sleeps;
    auto gw = remote_gateway(server.base_url(), &sleeps);
    CHECK_THROWS_AS(gw->chat_complete(stubs::user_request("hi")), AuthError);
    CHECK(server.hits() == 1);
    CHECK(sleeps.empty());
    CHECK(gw->call_log().size() == 1);
}

TEST_CASE("persistent 503 exhausts retries as ProviderError") {
    StubServer server({503, 503, 503, 503});
    auto gw = remote_gateway(server.base_url(), nullptr);
    try {
        gw->chat_complete(stubs::user_request("hi"));
        FAIL("expected ProviderError");
    } catch (const ProviderError& e) {
        CHECK(e.code() == "ProviderError");
    }
    CHECK(server.hits() == 3);
}

TEST_CASE("400 is not retried") {
    StubServer server({400});
    auto gw = remote_gateway(server.base_url(), nullptr);
    CHECK_THROWS_AS(gw->chat_complete(stubs::user_request("hi")), ProviderError);
    CHECK(server.hits() == 1);
}

TEST_CASE("remote request carries model, sampling parameters and seed") {
    StubServer server({});
    auto gw = remote_gateway(server.base_url(), nullptr);
    auto req = stubs::user_request("hi");
    req.model = "";
    req.temperature = 0.0;
    req.seed = 42;
    gw->chat_complete(req);
    auto body = nlohmann::json::parse(server.last_body());
    CHECK(body["model"] == "stub-model");
    CHECK(body["temperature"] == 0.0);
    CHECK(body["seed"] == 42);
    CHECK(body["messages"][0]["role"] == "user");
}

TEST_CASE("remote embeddings are reordered by index") {
    StubServer server({});
    auto gw = remote_gateway(server.base_url(), nullptr);
    std::vector<std::string> texts{"a", "b"};
    auto v = gw->embed_batch(texts);
    CHECK(v[0].values == std::vector<double>{1, 0});
    CHECK(v[1].values == std::vector<double>{0, 1});
}

TEST_CASE("unreachable endpoint is retried then fails") {
    int port;
    {
        httplib::Server probe;
        port = probe.bind_to_any_port("127.0.0.1");
    }
    auto gw = remote_gateway("http://127.0.0.1:" + std::to_string(port) + "/v1", nullptr);
    CHECK_THROWS_AS(gw->chat_complete(stubs::user_request("hi")), ProviderError);
    CHECK(gw->call_log().size() == 3);
}

TEST_CASE("timeouts are retried and surface as TimeoutError") {
    auto chat = std::make_shared<stubs::FnChat>([](const ChatRequest&, int) -> std::string {
        throw TimeoutError("slow");
    });
    LlmGateway gw(chat, nullptr, stubs::no_sleep());
    CHECK_THROWS_AS(gw.chat_complete(stubs::user_request("x")), TimeoutError);
    CHECK(chat->calls() == 3);
}

TEST_CASE("transient then success is logged per attempt") {
    auto chat = std::make_shared<stubs::FnChat>([](const ChatRequest&, int n) -> std::string {
        if (n == 0) throw TransientError(502, "bad gateway");
        return "fine";
    });
    LlmGateway gw(chat, nullptr, stubs::no_sleep());
    CHECK(gw.chat_complete(stubs::user_request("x", CallPurpose::Actor)) == "fine");
    CHECK(gw.attempts(CallPurpose::Actor) == 2);
    CHECK(gw.successful_calls(CallPurpose::Actor) == 1);
    CHECK(gw.successful_calls(CallPurpose::Critic) == 0);
}

TEST_CASE("in-flight calls never exceed the cap") {
    for (int cap : {1, 2, 3}) {
        auto probe = std::make_shared<stubs::ConcurrencyProbe>(3ms);
        LlmGateway gw(probe, nullptr, stubs::no_sleep(cap));
        std::vector<std::thread> threads;
        for (int t = 0; t < 8; ++t) {
            threads.emplace_back([&] {
                for (int i = 0; i < 4; ++i) gw.chat_complete(stubs::user_request("x"));
            });
        }
        for (auto& t : threads) t.join();
        CHECK(probe->peak() <= cap);
        CHECK(gw.peak_in_flight() <= cap);
        CHECK(probe->peak() == cap);
        CHECK(gw.call_log().size() == 32);
    }
}

TEST_CASE("request validation") {
    auto mock = std::make_shared<MockProvider>();
    LlmGateway gw(mock, mock, stubs::no_sleep());
    ChatRequest empty;
    CHECK_THROWS_AS(gw.chat_complete(empty), std::invalid_argument);
    auto hot = stubs::user_request("x");
    hot.temperature = 2.5;
    CHECK_THROWS_AS(gw.chat_complete(hot), std::invalid_argument);
    auto zero_p = stubs::user_request("x");
    zero_p.top_p = 0.0;
    CHECK_THROWS_AS(gw.chat_complete(zero_p), std::invalid_argument);
}

TEST_CASE("embed_batch input checks") {
    auto mock = std::make_shared<MockProvider>();
    LlmGateway gw(mock, mock, stubs::no_sleep());
    std::vector<std::string> none;
    CHECK_THROWS_AS(gw.embed_batch(none), std::invalid_argument);
    std::vector<std::string> with_empty{"a", ""};
    CHECK_THROWS_AS(gw.embed_batch(with_empty), std::invalid_argument);
}

TEST_CASE("embed_batch output checks") {
    SUBCASE("count") {
        auto e = std::make_shared<stubs::FnEmbed>([](std::span<const std::string>) {
            return std::vector<EmbeddingVector>{{{1.0}}};
        });
        LlmGateway gw(nullptr, e, stubs::no_sleep());
        std::vector<std::string> t{"a", "b"};
        CHECK_THROWS_AS(gw.embed_batch(t), ProviderError);
    }
    SUBCASE("dimension") {
        auto e = std::make_shared<stubs::FnEmbed>([](std::span<const std::string>) {
            return std::vector<EmbeddingVector>{{{1.0, 0.0}}, {{1.0}}};
        });
        LlmGateway gw(nullptr, e, stubs::no_sleep());
        std::vector<std::string> t{"a", "b"};
        CHECK_THROWS_AS(gw.embed_batch(t), DimensionMismatch);
    }
    SUBCASE("finite") {
        auto e = std::make_shared<stubs::FnEmbed>([](std::span<const std::string>) {
            return std::vector<EmbeddingVector>{{{std::nan("")}}};
        });
        LlmGateway gw(nullptr, e, stubs::no_sleep());
        std::vector<std::string> t{"a"};
        CHECK_THROWS_AS(gw.embed_batch(t), ProviderError);
    }
}

TEST_CASE("cosine similarity edge cases") {
    EmbeddingVector a{{0.3, 0.4, 0.5}};
    CHECK(cosine_similarity(a, a) == 1.0);
    CHECK(cosine_similarity(a, EmbeddingVector{{0, 0, 0}}) == 0.0);
    CHECK(cosine_similarity(EmbeddingVector{{1, 0}}, EmbeddingVector{{0, 1}}) == 0.0);
    CHECK(cosine_similarity(EmbeddingVector{{1, 0}}, EmbeddingVector{{-1, 0}}) == -1.0);
    CHECK_THROWS_AS(cosine_similarity(EmbeddingVector{{1}}, EmbeddingVector{{1, 0}}), DimensionMismatch);
}

TEST_CASE("provider profiles") {
    auto p = ProviderProfile::from_json(
        {{"kind", "remote-chat+embed"}, {"base_url", "https://example.test/v1"}, {"chat_model", "c"}, {"max_attempts", 5}});
    CHECK(p.kind == ProviderProfile::Kind::Remote);
    CHECK(p.retry.max_attempts == 5);
    CHECK(p.api_key_env == kApiKeyEnv);
    CHECK_FALSE(p.to_json().contains("api_key"));
    CHECK_THROWS_AS(ProviderProfile::from_json({{"kind", "carrier-pigeon"}}), std::invalid_argument);
    CHECK(ProviderProfile::mock_profile(1).id() == "mock");
    CHECK(ProviderProfile::mock_profile(1, true).id() == "mock-low-diversity");
}

}  // TEST_SUITE
