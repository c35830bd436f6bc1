#include "synthline/pace.hpp"

#include "../support/oracles.hpp"
#include "../support/stubs.hpp"

#include <doctest.h>

using namespace synthline;

namespace {

PromptSpec cell_prompt(int count = 5) {
    AtomicConfiguration c;
    c.values = {"Detailed", "End Users", "NL", "Healthcare", "English"};
    c.id = atomic_config_id(c.values);
    return build_prompt({"Security", "Protection of data."}, c, count);
}

/// Mock behaviour for every purpose except those overridden.
struct Scripted {
    std::shared_ptr<MockProvider> mock;
    std::function<std::optional<std::string>(const ChatRequest&)> override_fn;
    std::shared_ptr<stubs::FnChat> chat;
    std::unique_ptr<LlmGateway> gateway;

    explicit Scripted(bool low, std::function<std::optional<std::string>(const ChatRequest&)> fn = nullptr)
        : mock(std::make_shared<MockProvider>(MockOptions{0, low, 64})), override_fn(std::move(fn)) {
        chat = std::make_shared<stubs::FnChat>([this](const ChatRequest& r, int) {
            if (override_fn) {
                if (auto s = override_fn(r)) return *s;
            }
            return mock->complete(r);
        });
        gateway = std::make_unique<LlmGateway>(chat, mock, stubs::no_sleep());
    }
};

EmbeddingVector axis(std::size_t i) {
    EmbeddingVector v;
    v.values.assign(8, 0.0);
    v.values[i] = 1.0;
    return v;
}

}  // namespace

TEST_SUITE("pace") {

TEST_CASE("score anchors") {
    std::vector<EmbeddingVector> same(4, axis(3));
    CHECK(batch_diversity_score(same) == 0.0);
    std::vector<EmbeddingVector> orth{axis(0), axis(1), axis(2)};
    CHECK(batch_diversity_score(orth) == 1.0);
    std::vector<EmbeddingVector> opposite{axis(0), EmbeddingVector{{-1, 0, 0, 0, 0, 0, 0, 0}}};
    CHECK(batch_diversity_score(opposite) == 2.0);
}

TEST_CASE("score equals one minus APS of the scored batch") {
    auto gw = stubs::mock_gateway(3);
    PaceConfig cfg;
    cfg.seed = 9;
    PaceOptimizer pace(*gw, cfg);
    auto p = cell_prompt(6);
    const double score = pace.score_prompt(p);
    gw->clear_log();
    // The scoring batch is the actor output for the fixed scoring seed.
    ChatRequest req;
    req.model = cfg.model;
    req.messages = {{Role::System, p.system_text}, {Role::User, p.user_text}};
    req.temperature = 0;
    req.seed = cfg.seed;
    req.purpose = CallPurpose::Scoring;
    auto items = parse_generation(gw->chat_complete(req), 6);
    MockProvider mock;
    CHECK(std::abs(score - (1.0 - oracle::aps(mock.embed(items)))) <= 1e-12);
}

TEST_CASE("call accounting per iteration") {
    auto gw = stubs::mock_gateway(1);
    PaceConfig cfg;
    cfg.seed = 4;
    PaceOptimizer pace(*gw, cfg);
    auto result = pace.optimize(cell_prompt());
    CHECK(result.state.trace.size() == 3);
    CHECK(gw->successful_calls(CallPurpose::Actor) == 12);
    CHECK(gw->successful_calls(CallPurpose::Critic) == 12);
    CHECK(gw->successful_calls(CallPurpose::Update) == 6);
    for (const auto& it : result.state.trace) {
        CHECK(it.critiques.size() == 4);
        CHECK(it.candidates.size() == 2);
    }
}

TEST_CASE("selected score series never decreases") {
    for (bool low : {false, true}) {
        for (std::uint64_t seed : {0u, 1u, 2u, 3u}) {
            auto gw = stubs::mock_gateway(seed, low);
            PaceConfig cfg;
            cfg.seed = seed;
            PaceOptimizer pace(*gw, cfg);
            auto result = pace.optimize(cell_prompt());
            std::optional<double> prev = result.state.initial_score;
            for (const auto& s : result.state.score_series()) {
                REQUIRE(s.has_value());
                if (prev) CHECK(*s >= *prev);
                prev = s;
            }
            CHECK(result.state.incumbent_score == prev);
        }
    }
}

TEST_CASE("low-diversity provider: optimisation lifts the score from zero") {
    auto gw = stubs::mock_gateway(0, true);
    PaceConfig cfg;
    cfg.parallelism = 4;
    PaceOptimizer pace(*gw, cfg);
    auto result = pace.optimize(cell_prompt());
    REQUIRE(result.state.initial_score.has_value());
    CHECK(*result.state.initial_score == 0.0);
    CHECK(*result.state.incumbent_score > 0.0);
    CHECK(result.prompt.user_text.find(kMockDiversityDirective) != std::string::npos);
}

TEST_CASE("parallel and serial runs produce the same trace") {
    auto serial_gw = stubs::mock_gateway(2, true);
    auto parallel_gw = stubs::mock_gateway(2, true);
    PaceConfig cfg;
    PaceOptimizer serial(*serial_gw, cfg);
    cfg.parallelism = 8;
    PaceOptimizer parallel(*parallel_gw, cfg);
    CHECK(serial.optimize(cell_prompt()).state.to_json() == parallel.optimize(cell_prompt()).state.to_json());
}

TEST_CASE("malformed updates keep the incumbent") {
    Scripted s(false, [](const ChatRequest& r) -> std::optional<std::string> {
        if (r.purpose == CallPurpose::Update) return std::string("no tags here");
        return std::nullopt;
    });
    PaceOptimizer pace(*s.gateway, PaceConfig{});
    auto initial = cell_prompt();
    auto result = pace.optimize(initial);
    CHECK(result.prompt == initial);
    for (const auto& it : result.state.trace) {
        CHECK(it.incumbent_retained);
        CHECK(it.candidates.empty());
    }
}

TEST_CASE("unparseable actor output makes the score unavailable after three attempts") {
    Scripted s(false, [](const ChatRequest& r) -> std::optional<std::string> {
        if (r.purpose == CallPurpose::Scoring) return std::string("   ");
        return std::nullopt;
    });
    PaceOptimizer pace(*s.gateway, PaceConfig{});
    CHECK_THROWS_AS(pace.score_prompt(cell_prompt()), ScoreUnavailable);
    CHECK(s.gateway->successful_calls(CallPurpose::Scoring) == 3);
}

TEST_CASE("no prompt can be scored: OptimizationFailed carries the partial trace") {
    Scripted s(false, [](const ChatRequest& r) -> std::optional<std::string> {
        if (r.purpose == CallPurpose::Scoring) return std::string("");
        return std::nullopt;
    });
    PaceConfig cfg;
    cfg.iterations = 2;
    PaceOptimizer pace(*s.gateway, cfg);
    try {
        pace.optimize(cell_prompt());
        FAIL("expected OptimizationFailed");
    } catch (const OptimizationFailed& e) {
        CHECK(e.state().trace.size() == 2);
        CHECK_FALSE(e.state().initial_score.has_value());
    }
}

TEST_CASE("authentication failure aborts optimisation") {
    auto chat = std::make_shared<stubs::FnChat>([](const ChatRequest&, int) -> std::string { throw AuthError("nope"); });
    auto mock = std::make_shared<MockProvider>();
    LlmGateway gw(chat, mock, stubs::no_sleep());
    PaceOptimizer pace(gw, PaceConfig{});
    CHECK_THROWS_AS(pace.optimize(cell_prompt()), AuthError);
}

TEST_CASE("candidates keep the prompt metadata") {
    auto gw = stubs::mock_gateway();
    PaceOptimizer pace(*gw, PaceConfig{});
    auto initial = cell_prompt(7);
    auto out = pace.update_prompt(initial, {"Repetition: all the same."}, 3);
    REQUIRE(out.size() == 3);
    for (const auto& c : out) {
        CHECK(c.label_name == initial.label_name);
        CHECK(c.atomic_config_id == initial.atomic_config_id);
        CHECK(c.requested_count == 7);
        CHECK(c.response_schema == initial.response_schema);
        CHECK(c.system_text == initial.system_text);
        CHECK(c.user_text != initial.user_text);
    }
}

TEST_CASE("argument validation") {
    auto gw = stubs::mock_gateway();
    PaceOptimizer pace(*gw, PaceConfig{});
    CHECK_THROWS_AS(pace.run_critic(cell_prompt(), {}), std::invalid_argument);
    CHECK_THROWS_AS(pace.update_prompt(cell_prompt(), {}, 2), std::invalid_argument);
    CHECK_THROWS_AS(pace.update_prompt(cell_prompt(), {"c"}, 0), std::invalid_argument);
    CHECK_THROWS_AS(pace.score_prompt(cell_prompt(), 1), std::invalid_argument);
    PaceConfig bad;
    bad.n_pairs = 0;
    CHECK_THROWS_AS(PaceOptimizer(*gw, bad), std::invalid_argument);
    CHECK(pace.default_batch_size(cell_prompt(1)) == 2);
    CHECK(pace.default_batch_size(cell_prompt(9)) == 9);
}

}  // TEST_SUITE
