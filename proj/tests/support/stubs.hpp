#pragma once

#include "synthline/llm_gateway.hpp"
#include "synthline/mock_provider.hpp"

#include <atomic>
#include <chrono>
#include <functional>
#include <memory>
#include <mutex>
#include <thread>

namespace stubs {

using namespace synthline;

/// Chat provider driven by a callback that sees the request and its
/// zero-based call number.
class FnChat : public ChatProvider {
public:
    using Fn = std::function<std::string(const ChatRequest&, int)>;
    explicit FnChat(Fn fn) : fn_(std::move(fn)) {}
    std::string complete(const ChatRequest& r) override {
        int n;
        {
            std::lock_guard lock(mutex_);
            n = calls_++;
        }
        return fn_(r, n);
    }
    std::string id() const override { return "stub"; }
    int calls() const {
        std::lock_guard lock(mutex_);
        return calls_;
    }

private:
    Fn fn_;
    mutable std::mutex mutex_;
    int calls_ = 0;
};

class FnEmbed : public EmbeddingProvider {
public:
    using Fn = std::function<std::vector<EmbeddingVector>(std::span<const std::string>)>;
    explicit FnEmbed(Fn fn) : fn_(std::move(fn)) {}
    std::vector<EmbeddingVector> embed(std::span<const std::string> t) override { return fn_(t); }
    std::string id() const override { return "stub-embed"; }

private:
    Fn fn_;
};

/// Records the highest number of concurrent calls it has seen.
class ConcurrencyProbe : public ChatProvider {
public:
    explicit ConcurrencyProbe(std::chrono::milliseconds hold) : hold_(hold) {}
    std::string complete(const ChatRequest&) override {
        const int now = ++active_;
        int seen = peak_.load();
        while (now > seen && !peak_.compare_exchange_weak(seen, now)) {
        }
        std::this_thread::sleep_for(hold_);
        --active_;
        return "ok";
    }
    std::string id() const override { return "probe"; }
    int peak() const { return peak_.load(); }

private:
    std::chrono::milliseconds hold_;
    std::atomic<int> active_{0};
    std::atomic<int> peak_{0};
};

inline GatewayOptions no_sleep(int max_in_flight = 4) {
    GatewayOptions o;
    o.max_in_flight = max_in_flight;
    o.sleep = [](std::chrono::milliseconds) {};
    return o;
}

inline std::unique_ptr<LlmGateway> mock_gateway(std::uint64_t seed = 0, bool low_diversity = false) {
    auto mock = std::make_shared<MockProvider>(MockOptions{seed, low_diversity, 64});
    return std::make_unique<LlmGateway>(mock, mock, no_sleep());
}

inline ChatRequest user_request(const std::string& text, CallPurpose purpose = CallPurpose::Generation) {
    ChatRequest r;
    r.model = "m";
    r.messages = {{Role::User, text}};
    r.purpose = purpose;
    return r;
}

}  // namespace stubs
