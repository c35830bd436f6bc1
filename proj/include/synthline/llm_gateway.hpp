#pragma once

#include "synthline/error.hpp"

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace synthline {

// ---------------------------------------------------------------------------
// Requests and vectors
// ---------------------------------------------------------------------------

enum class Role { System, User, Assistant };
std::string_view to_string(Role role);

struct ChatMessage {
    Role role = Role::User;
    std::string content;
};

/// Why a chat call is made. Used for call-log accounting only; never sent to
/// the provider.
enum class CallPurpose { Generation, Actor, Critic, Update, Scoring };
std::string_view to_string(CallPurpose purpose);

struct ChatRequest {
    std::string model;
    std::vector<ChatMessage> messages;
    double temperature = 1.0;
    double top_p = 1.0;
    std::optional<std::uint64_t> seed;
    CallPurpose purpose = CallPurpose::Generation;

    /// Throws std::invalid_argument when the request is malformed.
    void validate() const;
    const std::string& user_text() const;
};

struct EmbeddingVector {
    std::vector<double> values;

    std::size_t dimension() const { return values.size(); }
    bool operator==(const EmbeddingVector&) const = default;
};

/// Cosine similarity. Bitwise-identical non-zero vectors give exactly 1;
/// a zero vector gives 0; results are clamped to [-1, 1].
double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b);

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

class ProviderError : public Error {
public:
    explicit ProviderError(const std::string& message) : Error("ProviderError", message) {}

protected:
    ProviderError(std::string code, const std::string& message) : Error(std::move(code), message) {}
};

/// Credentials rejected. Never retried.
class AuthError : public ProviderError {
public:
    explicit AuthError(const std::string& message) : ProviderError("AuthError", message) {}
};

class TimeoutError : public ProviderError {
public:
    explicit TimeoutError(const std::string& message) : ProviderError("TimeoutError", message) {}
};

/// Rate limiting, 5xx, dropped connections: worth another attempt.
class TransientError : public ProviderError {
public:
    TransientError(int status, const std::string& message)
        : ProviderError("TransientError", message), status_(status) {}
    int status() const noexcept { return status_; }

private:
    int status_;
};

class DimensionMismatch : public ProviderError {
public:
    explicit DimensionMismatch(const std::string& message) : ProviderError("DimensionMismatch", message) {}
};

// ---------------------------------------------------------------------------
// Providers
// ---------------------------------------------------------------------------

class ChatProvider {
public:
    virtual ~ChatProvider() = default;
    virtual std::string complete(const ChatRequest& request) = 0;
    virtual std::string id() const = 0;
};

class EmbeddingProvider {
public:
    virtual ~EmbeddingProvider() = default;
    virtual std::vector<EmbeddingVector> embed(std::span<const std::string> texts) = 0;
    virtual std::string id() const = 0;
};

// ---------------------------------------------------------------------------
// Gateway
// ---------------------------------------------------------------------------

struct RetryPolicy {
    int max_attempts = 3;
    std::chrono::milliseconds base_delay{500};
    std::chrono::milliseconds max_delay{8000};
    double jitter = 0.25;  // fraction of the delay, applied symmetrically
};

struct GatewayOptions {
    RetryPolicy retry;
    int max_in_flight = 4;
    /// Replaceable so tests do not sleep through backoff.
    std::function<void(std::chrono::milliseconds)> sleep;
};

struct CallRecord {
    enum class Kind { Chat, Embed };
    std::uint64_t sequence = 0;
    Kind kind = Kind::Chat;
    CallPurpose purpose = CallPurpose::Generation;
    int attempt = 1;
    bool ok = false;
    std::string error;  // error code when !ok
    std::chrono::microseconds latency{0};
};

/// Unified client over a chat and an embedding provider. Shareable across
/// threads: retries with exponential backoff, caps in-flight provider calls,
/// and appends one CallRecord per attempt.
class LlmGateway {
public:
    LlmGateway(std::shared_ptr<ChatProvider> chat, std::shared_ptr<EmbeddingProvider> embed,
               GatewayOptions options = {});

    std::string chat_complete(const ChatRequest& request);

    /// One vector per text, input order preserved, uniform dimension.
    std::vector<EmbeddingVector> embed_batch(std::span<const std::string> texts);

    std::vector<CallRecord> call_log() const;
    std::size_t successful_calls(CallPurpose purpose) const;
    std::size_t attempts(CallPurpose purpose) const;
    void clear_log();

    int max_in_flight() const { return options_.max_in_flight; }
    int peak_in_flight() const;

    std::string chat_provider_id() const;
    std::string embedding_provider_id() const;

private:
    template <typename Fn>
    auto with_retries(CallRecord::Kind kind, CallPurpose purpose, Fn&& fn) -> decltype(fn());

    void acquire();
    void release();
    void record(CallRecord r);
    std::chrono::milliseconds backoff(int attempt);

    std::shared_ptr<ChatProvider> chat_;
    std::shared_ptr<EmbeddingProvider> embed_;
    GatewayOptions options_;

    mutable std::mutex mutex_;
    std::condition_variable slot_free_;
    int in_flight_ = 0;
    int peak_in_flight_ = 0;
    std::uint64_t next_sequence_ = 0;
    std::uint64_t jitter_state_ = 0x9e3779b97f4a7c15ULL;
    std::vector<CallRecord> log_;
};

}  // namespace synthline
