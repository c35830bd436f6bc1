#include "synthline/llm_gateway.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>
#include <thread>

namespace synthline {

std::string_view to_string(Role role) {
    switch (role) {
    case Role::System: return "system";
    case Role::User: return "user";
    case Role::Assistant: return "assistant";
    }
    return "user";
}

std::string_view to_string(CallPurpose purpose) {
    switch (purpose) {
    case CallPurpose::Generation: return "generation";
    case CallPurpose::Actor: return "actor";
    case CallPurpose::Critic: return "critic";
    case CallPurpose::Update: return "update";
    case CallPurpose::Scoring: return "scoring";
    }
    return "generation";
}

void ChatRequest::validate() const {
    if (messages.empty()) throw std::invalid_argument("chat request needs at least one message");
    if (!(temperature >= 0.0 && temperature <= 2.0)) throw std::invalid_argument("temperature outside [0, 2]");
    if (!(top_p > 0.0 && top_p <= 1.0)) throw std::invalid_argument("top_p outside (0, 1]");
}

const std::string& ChatRequest::user_text() const {
    for (auto it = messages.rbegin(); it != messages.rend(); ++it) {
        if (it->role == Role::User) return it->content;
    }
    return messages.back().content;
}

double cosine_similarity(const EmbeddingVector& a, const EmbeddingVector& b) {
    if (a.dimension() != b.dimension()) throw DimensionMismatch("cosine of vectors with different dimensions");
    double dot = 0.0;
    double na = 0.0;
    double nb = 0.0;
    for (std::size_t i = 0; i < a.values.size(); ++i) {
        dot += a.values[i] * b.values[i];
        na += a.values[i] * a.values[i];
        nb += b.values[i] * b.values[i];
    }
    if (na == 0.0 || nb == 0.0) return 0.0;
    if (a.values == b.values) return 1.0;
    double c = dot / std::sqrt(na * nb);
    return std::clamp(c, -1.0, 1.0);
}

// ---------------------------------------------------------------------------
// LlmGateway
// ---------------------------------------------------------------------------

LlmGateway::LlmGateway(std::shared_ptr<ChatProvider> chat, std::shared_ptr<EmbeddingProvider> embed,
                       GatewayOptions options)
    : chat_(std::move(chat)), embed_(std::move(embed)), options_(std::move(options)) {
    if (options_.max_in_flight < 1) throw std::invalid_argument("max_in_flight must be >= 1");
    if (options_.retry.max_attempts < 1) throw std::invalid_argument("max_attempts must be >= 1");
    if (!options_.sleep) {
        options_.sleep = [](std::chrono::milliseconds d) { std::this_thread::sleep_for(d); };
    }
}

void LlmGateway::acquire() {
    std::unique_lock lock(mutex_);
    slot_free_.wait(lock, [&] { return in_flight_ < options_.max_in_flight; });
    ++in_flight_;
    peak_in_flight_ = std::max(peak_in_flight_, in_flight_);
}

void LlmGateway::release() {
    {
        std::lock_guard lock(mutex_);
        --in_flight_;
    }
    slot_free_.notify_one();
}

void LlmGateway::record(CallRecord r) {
    std::lock_guard lock(mutex_);
    r.sequence = next_sequence_++;
    log_.push_back(std::move(r));
}

std::chrono::milliseconds LlmGateway::backoff(int attempt) {
    const auto& p = options_.retry;
    double delay = static_cast<double>(p.base_delay.count()) * std::pow(2.0, attempt - 1);
    delay = std::min(delay, static_cast<double>(p.max_delay.count()));
    double unit;
    {
        std::lock_guard lock(mutex_);
        // splitmix64 step; jitter only affects timing, never results
        std::uint64_t z = (jitter_state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        z ^= z >> 31;
        unit = static_cast<double>(z >> 11) * 0x1.0p-53;
    }
    delay *= 1.0 + p.jitter * (2.0 * unit - 1.0);
    return std::chrono::milliseconds(static_cast<long long>(std::max(0.0, delay)));
}

template <typename Fn>
auto LlmGateway::with_retries(CallRecord::Kind kind, CallPurpose purpose, Fn&& fn) -> decltype(fn()) {
    for (int attempt = 1;; ++attempt) {
        CallRecord rec;
        rec.kind = kind;
        rec.purpose = purpose;
        rec.attempt = attempt;
        const auto start = std::chrono::steady_clock::now();
        auto elapsed = [&] {
            return std::chrono::duration_cast<std::chrono::microseconds>(std::chrono::steady_clock::now() - start);
        };
        bool retry = false;
        std::string last_message;
        acquire();
        try {
            auto result = fn();
            release();
            rec.ok = true;
            rec.latency = elapsed();
            record(rec);
            return result;
        } catch (const TimeoutError& e) {
            release();
            rec.error = e.code();
            last_message = e.what();
            retry = true;
            if (attempt >= options_.retry.max_attempts) {
                rec.latency = elapsed();
                record(rec);
                throw TimeoutError("timed out after " + std::to_string(attempt) + " attempts: " + last_message);
            }
        } catch (const TransientError& e) {
            release();
            rec.error = e.code() + ":" + std::to_string(e.status());
            last_message = e.what();
            retry = true;
            if (attempt >= options_.retry.max_attempts) {
                rec.latency = elapsed();
                record(rec);
                throw ProviderError("provider failed after " + std::to_string(attempt) + " attempts: " + last_message);
            }
        } catch (const Error& e) {
            release();
            rec.error = e.code();
            rec.latency = elapsed();
            record(rec);
            throw;
        } catch (...) {
            release();
            rec.error = "Unknown";
            rec.latency = elapsed();
            record(rec);
            throw;
        }
        rec.latency = elapsed();
        record(rec);
        if (retry) options_.sleep(backoff(attempt));
    }
}

std::string LlmGateway::chat_complete(const ChatRequest& request) {
    if (!chat_) throw ProviderError("no chat provider configured");
    request.validate();
    return with_retries(CallRecord::Kind::Chat, request.purpose, [&] { return chat_->complete(request); });
}

std::vector<EmbeddingVector> LlmGateway::embed_batch(std::span<const std::string> texts) {
    if (!embed_) throw ProviderError("no embedding provider configured");
    if (texts.empty()) throw std::invalid_argument("embed_batch needs at least one text");
    for (const auto& t : texts) {
        if (t.empty()) throw std::invalid_argument("embed_batch does not accept empty strings");
    }
    auto vectors = with_retries(CallRecord::Kind::Embed, CallPurpose::Scoring, [&] { return embed_->embed(texts); });
    if (vectors.size() != texts.size()) {
        throw ProviderError("embedding provider returned " + std::to_string(vectors.size()) + " vectors for " +
                            std::to_string(texts.size()) + " texts");
    }
    const std::size_t dim = vectors.front().dimension();
    for (const auto& v : vectors) {
        if (v.dimension() != dim || dim == 0) throw DimensionMismatch("embedding dimensions differ within one batch");
        for (double x : v.values) {
            if (!std::isfinite(x)) throw ProviderError("embedding contains a non-finite value");
        }
    }
    return vectors;
}

std::vector<CallRecord> LlmGateway::call_log() const {
    std::lock_guard lock(mutex_);
    return log_;
}

std::size_t LlmGateway::successful_calls(CallPurpose purpose) const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(log_.begin(), log_.end(), [&](const CallRecord& r) {
        return r.kind == CallRecord::Kind::Chat && r.purpose == purpose && r.ok;
    }));
}

std::size_t LlmGateway::attempts(CallPurpose purpose) const {
    std::lock_guard lock(mutex_);
    return static_cast<std::size_t>(std::count_if(log_.begin(), log_.end(), [&](const CallRecord& r) {
        return r.kind == CallRecord::Kind::Chat && r.purpose == purpose;
    }));
}

void LlmGateway::clear_log() {
    std::lock_guard lock(mutex_);
    log_.clear();
}

int LlmGateway::peak_in_flight() const {
    std::lock_guard lock(mutex_);
    return peak_in_flight_;
}

std::string LlmGateway::chat_provider_id() const {
    return chat_ ? chat_->id() : "none";
}

std::string LlmGateway::embedding_provider_id() const {
    return embed_ ? embed_->id() : "none";
}

}  // namespace synthline
