#pragma once

#include "synthline/llm_gateway.hpp"
#include "synthline/mock_provider.hpp"

#include <nlohmann/json.hpp>

#include <chrono>
#include <filesystem>
#include <memory>
#include <string>

namespace synthline {

inline constexpr const char* kApiKeyEnv = "SYNTHLINE_LLM_API_KEY";

/// Where chat completions and embeddings come from. Loaded from a JSON
/// profile file, e.g.
///   {"kind": "remote", "base_url": "https://api.openai.com/v1",
///    "chat_model": "gpt-4.1-nano", "embedding_model": "text-embedding-3-small"}
/// The API key is read from SYNTHLINE_LLM_API_KEY, never from the file.
struct ProviderProfile {
    enum class Kind { Mock, Remote };

    Kind kind = Kind::Mock;
    MockOptions mock;
    std::string base_url;
    std::string chat_model;  // used when a request names no model
    std::string embedding_model;
    std::string api_key_env = kApiKeyEnv;
    std::chrono::seconds timeout{60};
    int max_in_flight = 4;
    RetryPolicy retry;

    std::string id() const;
    nlohmann::json to_json() const;
    static ProviderProfile from_json(const nlohmann::json& j);
    static ProviderProfile load(const std::filesystem::path& path);
    static ProviderProfile mock_profile(std::uint64_t seed, bool low_diversity = false);
};

/// OpenAI-compatible JSON-over-HTTP client for /chat/completions and
/// /embeddings. 401/403 map to AuthError; 408, 429 and 5xx to retryable
/// errors; other 4xx to ProviderError.
class RemoteProvider : public ChatProvider, public EmbeddingProvider {
public:
    explicit RemoteProvider(ProviderProfile profile);

    std::string complete(const ChatRequest& request) override;
    std::vector<EmbeddingVector> embed(std::span<const std::string> texts) override;
    std::string id() const override { return profile_.id(); }

private:
    nlohmann::json post(const std::string& path, const nlohmann::json& body);

    ProviderProfile profile_;
    std::string origin_;       // scheme://host[:port]
    std::string path_prefix_;  // e.g. /v1
    std::string api_key_;
};

std::unique_ptr<LlmGateway> make_gateway(const ProviderProfile& profile, GatewayOptions options);
std::unique_ptr<LlmGateway> make_gateway(const ProviderProfile& profile);

}  // namespace synthline
