#include "synthline/providers.hpp"

#include <httplib.h>

#include <algorithm>
#include <cstdlib>
#include <fstream>

namespace synthline {

using nlohmann::json;

// ---------------------------------------------------------------------------
// ProviderProfile
// ---------------------------------------------------------------------------

std::string ProviderProfile::id() const {
    if (kind == Kind::Mock) return std::string(mock.low_diversity ? "mock-low-diversity" : "mock");
    return "remote:" + base_url + "#" + chat_model + "+" + embedding_model;
}

json ProviderProfile::to_json() const {
    json j = {{"kind", kind == Kind::Mock ? "mock" : "remote"}, {"max_in_flight", max_in_flight},
              {"max_attempts", retry.max_attempts}};
    if (kind == Kind::Mock) {
        j["seed"] = mock.seed;
        j["low_diversity"] = mock.low_diversity;
        j["embedding_dimension"] = mock.embedding_dimension;
    } else {
        j["base_url"] = base_url;
        j["chat_model"] = chat_model;
        j["embedding_model"] = embedding_model;
        j["api_key_env"] = api_key_env;
        j["timeout_seconds"] = timeout.count();
    }
    return j;
}

ProviderProfile ProviderProfile::from_json(const json& j) {
    ProviderProfile p;
    const auto kind = j.value("kind", std::string("mock"));
    if (kind == "mock") {
        p.kind = Kind::Mock;
        p.mock.seed = j.value("seed", std::uint64_t{0});
        p.mock.low_diversity = j.value("low_diversity", false);
        p.mock.embedding_dimension = j.value("embedding_dimension", std::size_t{64});
    } else if (kind == "remote" || kind == "remote-chat+embed") {
        p.kind = Kind::Remote;
        p.base_url = j.at("base_url").get<std::string>();
        p.chat_model = j.value("chat_model", std::string());
        p.embedding_model = j.value("embedding_model", std::string());
        p.api_key_env = j.value("api_key_env", std::string(kApiKeyEnv));
        p.timeout = std::chrono::seconds(j.value("timeout_seconds", 60));
    } else {
        throw std::invalid_argument("unknown provider kind '" + kind + "'");
    }
    p.max_in_flight = j.value("max_in_flight", p.max_in_flight);
    p.retry.max_attempts = j.value("max_attempts", p.retry.max_attempts);
    if (j.contains("base_delay_ms")) p.retry.base_delay = std::chrono::milliseconds(j["base_delay_ms"].get<int>());
    return p;
}

ProviderProfile ProviderProfile::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read provider profile " + path.string());
    json j = json::parse(in, nullptr, false);
    if (j.is_discarded()) throw IoError("provider profile " + path.string() + " is not valid JSON");
    return from_json(j);
}

ProviderProfile ProviderProfile::mock_profile(std::uint64_t seed, bool low_diversity) {
    ProviderProfile p;
    p.mock.seed = seed;
    p.mock.low_diversity = low_diversity;
    return p;
}

// ---------------------------------------------------------------------------
// RemoteProvider
// ---------------------------------------------------------------------------

RemoteProvider::RemoteProvider(ProviderProfile profile) : profile_(std::move(profile)) {
    const auto& url = profile_.base_url;
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) throw std::invalid_argument("base_url needs a scheme: " + url);
    auto path_start = url.find('/', scheme_end + 3);
    origin_ = url.substr(0, path_start);
    path_prefix_ = path_start == std::string::npos ? "" : url.substr(path_start);
    while (!path_prefix_.empty() && path_prefix_.back() == '/') path_prefix_.pop_back();
    if (const char* key = std::getenv(profile_.api_key_env.c_str())) api_key_ = key;
}

json RemoteProvider::post(const std::string& path, const json& body) {
    httplib::Client client(origin_);
    client.set_connection_timeout(profile_.timeout);
    client.set_read_timeout(profile_.timeout);
    client.set_write_timeout(profile_.timeout);
    httplib::Headers headers;
    if (!api_key_.empty()) headers.emplace("Authorization", "Bearer " + api_key_);

    auto res = client.Post(path_prefix_ + path, headers, body.dump(), "application/json");
    if (!res) {
        auto err = res.error();
        const std::string what = httplib::to_string(err);
        if (err == httplib::Error::ConnectionTimeout || err == httplib::Error::Read || err == httplib::Error::Write) {
            throw TimeoutError(what + " calling " + origin_ + path_prefix_ + path);
        }
        if (err == httplib::Error::Connection) throw TransientError(0, what + " calling " + origin_);
        throw ProviderError(what + " calling " + origin_);
    }
    const int status = res->status;
    const std::string brief = "HTTP " + std::to_string(status) + " from " + path_prefix_ + path;
    if (status == 401 || status == 403) throw AuthError(brief);
    if (status == 408) throw TimeoutError(brief);
    if (status == 429 || status >= 500) throw TransientError(status, brief);
    if (status < 200 || status >= 300) throw ProviderError(brief + ": " + res->body.substr(0, 200));

    json out = json::parse(res->body, nullptr, false);
    if (out.is_discarded()) throw ProviderError("non-JSON body in " + brief);
    return out;
}

std::string RemoteProvider::complete(const ChatRequest& request) {
    json messages = json::array();
    for (const auto& m : request.messages) messages.push_back({{"role", to_string(m.role)}, {"content", m.content}});
    json body = {{"model", request.model.empty() ? profile_.chat_model : request.model},
                 {"messages", std::move(messages)},
                 {"temperature", request.temperature},
                 {"top_p", request.top_p}};
    if (request.seed) body["seed"] = *request.seed;

    json out = post("/chat/completions", body);
    try {
        const auto& content = out.at("choices").at(0).at("message").at("content");
        if (!content.is_string()) throw ProviderError("chat completion has no text content");
        return content.get<std::string>();
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed chat completion: ") + e.what());
    }
}

std::vector<EmbeddingVector> RemoteProvider::embed(std::span<const std::string> texts) {
    json body = {{"model", profile_.embedding_model}, {"input", std::vector<std::string>(texts.begin(), texts.end())}};
    json out = post("/embeddings", body);
    try {
        std::vector<std::pair<std::size_t, EmbeddingVector>> indexed;
        for (const auto& item : out.at("data")) {
            indexed.emplace_back(item.value("index", indexed.size()),
                                 EmbeddingVector{item.at("embedding").get<std::vector<double>>()});
        }
        std::stable_sort(indexed.begin(), indexed.end(), [](const auto& a, const auto& b) { return a.first < b.first; });
        std::vector<EmbeddingVector> vectors;
        for (auto& [_, v] : indexed) vectors.push_back(std::move(v));
        return vectors;
    } catch (const json::exception& e) {
        throw ProviderError(std::string("malformed embeddings response: ") + e.what());
    }
}

// ---------------------------------------------------------------------------

std::unique_ptr<LlmGateway> make_gateway(const ProviderProfile& profile, GatewayOptions options) {
    options.max_in_flight = profile.max_in_flight;
    options.retry.max_attempts = profile.retry.max_attempts;
    options.retry.base_delay = profile.retry.base_delay;
    if (profile.kind == ProviderProfile::Kind::Mock) {
        auto mock = std::make_shared<MockProvider>(profile.mock);
        return std::make_unique<LlmGateway>(mock, mock, std::move(options));
    }
    auto remote = std::make_shared<RemoteProvider>(profile);
    return std::make_unique<LlmGateway>(remote, remote, std::move(options));
}

std::unique_ptr<LlmGateway> make_gateway(const ProviderProfile& profile) {
    return make_gateway(profile, GatewayOptions{});
}

}  // namespace synthline
