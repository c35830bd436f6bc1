#include "synthline/dataset.hpp"

#include "synthline/text.hpp"

#include <algorithm>
#include <cstdlib>

namespace synthline {

nlohmann::json to_json(const SyntheticSample& s) {
    return {{"id", s.id},
            {"text", s.text},
            {"label", s.label},
            {"atomic_config_id", s.atomic_config_id},
            {"prompt_call_id", s.prompt_call_id},
            {"template_version", s.template_version},
            {"created_at", s.created_at}};
}

SyntheticSample sample_from_json(const nlohmann::json& j) {
    SyntheticSample s;
    s.id = j.value("id", std::string());
    s.text = j.at("text").get<std::string>();
    s.label = j.at("label").get<std::string>();
    s.atomic_config_id = j.value("atomic_config_id", std::string());
    s.prompt_call_id = j.value("prompt_call_id", std::string());
    s.template_version = j.value("template_version", std::string());
    s.created_at = j.value("created_at", std::string());
    return s;
}

std::vector<std::string> Dataset::texts() const {
    std::vector<std::string> out;
    out.reserve(samples.size());
    for (const auto& s : samples) out.push_back(s.text);
    return out;
}

std::vector<std::string> Dataset::class_order() const {
    std::vector<std::string> order = labels;
    for (const auto& s : samples) {
        if (std::find(order.begin(), order.end(), s.label) == order.end()) order.push_back(s.label);
    }
    return order;
}

std::map<std::string, std::size_t> Dataset::counts_by_label() const {
    std::map<std::string, std::size_t> counts;
    for (const auto& l : labels) counts[l] = 0;
    for (const auto& s : samples) ++counts[s.label];
    return counts;
}

std::string Clock::now_iso() const {
    return text::iso8601_utc(unix_seconds());
}

std::int64_t SystemClock::unix_seconds() const {
    return std::chrono::duration_cast<std::chrono::seconds>(std::chrono::system_clock::now().time_since_epoch()).count();
}

FixedClock FixedClock::from_environment() {
    if (const char* v = std::getenv("SOURCE_DATE_EPOCH")) {
        char* end = nullptr;
        long long s = std::strtoll(v, &end, 10);
        if (end && *end == '\0') return FixedClock(s);
    }
    return FixedClock(0);
}

}  // namespace synthline
