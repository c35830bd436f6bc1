#pragma once

#include <nlohmann/json.hpp>

#include <chrono>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace synthline {

struct SyntheticSample {
    std::string id;
    std::string text;
    std::string label;
    std::string atomic_config_id;
    std::string prompt_call_id;
    std::string template_version;
    std::string created_at;

    bool operator==(const SyntheticSample&) const = default;
};

nlohmann::json to_json(const SyntheticSample& s);
SyntheticSample sample_from_json(const nlohmann::json& j);

/// Labelled samples in canonical order. `labels` fixes the class order used
/// for reporting; classes seen in samples but not listed are appended.
struct Dataset {
    std::vector<std::string> labels;
    std::vector<SyntheticSample> samples;

    std::size_t size() const { return samples.size(); }
    bool empty() const { return samples.empty(); }
    std::vector<std::string> texts() const;
    std::vector<std::string> class_order() const;
    std::map<std::string, std::size_t> counts_by_label() const;

    bool operator==(const Dataset&) const = default;
};

/// Source of timestamps. Mock runs use a fixed clock, which makes artifacts
/// byte-reproducible.
class Clock {
public:
    virtual ~Clock() = default;
    virtual std::int64_t unix_seconds() const = 0;
    std::string now_iso() const;
};

class SystemClock : public Clock {
public:
    std::int64_t unix_seconds() const override;
};

class FixedClock : public Clock {
public:
    explicit FixedClock(std::int64_t seconds = 0) : seconds_(seconds) {}
    std::int64_t unix_seconds() const override { return seconds_; }

    /// SOURCE_DATE_EPOCH when set, else the Unix epoch.
    static FixedClock from_environment();

private:
    std::int64_t seconds_;
};

}  // namespace synthline
