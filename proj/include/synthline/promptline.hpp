#pragma once

#include "synthline/error.hpp"
#include "synthline/feature_model.hpp"

#include <filesystem>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace synthline {

// ---------------------------------------------------------------------------
// Quotas
// ---------------------------------------------------------------------------

/// Per (label, atomic configuration) sample allocation.
class QuotaPlan {
public:
    struct Cell {
        std::size_t index = 0;  // canonical position: label-major, then configuration
        std::size_t label_index = 0;
        std::size_t config_index = 0;
        std::string label;
        std::string config_id;
        int quota = 0;
    };

    QuotaPlan() = default;
    QuotaPlan(std::vector<std::string> labels, std::vector<std::string> config_ids, int subset_size,
              std::vector<int> per_config_quota);

    int subset_size() const { return subset_size_; }
    const std::vector<std::string>& labels() const { return labels_; }
    const std::vector<std::string>& config_ids() const { return config_ids_; }

    int quota(std::string_view label, std::string_view config_id) const;
    bool contains(std::string_view label, std::string_view config_id) const;
    int label_total(std::string_view label) const;
    int total() const;

    /// All cells in canonical order.
    const std::vector<Cell>& cells() const { return cells_; }

private:
    std::vector<std::string> labels_;
    std::vector<std::string> config_ids_;
    int subset_size_ = 0;
    std::vector<Cell> cells_;
    std::map<std::pair<std::string, std::string>, std::size_t, std::less<>> lookup_;
};

/// Spreads `subset_size` samples per label over the configurations: every
/// configuration gets floor(subset_size / A), and the first subset_size mod A
/// configurations (canonical order) get one more.
QuotaPlan allocate_quotas(const std::vector<LabelSpec>& labels, const std::vector<AtomicConfiguration>& configs,
                          int subset_size);

// ---------------------------------------------------------------------------
// Prompts
// ---------------------------------------------------------------------------

enum class ResponseSchema { SingleText, TextArray };

struct PromptSpec {
    std::string system_text;
    std::string user_text;
    std::string label_name;
    std::string atomic_config_id;
    int requested_count = 1;
    ResponseSchema response_schema = ResponseSchema::SingleText;

    bool operator==(const PromptSpec&) const = default;
};

nlohmann::json to_json(const PromptSpec& p);
PromptSpec prompt_from_json(const nlohmann::json& j);

class TemplateError : public Error {
public:
    explicit TemplateError(const std::string& message) : Error("TemplateError", message) {}
};

/// Versioned prompt templates with `{placeholder}` substitution. `{{` and
/// `}}` render literal braces.
struct PromptTemplates {
    std::string version;
    std::string generation_system;
    std::string generation_user;
    std::string response_single;
    std::string response_array;
    std::string critic;
    std::string update;

    /// The templates shipped in templates/, compiled in.
    static const PromptTemplates& builtin();
    /// Loads the same file set from a directory.
    static PromptTemplates load(const std::filesystem::path& dir);
};

std::string render_template(std::string_view tpl, const std::map<std::string, std::string, std::less<>>& vars);

PromptSpec build_prompt(const LabelSpec& label, const AtomicConfiguration& config, int count,
                        const PromptTemplates& templates = PromptTemplates::builtin());

// ---------------------------------------------------------------------------
// Response parsing
// ---------------------------------------------------------------------------

class ParseError : public Error {
public:
    explicit ParseError(const std::string& message) : Error("ParseError", message) {}
};

/// Extracts requirement texts from an LLM response. Tries a JSON string array
/// first, then a numbered or bulleted list. Items come back trimmed with line
/// breaks collapsed; at most `expected_count` are returned. Throws ParseError
/// when nothing can be recovered.
std::vector<std::string> parse_generation(std::string_view response, int expected_count);

}  // namespace synthline
