#pragma once

#include "synthline/dataset.hpp"
#include "synthline/feature_model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <random>
#include <string>
#include <vector>

namespace fixtures {

/// The base security/non-security configuration: 2 levels x 4 sources x
/// 3 formats x 3 domains x 1 language.
inline nlohmann::json base_selection(int subset_size = 500) {
    return {
        {"llm_model", "gpt-4.1-nano"},
        {"temperature", 1.0},
        {"top_p", 1.0},
        {"specification_level", {"High-Level", "Detailed"}},
        {"requirement_source", {"End Users", "Business Managers", "Development Team", "Regulatory Bodies"}},
        {"specification_format", {"NL", "Constrained NL", "User Story"}},
        {"domain", {"Telecommunications", "Healthcare", "Enterprise Data Management"}},
        {"language", {"English"}},
        {"labels",
         {{{"label_name", "Security"}, {"label_description", "Protection of the system and its data."}},
          {{"label_name", "Non-Security"}, {"label_description", "Any other concern."}}}},
        {"output_format", "CSV"},
        {"subset_size", subset_size},
    };
}

/// A small selection: 2 sources x 2 formats, two labels.
inline nlohmann::json small_selection(int subset_size = 6, int samples_per_prompt = 2) {
    return {
        {"llm_model", "m"},
        {"samples_per_prompt", samples_per_prompt},
        {"specification_level", {"Detailed"}},
        {"requirement_source", {"End Users", "Regulatory Bodies"}},
        {"specification_format", {"NL", "User Story"}},
        {"domain", {"Healthcare"}},
        {"language", {"English"}},
        {"labels",
         {{{"label_name", "Security"}, {"label_description", "Protection of data."}},
          {{"label_name", "Non-Security"}, {"label_description", "Everything else."}}}},
        {"output_format", "CSV"},
        {"subset_size", subset_size},
    };
}

inline synthline::ConfigSelection parse(const nlohmann::json& j) {
    return synthline::validate_selection(synthline::default_feature_model(), j);
}

inline synthline::Dataset make_dataset(const std::vector<std::pair<std::string, std::string>>& rows) {
    synthline::Dataset ds;
    for (const auto& [text, label] : rows) {
        synthline::SyntheticSample s;
        s.id = std::to_string(ds.samples.size());
        s.text = text;
        s.label = label;
        ds.samples.push_back(s);
    }
    ds.labels = ds.class_order();
    return ds;
}

/// A fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    static std::mt19937_64 rng(std::random_device{}());
    auto dir = std::filesystem::temp_directory_path() / ("synthline-" + name + "-" + std::to_string(rng() % 1000000000));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

}  // namespace fixtures
