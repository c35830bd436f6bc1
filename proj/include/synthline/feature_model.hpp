#pragma once

#include "synthline/error.hpp"

#include <nlohmann/json.hpp>

#include <array>
#include <cstddef>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace synthline {

// ---------------------------------------------------------------------------
// Feature model
// ---------------------------------------------------------------------------

enum class FeatureKind { SingleSelect, MultiSelect, Integer, Real, Text, RecordList };

std::string_view to_string(FeatureKind kind);
std::optional<FeatureKind> feature_kind_from_string(std::string_view s);

struct NumericRange {
    std::optional<double> min;
    std::optional<double> max;
    bool min_exclusive = false;
    bool max_exclusive = false;

    bool contains(double v) const;
    std::string describe() const;
};

/// Feature F is active only when feature `feature` has value `equals`.
struct ActivationConstraint {
    std::string feature;
    std::string equals;
};

struct Feature {
    std::string name;
    FeatureKind kind = FeatureKind::Text;
    /// Enumerated values for select kinds, in declared order.
    std::vector<std::string> values;
    /// Multi-select whose enumerated values are a suggested catalog rather
    /// than a closed domain.
    bool open_vocabulary = false;
    NumericRange range;
    /// Field names for record-list kinds.
    std::vector<std::string> record_fields;
    bool mandatory = false;
    std::optional<ActivationConstraint> active_when;
    nlohmann::json default_value;  // null when absent
    std::string description;

    bool has_value(std::string_view v) const;
};

struct FeatureGroup {
    std::string name;
    std::vector<Feature> features;
};

/// One problem found while parsing a feature-model document.
struct ModelIssue {
    enum class Kind { Schema, Constraint };
    Kind kind;
    std::string message;
};

/// Raised by parse_feature_model with every issue found, not only the first.
class FeatureModelError : public Error {
public:
    explicit FeatureModelError(std::vector<ModelIssue> issues);
    const std::vector<ModelIssue>& issues() const noexcept { return issues_; }
    bool has(ModelIssue::Kind kind) const;

private:
    std::vector<ModelIssue> issues_;
};

class FeatureModel {
public:
    static constexpr std::array<std::string_view, 4> kRootGroups{"Generator", "Artifact", "MLTask",
                                                                 "Output"};

    FeatureModel() = default;
    FeatureModel(std::string name, std::string version, std::vector<FeatureGroup> groups);

    const std::string& name() const { return name_; }
    const std::string& version() const { return version_; }
    const std::vector<FeatureGroup>& groups() const { return groups_; }
    const Feature* find(std::string_view feature_name) const;
    const Feature& at(std::string_view feature_name) const;

    /// Number of user-controllable parameters (leaf features).
    std::size_t parameter_count() const;
    /// Model root, feature groups, features.
    int hierarchy_depth() const { return 3; }

    nlohmann::json to_json() const;

private:
    std::string name_;
    std::string version_;
    std::vector<FeatureGroup> groups_;
};

/// Parses and checks a feature-model document. Throws FeatureModelError
/// listing all schema and constraint violations.
FeatureModel parse_feature_model(std::string_view document);
FeatureModel parse_feature_model(const nlohmann::json& document);

/// The model shipped in data/feature_model.json.
const FeatureModel& default_feature_model();

// ---------------------------------------------------------------------------
// Selections
// ---------------------------------------------------------------------------

enum class PromptApproach { Default, Pace };
enum class OutputFormat { Csv, Json };

std::string_view to_string(PromptApproach approach);
std::string_view to_string(OutputFormat format);

struct LabelSpec {
    std::string name;
    std::string description;
    bool operator==(const LabelSpec&) const = default;
};

struct PaceSettings {
    int iterations = 3;
    int actors = 4;
    int candidates = 2;
    bool operator==(const PaceSettings&) const = default;
};

/// Operational fields copied into every atomic configuration.
struct GenerationParams {
    std::string llm_provider = "mock";
    std::string llm_model;
    double temperature = 1.0;
    double top_p = 1.0;
    int samples_per_prompt = 1;
    PromptApproach prompt_approach = PromptApproach::Default;
    std::optional<PaceSettings> pace;  // present iff prompt_approach == Pace
    bool operator==(const GenerationParams&) const = default;
};

/// A validated, fully-typed user selection. Set-valued fields are held in
/// canonical order (declared catalog order, then extra values sorted).
struct ConfigSelection {
    GenerationParams generation;
    std::vector<std::string> specification_level;
    std::vector<std::string> requirement_source;
    std::vector<std::string> specification_format;
    std::vector<std::string> domain;
    std::vector<std::string> language;
    std::vector<std::string> requirement_types;
    std::vector<LabelSpec> labels;
    OutputFormat output_format = OutputFormat::Csv;
    int subset_size = 1;

    bool operator==(const ConfigSelection&) const = default;
};

struct Violation {
    enum class Code { OutOfDomain, MissingMandatory, InactiveFeatureSet, TypeMismatch, UnknownFeature, DuplicateValue };
    Code code;
    std::string feature;
    std::string message;
};

std::string_view to_string(Violation::Code code);
nlohmann::json to_json(const Violation& v);

class ValidationError : public Error {
public:
    explicit ValidationError(std::vector<Violation> violations);
    const std::vector<Violation>& violations() const noexcept { return violations_; }
    bool has(Violation::Code code) const;
    nlohmann::json to_json() const;

private:
    std::vector<Violation> violations_;
};

/// Type-checks a flat configuration document against the model. Throws
/// ValidationError carrying the complete violation list.
ConfigSelection validate_selection(const FeatureModel& model, const nlohmann::json& raw);

/// Flat configuration document that validates back to `selection`.
nlohmann::json serialize_selection(const ConfigSelection& selection);

/// SHA-256 over the canonical serialization; insensitive to the order in
/// which set-valued fields were supplied.
std::string config_hash(const ConfigSelection& selection);

// ---------------------------------------------------------------------------
// Atomic configurations
// ---------------------------------------------------------------------------

/// The five variability axes, in canonical expansion order.
enum class Axis { SpecificationLevel, RequirementSource, SpecificationFormat, Domain, Language };
inline constexpr std::array<Axis, 5> kAxes{Axis::SpecificationLevel, Axis::RequirementSource,
                                          Axis::SpecificationFormat, Axis::Domain, Axis::Language};
std::string_view axis_feature_name(Axis axis);

using AxisValues = std::array<std::string, kAxes.size()>;

struct AtomicConfiguration {
    std::size_t index = 0;
    std::string id;
    AxisValues values;
    GenerationParams generation;

    const std::string& value(Axis axis) const { return values[static_cast<std::size_t>(axis)]; }
    const std::string& specification_level() const { return value(Axis::SpecificationLevel); }
    const std::string& requirement_source() const { return value(Axis::RequirementSource); }
    const std::string& specification_format() const { return value(Axis::SpecificationFormat); }
    const std::string& domain() const { return value(Axis::Domain); }
    const std::string& language() const { return value(Axis::Language); }
};

/// Stable key derived from the axis values; '|' separates values and '%'/'|'
/// inside a value are percent-escaped, which keeps the mapping injective.
std::string atomic_config_id(const AxisValues& values);
AxisValues parse_atomic_config_id(std::string_view id);

const std::vector<std::string>& axis_selection(const ConfigSelection& selection, Axis axis);

/// Cartesian product over the five axes in canonical order.
std::vector<AtomicConfiguration> expand_atomic(const ConfigSelection& selection);
std::size_t atomic_count(const ConfigSelection& selection);

}  // namespace synthline
