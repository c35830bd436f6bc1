#include "synthline/feature_model.hpp"

#include "synthline/resources.hpp"
#include "synthline/text.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <set>
#include <sstream>

namespace synthline {

using nlohmann::json;

// ---------------------------------------------------------------------------
// Kinds and ranges
// ---------------------------------------------------------------------------

namespace {

constexpr std::array<std::pair<FeatureKind, std::string_view>, 6> kKindNames{{
    {FeatureKind::SingleSelect, "single-select"},
    {FeatureKind::MultiSelect, "multi-select"},
    {FeatureKind::Integer, "integer"},
    {FeatureKind::Real, "real"},
    {FeatureKind::Text, "text"},
    {FeatureKind::RecordList, "record-list"},
}};

std::string format_number(double v) {
    std::ostringstream out;
    out << v;
    return out.str();
}

bool is_select(FeatureKind k) {
    return k == FeatureKind::SingleSelect || k == FeatureKind::MultiSelect;
}

bool is_numeric(FeatureKind k) {
    return k == FeatureKind::Integer || k == FeatureKind::Real;
}

}  // namespace

std::string_view to_string(FeatureKind kind) {
    for (const auto& [k, name] : kKindNames) {
        if (k == kind) return name;
    }
    return "unknown";
}

std::optional<FeatureKind> feature_kind_from_string(std::string_view s) {
    for (const auto& [k, name] : kKindNames) {
        if (name == s) return k;
    }
    return std::nullopt;
}

bool NumericRange::contains(double v) const {
    if (!std::isfinite(v)) return false;
    if (min && (min_exclusive ? v <= *min : v < *min)) return false;
    if (max && (max_exclusive ? v >= *max : v > *max)) return false;
    return true;
}

std::string NumericRange::describe() const {
    std::string lo = min ? (min_exclusive ? "(" : "[") + format_number(*min) : "(-inf";
    std::string hi = max ? format_number(*max) + (max_exclusive ? ")" : "]") : "+inf)";
    return lo + ", " + hi;
}

bool Feature::has_value(std::string_view v) const {
    return std::find(values.begin(), values.end(), v) != values.end();
}

// ---------------------------------------------------------------------------
// FeatureModel
// ---------------------------------------------------------------------------

FeatureModelError::FeatureModelError(std::vector<ModelIssue> issues)
    : Error(std::any_of(issues.begin(), issues.end(),
                        [](const ModelIssue& i) { return i.kind == ModelIssue::Kind::Schema; })
                ? "SchemaError"
                : "ConstraintError",
            [&] {
                std::string msg = "invalid feature model:";
                for (const auto& i : issues) msg += " " + i.message + ";";
                return msg;
            }()),
      issues_(std::move(issues)) {}

bool FeatureModelError::has(ModelIssue::Kind kind) const {
    return std::any_of(issues_.begin(), issues_.end(), [&](const ModelIssue& i) { return i.kind == kind; });
}

FeatureModel::FeatureModel(std::string name, std::string version, std::vector<FeatureGroup> groups)
    : name_(std::move(name)), version_(std::move(version)), groups_(std::move(groups)) {}

const Feature* FeatureModel::find(std::string_view feature_name) const {
    for (const auto& g : groups_) {
        for (const auto& f : g.features) {
            if (f.name == feature_name) return &f;
        }
    }
    return nullptr;
}

const Feature& FeatureModel::at(std::string_view feature_name) const {
    if (const Feature* f = find(feature_name)) return *f;
    throw std::out_of_range("unknown feature: " + std::string(feature_name));
}

std::size_t FeatureModel::parameter_count() const {
    std::size_t n = 0;
    for (const auto& g : groups_) n += g.features.size();
    return n;
}

json FeatureModel::to_json() const {
    json groups = json::array();
    for (const auto& g : groups_) {
        json features = json::array();
        for (const auto& f : g.features) {
            json jf = {{"name", f.name}, {"kind", to_string(f.kind)}, {"mandatory", f.mandatory}};
            if (is_select(f.kind)) {
                jf["domain"] = f.values;
                if (f.open_vocabulary) jf["open"] = true;
            } else if (is_numeric(f.kind)) {
                json d = json::object();
                if (f.range.min) d["min"] = *f.range.min;
                if (f.range.max) d["max"] = *f.range.max;
                if (f.range.min_exclusive) d["min_exclusive"] = true;
                if (f.range.max_exclusive) d["max_exclusive"] = true;
                jf["domain"] = d;
            } else if (f.kind == FeatureKind::RecordList) {
                jf["domain"] = {{"fields", f.record_fields}};
            }
            if (f.active_when) {
                jf["active_when"] = {{"feature", f.active_when->feature}, {"equals", f.active_when->equals}};
            }
            if (!f.default_value.is_null()) jf["default"] = f.default_value;
            if (!f.description.empty()) jf["description"] = f.description;
            features.push_back(std::move(jf));
        }
        groups.push_back({{"name", g.name}, {"features", std::move(features)}});
    }
    return {{"name", name_}, {"version", version_}, {"groups", std::move(groups)}};
}

// ---------------------------------------------------------------------------
// Parsing
// ---------------------------------------------------------------------------

namespace {

struct CoreFeature {
    std::string_view name;
    FeatureKind kind;
};

// Features the typed ConfigSelection binds to.
constexpr std::array<CoreFeature, 14> kCoreFeatures{{
    {"llm_model", FeatureKind::Text},
    {"temperature", FeatureKind::Real},
    {"top_p", FeatureKind::Real},
    {"samples_per_prompt", FeatureKind::Integer},
    {"prompt_approach", FeatureKind::SingleSelect},
    {"pace_iterations", FeatureKind::Integer},
    {"pace_actors", FeatureKind::Integer},
    {"pace_candidates", FeatureKind::Integer},
    {"specification_level", FeatureKind::MultiSelect},
    {"requirement_source", FeatureKind::MultiSelect},
    {"specification_format", FeatureKind::MultiSelect},
    {"domain", FeatureKind::MultiSelect},
    {"language", FeatureKind::MultiSelect},
    {"labels", FeatureKind::RecordList},
}};

class ModelParser {
public:
    FeatureModel parse(const json& doc) {
        if (!doc.is_object()) {
            schema("document must be an object");
            throw FeatureModelError(std::move(issues_));
        }
        std::string name = doc.value("name", std::string("Synthline"));
        std::string version = doc.value("version", std::string("1"));
        auto it = doc.find("groups");
        if (it == doc.end() || !it->is_array()) {
            schema("missing 'groups' array");
            throw FeatureModelError(std::move(issues_));
        }

        std::vector<FeatureGroup> groups;
        std::set<std::string> group_names;
        for (const auto& jg : *it) {
            if (!jg.is_object() || !jg.contains("name") || !jg["name"].is_string()) {
                schema("group without a string 'name'");
                continue;
            }
            FeatureGroup g;
            g.name = jg["name"].get<std::string>();
            if (!group_names.insert(g.name).second) schema("duplicate group '" + g.name + "'");
            if (std::find(FeatureModel::kRootGroups.begin(), FeatureModel::kRootGroups.end(), g.name) ==
                FeatureModel::kRootGroups.end()) {
                schema("unexpected root group '" + g.name + "'");
            }
            auto jf = jg.find("features");
            if (jf == jg.end() || !jf->is_array()) {
                schema("group '" + g.name + "' has no 'features' array");
            } else {
                for (const auto& f : *jf) {
                    if (auto parsed = parse_feature(f)) g.features.push_back(std::move(*parsed));
                }
            }
            groups.push_back(std::move(g));
        }
        if (groups.size() != FeatureModel::kRootGroups.size()) {
            schema("expected exactly 4 root groups, found " + std::to_string(groups.size()));
        }
        for (auto root : FeatureModel::kRootGroups) {
            if (!group_names.count(std::string(root))) schema("missing root group '" + std::string(root) + "'");
        }

        FeatureModel model(std::move(name), std::move(version), std::move(groups));
        check_names_and_constraints(model);
        check_core_vocabulary(model);
        if (!issues_.empty()) throw FeatureModelError(std::move(issues_));
        return model;
    }

private:
    std::vector<ModelIssue> issues_;

    void schema(std::string msg) { issues_.push_back({ModelIssue::Kind::Schema, std::move(msg)}); }
    void constraint(std::string msg) { issues_.push_back({ModelIssue::Kind::Constraint, std::move(msg)}); }

    std::optional<Feature> parse_feature(const json& jf) {
        if (!jf.is_object() || !jf.contains("name") || !jf["name"].is_string() ||
            jf["name"].get<std::string>().empty()) {
            schema("feature without a non-empty string 'name'");
            return std::nullopt;
        }
        Feature f;
        f.name = jf["name"].get<std::string>();
        const std::string where = "feature '" + f.name + "'";

        auto kind_it = jf.find("kind");
        std::optional<FeatureKind> kind;
        if (kind_it != jf.end() && kind_it->is_string()) kind = feature_kind_from_string(kind_it->get<std::string>());
        if (!kind) {
            schema(where + ": unknown kind " + (kind_it == jf.end() ? std::string("(missing)") : kind_it->dump()));
            return std::nullopt;
        }
        f.kind = *kind;

        const json domain = jf.value("domain", json());
        if (is_select(f.kind)) {
            if (!domain.is_array() || domain.empty()) {
                schema(where + ": select kinds need a non-empty 'domain' array");
            } else {
                std::set<std::string> seen;
                for (const auto& v : domain) {
                    if (!v.is_string()) {
                        schema(where + ": domain values must be strings");
                        continue;
                    }
                    auto s = v.get<std::string>();
                    if (!seen.insert(s).second) schema(where + ": duplicate domain value '" + s + "'");
                    f.values.push_back(std::move(s));
                }
            }
            f.open_vocabulary = jf.value("open", false);
            if (f.open_vocabulary && f.kind != FeatureKind::MultiSelect) {
                schema(where + ": 'open' is only allowed on multi-select features");
            }
        } else if (is_numeric(f.kind)) {
            if (!domain.is_null()) {
                if (!domain.is_object()) {
                    schema(where + ": numeric 'domain' must be an object");
                } else {
                    if (domain.contains("min")) f.range.min = domain["min"].get<double>();
                    if (domain.contains("max")) f.range.max = domain["max"].get<double>();
                    f.range.min_exclusive = domain.value("min_exclusive", false);
                    f.range.max_exclusive = domain.value("max_exclusive", false);
                    if (f.range.min && f.range.max && *f.range.min > *f.range.max) {
                        schema(where + ": empty numeric range " + f.range.describe());
                    }
                }
            }
        } else if (f.kind == FeatureKind::RecordList) {
            if (!domain.is_object() || !domain.contains("fields") || !domain["fields"].is_array() ||
                domain["fields"].empty()) {
                schema(where + ": record-list needs 'domain.fields'");
            } else {
                for (const auto& v : domain["fields"]) {
                    if (v.is_string()) f.record_fields.push_back(v.get<std::string>());
                    else schema(where + ": record field names must be strings");
                }
            }
        } else if (!domain.is_null()) {
            schema(where + ": text features take no 'domain'");
        }

        auto mandatory = jf.value("mandatory", json(false));
        if (!mandatory.is_boolean()) schema(where + ": 'mandatory' must be a boolean");
        else f.mandatory = mandatory.get<bool>();

        if (auto aw = jf.find("active_when"); aw != jf.end() && !aw->is_null()) {
            if (!aw->is_object() || !aw->contains("feature") || !(*aw)["feature"].is_string() ||
                !aw->contains("equals") || !(*aw)["equals"].is_string()) {
                schema(where + ": 'active_when' needs string 'feature' and 'equals'");
            } else {
                f.active_when = ActivationConstraint{(*aw)["feature"].get<std::string>(),
                                                     (*aw)["equals"].get<std::string>()};
            }
        }
        f.default_value = jf.value("default", json());
        f.description = jf.value("description", std::string());
        return f;
    }

    void check_names_and_constraints(const FeatureModel& model) {
        std::set<std::string> names;
        for (const auto& g : model.groups()) {
            for (const auto& f : g.features) {
                if (!names.insert(f.name).second) schema("duplicate feature name '" + f.name + "'");
            }
        }
        for (const auto& g : model.groups()) {
            for (const auto& f : g.features) {
                if (!f.active_when) continue;
                const auto& c = *f.active_when;
                const Feature* target = model.find(c.feature);
                if (!target) {
                    constraint("feature '" + f.name + "' depends on nonexistent feature '" + c.feature + "'");
                } else if (target == &f) {
                    constraint("feature '" + f.name + "' depends on itself");
                } else if (target->kind != FeatureKind::SingleSelect) {
                    constraint("feature '" + f.name + "' depends on '" + c.feature + "', which is not single-select");
                } else if (!target->has_value(c.equals)) {
                    constraint("feature '" + f.name + "' depends on '" + c.feature + "' = '" + c.equals +
                               "', which is outside its domain");
                }
            }
        }
    }

    void check_core_vocabulary(const FeatureModel& model) {
        for (const auto& core : kCoreFeatures) {
            const Feature* f = model.find(core.name);
            if (!f) {
                schema("missing required feature '" + std::string(core.name) + "'");
            } else if (f->kind != core.kind) {
                schema("feature '" + std::string(core.name) + "' must be " + std::string(to_string(core.kind)));
            }
        }
        if (const Feature* f = model.find("prompt_approach"); f && !(f->has_value("Default") && f->has_value("PACE"))) {
            schema("feature 'prompt_approach' must offer Default and PACE");
        }
        if (const Feature* f = model.find("output_format"); f && !(f->has_value("CSV") && f->has_value("JSON"))) {
            schema("feature 'output_format' must offer CSV and JSON");
        }
        if (!model.find("subset_size") || model.at("subset_size").kind != FeatureKind::Integer) {
            schema("missing integer feature 'subset_size'");
        }
        if (const Feature* f = model.find("labels"); f && f->kind == FeatureKind::RecordList) {
            if (f->record_fields.size() < 2 || f->record_fields[0] != "label_name" ||
                f->record_fields[1] != "label_description") {
                schema("feature 'labels' must declare fields label_name, label_description");
            }
        }
    }
};

}  // namespace

FeatureModel parse_feature_model(const json& document) {
    return ModelParser{}.parse(document);
}

FeatureModel parse_feature_model(std::string_view document) {
    json doc = json::parse(document.begin(), document.end(), nullptr, false);
    if (doc.is_discarded()) {
        throw FeatureModelError({{ModelIssue::Kind::Schema, "document is not valid JSON"}});
    }
    return parse_feature_model(doc);
}

const FeatureModel& default_feature_model() {
    static const FeatureModel model = parse_feature_model(resources::feature_model_json());
    return model;
}

// ---------------------------------------------------------------------------
// Selection validation
// ---------------------------------------------------------------------------

std::string_view to_string(PromptApproach approach) {
    return approach == PromptApproach::Pace ? "PACE" : "Default";
}

std::string_view to_string(OutputFormat format) {
    return format == OutputFormat::Json ? "JSON" : "CSV";
}

std::string_view to_string(Violation::Code code) {
    switch (code) {
    case Violation::Code::OutOfDomain: return "OutOfDomain";
    case Violation::Code::MissingMandatory: return "MissingMandatory";
    case Violation::Code::InactiveFeatureSet: return "InactiveFeatureSet";
    case Violation::Code::TypeMismatch: return "TypeMismatch";
    case Violation::Code::UnknownFeature: return "UnknownFeature";
    case Violation::Code::DuplicateValue: return "DuplicateValue";
    }
    return "Unknown";
}

json to_json(const Violation& v) {
    return {{"code", to_string(v.code)}, {"feature", v.feature}, {"message", v.message}};
}

ValidationError::ValidationError(std::vector<Violation> violations)
    : Error("ValidationError",
            [&] {
                std::string msg = "invalid configuration:";
                for (const auto& v : violations) msg += " [" + std::string(to_string(v.code)) + "] " + v.message + ";";
                return msg;
            }()),
      violations_(std::move(violations)) {}

bool ValidationError::has(Violation::Code code) const {
    return std::any_of(violations_.begin(), violations_.end(), [&](const Violation& v) { return v.code == code; });
}

json ValidationError::to_json() const {
    json out = json::array();
    for (const auto& v : violations_) out.push_back(synthline::to_json(v));
    return out;
}

namespace {

/// Declared catalog order first, then values outside the catalog sorted.
std::vector<std::string> canonical_order(const Feature& f, std::vector<std::string> values) {
    std::vector<std::string> out;
    for (const auto& v : f.values) {
        if (std::find(values.begin(), values.end(), v) != values.end()) out.push_back(v);
    }
    std::vector<std::string> extra;
    for (auto& v : values) {
        if (!f.has_value(v)) extra.push_back(std::move(v));
    }
    std::sort(extra.begin(), extra.end());
    extra.erase(std::unique(extra.begin(), extra.end()), extra.end());
    out.insert(out.end(), extra.begin(), extra.end());
    return out;
}

class SelectionValidator {
public:
    SelectionValidator(const FeatureModel& model, const json& raw) : model_(model), raw_(raw) {}

    ConfigSelection run() {
        if (!raw_.is_object()) {
            fail(Violation::Code::TypeMismatch, "", "configuration must be a JSON object");
            throw ValidationError(std::move(violations_));
        }
        for (const auto& [key, _] : raw_.items()) {
            if (!model_.find(key)) fail(Violation::Code::UnknownFeature, key, "unknown feature '" + key + "'");
        }
        for (const auto& g : model_.groups()) {
            for (const auto& f : g.features) check_feature(f);
        }
        if (!violations_.empty()) throw ValidationError(std::move(violations_));
        return build();
    }

private:
    const FeatureModel& model_;
    const json& raw_;
    std::vector<Violation> violations_;
    std::map<std::string, json> values_;

    void fail(Violation::Code code, const std::string& feature, std::string message) {
        violations_.push_back({code, feature, std::move(message)});
    }

    bool supplied(const std::string& name) const {
        auto it = raw_.find(name);
        return it != raw_.end() && !it->is_null();
    }

    json effective_value(const Feature& f) const {
        if (supplied(f.name)) return raw_.at(f.name);
        return f.default_value;
    }

    bool is_active(const Feature& f) const {
        if (!f.active_when) return true;
        const Feature* dep = model_.find(f.active_when->feature);
        if (!dep || !is_active(*dep)) return false;
        json v = effective_value(*dep);
        return v.is_string() && v.get<std::string>() == f.active_when->equals;
    }

    void check_feature(const Feature& f) {
        const bool present = supplied(f.name);
        if (!is_active(f)) {
            if (present) {
                fail(Violation::Code::InactiveFeatureSet, f.name,
                     "'" + f.name + "' is only available when " + f.active_when->feature + " = " +
                         f.active_when->equals);
            }
            return;
        }
        json value = present ? raw_.at(f.name) : f.default_value;
        if (value.is_null()) {
            if (f.mandatory) fail(Violation::Code::MissingMandatory, f.name, "'" + f.name + "' is mandatory");
            return;
        }
        switch (f.kind) {
        case FeatureKind::SingleSelect: check_single(f, value); break;
        case FeatureKind::MultiSelect: check_multi(f, value); break;
        case FeatureKind::Integer: check_integer(f, value); break;
        case FeatureKind::Real: check_real(f, value); break;
        case FeatureKind::Text: check_text(f, value); break;
        case FeatureKind::RecordList: check_records(f, value); break;
        }
    }

    void check_single(const Feature& f, const json& v) {
        if (!v.is_string()) {
            fail(Violation::Code::TypeMismatch, f.name, "'" + f.name + "' must be a string");
            return;
        }
        auto s = v.get<std::string>();
        if (!f.has_value(s)) {
            fail(Violation::Code::OutOfDomain, f.name, "'" + s + "' is not a value of '" + f.name + "'");
            return;
        }
        values_[f.name] = s;
    }

    void check_multi(const Feature& f, const json& v) {
        std::vector<std::string> picked;
        if (v.is_string()) {
            picked.push_back(v.get<std::string>());
        } else if (v.is_array()) {
            for (const auto& e : v) {
                if (!e.is_string()) {
                    fail(Violation::Code::TypeMismatch, f.name, "'" + f.name + "' values must be strings");
                    return;
                }
                picked.push_back(e.get<std::string>());
            }
        } else {
            fail(Violation::Code::TypeMismatch, f.name, "'" + f.name + "' must be a string or a list of strings");
            return;
        }
        bool ok = true;
        for (const auto& s : picked) {
            if (text::trim(s).empty()) {
                fail(Violation::Code::OutOfDomain, f.name, "'" + f.name + "' contains an empty value");
                ok = false;
            } else if (!f.open_vocabulary && !f.has_value(s)) {
                fail(Violation::Code::OutOfDomain, f.name, "'" + s + "' is not a value of '" + f.name + "'");
                ok = false;
            }
        }
        if (!ok) return;
        if (picked.empty()) {
            if (f.mandatory) fail(Violation::Code::MissingMandatory, f.name, "'" + f.name + "' needs at least one value");
            return;
        }
        values_[f.name] = canonical_order(f, std::move(picked));
    }

    void check_integer(const Feature& f, const json& v) {
        if (!v.is_number_integer()) {
            fail(Violation::Code::TypeMismatch, f.name, "'" + f.name + "' must be an integer");
            return;
        }
        auto n = v.get<std::int64_t>();
        if (!f.range.contains(static_cast<double>(n)) || n > std::numeric_limits<int>::max()) {
            fail(Violation::Code::OutOfDomain, f.name,
                 "'" + f.name + "' = " + std::to_string(n) + " is outside " + f.range.describe());
            return;
        }
        values_[f.name] = n;
    }

    void check_real(const Feature& f, const json& v) {
        if (!v.is_number()) {
            fail(Violation::Code::TypeMismatch, f.name, "'" + f.name + "' must be a number");
            return;
        }
        auto x = v.get<double>();
        if (!f.range.contains(x)) {
            fail(Violation::Code::OutOfDomain, f.name,
                 "'" + f.name + "' = " + format_number(x) + " is outside " + f.range.describe());
            return;
        }
        values_[f.name] = x;
    }

    void check_text(const Feature& f, const json& v) {
        if (!v.is_string()) {
            fail(Violation::Code::TypeMismatch, f.name, "'" + f.name + "' must be a string");
            return;
        }
        auto s = text::trim(v.get<std::string>());
        if (s.empty()) {
            if (f.mandatory) fail(Violation::Code::MissingMandatory, f.name, "'" + f.name + "' must not be empty");
            return;
        }
        values_[f.name] = s;
    }

    void check_records(const Feature& f, const json& v) {
        if (!v.is_array()) {
            fail(Violation::Code::TypeMismatch, f.name, "'" + f.name + "' must be a list of records");
            return;
        }
        json out = json::array();
        std::set<std::string> keys;
        bool ok = true;
        for (const auto& rec : v) {
            if (!rec.is_object()) {
                fail(Violation::Code::TypeMismatch, f.name, "'" + f.name + "' entries must be objects");
                ok = false;
                continue;
            }
            json clean = json::object();
            for (const auto& field : f.record_fields) {
                auto it = rec.find(field);
                if (it == rec.end() || !it->is_string() || text::trim(it->get<std::string>()).empty()) {
                    fail(Violation::Code::MissingMandatory, f.name,
                         "'" + f.name + "' entry needs a non-empty string '" + field + "'");
                    ok = false;
                    continue;
                }
                clean[field] = text::trim(it->get<std::string>());
            }
            for (const auto& [key, _] : rec.items()) {
                if (std::find(f.record_fields.begin(), f.record_fields.end(), key) == f.record_fields.end()) {
                    fail(Violation::Code::UnknownFeature, f.name, "'" + f.name + "' entry has unknown field '" + key + "'");
                    ok = false;
                }
            }
            if (clean.contains(f.record_fields.front())) {
                auto key = clean[f.record_fields.front()].get<std::string>();
                if (!keys.insert(key).second) {
                    fail(Violation::Code::DuplicateValue, f.name, "duplicate " + f.record_fields.front() + " '" + key + "'");
                    ok = false;
                }
            }
            out.push_back(std::move(clean));
        }
        if (!ok) return;
        if (out.empty()) {
            if (f.mandatory) fail(Violation::Code::MissingMandatory, f.name, "'" + f.name + "' needs at least one entry");
            return;
        }
        values_[f.name] = std::move(out);
    }

    template <typename T>
    T get(const std::string& name, T fallback) const {
        auto it = values_.find(name);
        return it == values_.end() ? fallback : it->second.get<T>();
    }

    ConfigSelection build() const {
        ConfigSelection s;
        auto& g = s.generation;
        g.llm_provider = get<std::string>("llm_provider", "mock");
        g.llm_model = get<std::string>("llm_model", "");
        g.temperature = get<double>("temperature", 1.0);
        g.top_p = get<double>("top_p", 1.0);
        g.samples_per_prompt = get<int>("samples_per_prompt", 1);
        g.prompt_approach = get<std::string>("prompt_approach", "Default") == "PACE" ? PromptApproach::Pace
                                                                                   : PromptApproach::Default;
        if (g.prompt_approach == PromptApproach::Pace) {
            PaceSettings p;
            p.iterations = get<int>("pace_iterations", p.iterations);
            p.actors = get<int>("pace_actors", p.actors);
            p.candidates = get<int>("pace_candidates", p.candidates);
            g.pace = p;
        }
        using V = std::vector<std::string>;
        s.specification_level = get<V>("specification_level", {});
        s.requirement_source = get<V>("requirement_source", {});
        s.specification_format = get<V>("specification_format", {});
        s.domain = get<V>("domain", {});
        s.language = get<V>("language", {});
        s.requirement_types = get<V>("requirement_types", {});
        if (auto it = values_.find("labels"); it != values_.end()) {
            for (const auto& rec : it->second) {
                s.labels.push_back({rec.at("label_name").get<std::string>(), rec.at("label_description").get<std::string>()});
            }
        }
        s.output_format = get<std::string>("output_format", "CSV") == "JSON" ? OutputFormat::Json : OutputFormat::Csv;
        s.subset_size = get<int>("subset_size", 1);
        return s;
    }
};

}  // namespace

ConfigSelection validate_selection(const FeatureModel& model, const json& raw) {
    return SelectionValidator(model, raw).run();
}

json serialize_selection(const ConfigSelection& s) {
    const auto& g = s.generation;
    json out = {
        {"llm_provider", g.llm_provider},
        {"llm_model", g.llm_model},
        {"temperature", g.temperature},
        {"top_p", g.top_p},
        {"samples_per_prompt", g.samples_per_prompt},
        {"prompt_approach", to_string(g.prompt_approach)},
        {"specification_level", s.specification_level},
        {"requirement_source", s.requirement_source},
        {"specification_format", s.specification_format},
        {"domain", s.domain},
        {"language", s.language},
        {"output_format", to_string(s.output_format)},
        {"subset_size", s.subset_size},
    };
    if (g.pace) {
        out["pace_iterations"] = g.pace->iterations;
        out["pace_actors"] = g.pace->actors;
        out["pace_candidates"] = g.pace->candidates;
    }
    if (!s.requirement_types.empty()) out["requirement_types"] = s.requirement_types;
    json labels = json::array();
    for (const auto& l : s.labels) labels.push_back({{"label_name", l.name}, {"label_description", l.description}});
    out["labels"] = std::move(labels);
    return out;
}

std::string config_hash(const ConfigSelection& selection) {
    return text::sha256_hex(serialize_selection(selection).dump());
}

// ---------------------------------------------------------------------------
// Atomic configurations
// ---------------------------------------------------------------------------

std::string_view axis_feature_name(Axis axis) {
    switch (axis) {
    case Axis::SpecificationLevel: return "specification_level";
    case Axis::RequirementSource: return "requirement_source";
    case Axis::SpecificationFormat: return "specification_format";
    case Axis::Domain: return "domain";
    case Axis::Language: return "language";
    }
    return "";
}

const std::vector<std::string>& axis_selection(const ConfigSelection& s, Axis axis) {
    switch (axis) {
    case Axis::SpecificationLevel: return s.specification_level;
    case Axis::RequirementSource: return s.requirement_source;
    case Axis::SpecificationFormat: return s.specification_format;
    case Axis::Domain: return s.domain;
    case Axis::Language: return s.language;
    }
    throw std::logic_error("bad axis");
}

std::string atomic_config_id(const AxisValues& values) {
    std::string id;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) id.push_back('|');
        for (char c : values[i]) {
            if (c == '%') id += "%25";
            else if (c == '|') id += "%7C";
            else id.push_back(c);
        }
    }
    return id;
}

AxisValues parse_atomic_config_id(std::string_view id) {
    AxisValues out;
    std::size_t field = 0;
    for (std::size_t i = 0; i < id.size(); ++i) {
        char c = id[i];
        if (c == '|') {
            if (++field >= out.size()) throw std::invalid_argument("too many fields in atomic config id");
        } else if (c == '%' && id.substr(i, 3) == "%25") {
            out[field].push_back('%');
            i += 2;
        } else if (c == '%' && id.substr(i, 3) == "%7C") {
            out[field].push_back('|');
            i += 2;
        } else {
            out[field].push_back(c);
        }
    }
    if (field + 1 != out.size()) throw std::invalid_argument("too few fields in atomic config id");
    return out;
}

std::size_t atomic_count(const ConfigSelection& selection) {
    std::size_t n = 1;
    for (Axis a : kAxes) n *= axis_selection(selection, a).size();
    return n;
}

std::vector<AtomicConfiguration> expand_atomic(const ConfigSelection& selection) {
    std::vector<AtomicConfiguration> out;
    const std::size_t total = atomic_count(selection);
    out.reserve(total);
    std::array<std::size_t, kAxes.size()> cursor{};
    for (std::size_t index = 0; index < total; ++index) {
        AtomicConfiguration c;
        c.index = index;
        for (std::size_t a = 0; a < kAxes.size(); ++a) c.values[a] = axis_selection(selection, kAxes[a])[cursor[a]];
        c.id = atomic_config_id(c.values);
        c.generation = selection.generation;
        out.push_back(std::move(c));
        // odometer: last axis varies fastest
        for (std::size_t a = kAxes.size(); a-- > 0;) {
            if (++cursor[a] < axis_selection(selection, kAxes[a]).size()) break;
            cursor[a] = 0;
        }
    }
    return out;
}

}  // namespace synthline
