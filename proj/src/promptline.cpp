#include "synthline/promptline.hpp"

#include "synthline/resources.hpp"
#include "synthline/text.hpp"

#include <fstream>
#include <regex>
#include <sstream>
#include <stdexcept>

namespace synthline {

using nlohmann::json;

// ---------------------------------------------------------------------------
// QuotaPlan
// ---------------------------------------------------------------------------

QuotaPlan::QuotaPlan(std::vector<std::string> labels, std::vector<std::string> config_ids, int subset_size,
                     std::vector<int> per_config_quota)
    : labels_(std::move(labels)), config_ids_(std::move(config_ids)), subset_size_(subset_size) {
    if (per_config_quota.size() != config_ids_.size()) {
        throw std::invalid_argument("one quota per configuration required");
    }
    for (std::size_t l = 0; l < labels_.size(); ++l) {
        for (std::size_t c = 0; c < config_ids_.size(); ++c) {
            Cell cell{cells_.size(), l, c, labels_[l], config_ids_[c], per_config_quota[c]};
            lookup_.emplace(std::make_pair(cell.label, cell.config_id), cell.index);
            cells_.push_back(std::move(cell));
        }
    }
}

int QuotaPlan::quota(std::string_view label, std::string_view config_id) const {
    auto it = lookup_.find(std::make_pair(std::string(label), std::string(config_id)));
    if (it == lookup_.end()) throw std::out_of_range("no cell for " + std::string(label) + " / " + std::string(config_id));
    return cells_[it->second].quota;
}

bool QuotaPlan::contains(std::string_view label, std::string_view config_id) const {
    return lookup_.count(std::make_pair(std::string(label), std::string(config_id))) != 0;
}

int QuotaPlan::label_total(std::string_view label) const {
    int sum = 0;
    for (const auto& c : cells_) {
        if (c.label == label) sum += c.quota;
    }
    return sum;
}

int QuotaPlan::total() const {
    int sum = 0;
    for (const auto& c : cells_) sum += c.quota;
    return sum;
}

QuotaPlan allocate_quotas(const std::vector<LabelSpec>& labels, const std::vector<AtomicConfiguration>& configs,
                          int subset_size) {
    if (labels.empty()) throw std::invalid_argument("allocate_quotas: at least one label required");
    if (configs.empty()) throw std::invalid_argument("allocate_quotas: at least one atomic configuration required");
    if (subset_size < 1) throw std::invalid_argument("allocate_quotas: subset_size must be >= 1");

    const int a = static_cast<int>(configs.size());
    const int base = subset_size / a;
    const int extra = subset_size % a;
    std::vector<int> quotas(configs.size(), base);
    for (int i = 0; i < extra; ++i) ++quotas[static_cast<std::size_t>(i)];

    std::vector<std::string> names;
    for (const auto& l : labels) names.push_back(l.name);
    std::vector<std::string> ids;
    for (const auto& c : configs) ids.push_back(c.id);
    return QuotaPlan(std::move(names), std::move(ids), subset_size, std::move(quotas));
}

// ---------------------------------------------------------------------------
// Templates
// ---------------------------------------------------------------------------

namespace {

std::string strip_final_newline(std::string_view s) {
    if (!s.empty() && s.back() == '\n') s.remove_suffix(1);
    if (!s.empty() && s.back() == '\r') s.remove_suffix(1);
    return std::string(s);
}

std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw IoError("cannot read template " + p.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

std::string source_role(const std::string& source) {
    if (source == "End Users") {
        return "an end user who relies on the system in daily work and describes what it must do for you";
    }
    if (source == "Business Managers") {
        return "a business manager who frames requirements around organisational goals, cost, and accountability";
    }
    if (source == "Development Team") {
        return "a member of the development team who states requirements precisely enough to implement and test";
    }
    if (source == "Regulatory Bodies") {
        return "a regulatory analyst who writes requirements that enforce legal and standards obligations";
    }
    return "a stakeholder from the " + source + " group";
}

std::string level_guidance(const std::string& level) {
    if (level == "High-Level") return "state the goal or capability without implementation detail";
    if (level == "Detailed") return "include concrete conditions, values, and acceptance details";
    return "write at the " + level + " level of detail";
}

std::string format_guidance(const std::string& format) {
    if (format == "NL") return "a single free-form natural-language statement";
    if (format == "Constrained NL") return "use the pattern 'The <system> shall <action> <object> [<condition>]'";
    if (format == "User Story") return "use the pattern 'As a <role>, I want <goal> so that <benefit>'";
    return "follow the usual conventions of the " + format + " format";
}

}  // namespace

const PromptTemplates& PromptTemplates::builtin() {
    static const PromptTemplates t{
        strip_final_newline(resources::template_version()),
        strip_final_newline(resources::generation_system()),
        strip_final_newline(resources::generation_user()),
        strip_final_newline(resources::response_single()),
        strip_final_newline(resources::response_array()),
        strip_final_newline(resources::critic()),
        strip_final_newline(resources::update()),
    };
    return t;
}

PromptTemplates PromptTemplates::load(const std::filesystem::path& dir) {
    return PromptTemplates{
        text::trim(read_file(dir / "VERSION")),
        strip_final_newline(read_file(dir / "generation_system.txt")),
        strip_final_newline(read_file(dir / "generation_user.txt")),
        strip_final_newline(read_file(dir / "response_single.txt")),
        strip_final_newline(read_file(dir / "response_array.txt")),
        strip_final_newline(read_file(dir / "critic.txt")),
        strip_final_newline(read_file(dir / "update.txt")),
    };
}

std::string render_template(std::string_view tpl, const std::map<std::string, std::string, std::less<>>& vars) {
    std::string out;
    out.reserve(tpl.size() * 2);
    for (std::size_t i = 0; i < tpl.size(); ++i) {
        char c = tpl[i];
        if (c == '{' && i + 1 < tpl.size() && tpl[i + 1] == '{') {
            out.push_back('{');
            ++i;
        } else if (c == '}' && i + 1 < tpl.size() && tpl[i + 1] == '}') {
            out.push_back('}');
            ++i;
        } else if (c == '{') {
            auto close = tpl.find('}', i);
            if (close == std::string_view::npos) throw TemplateError("unterminated placeholder in template");
            auto name = tpl.substr(i + 1, close - i - 1);
            auto it = vars.find(name);
            if (it == vars.end()) throw TemplateError("no value for placeholder {" + std::string(name) + "}");
            out += it->second;
            i = close;
        } else {
            out.push_back(c);
        }
    }
    return out;
}

PromptSpec build_prompt(const LabelSpec& label, const AtomicConfiguration& config, int count,
                        const PromptTemplates& templates) {
    if (count < 1) throw std::invalid_argument("build_prompt: count must be >= 1");
    const bool multi = count > 1;
    const std::string n = std::to_string(count);
    std::map<std::string, std::string, std::less<>> vars{
        {"count", n},
        {"count_phrase", multi ? n + " requirements" : "one requirement"},
        {"source_role", source_role(config.requirement_source())},
        {"requirement_source", config.requirement_source()},
        {"specification_level", config.specification_level()},
        {"level_guidance", level_guidance(config.specification_level())},
        {"specification_format", config.specification_format()},
        {"format_guidance", format_guidance(config.specification_format())},
        {"domain", config.domain()},
        {"language", config.language()},
        {"label_name", label.name},
        {"label_description", label.description},
    };
    vars["response_instruction"] = render_template(multi ? templates.response_array : templates.response_single, vars);

    PromptSpec p;
    p.system_text = render_template(templates.generation_system, vars);
    p.user_text = render_template(templates.generation_user, vars);
    p.label_name = label.name;
    p.atomic_config_id = config.id;
    p.requested_count = count;
    p.response_schema = multi ? ResponseSchema::TextArray : ResponseSchema::SingleText;
    return p;
}

json to_json(const PromptSpec& p) {
    return {{"system_text", p.system_text},
            {"user_text", p.user_text},
            {"label_name", p.label_name},
            {"atomic_config_id", p.atomic_config_id},
            {"requested_count", p.requested_count},
            {"response_schema", p.response_schema == ResponseSchema::TextArray ? "text-array" : "single-text"}};
}

PromptSpec prompt_from_json(const json& j) {
    PromptSpec p;
    p.system_text = j.at("system_text").get<std::string>();
    p.user_text = j.at("user_text").get<std::string>();
    p.label_name = j.at("label_name").get<std::string>();
    p.atomic_config_id = j.at("atomic_config_id").get<std::string>();
    p.requested_count = j.at("requested_count").get<int>();
    p.response_schema =
        j.at("response_schema").get<std::string>() == "text-array" ? ResponseSchema::TextArray : ResponseSchema::SingleText;
    return p;
}

// ---------------------------------------------------------------------------
// Response parsing
// ---------------------------------------------------------------------------

namespace {

std::string unquote(std::string s) {
    if (s.size() >= 2 && s.front() == '"' && s.back() == '"') s = text::trim(s.substr(1, s.size() - 2));
    return s;
}

/// Content of the first fenced code block, or the input when there is none.
std::string_view strip_fences(std::string_view s) {
    auto open = s.find("```");
    if (open == std::string_view::npos) return s;
    auto body = s.find('\n', open);
    if (body == std::string_view::npos) return s;
    auto close = s.find("```", body);
    if (close == std::string_view::npos) return s.substr(body + 1);
    return s.substr(body + 1, close - body - 1);
}

std::optional<std::vector<std::string>> strings_of(const json& j) {
    if (j.is_array()) {
        std::vector<std::string> out;
        for (const auto& e : j) {
            if (e.is_string()) out.push_back(e.get<std::string>());
        }
        return out;
    }
    if (j.is_object()) {
        for (const auto& [_, v] : j.items()) {
            if (v.is_array() && !v.empty() && v.front().is_string()) return strings_of(v);
        }
    }
    return std::nullopt;
}

std::optional<std::vector<std::string>> parse_json_array(std::string_view s) {
    json j = json::parse(s.begin(), s.end(), nullptr, false);
    if (!j.is_discarded()) {
        if (auto items = strings_of(j)) return items;
    }
    auto open = s.find('[');
    auto close = s.rfind(']');
    if (open == std::string_view::npos || close == std::string_view::npos || close < open) return std::nullopt;
    auto inner = s.substr(open, close - open + 1);
    j = json::parse(inner.begin(), inner.end(), nullptr, false);
    if (j.is_discarded()) return std::nullopt;
    return strings_of(j);
}

std::vector<std::string> parse_list(std::string_view s) {
    static const std::regex kMarker(R"(^\s*(?:\d+\.|\d+\)|-|\*)\s+(.*)$)");
    std::vector<std::string> items;
    bool open_item = false;
    std::istringstream lines{std::string(s)};
    std::string line;
    while (std::getline(lines, line)) {
        std::smatch m;
        if (std::regex_match(line, m, kMarker)) {
            items.push_back(m[1].str());
            open_item = true;
        } else if (text::trim(line).empty()) {
            open_item = false;
        } else if (open_item) {
            items.back() += "\n" + line;
        }
    }
    return items;
}

std::vector<std::string> clean(const std::vector<std::string>& raw, int expected_count) {
    std::vector<std::string> out;
    for (const auto& r : raw) {
        auto item = unquote(text::collapse_newlines(r));
        if (item.empty()) continue;
        out.push_back(std::move(item));
        if (static_cast<int>(out.size()) == expected_count) break;
    }
    return out;
}

}  // namespace

std::vector<std::string> parse_generation(std::string_view response, int expected_count) {
    if (expected_count < 1) throw std::invalid_argument("parse_generation: expected_count must be >= 1");
    const std::string body = text::trim(strip_fences(response));

    if (auto arr = parse_json_array(body)) {
        auto items = clean(*arr, expected_count);
        if (!items.empty()) return items;
    }
    if (auto items = clean(parse_list(body), expected_count); !items.empty()) return items;
    if (expected_count == 1) {
        auto single = unquote(text::collapse_newlines(body));
        if (!single.empty()) return {single};
    }
    throw ParseError("no requirement items recoverable from response (" + std::to_string(body.size()) + " bytes)");
}

}  // namespace synthline
