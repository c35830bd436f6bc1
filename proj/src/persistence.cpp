#include "synthline/persistence.hpp"

#include <fstream>
#include <sstream>

namespace synthline {

using nlohmann::json;

std::string csv_escape(std::string_view field) {
    if (field.find_first_of(",\"\r\n") == std::string_view::npos) return std::string(field);
    std::string out = "\"";
    for (char c : field) {
        if (c == '"') out += "\"\"";
        else out.push_back(c);
    }
    out.push_back('"');
    return out;
}

std::string to_csv(const Dataset& dataset) {
    std::string out = "text,label\r\n";
    for (const auto& s : dataset.samples) {
        out += csv_escape(s.text);
        out.push_back(',');
        out += csv_escape(s.label);
        out += "\r\n";
    }
    return out;
}

std::vector<std::vector<std::string>> parse_csv(std::string_view doc) {
    std::vector<std::vector<std::string>> rows;
    std::vector<std::string> row;
    std::string field;
    bool quoted = false;
    bool field_started = false;
    std::size_t i = 0;
    auto end_row = [&] {
        row.push_back(std::move(field));
        field.clear();
        rows.push_back(std::move(row));
        row.clear();
        field_started = false;
    };
    while (i < doc.size()) {
        char c = doc[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < doc.size() && doc[i + 1] == '"') {
                    field.push_back('"');
                    i += 2;
                    continue;
                }
                quoted = false;
            } else {
                field.push_back(c);
            }
            ++i;
            continue;
        }
        if (c == '"' && !field_started) {
            quoted = true;
            field_started = true;
        } else if (c == ',') {
            row.push_back(std::move(field));
            field.clear();
            field_started = false;
        } else if (c == '\r' && i + 1 < doc.size() && doc[i + 1] == '\n') {
            end_row();
            ++i;
        } else if (c == '\n') {
            end_row();
        } else {
            field.push_back(c);
            field_started = true;
        }
        ++i;
    }
    if (quoted) throw IoError("CSV ends inside a quoted field");
    if (field_started || !field.empty() || !row.empty()) end_row();
    return rows;
}

Dataset dataset_from_csv(std::string_view document) {
    auto rows = parse_csv(document);
    if (rows.empty()) throw IoError("CSV has no header row");
    const auto& header = rows.front();
    std::optional<std::size_t> text_col, label_col;
    for (std::size_t i = 0; i < header.size(); ++i) {
        if (header[i] == "text") text_col = i;
        if (header[i] == "label") label_col = i;
    }
    if (!text_col || !label_col) throw IoError("CSV header must contain text and label columns");
    Dataset ds;
    for (std::size_t r = 1; r < rows.size(); ++r) {
        const auto& row = rows[r];
        if (row.size() == 1 && row[0].empty()) continue;
        if (row.size() <= std::max(*text_col, *label_col)) {
            throw IoError("CSV row " + std::to_string(r) + " has too few fields");
        }
        SyntheticSample s;
        s.id = std::to_string(ds.samples.size());
        s.text = row[*text_col];
        s.label = row[*label_col];
        ds.samples.push_back(std::move(s));
    }
    ds.labels = ds.class_order();
    return ds;
}

std::string to_json_document(const Dataset& dataset) {
    json arr = json::array();
    for (const auto& s : dataset.samples) arr.push_back(to_json(s));
    return arr.dump(2) + "\n";
}

Dataset dataset_from_json_document(std::string_view document) {
    json j = json::parse(document.begin(), document.end(), nullptr, false);
    if (j.is_discarded() || !j.is_array()) throw IoError("dataset JSON must be an array of sample objects");
    Dataset ds;
    for (const auto& e : j) {
        auto s = sample_from_json(e);
        if (s.id.empty()) s.id = std::to_string(ds.samples.size());
        ds.samples.push_back(std::move(s));
    }
    ds.labels = ds.class_order();
    return ds;
}

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void write_text_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
        if (ec) throw IoError("cannot create " + path.parent_path().string() + ": " + ec.message());
    }
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write failed for " + path.string());
}

Dataset load_dataset(const std::filesystem::path& path) {
    const auto body = read_text_file(path);
    if (path.extension() == ".json") return dataset_from_json_document(body);
    return dataset_from_csv(body);
}

std::string_view dataset_file_name(OutputFormat format) {
    return format == OutputFormat::Json ? "dataset.json" : "dataset.csv";
}

json DatasetManifest::to_json() const {
    auto opt = [](const std::optional<std::string>& v) { return v ? json(*v) : json(); };
    return {{"dataset_id", dataset_id},
            {"run_id", run_id},
            {"config_hash", config_hash},
            {"template_version", template_version},
            {"label_counts", label_counts},
            {"cell_counts", cell_counts},
            {"curation_report", opt(curation_report)},
            {"diversity_report", opt(diversity_report)},
            {"provider_profile_id", provider_profile_id},
            {"created_at", created_at},
            {"format", format},
            {"data_file", data_file},
            {"sample_count", sample_count},
            {"seed", seed},
            {"shortfall", shortfall},
            {"degraded_cells", degraded_cells}};
}

DatasetManifest DatasetManifest::from_json(const json& j) {
    auto opt = [&](const char* key) -> std::optional<std::string> {
        if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
        return j.at(key).get<std::string>();
    };
    DatasetManifest m;
    m.dataset_id = j.value("dataset_id", std::string());
    m.run_id = j.value("run_id", std::string());
    m.config_hash = j.value("config_hash", std::string());
    m.template_version = j.value("template_version", std::string());
    m.label_counts = j.value("label_counts", std::map<std::string, std::size_t>{});
    m.cell_counts = j.value("cell_counts", std::map<std::string, std::size_t>{});
    m.curation_report = opt("curation_report");
    m.diversity_report = opt("diversity_report");
    m.provider_profile_id = j.value("provider_profile_id", std::string());
    m.created_at = j.value("created_at", std::string());
    m.format = j.value("format", std::string("csv"));
    m.data_file = j.value("data_file", std::string());
    m.sample_count = j.value("sample_count", std::size_t{0});
    m.seed = j.value("seed", std::uint64_t{0});
    m.shortfall = j.value("shortfall", 0);
    m.degraded_cells = j.value("degraded_cells", std::vector<std::string>{});
    return m;
}

DatasetManifest manifest_counts(const Dataset& dataset) {
    DatasetManifest m;
    m.label_counts = dataset.counts_by_label();
    for (const auto& s : dataset.samples) {
        if (!s.atomic_config_id.empty()) ++m.cell_counts[s.label + "/" + s.atomic_config_id];
    }
    m.sample_count = dataset.size();
    return m;
}

void audit_persisted(const std::filesystem::path& data_file, const DatasetManifest& manifest) {
    const auto reread = load_dataset(data_file);
    if (reread.size() != manifest.sample_count) {
        throw AuditError(data_file.string() + " holds " + std::to_string(reread.size()) + " samples, manifest says " +
                         std::to_string(manifest.sample_count));
    }
    auto counts = reread.counts_by_label();
    for (const auto& [label, n] : manifest.label_counts) {
        auto it = counts.find(label);
        const std::size_t got = it == counts.end() ? 0 : it->second;
        if (got != n) {
            throw AuditError("label '" + label + "': file has " + std::to_string(got) + ", manifest says " +
                             std::to_string(n));
        }
    }
    for (const auto& [label, n] : counts) {
        if (n != 0 && !manifest.label_counts.count(label)) throw AuditError("label '" + label + "' missing from manifest");
    }
}

std::filesystem::path persist_dataset(const Dataset& dataset, OutputFormat format, const std::filesystem::path& dir,
                                      DatasetManifest manifest) {
    const auto counts = manifest_counts(dataset);
    manifest.label_counts = counts.label_counts;
    manifest.cell_counts = counts.cell_counts;
    manifest.sample_count = counts.sample_count;
    manifest.format = format == OutputFormat::Json ? "json" : "csv";
    manifest.data_file = std::string(dataset_file_name(format));

    const auto data_path = dir / manifest.data_file;
    write_text_file(data_path, format == OutputFormat::Json ? to_json_document(dataset) : to_csv(dataset));
    write_text_file(dir / "manifest.json", manifest.to_json().dump(2) + "\n");
    audit_persisted(data_path, manifest);
    return data_path;
}

}  // namespace synthline
