#pragma once

#include "synthline/dataset.hpp"
#include "synthline/error.hpp"
#include "synthline/feature_model.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace synthline {

// ---------------------------------------------------------------------------
// CSV (RFC 4180, CRLF record separators, header `text,label`)
// ---------------------------------------------------------------------------

std::string csv_escape(std::string_view field);
std::string to_csv(const Dataset& dataset);

/// Parses a CSV document into rows of fields. Accepts CRLF or LF line ends.
/// Throws IoError on an unterminated quoted field.
std::vector<std::vector<std::string>> parse_csv(std::string_view document);

/// Reads `text` and `label` columns (any column order). Sample ids are the
/// zero-based row index.
Dataset dataset_from_csv(std::string_view document);

// ---------------------------------------------------------------------------
// JSON
// ---------------------------------------------------------------------------

std::string to_json_document(const Dataset& dataset);
Dataset dataset_from_json_document(std::string_view document);

// ---------------------------------------------------------------------------
// Files
// ---------------------------------------------------------------------------

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, std::string_view contents);

/// Loads a dataset from .csv or .json (chosen by extension).
Dataset load_dataset(const std::filesystem::path& path);

std::string_view dataset_file_name(OutputFormat format);

struct DatasetManifest {
    std::string dataset_id;
    std::string run_id;
    std::string config_hash;
    std::string template_version;
    std::map<std::string, std::size_t> label_counts;
    std::map<std::string, std::size_t> cell_counts;  // keyed "<label>/<config id>"
    std::optional<std::string> curation_report;       // relative path
    std::optional<std::string> diversity_report;      // relative path
    std::string provider_profile_id;
    std::string created_at;
    std::string format;  // "csv" | "json"
    std::string data_file;
    std::size_t sample_count = 0;
    std::uint64_t seed = 0;
    int shortfall = 0;
    std::vector<std::string> degraded_cells;

    nlohmann::json to_json() const;
    static DatasetManifest from_json(const nlohmann::json& j);
};

/// Counts derived from the dataset itself.
DatasetManifest manifest_counts(const Dataset& dataset);

/// The persisted file disagrees with its manifest.
class AuditError : public Error {
public:
    explicit AuditError(const std::string& message) : Error("AuditError", message) {}
};

/// Writes the dataset file and manifest.json into `dir`, then re-reads the
/// data file and checks it against the manifest counts. Returns the path of
/// the data file.
std::filesystem::path persist_dataset(const Dataset& dataset, OutputFormat format, const std::filesystem::path& dir,
                                      DatasetManifest manifest);

/// Re-reads a persisted dataset and throws AuditError if its size or label
/// counts differ from the manifest.
void audit_persisted(const std::filesystem::path& data_file, const DatasetManifest& manifest);

}  // namespace synthline
