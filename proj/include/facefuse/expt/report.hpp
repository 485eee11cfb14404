#pragma once

#include <filesystem>
#include <span>
#include <string>

#include <json.hpp>

#include "facefuse/expt/experiments.hpp"

namespace facefuse {

/// Accuracy tables as they are written to disk: rows of percentages with two
/// decimals under the header Features,ID,Age,Race,Gender.
struct AccuracyTable {
    std::vector<std::string> row_labels;
    std::vector<std::array<double, 4>> rows;
};

/// Rows "ID(200)", "Age(50)", ... : feature source by target task.
AccuracyTable table1(const CrossTaskMatrix& matrix);
/// Rows "Own", "Other three", "All".
AccuracyTable table2(const FusionReport& report);
/// Cell-wise mean of tables with identical labels.
AccuracyTable mean_table(std::span<const AccuracyTable> tables);

std::string table_csv(const AccuracyTable& table);
/// Aligned columns; the best value of each column is marked with '*'.
std::string table_text(const AccuracyTable& table, const std::string& title);

/// task,own,all,margin,reference_margin in percentage points.
std::string margins_csv(const FusionReport& report);

nlohmann::ordered_json to_json(const CrossTaskMatrix& matrix);
nlohmann::ordered_json to_json(const FusionReport& report);
/// Accuracies, dims and baselines only; head metrics are not stored.
CrossTaskMatrix cross_from_json(const nlohmann::json& j);
FusionReport fusion_from_json(const nlohmann::json& j);

/// table1.csv, table1.txt, cross.json and curves/cross_<source>_<target>.csv.
void emit_report(const CrossTaskMatrix& matrix, const std::filesystem::path& dir);
/// table2.csv, table2.txt, fusion_margins.csv, fusion.json and
/// curves/fusion_<kind>_<target>.csv.
void emit_report(const FusionReport& report, const std::filesystem::path& dir);

/// Writes `text` to `path` byte for byte; IoError on failure.
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

}  // namespace facefuse
