#include "facefuse/expt/report.hpp"

#include <algorithm>
#include <fstream>
#include <sstream>

#include "facefuse/error.hpp"
#include "facefuse/format.hpp"

namespace facefuse {

namespace {

std::string percent(double fraction) { return format_fixed(100 * fraction, 2); }

constexpr const char* kHeader = "Features,ID,Age,Race,Gender";

}  // namespace

void write_text(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write " + path.string());
    out << text;
    if (!out) throw IoError("failed writing " + path.string());
}

std::string read_text(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read " + path.string());
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

AccuracyTable table1(const CrossTaskMatrix& matrix) {
    AccuracyTable table;
    for (Task source : kAllTasks) {
        const auto s = static_cast<std::size_t>(source);
        table.row_labels.push_back(std::string(display_name(source)) + "(" + std::to_string(matrix.dims[s]) + ")");
        std::array<double, 4> row{};
        for (Task target : kAllTasks) row[static_cast<std::size_t>(target)] = matrix.accuracy(source, target);
        table.rows.push_back(row);
    }
    return table;
}

AccuracyTable table2(const FusionReport& report) {
    AccuracyTable table;
    for (FusionKind kind : kFusionKinds) {
        table.row_labels.emplace_back(display_name(kind));
        std::array<double, 4> row{};
        for (Task target : kAllTasks) row[static_cast<std::size_t>(target)] = report.accuracy(kind, target);
        table.rows.push_back(row);
    }
    return table;
}

AccuracyTable mean_table(std::span<const AccuracyTable> tables) {
    if (tables.empty()) throw ConfigError("mean_table: no tables");
    AccuracyTable out = tables.front();
    for (std::size_t t = 1; t < tables.size(); ++t) {
        if (tables[t].row_labels != out.row_labels) throw AlignmentError("cannot average tables with different rows");
        for (std::size_t r = 0; r < out.rows.size(); ++r)
            for (std::size_t c = 0; c < 4; ++c) out.rows[r][c] += tables[t].rows[r][c];
    }
    const double n = static_cast<double>(tables.size());
    for (auto& row : out.rows)
        for (double& v : row) v /= n;
    return out;
}

std::string table_csv(const AccuracyTable& table) {
    std::string out = std::string(kHeader) + "\n";
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        out += table.row_labels[r];
        for (double v : table.rows[r]) out += "," + percent(v);
        out += "\n";
    }
    return out;
}

std::string table_text(const AccuracyTable& table, const std::string& title) {
    const std::array<std::string, 5> header{"Features", "ID", "Age", "Race", "Gender"};
    std::vector<std::array<std::string, 5>> cells;
    for (std::size_t r = 0; r < table.rows.size(); ++r) {
        std::array<std::string, 5> line{table.row_labels[r]};
        for (std::size_t c = 0; c < 4; ++c) {
            double best = table.rows[0][c];
            for (const auto& row : table.rows) best = std::max(best, row[c]);
            line[c + 1] = percent(table.rows[r][c]) + (table.rows[r][c] == best ? "*" : " ");
        }
        cells.push_back(line);
    }
    std::array<std::size_t, 5> width{};
    for (std::size_t c = 0; c < 5; ++c) {
        width[c] = header[c].size();
        for (const auto& line : cells) width[c] = std::max(width[c], line[c].size());
    }
    auto emit = [&](const std::array<std::string, 5>& line) {
        std::string out = line[0] + std::string(width[0] - line[0].size(), ' ');
        for (std::size_t c = 1; c < 5; ++c) out += "  " + std::string(width[c] - line[c].size(), ' ') + line[c];
        return out + "\n";
    };
    std::string out = title + "\n" + emit(header);
    for (const auto& line : cells) out += emit(line);
    return out + "* best in column\n";
}

std::string margins_csv(const FusionReport& report) {
    std::string out = "task,own,all,margin,reference_margin\n";
    for (Task t : kAllTasks) {
        out += std::string(display_name(t)) + "," + percent(report.accuracy(FusionKind::own, t)) + "," +
               percent(report.accuracy(FusionKind::all, t)) + "," + percent(report.margin(t)) + "," +
               format_fixed(kReferenceMargins[static_cast<std::size_t>(t)], 1) + "\n";
    }
    return out;
}

nlohmann::ordered_json to_json(const CrossTaskMatrix& matrix) {
    nlohmann::ordered_json j;
    for (Task source : kAllTasks) {
        const auto s = static_cast<std::size_t>(source);
        nlohmann::ordered_json row;
        row["dim"] = matrix.dims[s];
        for (Task target : kAllTasks) row[std::string(to_string(target))] = matrix.accuracy(source, target);
        j["features"][std::string(to_string(source))] = row;
    }
    for (Task t : kAllTasks) j["baseline"][std::string(to_string(t))] = matrix.baseline[static_cast<std::size_t>(t)];
    return j;
}

nlohmann::ordered_json to_json(const FusionReport& report) {
    nlohmann::ordered_json j;
    for (FusionKind kind : kFusionKinds) {
        for (Task t : kAllTasks) {
            const HeadRun& run = report.runs[static_cast<std::size_t>(kind)][static_cast<std::size_t>(t)];
            nlohmann::ordered_json cell;
            cell["accuracy"] = run.accuracy;
            cell["input_dim"] = run.input_dim;
            j[std::string(to_string(kind))][std::string(to_string(t))] = cell;
        }
    }
    for (Task t : kAllTasks) j["margin"][std::string(to_string(t))] = report.margin(t);
    return j;
}

CrossTaskMatrix cross_from_json(const nlohmann::json& j) {
    try {
        CrossTaskMatrix matrix;
        for (Task source : kAllTasks) {
            const auto s = static_cast<std::size_t>(source);
            const auto& row = j.at("features").at(std::string(to_string(source)));
            matrix.dims[s] = row.at("dim").get<std::size_t>();
            for (Task target : kAllTasks) {
                HeadRun& cell = matrix.cells[s][static_cast<std::size_t>(target)];
                cell.sources = {source};
                cell.target = target;
                cell.input_dim = matrix.dims[s];
                cell.accuracy = row.at(std::string(to_string(target))).get<double>();
            }
        }
        for (Task t : kAllTasks) {
            matrix.baseline[static_cast<std::size_t>(t)] = j.at("baseline").at(std::string(to_string(t))).get<double>();
        }
        return matrix;
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError(std::string("malformed cross-task summary: ") + e.what());
    }
}

FusionReport fusion_from_json(const nlohmann::json& j) {
    try {
        FusionReport report;
        for (FusionKind kind : kFusionKinds) {
            for (Task t : kAllTasks) {
                const auto& cell = j.at(std::string(to_string(kind))).at(std::string(to_string(t)));
                HeadRun& run = report.runs[static_cast<std::size_t>(kind)][static_cast<std::size_t>(t)];
                run.sources = fusion_sources(kind, t);
                run.target = t;
                run.accuracy = cell.at("accuracy").get<double>();
                run.input_dim = cell.at("input_dim").get<std::size_t>();
            }
        }
        return report;
    } catch (const nlohmann::json::exception& e) {
        throw IngestionError(std::string("malformed fusion summary: ") + e.what());
    }
}

namespace {

void make_dirs(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create directory " + dir.string() + ": " + ec.message());
}

}  // namespace

void emit_report(const CrossTaskMatrix& matrix, const std::filesystem::path& dir) {
    make_dirs(dir / "curves");
    const AccuracyTable table = table1(matrix);
    write_text(dir / "table1.csv", table_csv(table));
    write_text(dir / "table1.txt", table_text(table, "Cross-task feature recognition accuracy (%), rows = features"));
    write_text(dir / "cross.json", to_json(matrix).dump(2) + "\n");
    for (Task source : kAllTasks) {
        for (Task target : kAllTasks) {
            const HeadRun& run = matrix.cells[static_cast<std::size_t>(source)][static_cast<std::size_t>(target)];
            if (run.metrics.empty()) continue;
            write_metrics_csv(run.metrics, dir / "curves" /
                                               ("cross_" + std::string(to_string(source)) + "_" +
                                                std::string(to_string(target)) + ".csv"));
        }
    }
}

void emit_report(const FusionReport& report, const std::filesystem::path& dir) {
    make_dirs(dir / "curves");
    const AccuracyTable table = table2(report);
    write_text(dir / "table2.csv", table_csv(table));
    write_text(dir / "table2.txt", table_text(table, "Fusion feature recognition accuracy (%)"));
    write_text(dir / "fusion_margins.csv", margins_csv(report));
    write_text(dir / "fusion.json", to_json(report).dump(2) + "\n");
    for (FusionKind kind : kFusionKinds) {
        for (Task target : kAllTasks) {
            const HeadRun& run = report.runs[static_cast<std::size_t>(kind)][static_cast<std::size_t>(target)];
            if (run.metrics.empty()) continue;
            write_metrics_csv(run.metrics, dir / "curves" /
                                               ("fusion_" + std::string(to_string(kind)) + "_" +
                                                std::string(to_string(target)) + ".csv"));
        }
    }
}

}  // namespace facefuse
