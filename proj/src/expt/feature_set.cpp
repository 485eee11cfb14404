#include "facefuse/expt/feature_set.hpp"

#include <charconv>
#include <fstream>
#include <sstream>

#include "facefuse/error.hpp"
#include "facefuse/format.hpp"

namespace facefuse {

std::string FeatureSet::task_tag() const {
    std::string tag;
    for (Task t : sources) {
        if (!tag.empty()) tag += "+";
        tag += to_string(t);
    }
    return tag;
}

void FeatureSet::validate() const {
    for (const FeatureRow& row : rows) {
        if (row.values.size() != dim) {
            throw DimensionError("feature row " + row.ref + " has " + std::to_string(row.values.size()) +
                                 " values, expected " + std::to_string(dim));
        }
    }
}

void write_feature_set(const FeatureSet& set, const std::filesystem::path& path) {
    set.validate();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write feature file " + path.string());
    out << "task=" << set.task_tag() << " dim=" << set.dim << " split=" << set.split << " count=" << set.rows.size()
        << "\n";
    for (const FeatureRow& row : set.rows) {
        out << row.ref << '\t' << row.labels.id << '\t' << row.labels.age << '\t' << row.labels.race << '\t'
            << row.labels.gender;
        for (double v : row.values) out << '\t' << format_shortest(v);
        out << '\n';
    }
    if (!out) throw IoError("failed writing feature file " + path.string());
}

namespace {

std::string header_field(const std::string& header, const std::string& key) {
    std::istringstream in(header);
    std::string token;
    while (in >> token) {
        if (token.rfind(key + "=", 0) == 0) return token.substr(key.size() + 1);
    }
    throw IngestionError("feature file header lacks '" + key + "'");
}

std::size_t to_count(const std::string& text, const char* what) {
    std::size_t value = 0;
    const auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc() || end != text.data() + text.size()) {
        throw IngestionError(std::string("feature file: bad ") + what + " '" + text + "'");
    }
    return value;
}

}  // namespace

FeatureSet read_feature_set(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IngestionError("cannot open feature file " + path.string());
    std::string header;
    if (!std::getline(in, header)) throw IngestionError(path.string() + ": empty feature file");

    FeatureSet set;
    std::string tag = header_field(header, "task");
    for (std::size_t start = 0; start <= tag.size();) {
        const std::size_t plus = tag.find('+', start);
        const std::string name = tag.substr(start, plus == std::string::npos ? std::string::npos : plus - start);
        try {
            set.sources.push_back(parse_task(name));
        } catch (const ConfigError& e) {
            throw IngestionError(path.string() + ": " + e.what());
        }
        if (plus == std::string::npos) break;
        start = plus + 1;
    }
    set.dim = to_count(header_field(header, "dim"), "dim");
    set.split = header_field(header, "split");
    const std::size_t count = to_count(header_field(header, "count"), "count");

    std::string line;
    for (std::size_t line_no = 2; std::getline(in, line); ++line_no) {
        const std::string where = path.string() + ":" + std::to_string(line_no);
        std::vector<std::string_view> fields;
        std::string_view rest = line;
        while (true) {
            const std::size_t tab = rest.find('\t');
            fields.push_back(rest.substr(0, tab));
            if (tab == std::string_view::npos) break;
            rest.remove_prefix(tab + 1);
        }
        if (fields.size() != 5 + set.dim) {
            throw IngestionError(where + ": expected " + std::to_string(5 + set.dim) + " fields, got " +
                                 std::to_string(fields.size()));
        }
        FeatureRow row;
        row.ref = fields[0];
        int* labels[] = {&row.labels.id, &row.labels.age, &row.labels.race, &row.labels.gender};
        for (std::size_t k = 0; k < 4; ++k) {
            const std::string_view f = fields[1 + k];
            const auto [end, ec] = std::from_chars(f.data(), f.data() + f.size(), *labels[k]);
            if (ec != std::errc() || end != f.data() + f.size()) throw IngestionError(where + ": bad label");
        }
        row.values.reserve(set.dim);
        for (std::size_t k = 0; k < set.dim; ++k) row.values.push_back(parse_double(fields[5 + k], where));
        set.rows.push_back(std::move(row));
    }
    if (set.rows.size() != count) {
        throw IngestionError(path.string() + ": header declares " + std::to_string(count) + " rows, found " +
                             std::to_string(set.rows.size()));
    }
    return set;
}

}  // namespace facefuse
