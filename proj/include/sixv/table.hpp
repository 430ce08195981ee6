#pragma once

// Tabular output: comma-separated, one header row, preceded by a
// schema-version comment. Floats at 17 significant digits so identical
// runs are byte-identical. A small FNV checksum identifies files in run
// manifests.

#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace sixv {

inline std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

class Table {
public:
    Table(std::string schema, std::vector<std::string> columns)
        : schema_(std::move(schema)), columns_(std::move(columns)) {}

    class Row {
    public:
        explicit Row(Table& t) : t_(t) {}
        Row& cell(double v) { cells_.push_back(format_double(v)); return *this; }
        Row& cell(int64_t v) { cells_.push_back(std::to_string(v)); return *this; }
        Row& cell(std::size_t v) { cells_.push_back(std::to_string(v)); return *this; }
        Row& cell(int v) { cells_.push_back(std::to_string(v)); return *this; }
        Row& cell(bool v) { cells_.push_back(v ? "pass" : "FAIL"); return *this; }
        Row& cell(const std::string& v) { cells_.push_back(v); return *this; }
        ~Row() { t_.push(cells_); }

    private:
        Table& t_;
        std::vector<std::string> cells_;
    };

    Row row() { return Row(*this); }

    void push(const std::vector<std::string>& cells) {
        if (cells.size() != columns_.size())
            throw std::logic_error("table row width mismatch for schema " + schema_);
        rows_.push_back(cells);
    }

    std::string render() const {
        std::ostringstream os;
        os << "# schema: " << schema_ << " v1\n";
        for (std::size_t i = 0; i < columns_.size(); ++i)
            os << columns_[i] << (i + 1 < columns_.size() ? "," : "\n");
        for (const auto& r : rows_) {
            for (std::size_t i = 0; i < r.size(); ++i)
                os << r[i] << (i + 1 < r.size() ? "," : "\n");
        }
        return os.str();
    }

    std::size_t size() const { return rows_.size(); }
    const std::string& schema() const { return schema_; }

private:
    std::string schema_;
    std::vector<std::string> columns_;
    std::vector<std::vector<std::string>> rows_;
};

inline uint64_t fnv1a(const std::string& data) {
    uint64_t h = 1469598103934665603ull;
    for (unsigned char c : data) {
        h ^= c;
        h *= 1099511628211ull;
    }
    return h;
}

inline std::string fnv1a_hex(const std::string& data) {
    char buf[20];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(fnv1a(data)));
    return buf;
}

inline std::string read_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read " + p.string());
    std::ostringstream os;
    os << in.rdbuf();
    return os.str();
}

inline void write_file(const std::filesystem::path& p, const std::string& data) {
    std::ofstream out(p, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + p.string());
    out << data;
    if (!out) throw std::runtime_error("short write to " + p.string());
}

} // namespace sixv
