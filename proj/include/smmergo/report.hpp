#pragma once

#include "smmergo/errors.hpp"

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace smmergo {

inline constexpr std::string_view tool_name = "smmergo";
inline constexpr std::string_view tool_version = "1.0.0";

/// Shortest round-trip decimal form; "inf", "-inf" and "nan" for non-finite values.
[[nodiscard]] inline std::string format_double(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[32];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
    if (ec != std::errc{}) throw std::runtime_error("double formatting failed");
    return {buf, end};
}

[[nodiscard]] inline double parse_double(std::string_view s) {
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    double v = 0.0;
    auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || end != s.data() + s.size())
        throw std::invalid_argument("not a number: '" + std::string(s) + "'");
    return v;
}

/// FNV-1a 64-bit hash, used to fingerprint the effective configuration.
[[nodiscard]] constexpr std::uint64_t fnv1a64(std::string_view s) noexcept {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

[[nodiscard]] inline std::string hex64(std::uint64_t v) {
    static constexpr char digits[] = "0123456789abcdef";
    std::string s(16, '0');
    for (int i = 15; i >= 0; --i, v >>= 4) s[static_cast<std::size_t>(i)] = digits[v & 0xf];
    return s;
}

/// A cell value: text, integer or double (formatted shortest round-trip).
class Cell {
public:
    Cell(std::string s) : text_(std::move(s)) {}
    Cell(std::string_view s) : text_(s) {}
    Cell(const char* s) : text_(s) {}
    Cell(double v) : text_(format_double(v)) {}
    Cell(int v) : text_(std::to_string(v)) {}
    Cell(long v) : text_(std::to_string(v)) {}
    Cell(long long v) : text_(std::to_string(v)) {}
    Cell(unsigned v) : text_(std::to_string(v)) {}
    Cell(unsigned long v) : text_(std::to_string(v)) {}
    Cell(unsigned long long v) : text_(std::to_string(v)) {}

    [[nodiscard]] const std::string& text() const noexcept { return text_; }

private:
    std::string text_;
};

/// Column-named table of pre-formatted cells.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    Table() = default;
    explicit Table(std::vector<std::string> cols) : columns(std::move(cols)) {}

    void add(std::initializer_list<Cell> cells) {
        std::vector<std::string> row;
        row.reserve(cells.size());
        for (const auto& c : cells) row.push_back(c.text());
        add_row(std::move(row));
    }

    void add_row(std::vector<std::string> row) {
        if (row.size() != columns.size())
            throw std::logic_error("row has " + std::to_string(row.size()) + " cells, table has " +
                                   std::to_string(columns.size()) + " columns");
        rows.push_back(std::move(row));
    }

    [[nodiscard]] std::size_t column(std::string_view name) const {
        for (std::size_t i = 0; i < columns.size(); ++i)
            if (columns[i] == name) return i;
        throw std::out_of_range("no column '" + std::string(name) + "'");
    }

    [[nodiscard]] std::size_t size() const noexcept { return rows.size(); }
};

struct Provenance {
    std::string experiment;
    std::string config_hash;
    std::uint64_t master_seed = 0;
    std::string scale = "desk";
};

[[nodiscard]] inline std::string csv_escape(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

/// Provenance comment lines followed by the CSV header and rows.
[[nodiscard]] inline std::string to_csv(const Table& t, const Provenance& p) {
    std::string out;
    out += "# tool=" + std::string(tool_name) + " " + std::string(tool_version) + "\n";
    out += "# experiment=" + p.experiment + "\n";
    out += "# config_hash=" + p.config_hash + "\n";
    out += "# master_seed=" + std::to_string(p.master_seed) + "\n";
    out += "# scale=" + p.scale + "\n";
    auto line = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) out += ',';
            out += csv_escape(cells[i]);
        }
        out += '\n';
    };
    line(t.columns);
    for (const auto& r : t.rows) line(r);
    return out;
}

inline void write_csv(const std::filesystem::path& path, const Table& t, const Provenance& p) {
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot write " + path.string());
    f << to_csv(t, p);
    if (!f) throw std::runtime_error("failed writing " + path.string());
}

/// Reads a CSV written by write_csv (skips '#' lines; quoted fields supported).
[[nodiscard]] inline Table read_csv(const std::filesystem::path& path) {
    std::ifstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("cannot read " + path.string());
    Table t;
    std::string line;
    bool header = true;
    while (std::getline(f, line)) {
        if (line.empty() || line.front() == '#') continue;
        std::vector<std::string> cells;
        std::string cur;
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            const char c = line[i];
            if (quoted) {
                if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else if (c == '"') {
                    quoted = false;
                } else {
                    cur += c;
                }
            } else if (c == '"') {
                quoted = true;
            } else if (c == ',') {
                cells.push_back(std::move(cur));
                cur.clear();
            } else {
                cur += c;
            }
        }
        cells.push_back(std::move(cur));
        if (header) {
            t.columns = std::move(cells);
            header = false;
        } else {
            t.add_row(std::move(cells));
        }
    }
    return t;
}

/**
 * @brief Output of one experiment: aggregates, per-replication rows, timings
 * and any extra named tables (traces, plot panels).
 */
struct ExperimentReport {
    std::string experiment;
    Table report;
    Table raw;
    Table timing;
    std::vector<std::pair<std::string, Table>> extra;  ///< (file name, table)
    std::size_t cells = 0;
    double wall_time = 0.0;

    /// Writes report.csv, raw.csv, timing.csv and the extra tables into `dir`.
    void write(const std::filesystem::path& dir, const Provenance& p) const {
        std::filesystem::create_directories(dir);
        write_csv(dir / "report.csv", report, p);
        write_csv(dir / "raw.csv", raw, p);
        write_csv(dir / "timing.csv", timing, p);
        for (const auto& [name, table] : extra) write_csv(dir / name, table, p);
    }
};

}  // namespace smmergo
