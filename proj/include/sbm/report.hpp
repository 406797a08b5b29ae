#pragma once

#include <fstream>
#include <map>
#include <string>
#include <vector>

#include "sbm/errors.hpp"
#include "sbm/mathx.hpp"

namespace sbm {

// Plot-ready table; every float is written in shortest round-trip decimal.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::initializer_list<double> vals) {
        if (vals.size() != columns.size()) throw error("Table: row width mismatch");
        rows.emplace_back(vals);
    }

    std::string to_csv() const {
        std::string out;
        for (std::size_t i = 0; i < columns.size(); ++i) {
            if (i) out += ',';
            out += columns[i];
        }
        out += '\n';
        for (const auto& r : rows) {
            for (std::size_t i = 0; i < r.size(); ++i) {
                if (i) out += ',';
                out += format_double(r[i]);
            }
            out += '\n';
        }
        return out;
    }

    void write_csv(const std::string& path) const {
        std::ofstream os(path, std::ios::binary);
        if (!os) throw error("cannot open " + path);
        os << to_csv();
    }
};

// Fitted existential constants plus the per-point evidence for one check.
struct BoundCheckReport {
    std::map<std::string, double> constants; // C, a_L, a_U, C_S, c_S, M, L, gamma, delta, ...
    Table rows;
    bool pass = false;
    std::string worst_point;
    std::string notes;
};

} // namespace sbm
