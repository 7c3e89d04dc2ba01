#include "memnet/constants.hpp"

#include <algorithm>
#include <cstdio>
#include <map>
#include <sstream>

#include "memnet/error.hpp"

namespace memnet {

namespace detail {
extern const char* const kFrozenConstantsTsv;
}

namespace {

std::string format_value(double value) {
    char buffer[64];
    std::snprintf(buffer, sizeof buffer, "%.17g", value);
    return buffer;
}

}  // namespace

std::string constants_to_tsv(const ConstantsTable& table) {
    std::string out = "# name\tvalue\tfixture\tdate\n";
    auto line = [&](const char* name, int m, double value) {
        out += std::string(name) + "[" + std::to_string(m) + "]\t" + format_value(value) + "\t" + table.fixture +
               "\t" + table.date + "\n";
    };
    for (const auto& row : table.rows) {
        line("cutoff_C", row.m, row.cutoff);
        line("variance_C", row.m, row.variance);
        line("sampler_C", row.m, row.sampler);
    }
    return out;
}

ConstantsTable constants_from_tsv(const std::string& text) {
    ConstantsTable table;
    std::map<int, HarmonicConstants> rows;
    std::istringstream in(text);
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        std::vector<std::string> fields;
        std::istringstream cells(line);
        for (std::string cell; std::getline(cells, cell, '\t');) fields.push_back(cell);
        const auto open = fields.empty() ? std::string::npos : fields[0].find('[');
        if (fields.size() < 2 || open == std::string::npos || fields[0].back() != ']')
            throw DataError("constants table line " + std::to_string(lineno) + ": expected name[m]<TAB>value");
        const std::string name = fields[0].substr(0, open);
        int m = 0;
        double value = 0.0;
        try {
            m = std::stoi(fields[0].substr(open + 1));
            value = std::stod(fields[1]);
        } catch (const std::exception&) {
            throw DataError("constants table line " + std::to_string(lineno) + ": unparsable entry");
        }
        auto& row = rows[m];
        row.m = m;
        if (name == "cutoff_C") row.cutoff = value;
        else if (name == "variance_C") row.variance = value;
        else if (name == "sampler_C") row.sampler = value;
        else throw DataError("constants table line " + std::to_string(lineno) + ": unknown constant '" + name + "'");
        if (fields.size() > 2) table.fixture = fields[2];
        if (fields.size() > 3) table.date = fields[3];
    }
    for (const auto& [m, row] : rows) table.rows.push_back(row);
    return table;
}

const ConstantsTable& frozen_constants() {
    static const ConstantsTable table = constants_from_tsv(detail::kFrozenConstantsTsv);
    return table;
}

HarmonicConstants constants_for(int m) {
    const auto& rows = frozen_constants().rows;
    const auto it = std::find_if(rows.begin(), rows.end(), [m](const HarmonicConstants& r) { return r.m == m; });
    if (it == rows.end() || !(it->cutoff > 0.0) || !(it->sampler > 0.0))
        throw ParameterError("no calibrated constants for degree m = " + std::to_string(m) +
                             "; run `memnet calibrate`");
    return *it;
}

}  // namespace memnet
