#include "mni/csv_io.hpp"

#include "mni/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace mni {

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos)
        return {};
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ','))
        cells.push_back(trim(cell));
    if (!line.empty() && line.back() == ',')
        cells.emplace_back();
    return cells;
}

double parse_double(const std::string& s, const std::string& where) {
    if (s == "nan")
        return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf")
        return std::numeric_limits<double>::infinity();
    if (s == "-inf")
        return -std::numeric_limits<double>::infinity();
    std::size_t used = 0;
    double v = 0.0;
    try {
        v = std::stod(s, &used);
    } catch (const std::exception&) {
        used = 0;
    }
    if (used == 0 || used != s.size())
        throw IoError("not a number: '" + s + "' (" + where + ")");
    return v;
}

std::vector<std::string> read_lines(const std::string& path) {
    std::ifstream in(path);
    if (!in)
        throw IoError("cannot open " + path);
    std::vector<std::string> lines;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r')
            line.pop_back();
        if (!trim(line).empty())
            lines.push_back(line);
    }
    return lines;
}

} // namespace

Eigen::MatrixXd read_numeric_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty())
        throw IoError(path + " is empty");
    std::vector<std::vector<double>> values;
    for (std::size_t i = 0; i < lines.size(); ++i) {
        std::vector<double> row;
        for (const auto& cell : split_line(lines[i]))
            row.push_back(parse_double(cell, path + " line " + std::to_string(i + 1)));
        if (!values.empty() && row.size() != values.front().size())
            throw IoError(path + ": ragged row at line " + std::to_string(i + 1));
        values.push_back(std::move(row));
    }
    Eigen::MatrixXd m(values.size(), values.front().size());
    for (std::size_t i = 0; i < values.size(); ++i)
        for (std::size_t j = 0; j < values[i].size(); ++j)
            m(Eigen::Index(i), Eigen::Index(j)) = values[i][j];
    return m;
}

Eigen::VectorXd read_vector_csv(const std::string& path) {
    const Eigen::MatrixXd m = read_numeric_csv(path);
    if (m.rows() == 1)
        return m.row(0).transpose();
    if (m.cols() == 1)
        return m.col(0);
    throw IoError(path + ": expected a single row or column");
}

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end())
        throw IoError("missing column " + name);
    return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

double CsvTable::number(std::size_t row, const std::string& name) const {
    return parse_double(text(row, name), "column " + name);
}

const std::string& CsvTable::text(std::size_t row, const std::string& name) const {
    return rows.at(row).at(column(name));
}

CsvTable read_table_csv(const std::string& path) {
    const auto lines = read_lines(path);
    if (lines.empty())
        throw IoError(path + " has no header");
    CsvTable t;
    t.header = split_line(lines.front());
    for (std::size_t i = 1; i < lines.size(); ++i) {
        auto cells = split_line(lines[i]);
        if (cells.size() != t.header.size())
            throw IoError(path + ": wrong cell count at line " + std::to_string(i + 1));
        t.rows.push_back(std::move(cells));
    }
    return t;
}

std::string format_table_csv(const CsvTable& table) {
    std::string out;
    auto emit = [&out](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i)
                out += ',';
            out += cells[i];
        }
        out += '\n';
    };
    emit(table.header);
    for (const auto& r : table.rows)
        emit(r);
    return out;
}

std::string format_double(double x) {
    if (std::isnan(x))
        return "nan";
    if (std::isinf(x))
        return x > 0 ? "inf" : "-inf";
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

} // namespace mni
