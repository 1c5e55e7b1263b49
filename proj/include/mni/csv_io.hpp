#pragma once

#include <Eigen/Dense>

#include <string>
#include <vector>

namespace mni {

/// Plain numeric CSV, comma separated, no header.
Eigen::MatrixXd read_numeric_csv(const std::string& path);

/// Reads a vector written either as one row or as one column.
Eigen::VectorXd read_vector_csv(const std::string& path);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    /// Index of a header column, or throws IoError.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
    double number(std::size_t row, const std::string& name) const;
    const std::string& text(std::size_t row, const std::string& name) const;
};

CsvTable read_table_csv(const std::string& path);
std::string format_table_csv(const CsvTable& table);

/// Shortest round-trip text for a double ("%.17g"; nan and inf spelled out).
std::string format_double(double x);

} // namespace mni
