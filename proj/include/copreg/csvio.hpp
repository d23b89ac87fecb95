#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "copreg/likelihood.hpp"

namespace copreg {

/// Longitudinal CSV: header `id,y,<covariate names...>[,time]`, rows grouped
/// by id, time strictly increasing within id.  An intercept column is
/// prepended to every cluster's covariate matrix.
Dataset read_longitudinal_csv(std::istream& in, std::vector<std::string>* cov_names);

void write_longitudinal_csv(std::ostream& out, const Dataset& data,
                            const std::vector<std::string>& cov_names);

/// Small string table with CSV and aligned-text rendering.
struct Table {
    std::vector<std::string> columns;
    std::vector<std::vector<std::string>> rows;

    void add_row(std::vector<std::string> row) { rows.push_back(std::move(row)); }
};

void write_csv(std::ostream& out, const Table& table,
               const std::string& comment = "");
std::string render_aligned(const Table& table);

std::string format_num(double v, int digits = 6);

} // namespace copreg
