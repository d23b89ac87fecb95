#include "copreg/csvio.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "copreg/config.hpp"

namespace copreg {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
        const auto b = tok.find_first_not_of(" \t\r");
        const auto e = tok.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? "" : tok.substr(b, e - b + 1));
    }
    if (!line.empty() && line.back() == ',') out.push_back("");
    return out;
}

} // namespace

Dataset read_longitudinal_csv(std::istream& in, std::vector<std::string>* cov_names) {
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line[0] != '#') break;
    }
    if (line.empty()) throw data_error("csv: missing header line");
    const auto header = split_csv_line(line);
    if (header.size() < 2 || header[0] != "id" || header[1] != "y") {
        throw data_error("csv: header must start with id,y");
    }
    const bool with_time = !header.empty() && header.back() == "time";
    const int n_cov = static_cast<int>(header.size()) - 2 - (with_time ? 1 : 0);
    if (n_cov < 0) throw data_error("csv: malformed header");
    if (cov_names) {
        cov_names->assign(header.begin() + 2, header.end() - (with_time ? 1 : 0));
    }

    struct Row {
        int y;
        std::vector<double> cov;
        double time;
    };
    std::vector<std::string> order;
    std::map<std::string, std::vector<Row>> by_id;

    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size()) {
            throw data_error("csv row " + std::to_string(lineno) + ": expected " +
                             std::to_string(header.size()) + " fields, got " +
                             std::to_string(f.size()));
        }
        Row row;
        try {
            const double y = std::stod(f[1]);
            row.y = static_cast<int>(std::lround(y));
            if (row.y < 0 || std::fabs(y - row.y) > 1e-9) {
                throw std::invalid_argument("response");
            }
            for (int c = 0; c < n_cov; ++c) row.cov.push_back(std::stod(f[2 + c]));
            row.time = with_time ? std::stod(f.back()) : 0.0;
        } catch (const std::exception&) {
            throw data_error("csv row " + std::to_string(lineno) +
                             ": non-numeric or negative field");
        }
        if (!by_id.count(f[0])) order.push_back(f[0]);
        auto& rows = by_id[f[0]];
        if (with_time && !rows.empty() && !(row.time > rows.back().time)) {
            throw data_error("csv row " + std::to_string(lineno) +
                             ": time not strictly increasing within id " + f[0]);
        }
        rows.push_back(std::move(row));
    }
    if (order.empty()) throw data_error("csv: no data rows");

    Dataset data;
    data.reserve(order.size());
    for (const auto& id : order) {
        const auto& rows = by_id[id];
        Cluster cl;
        const int d = static_cast<int>(rows.size());
        cl.y.resize(d);
        cl.X.resize(d, 1 + n_cov);
        Eigen::VectorXd times(d);
        for (int j = 0; j < d; ++j) {
            cl.y[j] = rows[j].y;
            cl.X(j, 0) = 1.0;
            for (int c = 0; c < n_cov; ++c) cl.X(j, 1 + c) = rows[j].cov[c];
            times[j] = rows[j].time;
        }
        if (with_time) cl.times = times;
        data.push_back(std::move(cl));
    }
    return data;
}

void write_longitudinal_csv(std::ostream& out, const Dataset& data,
                            const std::vector<std::string>& cov_names) {
    const bool with_time = !data.empty() && data.front().times.has_value();
    out << "id,y";
    for (const auto& c : cov_names) out << ',' << c;
    if (with_time) out << ",time";
    out << '\n';
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& cl = data[i];
        for (int j = 0; j < cl.dim(); ++j) {
            out << (i + 1) << ',' << cl.y[j];
            for (int c = 1; c < cl.X.cols(); ++c) out << ',' << format_num(cl.X(j, c), 10);
            if (with_time) out << ',' << format_num((*cl.times)[j], 10);
            out << '\n';
        }
    }
}

std::string format_num(double v, int digits) {
    std::ostringstream ss;
    ss << std::setprecision(digits) << v;
    return ss.str();
}

void write_csv(std::ostream& out, const Table& table, const std::string& comment) {
    if (!comment.empty()) out << "# " << comment << '\n';
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out << table.columns[c] << (c + 1 < table.columns.size() ? "," : "");
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << row[c] << (c + 1 < row.size() ? "," : "");
        }
        out << '\n';
    }
}

std::string render_aligned(const Table& table) {
    std::vector<std::size_t> width(table.columns.size(), 0);
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        width[c] = table.columns[c].size();
    }
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size() && c < width.size(); ++c) {
            width[c] = std::max(width[c], row[c].size());
        }
    }
    std::ostringstream out;
    for (std::size_t c = 0; c < table.columns.size(); ++c) {
        out << std::setw(static_cast<int>(width[c]) + 2) << table.columns[c];
    }
    out << '\n';
    for (const auto& row : table.rows) {
        for (std::size_t c = 0; c < row.size(); ++c) {
            out << std::setw(static_cast<int>(width[c]) + 2) << row[c];
        }
        out << '\n';
    }
    return out.str();
}

} // namespace copreg
