#include "fpo/harness/history.hpp"

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace fpo::harness {

namespace {

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

}  // namespace

HistoryWriter::HistoryWriter(const std::filesystem::path& path, int psi_dim, int fp_dim)
    : out_(path), psi_dim_(psi_dim), fp_dim_(fp_dim) {
    if (!out_) {
        throw std::runtime_error("cannot open history file for writing: " + path.string());
    }
    out_ << "iteration";
    for (int d = 0; d < psi_dim_; ++d) out_ << ",psi_" << d;
    out_ << ",J";
    for (int d = 0; d < fp_dim_; ++d) out_ << ",fp_mean_" << d;
    for (int d = 0; d < fp_dim_; ++d) out_ << ",fp_std_" << d;
    out_ << ",kl,seconds\n";
}

void HistoryWriter::append(const IterationRecord& rec) {
    if (rec.psi.size() != psi_dim_ || rec.fingerprint.mean.size() != fp_dim_) {
        throw std::invalid_argument("HistoryWriter: record dimensions do not match header");
    }
    out_ << rec.iteration;
    for (int d = 0; d < psi_dim_; ++d) out_ << ',' << fmt(rec.psi[d]);
    out_ << ',' << fmt(rec.j);
    for (int d = 0; d < fp_dim_; ++d) out_ << ',' << fmt(rec.fingerprint.mean[d]);
    for (int d = 0; d < fp_dim_; ++d) out_ << ',' << fmt(rec.fingerprint.std[d]);
    out_ << ',' << fmt(rec.kl) << ',' << fmt(rec.seconds) << '\n';
    out_.flush();
}

std::vector<HistoryRow> read_history(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw std::runtime_error("cannot open history file: " + path.string());
    }
    std::string line;
    if (!std::getline(in, line)) {
        throw std::runtime_error("empty history file: " + path.string());
    }

    std::vector<std::string> columns;
    {
        std::stringstream ss(line);
        std::string col;
        while (std::getline(ss, col, ',')) columns.push_back(col);
    }
    int psi_dim = 0;
    int fp_dim = 0;
    for (const auto& c : columns) {
        if (c.rfind("psi_", 0) == 0) ++psi_dim;
        if (c.rfind("fp_mean_", 0) == 0) ++fp_dim;
    }
    const std::size_t expected = 4 + psi_dim + 2 * fp_dim;
    if (columns.size() != expected || columns.front() != "iteration" ||
        columns.back() != "seconds") {
        throw std::runtime_error("unrecognised history header in " + path.string());
    }

    std::vector<HistoryRow> rows;
    int line_no = 1;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        std::stringstream ss(line);
        std::string cell;
        std::vector<double> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(std::stod(cell));
        if (cells.size() != expected) {
            throw std::runtime_error("bad row at " + path.string() + ":" +
                                     std::to_string(line_no));
        }
        HistoryRow row;
        std::size_t k = 0;
        row.iteration = static_cast<int>(cells[k++]);
        for (int d = 0; d < psi_dim; ++d) row.psi.push_back(cells[k++]);
        row.j = cells[k++];
        for (int d = 0; d < fp_dim; ++d) row.fp_mean.push_back(cells[k++]);
        for (int d = 0; d < fp_dim; ++d) row.fp_std.push_back(cells[k++]);
        row.kl = cells[k++];
        row.seconds = cells[k++];
        rows.push_back(std::move(row));
    }
    return rows;
}

}  // namespace fpo::harness
