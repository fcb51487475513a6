#include "dyad/dataio.hpp"

#include "dyad/error.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

namespace dyad::dataio {
namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

// Splits on `sep`, returning each field with its 1-based starting column.
std::vector<std::pair<std::string_view, std::size_t>> split(std::string_view line, char sep) {
    std::vector<std::pair<std::string_view, std::size_t>> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(sep, start);
        const auto field = line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        out.emplace_back(trim(field), start + 1);
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

// Visits lines with their 1-based numbers.
template <typename Fn>
void for_each_line(std::string_view text, Fn&& fn) {
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size()) {
        const auto pos = text.find('\n', start);
        auto line = text.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start);
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        ++line_no;
        if (pos == std::string_view::npos) {
            if (!line.empty()) fn(line, line_no);
            break;
        }
        fn(line, line_no);
        start = pos + 1;
    }
}

bool parse_double(std::string_view field, double& out) {
    if (!field.empty() && field.front() == '+') field.remove_prefix(1);
    const auto* end = field.data() + field.size();
    const auto [ptr, ec] = std::from_chars(field.data(), end, out);
    return ec == std::errc() && ptr == end;
}

void require_unique(const std::vector<std::string>& ids, const std::string& source, std::size_t line,
                    const char* axis) {
    std::unordered_set<std::string_view> seen;
    for (const auto& id : ids) {
        if (!seen.insert(id).second) throw ParseError(source, line, 1, std::string("duplicate ") + axis + " id '" + id + "'");
    }
}

const char* kind_name(MatrixKind kind) {
    switch (kind) {
    case MatrixKind::labels: return "labels";
    case MatrixKind::kernel: return "kernel";
    case MatrixKind::features: return "features";
    }
    return "matrix";
}

} // namespace

LabeledMatrix make_labeled(Matrix values, std::vector<std::string> row_ids, std::vector<std::string> col_ids) {
    if (row_ids.empty())
        for (Index i = 0; i < values.rows(); ++i) row_ids.push_back("r" + std::to_string(i));
    if (col_ids.empty())
        for (Index j = 0; j < values.cols(); ++j) col_ids.push_back("c" + std::to_string(j));
    if (static_cast<Index>(row_ids.size()) != values.rows() || static_cast<Index>(col_ids.size()) != values.cols())
        throw InvalidInput("make_labeled: id counts do not match the matrix shape");
    LabeledMatrix out;
    out.row_ids = std::move(row_ids);
    out.col_ids = std::move(col_ids);
    out.missing = values.array().isNaN();
    out.values = std::move(values);
    return out;
}

LabeledMatrix parse_matrix(std::string_view text, MatrixKind kind, const std::string& source) {
    LabeledMatrix out;
    std::vector<std::vector<double>> rows;
    std::vector<std::vector<bool>> missing;
    bool have_header = false;
    std::size_t header_line = 0;

    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (trim(line).empty()) return;
        const auto fields = split(line, ',');
        if (!have_header) {
            if (fields.size() < 2) throw ParseError(source, line_no, 1, "header needs a corner cell and at least one column id");
            out.corner = std::string(fields[0].first);
            for (std::size_t f = 1; f < fields.size(); ++f) {
                if (fields[f].first.empty()) throw ParseError(source, line_no, fields[f].second, "empty column id");
                out.col_ids.emplace_back(fields[f].first);
            }
            have_header = true;
            header_line = line_no;
            return;
        }
        if (fields.size() != out.col_ids.size() + 1)
            throw ParseError(source, line_no, 1,
                             "expected " + std::to_string(out.col_ids.size() + 1) + " fields, found " +
                                 std::to_string(fields.size()));
        if (fields[0].first.empty()) throw ParseError(source, line_no, 1, "empty row id");
        out.row_ids.emplace_back(fields[0].first);
        auto& row = rows.emplace_back();
        auto& row_missing = missing.emplace_back();
        for (std::size_t f = 1; f < fields.size(); ++f) {
            const auto [cell, column] = fields[f];
            if (cell.empty()) {
                if (kind != MatrixKind::labels)
                    throw ParseError(source, line_no, column, std::string("missing value in ") + kind_name(kind) + " matrix");
                row.push_back(std::numeric_limits<double>::quiet_NaN());
                row_missing.push_back(true);
                continue;
            }
            double v = 0.0;
            if (!parse_double(cell, v)) throw ParseError(source, line_no, column, "cannot parse '" + std::string(cell) + "' as a number");
            if (!std::isfinite(v)) throw ParseError(source, line_no, column, "non-finite value '" + std::string(cell) + "'");
            row.push_back(v);
            row_missing.push_back(false);
        }
    });

    if (!have_header) throw ParseError(source, 1, 1, "empty matrix file");
    if (rows.empty()) throw ParseError(source, header_line, 1, "matrix has no data rows");
    require_unique(out.col_ids, source, header_line, "column");
    require_unique(out.row_ids, source, header_line, "row");

    const auto n = static_cast<Index>(rows.size());
    const auto m = static_cast<Index>(out.col_ids.size());
    out.values.resize(n, m);
    out.missing.resize(n, m);
    for (Index i = 0; i < n; ++i) {
        for (Index j = 0; j < m; ++j) {
            out.values(i, j) = rows[i][j];
            out.missing(i, j) = missing[i][j];
        }
    }

    if (kind == MatrixKind::kernel) {
        if (n != m || out.row_ids != out.col_ids)
            throw InvalidInput(source + ": kernel matrix must be square with identical row and column ids");
        const double asym = (out.values - out.values.transpose()).cwiseAbs().maxCoeff();
        if (asym > linalg::kSymmetryTolerance)
            throw InvalidInput(source + ": kernel matrix is not symmetric (max deviation " + format_double(asym) + ")");
    }
    return out;
}

LabeledMatrix load_matrix(const std::filesystem::path& path, MatrixKind kind) {
    return parse_matrix(read_file(path), kind, path.string());
}

void write_matrix(std::ostream& out, const LabeledMatrix& matrix) {
    out << matrix.corner;
    for (const auto& id : matrix.col_ids) out << ',' << id;
    out << '\n';
    const bool has_mask = matrix.missing.rows() == matrix.values.rows() && matrix.missing.cols() == matrix.values.cols();
    for (Index i = 0; i < matrix.values.rows(); ++i) {
        out << matrix.row_ids[static_cast<std::size_t>(i)];
        for (Index j = 0; j < matrix.values.cols(); ++j) {
            out << ',';
            const bool gap = has_mask ? matrix.missing(i, j) : std::isnan(matrix.values(i, j));
            if (!gap) out << format_double(matrix.values(i, j));
        }
        out << '\n';
    }
}

void save_matrix(const std::filesystem::path& path, const LabeledMatrix& matrix) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InvalidInput("cannot open '" + path.string() + "' for writing");
    write_matrix(out, matrix);
    if (!out) throw InvalidInput("failed writing '" + path.string() + "'");
}

Matrix mean_impute(const LabeledMatrix& labels) {
    Matrix out = labels.values;
    for (Index j = 0; j < out.cols(); ++j) {
        double sum = 0.0;
        Index observed = 0;
        for (Index i = 0; i < out.rows(); ++i) {
            if (!labels.missing(i, j)) {
                sum += out(i, j);
                ++observed;
            }
        }
        if (observed == 0)
            throw InvalidInput("mean_impute: column '" + labels.col_ids[static_cast<std::size_t>(j)] +
                               "' has no observed entries");
        const double mean = sum / static_cast<double>(observed);
        for (Index i = 0; i < out.rows(); ++i)
            if (labels.missing(i, j)) out(i, j) = mean;
    }
    return out;
}

std::vector<SequenceRecord> parse_sequences(std::string_view text, const std::string& source) {
    std::vector<SequenceRecord> out;
    std::unordered_set<std::string> seen;
    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (trim(line).empty()) return;
        const auto tab = line.find('\t');
        if (tab == std::string_view::npos) throw ParseError(source, line_no, 1, "expected 'id<TAB>sequence'");
        auto id = std::string(trim(line.substr(0, tab)));
        auto seq = std::string(trim(line.substr(tab + 1)));
        if (id.empty()) throw ParseError(source, line_no, 1, "empty sequence id");
        if (seq.empty()) throw ParseError(source, line_no, tab + 2, "empty sequence");
        if (!seen.insert(id).second) throw ParseError(source, line_no, 1, "duplicate sequence id '" + id + "'");
        out.push_back({std::move(id), std::move(seq)});
    });
    if (out.empty()) throw ParseError(source, 1, 1, "no sequences");
    return out;
}

std::vector<SequenceRecord> load_sequences(const std::filesystem::path& path) {
    return parse_sequences(read_file(path), path.string());
}

LabeledMatrix parse_sparse_triplets(std::string_view text, bool normalize_rows, const std::string& source) {
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
    std::unordered_map<std::string, Index> row_index;
    std::unordered_map<std::string, Index> col_index;
    struct Entry {
        Index row;
        Index col;
        double value;
    };
    std::vector<Entry> entries;
    bool first = true;

    for_each_line(text, [&](std::string_view line, std::size_t line_no) {
        if (trim(line).empty()) return;
        const auto fields = split(line, ',');
        if (fields.size() != 3) throw ParseError(source, line_no, 1, "expected 'row_id,feature_id,value'");
        double v = 0.0;
        const bool numeric = parse_double(fields[2].first, v);
        if (first) {
            first = false;
            if (!numeric) return; // header
        }
        if (!numeric) throw ParseError(source, line_no, fields[2].second, "cannot parse '" + std::string(fields[2].first) + "' as a number");
        if (!std::isfinite(v)) throw ParseError(source, line_no, fields[2].second, "non-finite value");
        auto intern = [](std::string_view key, std::vector<std::string>& ids, std::unordered_map<std::string, Index>& index) {
            auto [it, inserted] = index.try_emplace(std::string(key), static_cast<Index>(ids.size()));
            if (inserted) ids.emplace_back(key);
            return it->second;
        };
        if (fields[0].first.empty() || fields[1].first.empty()) throw ParseError(source, line_no, 1, "empty id");
        entries.push_back({intern(fields[0].first, row_ids, row_index), intern(fields[1].first, col_ids, col_index), v});
    });
    if (entries.empty()) throw ParseError(source, 1, 1, "no triplets");

    Matrix values = Matrix::Zero(static_cast<Index>(row_ids.size()), static_cast<Index>(col_ids.size()));
    for (const auto& e : entries) values(e.row, e.col) += e.value;
    if (normalize_rows) {
        for (Index i = 0; i < values.rows(); ++i) {
            const double norm = values.row(i).norm();
            if (norm > 0.0) values.row(i) /= norm;
        }
    }
    return make_labeled(std::move(values), std::move(row_ids), std::move(col_ids));
}

LabeledMatrix load_sparse_triplets(const std::filesystem::path& path, bool normalize_rows) {
    return parse_sparse_triplets(read_file(path), normalize_rows, path.string());
}

std::string format_double(double value) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value, std::chars_format::general, 17);
    if (ec != std::errc()) throw NumericalError("format_double: conversion failed");
    return std::string(buf, ptr);
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidInput("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

} // namespace dyad::dataio
