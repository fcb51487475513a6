#pragma once

#include "dyad/linalg.hpp"

#include <filesystem>
#include <ostream>
#include <string>
#include <string_view>
#include <vector>

namespace dyad {

enum class MatrixKind { labels, kernel, features };

/// A matrix with identities on both axes, as read from or written to CSV.
/// Missing cells (labels only) hold NaN in `values` and true in `missing`.
struct LabeledMatrix {
    std::vector<std::string> row_ids;
    std::vector<std::string> col_ids;
    Matrix values;
    Eigen::Array<bool, Eigen::Dynamic, Eigen::Dynamic> missing;
    std::string corner = "id";

    [[nodiscard]] Index missing_count() const { return missing.count(); }
};

struct SequenceRecord {
    std::string id;
    std::string sequence;
};

namespace dataio {

/// Wraps a complete matrix; ids default to r0.. and c0.. when empty.
[[nodiscard]] LabeledMatrix make_labeled(Matrix values, std::vector<std::string> row_ids = {},
                                         std::vector<std::string> col_ids = {});

/// CSV: the first row holds a corner label then column ids, every other row
/// a row id then values. Empty cells are missing values (labels only).
[[nodiscard]] LabeledMatrix parse_matrix(std::string_view text, MatrixKind kind,
                                         const std::string& source = "<memory>");
[[nodiscard]] LabeledMatrix load_matrix(const std::filesystem::path& path, MatrixKind kind);

void write_matrix(std::ostream& out, const LabeledMatrix& matrix);
void save_matrix(const std::filesystem::path& path, const LabeledMatrix& matrix);

/// Replaces each missing cell with the mean of the observed cells in its column.
[[nodiscard]] Matrix mean_impute(const LabeledMatrix& labels);

/// One `id<TAB>sequence` record per line; blank lines are skipped.
[[nodiscard]] std::vector<SequenceRecord> parse_sequences(std::string_view text,
                                                          const std::string& source = "<memory>");
[[nodiscard]] std::vector<SequenceRecord> load_sequences(const std::filesystem::path& path);

/// `row_id,feature_id,value` triplets into a dense feature matrix; ids keep
/// first-appearance order and absent cells are zero. A header line whose
/// value field is not numeric is skipped. With `normalize_rows`, each row
/// is scaled to unit Euclidean norm.
[[nodiscard]] LabeledMatrix parse_sparse_triplets(std::string_view text, bool normalize_rows = false,
                                                  const std::string& source = "<memory>");
[[nodiscard]] LabeledMatrix load_sparse_triplets(const std::filesystem::path& path, bool normalize_rows = false);

/// Shortest-safe text for a double: 17 significant digits.
[[nodiscard]] std::string format_double(double value);

[[nodiscard]] std::string read_file(const std::filesystem::path& path);

} // namespace dataio
} // namespace dyad
