#pragma once

#include <cstddef>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ope {

enum class OutcomeKind { binary, continuous };

std::string_view to_string(OutcomeKind kind);
OutcomeKind outcome_kind_from_string(std::string_view name);

/// One logged interaction: the context shown, the treatment assigned, the
/// observed outcome and, when the logger recorded it, the behavior policy's
/// probability of that treatment.
struct Row {
  std::vector<double> context;
  int treatment = 0;
  double outcome = 0.0;
  std::optional<double> logged_propensity;

  bool operator==(const Row&) const = default;
};

/// Logged bandit feedback collected under a single behavior policy.
///
/// Construction does not enforce the invariants so that validate() can
/// report on arbitrary data; load_dataset() only ever returns datasets for
/// which validate() is empty.
struct LoggedDataset {
  std::vector<Row> rows;
  std::string policy_id;
  int d = 0;
  int m = 2;
  OutcomeKind outcome_kind = OutcomeKind::continuous;

  std::size_t size() const { return rows.size(); }
  bool empty() const { return rows.empty(); }

  /// Copy of the metadata with the given rows, in the given order.
  LoggedDataset with_rows(std::vector<Row> new_rows) const;
  /// Copy restricted to rows[indices[0]], rows[indices[1]], ...
  LoggedDataset select(const std::vector<std::size_t>& indices) const;

  bool operator==(const LoggedDataset&) const = default;
};

struct Violation {
  std::optional<std::size_t> row;  // 1-based data row; empty for dataset-level
  std::string reason;

  std::string message() const;
  bool operator==(const Violation&) const = default;
};

/// Every invariant breach of the dataset, one entry per (row, reason).
std::vector<Violation> validate(const LoggedDataset& dataset);

/// Column mapping from a CSV header onto a LoggedDataset.
struct CsvSchema {
  std::vector<std::string> context_columns;
  std::string treatment_column = "t";
  std::string outcome_column = "y";
  std::optional<std::string> propensity_column;
  // When false, a propensity_column absent from the header is not an error.
  bool propensity_required = true;
  int m = 2;
  OutcomeKind outcome_kind = OutcomeKind::continuous;
  std::string policy_id;

  /// Columns x0..x{d-1}, t, y and an optional p.
  static CsvSchema standard(int d, OutcomeKind kind, std::string policy_id,
                            int m = 2);
};

/// Parses and validates a CSV export. Throws DataError naming the column or
/// the 1-based data row on any problem.
LoggedDataset load_dataset(const std::string& path, const CsvSchema& schema);
LoggedDataset read_dataset(std::istream& in, const CsvSchema& schema);
/// Parses without checking dataset invariants; only structural problems
/// (missing columns, non-numeric cells, ragged rows) throw.
LoggedDataset parse_dataset(std::istream& in, const CsvSchema& schema);

/// Writes the canonical CSV layout (x0.., t, y and p when any row has a
/// logged propensity). Values use shortest round-trip formatting, so reading
/// the output back reproduces the dataset bit for bit.
void write_dataset(std::ostream& out, const LoggedDataset& dataset);
void save_dataset(const std::string& path, const LoggedDataset& dataset);

/// Shortest decimal string that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace ope
