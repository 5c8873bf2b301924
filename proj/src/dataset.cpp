#include "ope/dataset.hpp"

#include <array>
#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "ope/errors.hpp"

namespace ope {

std::string_view to_string(OutcomeKind kind) {
  return kind == OutcomeKind::binary ? "binary" : "continuous";
}

OutcomeKind outcome_kind_from_string(std::string_view name) {
  if (name == "binary") return OutcomeKind::binary;
  if (name == "continuous") return OutcomeKind::continuous;
  throw ConfigError("unknown outcome_kind '" + std::string(name) +
                    "' (expected binary or continuous)");
}

LoggedDataset LoggedDataset::with_rows(std::vector<Row> new_rows) const {
  LoggedDataset out;
  out.rows = std::move(new_rows);
  out.policy_id = policy_id;
  out.d = d;
  out.m = m;
  out.outcome_kind = outcome_kind;
  return out;
}

LoggedDataset LoggedDataset::select(
    const std::vector<std::size_t>& indices) const {
  std::vector<Row> picked;
  picked.reserve(indices.size());
  for (auto i : indices) picked.push_back(rows.at(i));
  return with_rows(std::move(picked));
}

std::string Violation::message() const {
  if (row) return "row " + std::to_string(*row) + ": " + reason;
  return reason;
}

std::vector<Violation> validate(const LoggedDataset& dataset) {
  std::vector<Violation> out;
  if (dataset.d < 0) out.push_back({std::nullopt, "context dimension d must be >= 0"});
  if (dataset.m < 1) out.push_back({std::nullopt, "treatment count m must be >= 1"});

  for (std::size_t i = 0; i < dataset.rows.size(); ++i) {
    const Row& r = dataset.rows[i];
    const std::size_t line = i + 1;
    if (std::ssize(r.context) != dataset.d) {
      out.push_back({line, "context dimension " + std::to_string(r.context.size()) +
                               " does not match declared d=" +
                               std::to_string(dataset.d)});
    }
    for (double v : r.context) {
      if (!std::isfinite(v)) {
        out.push_back({line, "context contains a non-finite value"});
        break;
      }
    }
    if (r.treatment < 0 || r.treatment >= dataset.m) {
      out.push_back({line, "treatment " + std::to_string(r.treatment) +
                               " outside the treatment range {0.." +
                               std::to_string(dataset.m - 1) + "}"});
    }
    if (!std::isfinite(r.outcome)) {
      out.push_back({line, "outcome is not finite"});
    } else if (dataset.outcome_kind == OutcomeKind::binary && r.outcome != 0.0 &&
               r.outcome != 1.0) {
      out.push_back({line, "outcome " + format_double(r.outcome) +
                               " is not in {0,1} but outcome_kind is binary"});
    }
    if (r.logged_propensity) {
      const double p = *r.logged_propensity;
      if (!(p > 0.0 && p <= 1.0)) {
        out.push_back({line, "propensity " + format_double(p) +
                                 " outside the bound (0,1]"});
      }
    }
  }
  return out;
}

CsvSchema CsvSchema::standard(int d, OutcomeKind kind, std::string policy_id,
                              int m) {
  CsvSchema s;
  for (int j = 0; j < d; ++j) s.context_columns.push_back("x" + std::to_string(j));
  s.propensity_column = "p";
  s.propensity_required = false;
  s.m = m;
  s.outcome_kind = kind;
  s.policy_id = std::move(policy_id);
  return s;
}

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r'))
    s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      cells.push_back(trim(line.substr(start)));
      return cells;
    }
    cells.push_back(trim(line.substr(start, pos - start)));
    start = pos + 1;
  }
}

[[noreturn]] void cell_error(std::size_t row, std::string_view column,
                             std::string_view cell, std::string_view what) {
  throw DataError("row " + std::to_string(row) + ", column '" +
                  std::string(column) + "': " + std::string(what) + " '" +
                  std::string(cell) + "'");
}

double parse_real(std::string_view cell, std::size_t row, std::string_view column) {
  double v = 0.0;
  auto first = cell.data();
  auto last = cell.data() + cell.size();
  if (!cell.empty() && cell.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    cell_error(row, column, cell, "non-numeric value");
  }
  return v;
}

int parse_int(std::string_view cell, std::size_t row, std::string_view column) {
  int v = 0;
  auto first = cell.data();
  auto last = cell.data() + cell.size();
  if (!cell.empty() && cell.front() == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (cell.empty() || ec != std::errc() || ptr != last) {
    cell_error(row, column, cell, "expected an integer treatment, got");
  }
  return v;
}

}  // namespace

LoggedDataset parse_dataset(std::istream& in, const CsvSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) throw DataError("CSV input is empty (no header row)");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);

  std::unordered_map<std::string, std::size_t> header;
  const auto names = split_line(line);
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (!header.emplace(std::string(names[i]), i).second) {
      throw DataError("duplicate column '" + std::string(names[i]) + "' in header");
    }
  }
  auto column = [&](const std::string& name) -> std::size_t {
    auto it = header.find(name);
    if (it == header.end()) throw DataError("missing column '" + name + "'");
    return it->second;
  };

  std::vector<std::size_t> context_idx;
  for (const auto& c : schema.context_columns) context_idx.push_back(column(c));
  const auto t_idx = column(schema.treatment_column);
  const auto y_idx = column(schema.outcome_column);
  std::optional<std::size_t> p_idx;
  if (schema.propensity_column) {
    auto it = header.find(*schema.propensity_column);
    if (it != header.end()) {
      p_idx = it->second;
    } else if (schema.propensity_required) {
      throw DataError("missing column '" + *schema.propensity_column + "'");
    }
  }

  LoggedDataset ds;
  ds.policy_id = schema.policy_id;
  ds.d = static_cast<int>(schema.context_columns.size());
  ds.m = schema.m;
  ds.outcome_kind = schema.outcome_kind;

  std::size_t row_no = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row_no;
    const auto cells = split_line(line);
    if (cells.size() != names.size()) {
      throw DataError("row " + std::to_string(row_no) + ": expected " +
                      std::to_string(names.size()) + " cells, found " +
                      std::to_string(cells.size()));
    }
    Row r;
    r.context.reserve(context_idx.size());
    for (std::size_t j = 0; j < context_idx.size(); ++j) {
      r.context.push_back(
          parse_real(cells[context_idx[j]], row_no, schema.context_columns[j]));
    }
    r.treatment = parse_int(cells[t_idx], row_no, schema.treatment_column);
    r.outcome = parse_real(cells[y_idx], row_no, schema.outcome_column);
    if (p_idx && !cells[*p_idx].empty()) {
      r.logged_propensity = parse_real(cells[*p_idx], row_no, *schema.propensity_column);
    }
    ds.rows.push_back(std::move(r));
  }
  return ds;
}

LoggedDataset read_dataset(std::istream& in, const CsvSchema& schema) {
  LoggedDataset ds = parse_dataset(in, schema);
  auto violations = validate(ds);
  if (!violations.empty()) {
    std::string msg = violations.front().message();
    if (violations.size() > 1) {
      msg += " (and " + std::to_string(violations.size() - 1) + " more violation(s))";
    }
    throw DataError(msg);
  }
  return ds;
}

LoggedDataset load_dataset(const std::string& path, const CsvSchema& schema) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path + "'");
  return read_dataset(in, schema);
}

std::string format_double(double value) {
  std::array<char, 32> buf{};
  auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), value);
  return std::string(buf.data(), ptr);
}

void write_dataset(std::ostream& out, const LoggedDataset& dataset) {
  bool any_propensity = false;
  for (const auto& r : dataset.rows) any_propensity |= r.logged_propensity.has_value();

  for (int j = 0; j < dataset.d; ++j) out << 'x' << j << ',';
  out << "t,y";
  if (any_propensity) out << ",p";
  out << '\n';
  for (const auto& r : dataset.rows) {
    for (double v : r.context) out << format_double(v) << ',';
    out << r.treatment << ',' << format_double(r.outcome);
    if (any_propensity) {
      out << ',';
      if (r.logged_propensity) out << format_double(*r.logged_propensity);
    }
    out << '\n';
  }
}

void save_dataset(const std::string& path, const LoggedDataset& dataset) {
  std::ofstream out(path);
  if (!out) throw DataError("cannot write dataset to '" + path + "'");
  write_dataset(out, dataset);
  if (!out) throw DataError("failed writing dataset to '" + path + "'");
}

}  // namespace ope
