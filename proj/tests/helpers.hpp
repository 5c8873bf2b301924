#pragma once

#include <unistd.h>

#include <filesystem>
#include <random>
#include <optional>
#include <string>
#include <vector>

#include "ope/dataset.hpp"
#include "ope/random.hpp"

namespace ope::test {

inline Row row(std::vector<double> x, int t, double y, std::optional<double> p = std::nullopt) {
  return Row{std::move(x), t, y, p};
}

inline LoggedDataset dataset(std::vector<Row> rows, int d, std::string id = "A", int m = 2,
                             OutcomeKind kind = OutcomeKind::continuous) {
  LoggedDataset ds;
  ds.rows = std::move(rows);
  ds.policy_id = std::move(id);
  ds.d = d;
  ds.m = m;
  ds.outcome_kind = kind;
  return ds;
}

// Random well-formed dataset: N(0,1) contexts, uniform treatments, logged p.
inline LoggedDataset random_dataset(std::uint64_t seed, std::size_t n, int d, int m = 2,
                                    OutcomeKind kind = OutcomeKind::continuous) {
  Rng rng(seed);
  std::normal_distribution<double> normal;
  std::uniform_int_distribution<int> treat(0, m - 1);
  std::uniform_real_distribution<double> prop(0.05, 1.0);
  std::bernoulli_distribution coin(0.5);
  std::vector<Row> rows;
  for (std::size_t i = 0; i < n; ++i) {
    Row r;
    for (int j = 0; j < d; ++j) r.context.push_back(normal(rng));
    r.treatment = treat(rng);
    r.outcome = kind == OutcomeKind::binary ? (coin(rng) ? 1.0 : 0.0) : normal(rng);
    r.logged_propensity = prop(rng);
    rows.push_back(std::move(r));
  }
  return dataset(std::move(rows), d, "A", m, kind);
}

// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("ope_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

}  // namespace ope::test
