// Copyright 2026 The taskmix Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

// Family-transfer analytics.
//
// A transfer matrix holds, for source family i and target family j != i, the
// score on j of a model co-trained on i and j. The diagonal is replaced by two
// intra-family baselines: one trained for the same number of examples as a
// pair model (data budget) and one trained for the same number of steps
// (compute budget).
//
// File format (TSV): a header `label  F1 .. Fn`, then n rows `Fi  v1 .. vn`
// whose diagonal cell is `data/compute`. A trailing row whose label starts
// with `AVG` is ignored.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <map>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <string>
#include <vector>

#include "taskmix/error.hpp"
#include "taskmix/tsv.hpp"

namespace taskmix {

enum class Budget : std::uint8_t { Data, Compute };

class TransferMatrix {
 public:
  TransferMatrix() = default;

  /// `scores` is row-major n*n; diagonal entries are ignored.
  TransferMatrix(std::vector<std::string> families, std::vector<double> scores,
                 std::vector<double> diag_data_budget, std::vector<double> diag_compute_budget)
      : families_(std::move(families)),
        scores_(std::move(scores)),
        diag_data_(std::move(diag_data_budget)),
        diag_compute_(std::move(diag_compute_budget)) {
    const auto n = families_.size();
    if (scores_.size() != n * n || diag_data_.size() != n || diag_compute_.size() != n) {
      throw Error("transfer matrix: shape mismatch for " + std::to_string(n) + " families");
    }
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) {
        if (i == j) {
          scores_[i * n + j] = std::numeric_limits<double>::quiet_NaN();
        } else if (!std::isfinite(scores_[i * n + j])) {
          throw Error("transfer matrix: non-finite score at (" + families_[i] + ", " +
                      families_[j] + ")");
        }
      }
    }
  }

  std::size_t size() const noexcept { return families_.size(); }
  const std::vector<std::string>& families() const noexcept { return families_; }

  /// Score on family `target` after co-training with `source`; i != j.
  double operator()(std::size_t source, std::size_t target) const {
    return scores_[source * size() + target];
  }

  double& at(std::size_t source, std::size_t target) { return scores_[source * size() + target]; }

  double diagonal(std::size_t family, Budget budget) const {
    return budget == Budget::Data ? diag_data_[family] : diag_compute_[family];
  }

  double& diagonal(std::size_t family, Budget budget) {
    return budget == Budget::Data ? diag_data_[family] : diag_compute_[family];
  }

 private:
  std::vector<std::string> families_;
  std::vector<double> scores_;
  std::vector<double> diag_data_;
  std::vector<double> diag_compute_;
};

inline TransferMatrix parse_transfer_matrix(std::istream& in,
                                            const std::string& source = "<matrix>") {
  std::size_t line_no = 0;
  auto header = tsv::next_line(in, line_no);
  if (!header) throw ParseError(source, 0, "empty transfer matrix file");
  auto cells = tsv::split(header->text);
  if (cells.size() < 3) {
    throw ParseError(source, header->number, "header needs a label and at least 2 families");
  }
  std::vector<std::string> families;
  for (std::size_t i = 1; i < cells.size(); ++i) families.emplace_back(tsv::trim(cells[i]));
  const auto n = families.size();

  std::vector<double> scores(n * n, 0.0), data(n), compute(n);
  std::size_t row = 0;
  while (auto line = tsv::next_line(in, line_no)) {
    cells = tsv::split(line->text);
    const auto label = std::string(tsv::trim(cells[0]));
    if (label.rfind("AVG", 0) == 0) continue;
    if (row == n) throw ParseError(source, line->number, "more rows than families");
    if (label != families[row]) {
      throw ParseError(source, line->number,
                       "row label '" + label + "' does not match column '" + families[row] + "'");
    }
    if (cells.size() != n + 1) {
      throw ParseError(source, line->number, "expected " + std::to_string(n + 1) +
                                                 " columns, got " + std::to_string(cells.size()));
    }
    for (std::size_t j = 0; j < n; ++j) {
      const auto& cell = cells[j + 1];
      if (j == row) {
        const auto slash = cell.find('/');
        if (slash == std::string::npos) {
          throw ParseError(source, line->number,
                           "diagonal cell must be 'data_budget/compute_budget', got '" + cell + "'");
        }
        const auto d = tsv::parse_double(std::string_view(cell).substr(0, slash));
        const auto c = tsv::parse_double(std::string_view(cell).substr(slash + 1));
        if (!d || !c || !std::isfinite(*d) || !std::isfinite(*c)) {
          throw ParseError(source, line->number, "bad diagonal cell '" + cell + "'");
        }
        data[row] = *d;
        compute[row] = *c;
      } else {
        const auto v = tsv::parse_double(cell);
        if (!v || !std::isfinite(*v)) {
          throw ParseError(source, line->number, "bad score '" + cell + "'");
        }
        scores[row * n + j] = *v;
      }
    }
    ++row;
  }
  if (row != n) {
    throw ParseError(source, line_no, "expected " + std::to_string(n) + " rows, got " +
                                          std::to_string(row));
  }
  return TransferMatrix(std::move(families), std::move(scores), std::move(data),
                        std::move(compute));
}

inline TransferMatrix load_transfer_matrix(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open transfer matrix '" + path.string() + "'");
  return parse_transfer_matrix(in, path.string());
}

/// Mean of each column over the off-diagonal cells.
inline std::vector<double> col_avg_excl_diag(const TransferMatrix& m) {
  const auto n = m.size();
  if (n < 2) throw Error("col_avg_excl_diag: need at least 2 families");
  std::vector<double> avg(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (i != j) sum += m(i, j);
    }
    avg[j] = sum / static_cast<double>(n - 1);
  }
  return avg;
}

/// Average relative gain, in percent, that each source family provides over
/// the column averages of the other families:
///   delta(i) = 100 / (n-1) * sum_{j != i} (m[i,j] - avg[j]) / avg[j]
inline std::vector<double> delta_avg(const TransferMatrix& m) {
  const auto avg = col_avg_excl_diag(m);
  const auto n = m.size();
  for (std::size_t j = 0; j < n; ++j) {
    if (!(avg[j] > 0.0)) {
      throw Error("delta_avg: column average of '" + m.families()[j] + "' is not positive");
    }
  }
  std::vector<double> delta(n, 0.0);
  for (std::size_t i = 0; i < n; ++i) {
    double sum = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (j != i) sum += (m(i, j) - avg[j]) / avg[j];
    }
    delta[i] = 100.0 * sum / static_cast<double>(n - 1);
  }
  return delta;
}

/// Off-diagonal cells strictly below their column's intra-family baseline.
inline std::size_t count_negative_transfer(const TransferMatrix& m, Budget budget) {
  std::size_t count = 0;
  for (std::size_t i = 0; i < m.size(); ++i) {
    for (std::size_t j = 0; j < m.size(); ++j) {
      if (i != j && m(i, j) < m.diagonal(j, budget)) ++count;
    }
  }
  return count;
}

/// Indices ordered by descending value; equal values keep index order.
inline std::vector<std::size_t> rank_descending(std::span<const double> values) {
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return values[a] > values[b]; });
  return order;
}

struct NegativeTransferCounts {
  std::size_t data_budget = 0;
  std::size_t compute_budget = 0;

  friend bool operator==(const NegativeTransferCounts&, const NegativeTransferCounts&) = default;
};

/// Counts quoted alongside the bundled 8-family table. The printed cell
/// values give 22 / 40.
inline constexpr NegativeTransferCounts kPublishedNegativeTransfer{21, 38};

struct AnalyticsReport {
  std::vector<std::string> families;
  std::vector<double> col_avgs;
  std::vector<double> delta_avg;
  NegativeTransferCounts neg_counts;
  std::vector<std::string> ranking;
};

inline AnalyticsReport analyze_transfer(const TransferMatrix& m) {
  AnalyticsReport r;
  r.families = m.families();
  r.col_avgs = col_avg_excl_diag(m);
  r.delta_avg = delta_avg(m);
  r.neg_counts = {count_negative_transfer(m, Budget::Data),
                  count_negative_transfer(m, Budget::Compute)};
  for (auto i : rank_descending(r.delta_avg)) r.ranking.push_back(r.families[i]);
  return r;
}

/// TSV `family col_avg delta_avg_pct`, then `#` trailer lines with the
/// negative-transfer counts and the ranking.
inline void write_report_tsv(const AnalyticsReport& r, std::ostream& out) {
  out << "family\tcol_avg\tdelta_avg_pct\n";
  for (std::size_t i = 0; i < r.families.size(); ++i) {
    out << r.families[i] << '\t' << tsv::fixed(r.col_avgs[i], 4) << '\t'
        << tsv::fixed(r.delta_avg[i], 2) << '\n';
  }
  const auto n = r.families.size();
  out << "# negative_transfer data_budget=" << r.neg_counts.data_budget
      << " compute_budget=" << r.neg_counts.compute_budget << " cells=" << n * (n - 1) << '\n';
  if (n == 8) {
    out << "# negative_transfer_published data_budget=" << kPublishedNegativeTransfer.data_budget
        << " compute_budget=" << kPublishedNegativeTransfer.compute_budget << '\n';
  }
  out << "# ranking";
  for (const auto& f : r.ranking) out << ' ' << f;
  out << '\n';
}

// ---------------------------------------------------------------------------
// Within-family correlations
// ---------------------------------------------------------------------------

/// model -> dataset -> score
using ScoreTable = std::map<std::string, std::map<std::string, double, std::less<>>, std::less<>>;

/// Symmetric dataset-by-dataset matrix. Entries involving a dataset whose
/// scores do not vary across models are undefined (nullopt), diagonal
/// included.
struct CorrelationMatrix {
  std::vector<std::string> datasets;
  std::vector<std::optional<double>> values;

  std::optional<double> operator()(std::size_t i, std::size_t j) const {
    return values[i * datasets.size() + j];
  }
};

/// Pearson correlation of every dataset pair across models.
inline CorrelationMatrix within_family_correlation(const ScoreTable& results,
                                                   std::span<const std::string> datasets) {
  if (results.size() < 3) throw Error("within_family_correlation: need at least 3 models");
  const auto n = datasets.size();
  const auto models = results.size();
  std::vector<std::vector<double>> centered(n, std::vector<double>(models));
  std::vector<double> norm(n, 0.0);
  for (std::size_t d = 0; d < n; ++d) {
    std::size_t k = 0;
    for (const auto& [model, scores] : results) {
      const auto it = scores.find(datasets[d]);
      if (it == scores.end()) {
        throw Error("within_family_correlation: model '" + model + "' has no score for '" +
                    datasets[d] + "'");
      }
      centered[d][k++] = it->second;
    }
    const double mean =
        std::accumulate(centered[d].begin(), centered[d].end(), 0.0) / static_cast<double>(models);
    for (auto& v : centered[d]) {
      v -= mean;
      norm[d] += v * v;
    }
    norm[d] = std::sqrt(norm[d]);
  }
  CorrelationMatrix out{{datasets.begin(), datasets.end()}, std::vector<std::optional<double>>(n * n)};
  for (std::size_t a = 0; a < n; ++a) {
    for (std::size_t b = a; b < n; ++b) {
      std::optional<double> r;
      if (norm[a] > 0.0 && norm[b] > 0.0) {
        if (a == b) {
          r = 1.0;
        } else {
          double dot = 0.0;
          for (std::size_t k = 0; k < models; ++k) dot += centered[a][k] * centered[b][k];
          r = std::clamp(dot / (norm[a] * norm[b]), -1.0, 1.0);
        }
      }
      out.values[a * n + b] = r;
      out.values[b * n + a] = r;
    }
  }
  return out;
}

/// TSV with a `dataset` header row; undefined entries print as `-`.
inline void write_correlation_tsv(const CorrelationMatrix& c, std::ostream& out) {
  out << "dataset";
  for (const auto& d : c.datasets) out << '\t' << d;
  out << '\n';
  for (std::size_t i = 0; i < c.datasets.size(); ++i) {
    out << c.datasets[i];
    for (std::size_t j = 0; j < c.datasets.size(); ++j) {
      const auto v = c(i, j);
      out << '\t' << (v ? tsv::fixed(*v, 4) : std::string("-"));
    }
    out << '\n';
  }
}

/// Datasets scored by every model, in name order.
inline std::vector<std::string> common_datasets(const ScoreTable& table) {
  std::vector<std::string> out;
  if (table.empty()) return out;
  for (const auto& [name, score] : table.begin()->second) {
    bool everywhere = true;
    for (const auto& [model, scores] : table) everywhere = everywhere && scores.contains(name);
    if (everywhere) out.push_back(name);
  }
  return out;
}

/// TSV `model  ds1 .. dsn` with one row per model.
inline ScoreTable parse_score_table(std::istream& in, const std::string& source = "<scores>") {
  std::size_t line_no = 0;
  auto header = tsv::next_line(in, line_no);
  if (!header) throw ParseError(source, 0, "empty score table");
  const auto cols = tsv::split(header->text);
  if (cols.size() < 2) throw ParseError(source, header->number, "header needs datasets");
  ScoreTable table;
  while (auto line = tsv::next_line(in, line_no)) {
    const auto cells = tsv::split(line->text);
    if (cells.size() != cols.size()) {
      throw ParseError(source, line->number, "expected " + std::to_string(cols.size()) +
                                                 " columns, got " + std::to_string(cells.size()));
    }
    auto& row = table[std::string(tsv::trim(cells[0]))];
    if (!row.empty()) throw ParseError(source, line->number, "duplicate model '" + cells[0] + "'");
    for (std::size_t i = 1; i < cells.size(); ++i) {
      const auto v = tsv::parse_double(cells[i]);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(source, line->number, "bad score '" + cells[i] + "'");
      }
      row[std::string(tsv::trim(cols[i]))] = *v;
    }
  }
  return table;
}

}  // namespace taskmix
