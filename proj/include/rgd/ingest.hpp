#pragma once

// CSV ingestion: header row, comma separated, one label column plus numeric
// features. Features are min-max scaled to [0, 1] with statistics taken from
// the training split only.

#include <cstdint>
#include <filesystem>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "rgd/models.hpp"

namespace rgd {

struct IngestSchema {
  std::string label_column = "label";
  /// Empty means every column except the label.
  std::vector<std::string> feature_columns;
  /// Class count; inferred as max(label) + 1 when unset. Ignored for regression.
  std::optional<int> classes;
  bool regression = false;
};

struct LabeledTable {
  Dataset data;
  std::vector<std::string> features;
};

LabeledTable read_dataset_csv(std::istream& in, const IngestSchema& schema);
LabeledTable read_dataset_csv(const std::filesystem::path& path, const IngestSchema& schema);

struct MinMaxScaler {
  Eigen::RowVectorXd min;
  Eigen::RowVectorXd range;  // 0 marks a constant feature, which maps to 0

  static MinMaxScaler fit(const Eigen::MatrixXd& x);
  Eigen::MatrixXd apply(const Eigen::MatrixXd& x) const;
};

struct SplitSpec {
  /// Rows drawn per class for the test split; the remaining rows (or
  /// train_per_class rows of them) form the training split.
  std::optional<std::vector<long>> test_per_class;
  std::optional<std::vector<long>> train_per_class;
  /// Used when no per-class counts are given; 0 keeps every row for training.
  double test_fraction = 0.0;
  std::uint64_t seed = 1;
};

struct IngestResult {
  Dataset train;
  Dataset test;  // empty when no split was requested
  std::vector<std::string> features;
  MinMaxScaler scaler;
};

IngestResult ingest(const LabeledTable& table, const SplitSpec& split);

void write_dataset_csv(std::ostream& os, const Dataset& data, const std::vector<std::string>& features,
                       const std::string& label_column = "label");

}  // namespace rgd
