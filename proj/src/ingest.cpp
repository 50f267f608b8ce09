#include "rgd/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

#include "rgd/bench.hpp"
#include "rgd/errors.hpp"

namespace rgd {

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  for (std::string& s : out) {
    const auto b = s.find_first_not_of(" \t");
    const auto e = s.find_last_not_of(" \t");
    s = b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
  }
  return out;
}

bool is_missing(const std::string& s) {
  return s.empty() || s == "NA" || s == "na" || s == "NaN" || s == "nan" || s == "?";
}

std::optional<double> parse_number(const std::string& s) {
  double v = 0.0;
  const auto r = std::from_chars(s.data(), s.data() + s.size(), v);
  if (r.ec != std::errc() || r.ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::string row_list(const std::vector<long>& rows) {
  std::string out;
  const std::size_t shown = std::min<std::size_t>(rows.size(), 20);
  for (std::size_t i = 0; i < shown; ++i) {
    out += (i ? ", " : "") + std::to_string(rows[i]);
  }
  if (rows.size() > shown) {
    out += ", ... (" + std::to_string(rows.size()) + " rows)";
  }
  return out;
}

Dataset take_rows(const Dataset& all, const std::vector<Eigen::Index>& rows) {
  return all.subset(rows);
}

}  // namespace

LabeledTable read_dataset_csv(std::istream& in, const IngestSchema& schema) {
  std::string line;
  if (!std::getline(in, line)) {
    throw InvalidInput("CSV is empty; a header row is required");
  }
  const std::vector<std::string> header = split_csv_line(line);
  auto column_of = [&](const std::string& name) -> std::size_t {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw InvalidInput("CSV has no column '" + name + "'");
    }
    return static_cast<std::size_t>(it - header.begin());
  };
  const std::size_t label_col = column_of(schema.label_column);
  std::vector<std::size_t> feature_cols;
  LabeledTable table;
  if (schema.feature_columns.empty()) {
    for (std::size_t j = 0; j < header.size(); ++j) {
      if (j != label_col) {
        feature_cols.push_back(j);
        table.features.push_back(header[j]);
      }
    }
  } else {
    for (const std::string& f : schema.feature_columns) {
      feature_cols.push_back(column_of(f));
      table.features.push_back(f);
    }
  }
  if (feature_cols.empty()) {
    throw InvalidInput("CSV has no feature columns");
  }

  std::vector<std::vector<double>> rows;
  std::vector<double> labels;
  std::vector<long> missing;
  long line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) {
      continue;
    }
    const std::vector<std::string> cells = split_csv_line(line);
    if (cells.size() != header.size()) {
      throw InvalidInput("line " + std::to_string(line_no) + ": expected " +
                         std::to_string(header.size()) + " fields, found " +
                         std::to_string(cells.size()));
    }
    bool row_missing = is_missing(cells[label_col]);
    for (std::size_t j : feature_cols) {
      row_missing = row_missing || is_missing(cells[j]);
    }
    if (row_missing) {
      missing.push_back(line_no);
      continue;
    }
    std::vector<double> r;
    for (std::size_t k = 0; k < feature_cols.size(); ++k) {
      const auto v = parse_number(cells[feature_cols[k]]);
      if (!v) {
        throw InvalidInput("line " + std::to_string(line_no) + ": feature '" + table.features[k] +
                           "' is not numeric: '" + cells[feature_cols[k]] + "'");
      }
      r.push_back(*v);
    }
    const auto y = parse_number(cells[label_col]);
    if (!y) {
      throw InvalidInput("line " + std::to_string(line_no) + ": label '" + cells[label_col] +
                         "' is not numeric");
    }
    if (!schema.regression && (*y < 0.0 || *y != std::floor(*y))) {
      throw InvalidInput("line " + std::to_string(line_no) +
                         ": class labels must be non-negative integers");
    }
    rows.push_back(std::move(r));
    labels.push_back(*y);
  }
  if (!missing.empty()) {
    throw InvalidInput("missing values on lines " + row_list(missing));
  }
  if (rows.empty()) {
    throw InvalidInput("CSV has no data rows");
  }

  Dataset& d = table.data;
  d.inputs.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(feature_cols.size()));
  d.targets.resize(static_cast<Eigen::Index>(rows.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (std::size_t j = 0; j < rows[i].size(); ++j) {
      d.inputs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = rows[i][j];
    }
    d.targets[static_cast<Eigen::Index>(i)] = labels[i];
  }
  if (!schema.regression) {
    const int observed = static_cast<int>(d.targets.maxCoeff()) + 1;
    d.classes = schema.classes.value_or(std::max(observed, 2));
    if (observed > d.classes) {
      throw InvalidInput("label " + std::to_string(observed - 1) + " is outside the " +
                         std::to_string(d.classes) + " declared classes");
    }
  }
  return table;
}

LabeledTable read_dataset_csv(const std::filesystem::path& path, const IngestSchema& schema) {
  std::ifstream in(path);
  if (!in) {
    throw InvalidInput("cannot open " + path.string());
  }
  try {
    return read_dataset_csv(in, schema);
  } catch (const InvalidInput& e) {
    throw InvalidInput(path.string() + ": " + e.what());
  }
}

MinMaxScaler MinMaxScaler::fit(const Eigen::MatrixXd& x) {
  if (x.rows() < 1) {
    throw InvalidInput("cannot fit a scaler on zero rows");
  }
  MinMaxScaler s;
  s.min = x.colwise().minCoeff();
  s.range = x.colwise().maxCoeff() - s.min;
  return s;
}

Eigen::MatrixXd MinMaxScaler::apply(const Eigen::MatrixXd& x) const {
  if (x.cols() != min.size()) {
    throw InvalidInput("scaler fitted on a different number of features");
  }
  Eigen::MatrixXd out(x.rows(), x.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j) {
    if (range[j] > 0.0) {
      out.col(j) = (x.col(j).array() - min[j]) / range[j];
    } else {
      out.col(j).setZero();
    }
  }
  return out;
}

IngestResult ingest(const LabeledTable& table, const SplitSpec& split) {
  const Dataset& all = table.data;
  const Eigen::Index n = all.size();
  std::mt19937_64 rng(split.seed);
  std::vector<Eigen::Index> train_rows;
  std::vector<Eigen::Index> test_rows;

  if (split.test_per_class || split.train_per_class) {
    if (!all.is_classification()) {
      throw InvalidConfig("per-class sampling needs a classification label");
    }
    const auto check = [&](const std::optional<std::vector<long>>& counts, const char* what) {
      if (counts && counts->size() != static_cast<std::size_t>(all.classes)) {
        throw InvalidConfig(std::string(what) + " needs one count per class (" +
                            std::to_string(all.classes) + ")");
      }
    };
    check(split.test_per_class, "test_per_class");
    check(split.train_per_class, "train_per_class");
    for (int k = 0; k < all.classes; ++k) {
      std::vector<Eigen::Index> members;
      for (Eigen::Index i = 0; i < n; ++i) {
        if (static_cast<int>(all.targets[i]) == k) {
          members.push_back(i);
        }
      }
      std::shuffle(members.begin(), members.end(), rng);
      const long want_test = split.test_per_class ? (*split.test_per_class)[k] : 0;
      const long rest = static_cast<long>(members.size()) - want_test;
      const long want_train = split.train_per_class ? (*split.train_per_class)[k] : rest;
      if (want_test < 0 || want_train < 0 || want_test + want_train > static_cast<long>(members.size())) {
        throw InvalidConfig("class " + std::to_string(k) + " has " +
                            std::to_string(members.size()) + " rows, fewer than requested");
      }
      test_rows.insert(test_rows.end(), members.begin(), members.begin() + want_test);
      train_rows.insert(train_rows.end(), members.begin() + want_test,
                        members.begin() + want_test + want_train);
    }
    // Original file order within each split.
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
  } else {
    if (!(split.test_fraction >= 0.0 && split.test_fraction < 1.0)) {
      throw InvalidConfig("test fraction must lie in [0, 1)");
    }
    std::vector<Eigen::Index> idx(static_cast<std::size_t>(n));
    std::iota(idx.begin(), idx.end(), Eigen::Index{0});
    const auto n_test = static_cast<Eigen::Index>(std::floor(split.test_fraction * static_cast<double>(n)));
    if (n_test > 0) {
      std::shuffle(idx.begin(), idx.end(), rng);
    }
    test_rows.assign(idx.begin(), idx.begin() + n_test);
    train_rows.assign(idx.begin() + n_test, idx.end());
    std::sort(train_rows.begin(), train_rows.end());
    std::sort(test_rows.begin(), test_rows.end());
  }
  if (train_rows.empty()) {
    throw InvalidConfig("training split is empty");
  }

  IngestResult out;
  out.features = table.features;
  out.train = take_rows(all, train_rows);
  out.scaler = MinMaxScaler::fit(out.train.inputs);
  out.train.inputs = out.scaler.apply(out.train.inputs);
  out.test.classes = all.classes;
  out.test.inputs.resize(0, all.features());
  if (!test_rows.empty()) {
    out.test = take_rows(all, test_rows);
    out.test.inputs = out.scaler.apply(out.test.inputs);
  }
  return out;
}

void write_dataset_csv(std::ostream& os, const Dataset& data, const std::vector<std::string>& features,
                       const std::string& label_column) {
  if (static_cast<Eigen::Index>(features.size()) != data.features()) {
    throw InvalidInput("feature names do not match the data");
  }
  os << label_column;
  for (const std::string& f : features) {
    os << ',' << f;
  }
  os << '\n';
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    os << bench::format_number(data.targets[i]);
    for (Eigen::Index j = 0; j < data.features(); ++j) {
      os << ',' << bench::format_number(data.inputs(i, j));
    }
    os << '\n';
  }
}

}  // namespace rgd
