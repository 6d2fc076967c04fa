#pragma once

#include "rfphate/common.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace rfphate {

/// How one source CSV column maps onto feature columns. Categorical columns
/// expand to one indicator feature per level, named "<column>=<level>".
struct ColumnSpec
{
  std::string name;
  bool categorical = false;
  std::vector<std::string> levels;
};

struct Dataset
{
  Matrix features;                       // n x d
  std::vector<int> labels;               // class ids in [0, C)
  std::vector<std::string> feature_names;  // length d
  std::vector<std::string> class_names;    // length C
  std::vector<ColumnSpec> schema;          // source columns, in file order

  Index rows() const { return features.rows(); }
  Index cols() const { return features.cols(); }
  int classes() const { return static_cast<int>(class_names.size()); }

  /// Rows in the given order; class ids and names are kept as-is.
  Dataset subset(std::span<const Index> rows) const;

  /// Throws Error if any invariant (n >= 2, d >= 1, finite values, label
  /// range) is violated.
  void validate() const;
};

struct SplitSpec
{
  double train_fraction = 0.7;
  std::uint64_t seed = 0;
  bool stratified = true;
};

struct Split
{
  std::vector<Index> train;  // ascending
  std::vector<Index> test;   // ascending
};

struct Standardization
{
  RowVector mean;
  RowVector scale;

  Matrix apply(const Matrix& x) const;
};

/// Reads a header-first CSV. Every column other than `label_column` becomes
/// a feature; columns with no numeric cell are treated as categorical and
/// one-hot encoded. Labels are numbered in order of first appearance.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column);

/// Reads feature columns for unlabeled points, encoding them with `schema`.
/// Columns not named in the schema (a label column, for instance) are never
/// parsed. Unseen categorical levels encode as all-zero indicators.
Matrix load_features(const std::filesystem::path& path, std::span<const ColumnSpec> schema);

/// Writes features (post-encoding) followed by the label column, using
/// shortest round-trip formatting for reals.
void write_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& label_column);

Split split(const Dataset& ds, const SplitSpec& spec);

/// Z-scores every feature with mean and population standard deviation of the
/// training rows. Zero-variance features keep scale 1.
std::pair<Dataset, Standardization> standardize(const Dataset& ds, std::span<const Index> train_indices);
Standardization fit_standardization(const Matrix& x);

struct CsvTable
{
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// Header-first CSV as text cells. Quoted fields may hold commas and "" escapes.
CsvTable read_csv_table(const std::filesystem::path& path);
std::string quote_csv_field(const std::string& s);

/// Shortest decimal text that parses back to the same double.
std::string format_real(double value);

void to_json(nlohmann::json& j, const ColumnSpec& c);
void from_json(const nlohmann::json& j, ColumnSpec& c);
void to_json(nlohmann::json& j, const Standardization& s);
void from_json(const nlohmann::json& j, Standardization& s);

}  // namespace rfphate
