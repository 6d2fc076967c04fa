#include "rfphate/data.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

namespace rfphate {

namespace {

std::string trim(std::string_view s)
{
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

// Splits one CSV record. Double-quoted fields may contain commas and "" escapes.
std::vector<std::string> split_record(const std::string& line)
{
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        field += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        field += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      fields.push_back(trim(field));
      field.clear();
    } else {
      field += c;
    }
  }
  fields.push_back(trim(field));
  return fields;
}

bool parse_real(const std::string& text, double& value)
{
  if (text.empty()) return false;
  const char* first = text.data();
  const char* last = first + text.size();
  if (*first == '+') ++first;
  auto [ptr, ec] = std::from_chars(first, last, value);
  return ec == std::errc() && ptr == last;
}

}  // namespace

std::string quote_csv_field(const std::string& s)
{
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + '"';
}

CsvTable read_csv_table(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  CsvTable table;
  std::string line;
  if (!std::getline(in, line)) throw Error("'" + path.string() + "' is empty; a header row is required");
  if (line.size() >= 3 && line.compare(0, 3, "\xEF\xBB\xBF") == 0) line.erase(0, 3);
  table.header = split_record(line);
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    auto fields = split_record(line);
    if (fields.size() != table.header.size()) {
      throw Error("line " + std::to_string(line_no) + ": expected " + std::to_string(table.header.size()) +
                  " fields, found " + std::to_string(fields.size()));
    }
    table.rows.push_back(std::move(fields));
  }
  return table;
}

namespace {

// Encodes the cells of one source column into `out` starting at `offset`.
void encode_column(const CsvTable& table, std::size_t col, const ColumnSpec& spec, Matrix& out, Index offset)
{
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const std::string& cell = table.rows[r][col];
    if (spec.categorical) {
      auto it = std::find(spec.levels.begin(), spec.levels.end(), cell);
      if (it != spec.levels.end()) out(static_cast<Index>(r), offset + (it - spec.levels.begin())) = 1.0;
      continue;
    }
    double v = 0.0;
    if (!parse_real(cell, v)) {
      throw Error("data row " + std::to_string(r + 1) + ", column '" + spec.name + "': cannot parse '" + cell +
                  "' as a number");
    }
    if (!std::isfinite(v)) {
      throw Error("data row " + std::to_string(r + 1) + ", column '" + spec.name + "': non-finite value '" + cell + "'");
    }
    out(static_cast<Index>(r), offset) = v;
  }
}

Index encoded_width(std::span<const ColumnSpec> schema)
{
  Index d = 0;
  for (const auto& c : schema) d += c.categorical ? static_cast<Index>(c.levels.size()) : 1;
  return d;
}

std::vector<std::string> encoded_names(std::span<const ColumnSpec> schema)
{
  std::vector<std::string> names;
  for (const auto& c : schema) {
    if (!c.categorical) {
      names.push_back(c.name);
    } else {
      for (const auto& level : c.levels) names.push_back(c.name + "=" + level);
    }
  }
  return names;
}

}  // namespace

std::string format_real(double value)
{
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
  return std::string(buf, ptr);
}

Dataset Dataset::subset(std::span<const Index> rows) const
{
  Dataset out;
  out.features.resize(static_cast<Index>(rows.size()), cols());
  out.labels.reserve(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.features.row(static_cast<Index>(r)) = features.row(rows[r]);
    out.labels.push_back(labels[static_cast<std::size_t>(rows[r])]);
  }
  out.feature_names = feature_names;
  out.class_names = class_names;
  out.schema = schema;
  return out;
}

void Dataset::validate() const
{
  if (rows() < 2) throw Error("dataset needs at least 2 rows, has " + std::to_string(rows()));
  if (cols() < 1) throw Error("no feature columns");
  if (class_names.empty()) throw Error("dataset has no classes");
  if (static_cast<Index>(labels.size()) != rows()) throw Error("label count does not match row count");
  if (static_cast<Index>(feature_names.size()) != cols()) throw Error("feature name count does not match columns");
  for (Index i = 0; i < rows(); ++i) {
    int y = labels[static_cast<std::size_t>(i)];
    if (y < 0 || y >= classes()) throw Error("row " + std::to_string(i) + ": label id out of range");
    for (Index j = 0; j < cols(); ++j) {
      if (!std::isfinite(features(i, j))) throw Error("row " + std::to_string(i) + ": non-finite feature value");
    }
  }
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column)
{
  CsvTable table = read_csv_table(path);
  auto label_it = std::find(table.header.begin(), table.header.end(), label_column);
  if (label_it == table.header.end()) {
    throw Error("label column '" + label_column + "' not found in '" + path.string() + "'");
  }
  const auto label_col = static_cast<std::size_t>(label_it - table.header.begin());
  if (table.header.size() < 2) throw Error("no feature columns in '" + path.string() + "'");
  if (table.rows.size() < 2) {
    throw Error("'" + path.string() + "' has " + std::to_string(table.rows.size()) + " data rows; at least 2 required");
  }

  Dataset ds;
  std::vector<std::size_t> source_cols;
  for (std::size_t c = 0; c < table.header.size(); ++c) {
    if (c == label_col) continue;
    ColumnSpec spec;
    spec.name = table.header[c];
    // A column is categorical only when no cell reads as a number; mixed
    // columns are reported by encode_column at the first bad cell.
    double ignored = 0.0;
    spec.categorical = std::none_of(table.rows.begin(), table.rows.end(),
                                    [&](const auto& row) { return parse_real(row[c], ignored); });
    if (spec.categorical) {
      for (const auto& row : table.rows) {
        if (row[c].empty()) throw Error("missing value in categorical column '" + spec.name + "'");
        if (std::find(spec.levels.begin(), spec.levels.end(), row[c]) == spec.levels.end())
          spec.levels.push_back(row[c]);
      }
    }
    ds.schema.push_back(std::move(spec));
    source_cols.push_back(c);
  }

  ds.features = Matrix::Zero(static_cast<Index>(table.rows.size()), encoded_width(ds.schema));
  Index offset = 0;
  for (std::size_t k = 0; k < ds.schema.size(); ++k) {
    encode_column(table, source_cols[k], ds.schema[k], ds.features, offset);
    offset += ds.schema[k].categorical ? static_cast<Index>(ds.schema[k].levels.size()) : 1;
  }
  ds.feature_names = encoded_names(ds.schema);

  std::map<std::string, int> ids;
  for (const auto& row : table.rows) {
    const std::string& name = row[label_col];
    auto [it, inserted] = ids.emplace(name, static_cast<int>(ds.class_names.size()));
    if (inserted) ds.class_names.push_back(name);
    ds.labels.push_back(it->second);
  }
  ds.validate();
  return ds;
}

Matrix load_features(const std::filesystem::path& path, std::span<const ColumnSpec> schema)
{
  CsvTable table = read_csv_table(path);
  if (table.rows.empty()) throw Error("'" + path.string() + "' has no data rows");
  Matrix out = Matrix::Zero(static_cast<Index>(table.rows.size()), encoded_width(schema));
  Index offset = 0;
  for (const auto& spec : schema) {
    auto it = std::find(table.header.begin(), table.header.end(), spec.name);
    if (it == table.header.end()) throw Error("feature column '" + spec.name + "' missing from '" + path.string() + "'");
    encode_column(table, static_cast<std::size_t>(it - table.header.begin()), spec, out, offset);
    offset += spec.categorical ? static_cast<Index>(spec.levels.size()) : 1;
  }
  return out;
}

void write_csv(const Dataset& ds, const std::filesystem::path& path, const std::string& label_column)
{
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  for (const auto& name : ds.feature_names) out << quote_csv_field(name) << ',';
  out << quote_csv_field(label_column) << '\n';
  for (Index i = 0; i < ds.rows(); ++i) {
    for (Index j = 0; j < ds.cols(); ++j) out << format_real(ds.features(i, j)) << ',';
    out << quote_csv_field(ds.class_names[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])]) << '\n';
  }
}

Split split(const Dataset& ds, const SplitSpec& spec)
{
  if (!(spec.train_fraction > 0.0 && spec.train_fraction <= 1.0)) {
    throw Error("train_fraction must lie in (0, 1]");
  }
  std::mt19937_64 rng(spec.seed);
  Split out;
  auto take = [&](std::vector<Index> members) {
    std::shuffle(members.begin(), members.end(), rng);
    auto n_train = static_cast<std::size_t>(std::llround(spec.train_fraction * static_cast<double>(members.size())));
    out.train.insert(out.train.end(), members.begin(), members.begin() + static_cast<std::ptrdiff_t>(n_train));
    out.test.insert(out.test.end(), members.begin() + static_cast<std::ptrdiff_t>(n_train), members.end());
  };

  if (spec.stratified) {
    std::vector<std::vector<Index>> by_class(static_cast<std::size_t>(ds.classes()));
    for (Index i = 0; i < ds.rows(); ++i) by_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])].push_back(i);
    for (std::size_t c = 0; c < by_class.size(); ++c) {
      if (by_class[c].size() == 1) {
        throw Error("class '" + ds.class_names[c] + "' has a single member; stratified split needs at least 2");
      }
      take(std::move(by_class[c]));
    }
  } else {
    std::vector<Index> all(static_cast<std::size_t>(ds.rows()));
    std::iota(all.begin(), all.end(), Index{0});
    take(std::move(all));
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Matrix Standardization::apply(const Matrix& x) const
{
  if (x.cols() != mean.size()) throw Error("standardization expects " + std::to_string(mean.size()) + " columns");
  return ((x.rowwise() - mean).array().rowwise() / scale.array()).matrix();
}

Standardization fit_standardization(const Matrix& x)
{
  if (x.rows() == 0) throw Error("cannot standardize with zero rows");
  Standardization s;
  s.mean = x.colwise().mean();
  Matrix centered = x.rowwise() - s.mean;
  s.scale = (centered.array().square().colwise().sum() / static_cast<double>(x.rows())).sqrt().matrix();
  for (Index j = 0; j < s.scale.size(); ++j)
    if (!(s.scale(j) > 0.0)) s.scale(j) = 1.0;
  return s;
}

std::pair<Dataset, Standardization> standardize(const Dataset& ds, std::span<const Index> train_indices)
{
  if (train_indices.empty()) throw Error("standardize needs at least one training row");
  Matrix train(static_cast<Index>(train_indices.size()), ds.cols());
  for (std::size_t r = 0; r < train_indices.size(); ++r) train.row(static_cast<Index>(r)) = ds.features.row(train_indices[r]);
  Standardization s = fit_standardization(train);
  Dataset out = ds;
  out.features = s.apply(ds.features);
  return {std::move(out), std::move(s)};
}

void to_json(nlohmann::json& j, const ColumnSpec& c)
{
  j = {{"name", c.name}, {"categorical", c.categorical}, {"levels", c.levels}};
}

void from_json(const nlohmann::json& j, ColumnSpec& c)
{
  j.at("name").get_to(c.name);
  j.at("categorical").get_to(c.categorical);
  j.at("levels").get_to(c.levels);
}

void to_json(nlohmann::json& j, const Standardization& s)
{
  j = {{"mean", std::vector<double>(s.mean.data(), s.mean.data() + s.mean.size())},
       {"scale", std::vector<double>(s.scale.data(), s.scale.data() + s.scale.size())}};
}

void from_json(const nlohmann::json& j, Standardization& s)
{
  auto mean = j.at("mean").get<std::vector<double>>();
  auto scale = j.at("scale").get<std::vector<double>>();
  if (mean.size() != scale.size()) throw Error("standardization mean/scale length mismatch");
  s.mean = Eigen::Map<const RowVector>(mean.data(), static_cast<Index>(mean.size()));
  s.scale = Eigen::Map<const RowVector>(scale.data(), static_cast<Index>(scale.size()));
}

}  // namespace rfphate
