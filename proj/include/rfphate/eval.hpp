#pragma once

#include "rfphate/autoencoder.hpp"
#include "rfphate/common.hpp"
#include "rfphate/embed.hpp"
#include "rfphate/forest.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

namespace rfphate {

Matrix pairwise_distances(const Matrix& coords);
Matrix pairwise_distances(const Embedding& e);

enum class MantelMethod { spearman, pearson };

MantelMethod parse_mantel_method(std::string_view text);
std::string_view to_string(MantelMethod m);

struct MantelResult
{
  double correlation = 0.0;
  MantelMethod method = MantelMethod::spearman;
  Index n_pairs = 0;
  std::optional<double> permutation_p;  // one-sided, (1 + #{r_perm >= r}) / (1 + N)
};

/// Correlation of the strict upper triangles. Permutations co-permute rows
/// and columns of d2.
MantelResult mantel(const Matrix& d1, const Matrix& d2, MantelMethod method = MantelMethod::spearman,
                    int n_permutations = 0, std::uint64_t seed = 0);

/// Ranks starting at 1; tied values share their average rank.
std::vector<double> average_ranks(std::span<const double> values);

struct DatasetEntry
{
  std::string name;
  std::filesystem::path path;
  std::string label;
};

/// A variant, plus the prototype fraction for RF-PRN-PRO.
struct VariantKey
{
  Variant variant = Variant::rf_grae;
  std::optional<double> fraction;

  std::string label() const;  // "RF-PRN", "RF-PRN-PRO(10%)"
  bool operator==(const VariantKey&) const = default;
};

VariantKey parse_variant_key(std::string_view text);

struct ExperimentConfig
{
  std::vector<DatasetEntry> datasets;
  std::vector<Variant> variants{std::begin(kAllVariants), std::end(kAllVariants)};
  std::vector<double> lambdas{1.0, 10.0, 100.0};
  std::vector<double> proto_fractions{0.1, 0.2, 0.5};
  int n_seeds = 10;
  std::uint64_t seed_base = 0;
  double train_fraction = 0.7;
  ForestParams forest{};
  DiffusionConfig embed{};
  ExtensionOptions ae{};
  int jobs = 1;
};

/// Dataset paths in the file are resolved against the file's directory.
ExperimentConfig load_experiment_config(const std::filesystem::path& path);
void to_json(nlohmann::json& j, const ExperimentConfig& c);
void from_json(const nlohmann::json& j, ExperimentConfig& c);

struct CellPlan
{
  std::size_t dataset = 0;  // index into ExperimentConfig::datasets
  VariantKey variant;
  double lambda = 1.0;
  std::uint64_t seed = 0;
};

/// Ordered dataset, seed, variant (fractions expanded), lambda.
std::vector<CellPlan> plan_cells(const ExperimentConfig& cfg);

struct CellRecord
{
  std::string dataset;
  VariantKey variant;
  double lambda = 1.0;
  std::uint64_t seed = 0;
  std::optional<double> mantel;  // empty when the cell failed
  double fit_seconds = 0.0;      // autoencoder training only
  double recon_mse = 0.0;        // training reconstruction term after training
  double geom_mse = 0.0;         // training MSE(Z, G) in the standardized frame
  std::string error;
};

struct AggregateRow
{
  std::string variant;            // display name; PRO fractions pooled unless `fraction` is set
  std::optional<double> lambda;   // set for per-lambda rows
  std::optional<double> fraction;
  double mean = 0.0;
  double std = 0.0;  // population
  Index cells = 0;
  Index failures = 0;
};

struct ExperimentReport
{
  std::vector<CellRecord> cells;
  std::vector<AggregateRow> by_variant;
  std::vector<AggregateRow> by_variant_lambda;
  std::vector<AggregateRow> by_fraction;  // RF-PRN-PRO only

  /// Rebuilds every aggregate from `cells`.
  void aggregate();
  /// Throws if stored aggregates differ from a recomputation by more than 1e-12.
  void verify() const;

  const AggregateRow* find(std::string_view variant, std::optional<double> lambda = std::nullopt,
                           std::optional<double> fraction = std::nullopt) const;
  Index failed_cells() const;
};

using ProgressFn = std::function<void(const CellRecord&)>;

/// For every (dataset, seed): split, fit a forest on the training rows, embed
/// the training rows (the regularizer), embed all rows with a forest fit on
/// all rows (the comparison target), then train and extend every variant and
/// lambda. Cell failures are recorded and the run continues.
ExperimentReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress = {});

/// Mean over cells matched on (dataset, seed, lambda) of fit_seconds(a) / fit_seconds(b).
double timing_ratio(const ExperimentReport& report, const VariantKey& a, const VariantKey& b);

void write_cells_csv(const ExperimentReport& report, const std::filesystem::path& path);
/// Reads cells and recomputes aggregates.
ExperimentReport read_cells_csv(const std::filesystem::path& path);
nlohmann::json aggregates_json(const ExperimentReport& report);
/// Reads cells and stored aggregates, then verify()s them against each other.
ExperimentReport load_report(const std::filesystem::path& cells_csv, const std::filesystem::path& aggregates);
/// Variants as rows, Mantel mean +- std, with per-lambda and per-fraction blocks.
std::string format_table(const ExperimentReport& report);

}  // namespace rfphate
