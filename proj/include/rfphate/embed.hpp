#pragma once

#include "rfphate/common.hpp"
#include "rfphate/forest.hpp"

#include <json.hpp>

#include <filesystem>
#include <optional>
#include <span>
#include <vector>

namespace rfphate {

struct Embedding
{
  enum class Source { reference_pipeline, encoder };

  Matrix coords;  // n x k
  Source source = Source::reference_pipeline;

  Index k() const { return coords.cols(); }
};

struct DiffusionConfig
{
  std::optional<int> t;  // nullopt = pick by von Neumann entropy knee
  int t_max = 64;
  int k_dim = 2;
  int mds_iters = 500;
  double mds_tol = 1e-6;
  double potential_eps = 1e-7;
  std::uint64_t seed = 0;
};

struct EntropyKnee
{
  int t = 1;
  std::vector<double> entropy;  // H(1) .. H(t_max)
};

struct MdsResult
{
  Matrix coords;
  std::vector<double> stress_history;  // raw stress of the start and of every iterate
  int iterations = 0;
  double normalized_stress = 0.0;      // sqrt(stress / sum of squared targets)
};

struct EmbedResult
{
  Embedding embedding;
  int t = 1;
  bool t_auto = false;
  std::vector<double> entropy;
  MdsResult mds;
};

/// D^-1 K. Throws on a zero row, naming it.
Matrix diffusion_operator(const Matrix& kernel);

/// Entropy of the normalized |eigenvalue|^t spectrum of `diffusion` for
/// t = 1..t_max, and the t farthest from the chord joining the curve's end
/// points (lowest t on ties).
EntropyKnee von_neumann_entropy_t(const Matrix& diffusion, int t_max);

/// Pairwise Euclidean distances between rows of -log(P^t + eps).
Matrix potential_distances(const Matrix& diffusion, int t, double eps = 1e-7);

/// Classical MDS start (double centering, top-k eigenvectors by power
/// iteration with deflation) refined by SMACOF. `seed` only matters when the
/// start vector is degenerate.
MdsResult mds(const Matrix& distances, int k, int max_iters = 500, double tol = 1e-6, std::uint64_t seed = 0);

/// Raw stress sum_{i<j} (|x_i - x_j| - d_ij)^2.
double stress(const Matrix& coords, const Matrix& distances);

/// Proximities (zero self-similarity) -> symmetrize -> diffusion -> potential
/// distances -> MDS.
EmbedResult rfphate_embed(const Forest& forest, const DiffusionConfig& cfg);
EmbedResult embed_kernel(const Matrix& kernel, const DiffusionConfig& cfg);

/// CSV with an `index` column followed by dim_0 .. dim_{k-1}.
void write_embedding_csv(const Embedding& e, std::span<const Index> row_ids, const std::filesystem::path& path);
Matrix read_embedding_csv(const std::filesystem::path& path);

nlohmann::json embed_metadata(const EmbedResult& r, const DiffusionConfig& cfg);
void to_json(nlohmann::json& j, const DiffusionConfig& c);
void from_json(const nlohmann::json& j, DiffusionConfig& c);

}  // namespace rfphate
