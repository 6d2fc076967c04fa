#pragma once

#include "rfphate/common.hpp"
#include "rfphate/forest.hpp"

#include <filesystem>
#include <span>
#include <string_view>
#include <vector>

namespace rfphate {

enum class ProximityKind { train, out_of_sample };

/// Diagonal of a training proximity block: zero (row-stochastic) or the
/// in-bag pass-down self-similarity.
enum class SelfSimilarity { zero, inbag_passdown };

SelfSimilarity parse_self_similarity(std::string_view text);
std::string_view to_string(SelfSimilarity mode);

/// RF-GAP proximities: rows are query points, columns training points.
struct ProximityMatrix
{
  Matrix values;
  ProximityKind kind = ProximityKind::train;
  SelfSimilarity self_similarity = SelfSimilarity::zero;
};

struct PrototypeSet
{
  std::vector<Index> indices;           // ascending training indices
  std::vector<Index> per_class_counts;  // length C
  double fraction = 1.0;
};

/// In-bag occupants of every leaf, with multiplicities: the part of a forest
/// the proximity formulas read. Built once and shared across queries.
class LeafOccupancy
{
public:
  explicit LeafOccupancy(const Forest& forest);

  struct Member
  {
    Index point;
    int count;
  };

  std::span<const Member> members(std::size_t tree, int leaf) const;
  /// |M(t)|: in-bag multiset size of the leaf.
  double multiset_size(std::size_t tree, int leaf) const;

private:
  std::vector<std::vector<std::size_t>> offsets_;  // per tree, per leaf (+1 sentinel)
  std::vector<std::vector<Member>> members_;
  std::vector<std::vector<double>> sizes_;
};

/// p(x0, j) = (1/|T|) sum_t c_j(t) I(j in J0(t)) / |M0(t)| for each query row.
/// Queries carry features only; leaves with no in-bag occupant contribute 0.
ProximityMatrix extend_proximities(const Forest& forest, const Matrix& queries);

/// Training block: row i averages the same per-tree terms over only the
/// trees where i is out-of-bag. Throws if some point is in-bag everywhere.
ProximityMatrix train_proximities(const Forest& forest, SelfSimilarity mode = SelfSimilarity::zero);

/// (1/|S̄_i|) sum over trees where i is in-bag of c_i(t) / |M_i(t)|.
double self_similarity(const Forest& forest, Index i);

/// Per class, the members with the largest mean proximity to the other
/// members of their class (diagonal excluded). Ties go to the lower index.
PrototypeSet select_prototypes(const ProximityMatrix& proximities, std::span<const int> labels, double fraction);

Matrix symmetrize(const Matrix& p);

/// Dense CSV with a "row" index column and one column per training index.
void write_proximity_csv(const Matrix& p, const std::filesystem::path& path);

}  // namespace rfphate
