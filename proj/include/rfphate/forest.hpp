#pragma once

#include "rfphate/common.hpp"
#include "rfphate/data.hpp"

#include <json.hpp>

#include <filesystem>
#include <span>
#include <vector>

namespace rfphate {

struct ForestParams
{
  int n_trees = 500;
  int max_depth = 0;  // 0 = unlimited
  int min_leaf = 1;   // minimum in-bag weight per child
  int mtry = 0;       // 0 = ceil(sqrt(d))
  std::uint64_t seed = 0;
  int threads = 0;    // 0 = hardware concurrency; never changes the result
};

/// A tree node. Internal nodes route x[feature] <= threshold to `left`.
struct Node
{
  int feature = -1;
  double threshold = 0.0;
  int left = -1;
  int right = -1;
  int leaf_id = -1;                  // >= 0 only for leaves
  std::vector<double> class_counts;  // leaves only, weighted by in-bag multiplicity

  bool is_leaf() const { return leaf_id >= 0; }
};

struct Tree
{
  std::vector<Node> nodes;         // nodes[0] is the root
  std::vector<int> inbag_counts;   // bootstrap multiplicity of each training point
  std::vector<Index> oob_indices;  // training points with inbag_counts == 0, ascending
  std::vector<int> train_leaves;   // leaf reached by each training point
  int n_leaves = 0;

  int leaf(const Eigen::Ref<const RowVector>& x) const;
  /// Class with the largest in-bag weight in the leaf; lowest id on ties.
  int leaf_majority(int leaf_id) const;

  const Node& leaf_node(int leaf_id) const { return nodes[static_cast<std::size_t>(leaf_index[static_cast<std::size_t>(leaf_id)])]; }

  /// Rebuilds leaf_index from nodes; called after growing or loading.
  void index_leaves();

  std::vector<int> leaf_index;  // node position of each leaf id
};

struct Forest
{
  std::vector<Tree> trees;
  Index n_train = 0;
  int n_features = 0;
  int n_classes = 0;
  std::vector<int> train_labels;
  ForestParams params;

  /// Leaf id per tree.
  std::vector<int> apply(const Eigen::Ref<const RowVector>& x) const;
  int predict(const Eigen::Ref<const RowVector>& x) const;
};

/// Grows one CART tree per bootstrap sample of the rows in `train_indices`.
/// Training point k of the forest is row train_indices[k] of `ds`.
Forest fit_forest(const Dataset& ds, std::span<const Index> train_indices, const ForestParams& params);

/// Accuracy of votes cast only by trees for which each point is out-of-bag.
/// Points that are in-bag everywhere are left out; NaN if none remain.
double oob_accuracy(const Forest& forest);

void to_json(nlohmann::json& j, const Forest& f);
void from_json(const nlohmann::json& j, Forest& f);
void to_json(nlohmann::json& j, const ForestParams& p);
void from_json(const nlohmann::json& j, ForestParams& p);

void save_forest(const Forest& forest, const std::filesystem::path& path);
Forest load_forest(const std::filesystem::path& path);

}  // namespace rfphate
