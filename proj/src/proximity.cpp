#include "rfphate/proximity.hpp"

#include "rfphate/data.hpp"

#include <cmath>
#include <fstream>
#include <numeric>

namespace rfphate {

SelfSimilarity parse_self_similarity(std::string_view text)
{
  if (text == "zero") return SelfSimilarity::zero;
  if (text == "passdown" || text == "inbag_passdown") return SelfSimilarity::inbag_passdown;
  throw Error("unknown self-similarity mode '" + std::string(text) + "' (expected zero or passdown)");
}

std::string_view to_string(SelfSimilarity mode)
{
  return mode == SelfSimilarity::zero ? "zero" : "passdown";
}

LeafOccupancy::LeafOccupancy(const Forest& forest)
{
  offsets_.resize(forest.trees.size());
  members_.resize(forest.trees.size());
  sizes_.resize(forest.trees.size());
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const Tree& tree = forest.trees[t];
    auto& offsets = offsets_[t];
    offsets.assign(static_cast<std::size_t>(tree.n_leaves) + 1, 0);
    for (Index j = 0; j < forest.n_train; ++j)
      if (tree.inbag_counts[static_cast<std::size_t>(j)] > 0) ++offsets[static_cast<std::size_t>(tree.train_leaves[static_cast<std::size_t>(j)]) + 1];
    std::partial_sum(offsets.begin(), offsets.end(), offsets.begin());

    auto& members = members_[t];
    members.resize(offsets.back());
    sizes_[t].assign(static_cast<std::size_t>(tree.n_leaves), 0.0);
    std::vector<std::size_t> cursor(offsets.begin(), offsets.end() - 1);
    for (Index j = 0; j < forest.n_train; ++j) {
      int c = tree.inbag_counts[static_cast<std::size_t>(j)];
      if (c == 0) continue;
      auto leaf = static_cast<std::size_t>(tree.train_leaves[static_cast<std::size_t>(j)]);
      members[cursor[leaf]++] = {j, c};
      sizes_[t][leaf] += c;
    }
  }
}

std::span<const LeafOccupancy::Member> LeafOccupancy::members(std::size_t tree, int leaf) const
{
  const auto& off = offsets_[tree];
  auto l = static_cast<std::size_t>(leaf);
  return {members_[tree].data() + off[l], off[l + 1] - off[l]};
}

double LeafOccupancy::multiset_size(std::size_t tree, int leaf) const
{
  return sizes_[tree][static_cast<std::size_t>(leaf)];
}

namespace {

// Adds c_j / |M| for every in-bag occupant j of `leaf` into `row`.
void accumulate_leaf(const LeafOccupancy& occ, std::size_t tree, int leaf, Eigen::Ref<RowVector> row)
{
  double size = occ.multiset_size(tree, leaf);
  if (size <= 0.0) return;
  for (const auto& m : occ.members(tree, leaf)) row(m.point) += static_cast<double>(m.count) / size;
}

double passdown_similarity(const Forest& forest, const LeafOccupancy& occ, Index i)
{
  double total = 0.0;
  int inbag_trees = 0;
  for (std::size_t t = 0; t < forest.trees.size(); ++t) {
    const Tree& tree = forest.trees[t];
    int c = tree.inbag_counts[static_cast<std::size_t>(i)];
    if (c == 0) continue;
    total += static_cast<double>(c) / occ.multiset_size(t, tree.train_leaves[static_cast<std::size_t>(i)]);
    ++inbag_trees;
  }
  if (inbag_trees == 0) {
    throw Error("training point " + std::to_string(i) + " is out-of-bag in every tree; self-similarity undefined");
  }
  return total / static_cast<double>(inbag_trees);
}

}  // namespace

ProximityMatrix extend_proximities(const Forest& forest, const Matrix& queries)
{
  if (forest.trees.empty()) throw Error("forest has no trees");
  if (queries.cols() != forest.n_features) {
    throw Error("queries have " + std::to_string(queries.cols()) + " features, forest expects " +
                std::to_string(forest.n_features));
  }
  LeafOccupancy occ(forest);
  ProximityMatrix out;
  out.kind = ProximityKind::out_of_sample;
  out.values = Matrix::Zero(queries.rows(), forest.n_train);
  const double n_trees = static_cast<double>(forest.trees.size());
  parallel_for(queries.rows(), forest.params.threads, [&](Index q) {
    RowVector row = RowVector::Zero(forest.n_train);
    RowVector x = queries.row(q);
    for (std::size_t t = 0; t < forest.trees.size(); ++t) accumulate_leaf(occ, t, forest.trees[t].leaf(x), row);
    out.values.row(q) = row / n_trees;
  });
  return out;
}

ProximityMatrix train_proximities(const Forest& forest, SelfSimilarity mode)
{
  if (forest.trees.empty()) throw Error("forest has no trees");
  LeafOccupancy occ(forest);
  ProximityMatrix out;
  out.kind = ProximityKind::train;
  out.self_similarity = mode;
  out.values = Matrix::Zero(forest.n_train, forest.n_train);
  parallel_for(forest.n_train, forest.params.threads, [&](Index i) {
    RowVector row = RowVector::Zero(forest.n_train);
    int oob_trees = 0;
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      const Tree& tree = forest.trees[t];
      if (tree.inbag_counts[static_cast<std::size_t>(i)] != 0) continue;
      ++oob_trees;
      accumulate_leaf(occ, t, tree.train_leaves[static_cast<std::size_t>(i)], row);
    }
    if (oob_trees == 0) {
      throw Error("training point " + std::to_string(i) + " is in-bag in every tree; fit more trees");
    }
    row /= static_cast<double>(oob_trees);
    // i never occupies a leaf of a tree where it is out-of-bag.
    row(i) = mode == SelfSimilarity::zero ? 0.0 : passdown_similarity(forest, occ, i);
    out.values.row(i) = row;
  });
  return out;
}

double self_similarity(const Forest& forest, Index i)
{
  if (i < 0 || i >= forest.n_train) throw Error("training index " + std::to_string(i) + " out of range");
  return passdown_similarity(forest, LeafOccupancy(forest), i);
}

PrototypeSet select_prototypes(const ProximityMatrix& proximities, std::span<const int> labels, double fraction)
{
  const Matrix& p = proximities.values;
  if (p.rows() != p.cols()) throw Error("prototype selection needs a square training proximity matrix");
  if (static_cast<Index>(labels.size()) != p.rows()) throw Error("label count does not match proximity rows");
  if (!(fraction > 0.0 && fraction <= 1.0)) throw Error("prototype fraction must lie in (0, 1]");

  int n_classes = labels.empty() ? 0 : *std::max_element(labels.begin(), labels.end()) + 1;
  std::vector<std::vector<Index>> members(static_cast<std::size_t>(n_classes));
  for (std::size_t i = 0; i < labels.size(); ++i) members[static_cast<std::size_t>(labels[i])].push_back(static_cast<Index>(i));

  PrototypeSet out;
  out.fraction = fraction;
  for (const auto& cls : members) {
    std::vector<std::pair<double, Index>> ranked;
    for (Index i : cls) {
      double sum = 0.0;
      for (Index j : cls)
        if (j != i) sum += p(i, j);
      double mean = cls.size() > 1 ? sum / static_cast<double>(cls.size() - 1) : 0.0;
      ranked.emplace_back(mean, i);
    }
    std::sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) {
      return a.first > b.first || (a.first == b.first && a.second < b.second);
    });
    auto take = cls.empty() ? std::size_t{0}
                            : std::max<std::size_t>(1, static_cast<std::size_t>(std::llround(fraction * static_cast<double>(cls.size()))));
    for (std::size_t k = 0; k < take; ++k) out.indices.push_back(ranked[k].second);
    out.per_class_counts.push_back(static_cast<Index>(take));
  }
  std::sort(out.indices.begin(), out.indices.end());
  return out;
}

Matrix symmetrize(const Matrix& p)
{
  if (p.rows() != p.cols()) throw Error("symmetrize needs a square matrix");
  return (p + p.transpose()) / 2.0;
}

void write_proximity_csv(const Matrix& p, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "row";
  for (Index j = 0; j < p.cols(); ++j) out << ',' << j;
  out << '\n';
  for (Index i = 0; i < p.rows(); ++i) {
    out << i;
    for (Index j = 0; j < p.cols(); ++j) out << ',' << format_real(p(i, j));
    out << '\n';
  }
}

}  // namespace rfphate
