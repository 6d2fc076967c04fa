#include "rfphate/forest.hpp"

#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace rfphate {

namespace {

constexpr int kForestFormatVersion = 1;

class TreeBuilder
{
public:
  TreeBuilder(const Matrix& x, const std::vector<int>& y, int n_classes, const ForestParams& params, int mtry,
              std::uint64_t tree_index)
      : x_(x), y_(y), n_classes_(n_classes), params_(params), mtry_(mtry)
  {
    std::seed_seq seq{static_cast<std::uint32_t>(params.seed), static_cast<std::uint32_t>(params.seed >> 32),
                      static_cast<std::uint32_t>(tree_index), static_cast<std::uint32_t>(tree_index >> 32)};
    rng_.seed(seq);
  }

  Tree build()
  {
    const Index n = x_.rows();
    tree_.inbag_counts.assign(static_cast<std::size_t>(n), 0);
    std::uniform_int_distribution<Index> draw(0, n - 1);
    for (Index k = 0; k < n; ++k) ++tree_.inbag_counts[static_cast<std::size_t>(draw(rng_))];

    std::vector<Index> members;
    for (Index i = 0; i < n; ++i) {
      if (tree_.inbag_counts[static_cast<std::size_t>(i)] > 0) members.push_back(i);
      else tree_.oob_indices.push_back(i);
    }
    grow(members, 0);
    tree_.index_leaves();
    tree_.train_leaves.resize(static_cast<std::size_t>(n));
    for (Index i = 0; i < n; ++i) tree_.train_leaves[static_cast<std::size_t>(i)] = tree_.leaf(x_.row(i));
    return std::move(tree_);
  }

private:
  struct Candidate
  {
    int feature = -1;
    double threshold = 0.0;
    double score = -1.0;
  };

  int weight(Index i) const { return tree_.inbag_counts[static_cast<std::size_t>(i)]; }

  std::vector<double> class_weights(const std::vector<Index>& members) const
  {
    std::vector<double> w(static_cast<std::size_t>(n_classes_), 0.0);
    for (Index i : members) w[static_cast<std::size_t>(y_[static_cast<std::size_t>(i)])] += weight(i);
    return w;
  }

  int make_leaf(std::vector<double> counts)
  {
    Node leaf;
    leaf.leaf_id = tree_.n_leaves++;
    leaf.class_counts = std::move(counts);
    tree_.nodes.push_back(std::move(leaf));
    return static_cast<int>(tree_.nodes.size()) - 1;
  }

  // Features to try at this node: the first mtry non-constant ones in a
  // random permutation, in ascending order so ties favour the lower index.
  std::vector<int> pick_features(const std::vector<Index>& members)
  {
    std::vector<int> order(static_cast<std::size_t>(x_.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng_);
    std::vector<int> picked;
    for (int f : order) {
      double lo = x_(members.front(), f);
      double hi = lo;
      for (Index i : members) {
        lo = std::min(lo, x_(i, f));
        hi = std::max(hi, x_(i, f));
      }
      if (hi > lo) picked.push_back(f);
      if (static_cast<int>(picked.size()) == mtry_) break;
    }
    std::sort(picked.begin(), picked.end());
    return picked;
  }

  // Maximizes sum_c L_c^2/|L| + sum_c R_c^2/|R|, i.e. minimizes the
  // weighted Gini impurity of the children.
  void scan_feature(int f, const std::vector<Index>& members, const std::vector<double>& total, double n_total,
                    Candidate& best) const
  {
    std::vector<Index> order = members;
    std::sort(order.begin(), order.end(), [&](Index a, Index b) {
      return x_(a, f) < x_(b, f) || (x_(a, f) == x_(b, f) && a < b);
    });
    std::vector<double> left(total.size(), 0.0);
    double n_left = 0.0;
    for (std::size_t k = 0; k + 1 < order.size(); ++k) {
      Index i = order[k];
      left[static_cast<std::size_t>(y_[static_cast<std::size_t>(i)])] += weight(i);
      n_left += weight(i);
      double a = x_(i, f);
      double b = x_(order[k + 1], f);
      if (!(b > a)) continue;
      double n_right = n_total - n_left;
      if (n_left < params_.min_leaf || n_right < params_.min_leaf) continue;
      double sl = 0.0;
      double sr = 0.0;
      for (std::size_t c = 0; c < total.size(); ++c) {
        sl += left[c] * left[c];
        double r = total[c] - left[c];
        sr += r * r;
      }
      double score = sl / n_left + sr / n_right;
      if (score > best.score) {
        double mid = a + (b - a) / 2.0;
        if (!(mid < b)) mid = a;
        best = {f, mid, score};
      }
    }
  }

  int grow(const std::vector<Index>& members, int depth)
  {
    std::vector<double> counts = class_weights(members);
    double n_total = std::accumulate(counts.begin(), counts.end(), 0.0);
    int present = static_cast<int>(std::count_if(counts.begin(), counts.end(), [](double c) { return c > 0.0; }));
    bool depth_capped = params_.max_depth > 0 && depth >= params_.max_depth;
    if (present <= 1 || depth_capped || n_total < 2.0 * params_.min_leaf) return make_leaf(std::move(counts));

    Candidate best;
    for (int f : pick_features(members)) scan_feature(f, members, counts, n_total, best);
    if (best.feature < 0) return make_leaf(std::move(counts));

    std::vector<Index> left;
    std::vector<Index> right;
    for (Index i : members) (x_(i, best.feature) <= best.threshold ? left : right).push_back(i);

    int self = static_cast<int>(tree_.nodes.size());
    Node node;
    node.feature = best.feature;
    node.threshold = best.threshold;
    tree_.nodes.push_back(node);
    int l = grow(left, depth + 1);
    int r = grow(right, depth + 1);
    tree_.nodes[static_cast<std::size_t>(self)].left = l;
    tree_.nodes[static_cast<std::size_t>(self)].right = r;
    return self;
  }

  const Matrix& x_;
  const std::vector<int>& y_;
  int n_classes_;
  const ForestParams& params_;
  int mtry_;
  std::mt19937_64 rng_;
  Tree tree_;
};

int argmax_lowest(const std::vector<double>& v)
{
  int best = 0;
  for (std::size_t c = 1; c < v.size(); ++c)
    if (v[c] > v[static_cast<std::size_t>(best)]) best = static_cast<int>(c);
  return best;
}

}  // namespace

int Tree::leaf(const Eigen::Ref<const RowVector>& x) const
{
  const Node* node = &nodes.front();
  while (!node->is_leaf()) node = &nodes[static_cast<std::size_t>(x(node->feature) <= node->threshold ? node->left : node->right)];
  return node->leaf_id;
}

void Tree::index_leaves()
{
  leaf_index.assign(static_cast<std::size_t>(n_leaves), -1);
  for (std::size_t k = 0; k < nodes.size(); ++k) {
    int id = nodes[k].leaf_id;
    if (id < 0) continue;
    if (id >= n_leaves || leaf_index[static_cast<std::size_t>(id)] >= 0) throw Error("malformed leaf numbering");
    leaf_index[static_cast<std::size_t>(id)] = static_cast<int>(k);
  }
}

int Tree::leaf_majority(int leaf_id) const
{
  if (leaf_id < 0 || leaf_id >= n_leaves) throw Error("leaf id " + std::to_string(leaf_id) + " not in tree");
  return argmax_lowest(leaf_node(leaf_id).class_counts);
}

std::vector<int> Forest::apply(const Eigen::Ref<const RowVector>& x) const
{
  if (x.size() != n_features) {
    throw Error("query has " + std::to_string(x.size()) + " features, forest expects " + std::to_string(n_features));
  }
  std::vector<int> leaves;
  leaves.reserve(trees.size());
  for (const auto& t : trees) leaves.push_back(t.leaf(x));
  return leaves;
}

int Forest::predict(const Eigen::Ref<const RowVector>& x) const
{
  auto leaves = apply(x);
  std::vector<double> votes(static_cast<std::size_t>(n_classes), 0.0);
  for (std::size_t t = 0; t < trees.size(); ++t) votes[static_cast<std::size_t>(trees[t].leaf_majority(leaves[t]))] += 1.0;
  return argmax_lowest(votes);
}

Forest fit_forest(const Dataset& ds, std::span<const Index> train_indices, const ForestParams& params)
{
  if (train_indices.empty()) throw Error("cannot fit a forest on an empty training set");
  if (params.n_trees < 1) throw Error("n_trees must be at least 1");
  if (params.min_leaf < 1) throw Error("min_leaf must be at least 1");
  const int d = static_cast<int>(ds.cols());
  int mtry = params.mtry > 0 ? params.mtry : static_cast<int>(std::ceil(std::sqrt(static_cast<double>(d))));
  if (mtry < 1 || mtry > d) throw Error("mtry must lie in [1, " + std::to_string(d) + "]");

  Dataset train = ds.subset(train_indices);
  Forest forest;
  forest.n_train = train.rows();
  forest.n_features = d;
  forest.n_classes = ds.classes();
  forest.train_labels = train.labels;
  forest.params = params;
  forest.params.mtry = mtry;
  forest.trees.resize(static_cast<std::size_t>(params.n_trees));
  parallel_for(params.n_trees, params.threads, [&](Index t) {
    TreeBuilder builder(train.features, train.labels, forest.n_classes, forest.params, mtry, static_cast<std::uint64_t>(t));
    forest.trees[static_cast<std::size_t>(t)] = builder.build();
  });
  return forest;
}

double oob_accuracy(const Forest& forest)
{
  Index scored = 0;
  Index correct = 0;
  for (Index i = 0; i < forest.n_train; ++i) {
    std::vector<double> votes(static_cast<std::size_t>(forest.n_classes), 0.0);
    bool any = false;
    for (std::size_t t = 0; t < forest.trees.size(); ++t) {
      const Tree& tree = forest.trees[t];
      if (tree.inbag_counts[static_cast<std::size_t>(i)] != 0) continue;
      votes[static_cast<std::size_t>(tree.leaf_majority(tree.train_leaves[static_cast<std::size_t>(i)]))] += 1.0;
      any = true;
    }
    if (!any) continue;
    ++scored;
    if (argmax_lowest(votes) == forest.train_labels[static_cast<std::size_t>(i)]) ++correct;
  }
  if (scored == 0) return std::nan("");
  return static_cast<double>(correct) / static_cast<double>(scored);
}

void to_json(nlohmann::json& j, const ForestParams& p)
{
  j = {{"n_trees", p.n_trees}, {"max_depth", p.max_depth}, {"min_leaf", p.min_leaf}, {"mtry", p.mtry}, {"seed", p.seed}};
}

void from_json(const nlohmann::json& j, ForestParams& p)
{
  p.n_trees = j.value("n_trees", p.n_trees);
  p.max_depth = j.value("max_depth", p.max_depth);
  p.min_leaf = j.value("min_leaf", p.min_leaf);
  p.mtry = j.value("mtry", p.mtry);
  p.seed = j.value("seed", p.seed);
  p.threads = j.value("threads", p.threads);
}

void to_json(nlohmann::json& j, const Forest& f)
{
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : f.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
      if (n.is_leaf()) nodes.push_back({{"leaf", n.leaf_id}, {"counts", n.class_counts}});
      else nodes.push_back({{"feature", n.feature}, {"threshold", n.threshold}, {"left", n.left}, {"right", n.right}});
    }
    trees.push_back({{"nodes", std::move(nodes)}, {"inbag_counts", t.inbag_counts}, {"train_leaves", t.train_leaves}});
  }
  j = {{"format", "rfphate-forest"},
       {"format_version", kForestFormatVersion},
       {"params", f.params},
       {"n_train", f.n_train},
       {"n_features", f.n_features},
       {"n_classes", f.n_classes},
       {"train_labels", f.train_labels},
       {"trees", std::move(trees)}};
}

void from_json(const nlohmann::json& j, Forest& f)
{
  if (j.value("format", std::string{}) != "rfphate-forest") throw Error("not a forest document");
  if (j.at("format_version").get<int>() != kForestFormatVersion) throw Error("unsupported forest format version");
  f = Forest{};
  j.at("params").get_to(f.params);
  j.at("n_train").get_to(f.n_train);
  j.at("n_features").get_to(f.n_features);
  j.at("n_classes").get_to(f.n_classes);
  j.at("train_labels").get_to(f.train_labels);
  for (const auto& jt : j.at("trees")) {
    Tree t;
    for (const auto& jn : jt.at("nodes")) {
      Node n;
      if (jn.contains("leaf")) {
        n.leaf_id = jn.at("leaf").get<int>();
        jn.at("counts").get_to(n.class_counts);
        ++t.n_leaves;
      } else {
        n.feature = jn.at("feature").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
      }
      t.nodes.push_back(std::move(n));
    }
    t.index_leaves();
    jt.at("inbag_counts").get_to(t.inbag_counts);
    jt.at("train_leaves").get_to(t.train_leaves);
    if (static_cast<Index>(t.inbag_counts.size()) != f.n_train || static_cast<Index>(t.train_leaves.size()) != f.n_train) {
      throw Error("tree bookkeeping does not match n_train");
    }
    for (Index i = 0; i < f.n_train; ++i)
      if (t.inbag_counts[static_cast<std::size_t>(i)] == 0) t.oob_indices.push_back(i);
    f.trees.push_back(std::move(t));
  }
  if (f.trees.empty()) throw Error("forest has no trees");
}

void save_forest(const Forest& forest, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << nlohmann::json(forest).dump() << '\n';
}

Forest load_forest(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return nlohmann::json::parse(in).get<Forest>();
}

}  // namespace rfphate
