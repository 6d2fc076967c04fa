#pragma once

// Reference implementations used only by tests. They favour directness over
// speed and share no code with the library beyond its data types.

#include "rfphate/autoencoder.hpp"
#include "rfphate/data.hpp"
#include "rfphate/forest.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <random>
#include <vector>

namespace oracle {

using rfphate::Index;
using rfphate::Matrix;

inline rfphate::Dataset random_dataset(std::mt19937_64& rng, Index n, Index d, int classes)
{
  std::normal_distribution<double> noise(0.0, 1.0);
  rfphate::Dataset ds;
  ds.features.resize(n, d);
  for (Index i = 0; i < n; ++i) {
    int c = static_cast<int>(i % classes);
    ds.labels.push_back(c);
    for (Index j = 0; j < d; ++j) ds.features(i, j) = noise(rng) + (j == c % d ? 1.5 * c : 0.0);
  }
  for (int c = 0; c < classes; ++c) ds.class_names.push_back("c" + std::to_string(c));
  for (Index j = 0; j < d; ++j) {
    ds.feature_names.push_back("x" + std::to_string(j));
    ds.schema.push_back({"x" + std::to_string(j), false, {}});
  }
  return ds;
}

// Walks a tree by hand from the root.
inline int walk(const rfphate::Tree& tree, const Eigen::RowVectorXd& x)
{
  int node = 0;
  while (tree.nodes[static_cast<std::size_t>(node)].leaf_id < 0) {
    const auto& n = tree.nodes[static_cast<std::size_t>(node)];
    node = x(n.feature) <= n.threshold ? n.left : n.right;
  }
  return tree.nodes[static_cast<std::size_t>(node)].leaf_id;
}

// Leaf of every training row (by hand-walking) and the in-bag multiset size
// of every leaf, for one tree.
struct TreeTable
{
  std::vector<int> leaf_of;
  std::vector<double> multiset;

  TreeTable(const rfphate::Tree& tree, const Matrix& train_x)
  {
    for (Index k = 0; k < train_x.rows(); ++k) leaf_of.push_back(walk(tree, train_x.row(k)));
    multiset.assign(static_cast<std::size_t>(tree.n_leaves), 0.0);
    for (Index k = 0; k < train_x.rows(); ++k)
      multiset[static_cast<std::size_t>(leaf_of[static_cast<std::size_t>(k)])] += tree.inbag_counts[static_cast<std::size_t>(k)];
  }

  // c_j / |M| if j is in-bag and shares `leaf`, else 0.
  double term(const rfphate::Tree& tree, int leaf, Index j) const
  {
    double m = multiset[static_cast<std::size_t>(leaf)];
    if (m == 0.0 || leaf_of[static_cast<std::size_t>(j)] != leaf) return 0.0;
    return tree.inbag_counts[static_cast<std::size_t>(j)] / m;
  }
};

inline std::vector<TreeTable> tables(const rfphate::Forest& f, const Matrix& train_x)
{
  std::vector<TreeTable> out;
  for (const auto& t : f.trees) out.emplace_back(t, train_x);
  return out;
}

inline Matrix out_of_sample(const rfphate::Forest& f, const Matrix& train_x, const Matrix& queries)
{
  auto tab = tables(f, train_x);
  Matrix p = Matrix::Zero(queries.rows(), train_x.rows());
  for (Index q = 0; q < queries.rows(); ++q)
    for (std::size_t t = 0; t < f.trees.size(); ++t) {
      int leaf = walk(f.trees[t], queries.row(q));
      for (Index j = 0; j < train_x.rows(); ++j) p(q, j) += tab[t].term(f.trees[t], leaf, j);
    }
  return p / static_cast<double>(f.trees.size());
}

inline double self_similarity(const rfphate::Forest& f, const Matrix& train_x, Index i)
{
  auto tab = tables(f, train_x);
  double s = 0.0;
  int trees = 0;
  for (std::size_t t = 0; t < f.trees.size(); ++t) {
    if (f.trees[t].inbag_counts[static_cast<std::size_t>(i)] == 0) continue;
    ++trees;
    s += tab[t].term(f.trees[t], tab[t].leaf_of[static_cast<std::size_t>(i)], i);
  }
  return s / trees;
}

inline Matrix train(const rfphate::Forest& f, const Matrix& train_x, bool passdown)
{
  auto tab = tables(f, train_x);
  const Index n = train_x.rows();
  Matrix p = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    int oob = 0;
    for (std::size_t t = 0; t < f.trees.size(); ++t) {
      if (f.trees[t].inbag_counts[static_cast<std::size_t>(i)] != 0) continue;
      ++oob;
      int leaf = tab[t].leaf_of[static_cast<std::size_t>(i)];
      for (Index j = 0; j < n; ++j)
        if (j != i) p(i, j) += tab[t].term(f.trees[t], leaf, j);
    }
    p.row(i) /= oob;
    p(i, i) = passdown ? self_similarity(f, train_x, i) : 0.0;
  }
  return p;
}

// Classical MDS by a dense symmetric eigensolver.
inline Matrix classical_mds(const Matrix& d, int k)
{
  const Index n = d.rows();
  Matrix j = Matrix::Identity(n, n) - Matrix::Constant(n, n, 1.0 / static_cast<double>(n));
  Matrix b = -0.5 * j * d.cwiseProduct(d) * j;
  Eigen::SelfAdjointEigenSolver<Matrix> es(b);
  Matrix x(n, k);
  for (int c = 0; c < k; ++c) {
    Index idx = n - 1 - c;
    x.col(c) = es.eigenvectors().col(idx) * std::sqrt(std::max(0.0, es.eigenvalues()(idx)));
  }
  return x;
}

// Orthogonal Procrustes with translation: best rotation/reflection of `a` onto `b`.
inline Matrix procrustes(const Matrix& a, const Matrix& b)
{
  Eigen::RowVectorXd ma = a.colwise().mean();
  Eigen::RowVectorXd mb = b.colwise().mean();
  Matrix ac = a.rowwise() - ma;
  Matrix bc = b.rowwise() - mb;
  Eigen::JacobiSVD<Matrix> svd(ac.transpose() * bc, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Matrix r = svd.matrixU() * svd.matrixV().transpose();
  return (ac * r).rowwise() + mb;
}

inline double rmse(const Matrix& a, const Matrix& b)
{
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

// Rank by counting: 1 + #smaller + (#ties - 1) / 2.
inline std::vector<double> count_ranks(const std::vector<double>& v)
{
  std::vector<double> r(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    double less = 0, equal = 0;
    for (double w : v) {
      if (w < v[i]) ++less;
      else if (w == v[i]) ++equal;
    }
    r[i] = 1.0 + less + (equal - 1.0) / 2.0;
  }
  return r;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y)
{
  long double mx = 0, my = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += x[i];
    my += y[i];
  }
  mx /= x.size();
  my /= y.size();
  long double sxy = 0, sxx = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxy += (x[i] - mx) * (y[i] - my);
    sxx += (x[i] - mx) * (x[i] - mx);
    syy += (y[i] - my) * (y[i] - my);
  }
  return static_cast<double>(sxy / std::sqrt(sxx * syy));
}

inline std::vector<double> upper(const Matrix& d)
{
  std::vector<double> v;
  for (Index i = 0; i < d.rows(); ++i)
    for (Index j = i + 1; j < d.cols(); ++j) v.push_back(d(i, j));
  return v;
}

inline double spearman(const Matrix& a, const Matrix& b)
{
  return pearson(count_ranks(upper(a)), count_ranks(upper(b)));
}

inline Matrix random_distances(std::mt19937_64& rng, Index n)
{
  std::uniform_real_distribution<double> u(0.1, 10.0);
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i + 1; j < n; ++j) d(i, j) = d(j, i) = u(rng);
  return d;
}

// Zero-initialized biases put dead rows exactly on a ReLU kink, where
// central differences see half a one-sided slope. Checks jitter them first.
inline void jitter_biases(rfphate::AEModel& m, std::uint64_t seed)
{
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-0.5, 0.5);
  auto jitter = [&](rfphate::Dense& d) {
    for (Index k = 0; k < d.bias.size(); ++k) d.bias(k) = u(rng);
  };
  for (auto& d : m.params.encoder) jitter(d);
  for (auto& d : m.params.decoder) jitter(d);
  if (m.params.prox_head) jitter(*m.params.prox_head);
}

// Largest entrywise |analytic - numeric| / max(|analytic|, |numeric|, floor)
// between backward() and central differences.
inline double gradient_error(const rfphate::AEModel& model, const rfphate::Batch& batch, double h = 1e-5,
                             double floor = 1e-6)
{
  rfphate::ParameterSet analytic = rfphate::backward(model, batch);
  Eigen::VectorXd g = analytic.flatten();
  rfphate::AEModel probe = model;
  Eigen::VectorXd theta = model.params.flatten();
  double worst = 0.0;
  for (Index k = 0; k < theta.size(); ++k) {
    Eigen::VectorXd t = theta;
    t(k) = theta(k) + h;
    probe.params.assign(t);
    double up = rfphate::loss(probe, batch).total;
    t(k) = theta(k) - h;
    probe.params.assign(t);
    double down = rfphate::loss(probe, batch).total;
    double numeric = (up - down) / (2.0 * h);
    double scale = std::max({std::abs(numeric), std::abs(g(k)), floor});
    worst = std::max(worst, std::abs(numeric - g(k)) / scale);
  }
  return worst;
}

}  // namespace oracle
