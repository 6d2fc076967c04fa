#include "rfphate/forest.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <numeric>

using namespace rfphate;

namespace {

std::vector<Index> iota(Index n)
{
  std::vector<Index> v(static_cast<std::size_t>(n));
  std::iota(v.begin(), v.end(), Index{0});
  return v;
}

int depth_of(const Tree& t, int node = 0)
{
  const Node& n = t.nodes[static_cast<std::size_t>(node)];
  if (n.is_leaf()) return 0;
  return 1 + std::max(depth_of(t, n.left), depth_of(t, n.right));
}

}  // namespace

TEST_SUITE("forest")
{
  TEST_CASE("bootstrap bookkeeping")
  {
    std::mt19937_64 rng(1);
    Dataset ds = oracle::random_dataset(rng, 60, 4, 3);
    Forest f = fit_forest(ds, iota(60), {.n_trees = 25, .seed = 3});
    REQUIRE(f.trees.size() == 25);
    for (const auto& t : f.trees) {
      CHECK(std::accumulate(t.inbag_counts.begin(), t.inbag_counts.end(), 0) == 60);
      std::vector<Index> oob;
      for (Index i = 0; i < 60; ++i)
        if (t.inbag_counts[static_cast<std::size_t>(i)] == 0) oob.push_back(i);
      CHECK(t.oob_indices == oob);
      for (Index i = 0; i < 60; ++i) CHECK(t.train_leaves[static_cast<std::size_t>(i)] == oracle::walk(t, ds.features.row(i)));
    }
  }

  TEST_CASE("fully grown trees fit their in-bag rows")
  {
    std::mt19937_64 rng(2);
    Dataset ds = oracle::random_dataset(rng, 80, 3, 2);
    Forest f = fit_forest(ds, iota(80), {.n_trees = 10, .seed = 1});
    for (const auto& t : f.trees) {
      for (Index i = 0; i < 80; ++i) {
        if (t.inbag_counts[static_cast<std::size_t>(i)] == 0) continue;
        const Node& leaf = t.leaf_node(t.train_leaves[static_cast<std::size_t>(i)]);
        double weight = std::accumulate(leaf.class_counts.begin(), leaf.class_counts.end(), 0.0);
        CHECK(leaf.class_counts[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])] == weight);
      }
    }
  }

  TEST_CASE("stopping rules")
  {
    std::mt19937_64 rng(3);
    Dataset ds = oracle::random_dataset(rng, 100, 5, 3);
    Forest shallow = fit_forest(ds, iota(100), {.n_trees = 8, .max_depth = 2, .seed = 4});
    for (const auto& t : shallow.trees) CHECK(depth_of(t) <= 2);
    Forest chunky = fit_forest(ds, iota(100), {.n_trees = 8, .min_leaf = 7, .seed = 4});
    for (const auto& t : chunky.trees)
      for (const auto& n : t.nodes)
        if (n.is_leaf()) CHECK(std::accumulate(n.class_counts.begin(), n.class_counts.end(), 0.0) >= 7.0);
  }

  TEST_CASE("seeded and thread-count independent")
  {
    std::mt19937_64 rng(4);
    Dataset ds = oracle::random_dataset(rng, 50, 4, 2);
    auto a = nlohmann::json(fit_forest(ds, iota(50), {.n_trees = 12, .seed = 9, .threads = 1})).dump();
    auto b = nlohmann::json(fit_forest(ds, iota(50), {.n_trees = 12, .seed = 9, .threads = 4})).dump();
    auto c = nlohmann::json(fit_forest(ds, iota(50), {.n_trees = 12, .seed = 10})).dump();
    CHECK(a == b);
    CHECK(a != c);
  }

  TEST_CASE("subset indices map to training points")
  {
    std::mt19937_64 rng(5);
    Dataset ds = oracle::random_dataset(rng, 40, 3, 2);
    std::vector<Index> rows{3, 7, 11, 19, 20, 21, 30, 31, 35, 39, 0, 1};
    Forest f = fit_forest(ds, rows, {.n_trees = 5, .seed = 2});
    CHECK(f.n_train == 12);
    for (std::size_t k = 0; k < rows.size(); ++k) {
      CHECK(f.train_labels[k] == ds.labels[static_cast<std::size_t>(rows[k])]);
      for (const auto& t : f.trees) CHECK(t.train_leaves[k] == oracle::walk(t, ds.features.row(rows[k])));
    }
  }

  TEST_CASE("JSON round trip and OOB accuracy")
  {
    Dataset ds = load_csv(RFPHATE_DATA_DIR "/iris.csv", "species");
    Forest f = fit_forest(ds, iota(ds.rows()), {.n_trees = 60, .seed = 11});
    auto p = std::filesystem::temp_directory_path() / "rfphate_forest.json";
    save_forest(f, p);
    Forest g = load_forest(p);
    for (Index i = 0; i < ds.rows(); ++i) {
      CHECK(f.apply(ds.features.row(i)) == g.apply(ds.features.row(i)));
      CHECK(f.predict(ds.features.row(i)) == g.predict(ds.features.row(i)));
    }
    CHECK(oob_accuracy(f) > 0.9);
    CHECK(oob_accuracy(f) == oob_accuracy(g));
    CHECK_THROWS_AS(f.apply(RowVector::Zero(3)), Error);
  }

  TEST_CASE("invalid parameters")
  {
    std::mt19937_64 rng(6);
    Dataset ds = oracle::random_dataset(rng, 20, 2, 2);
    CHECK_THROWS_AS(fit_forest(ds, iota(20), {.n_trees = 0}), Error);
    CHECK_THROWS_AS(fit_forest(ds, iota(20), {.n_trees = 3, .mtry = 9}), Error);
    CHECK_THROWS_AS(fit_forest(ds, std::vector<Index>{}, {.n_trees = 3}), Error);
  }
}
