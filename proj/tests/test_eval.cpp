#include "rfphate/eval.hpp"

#include "oracles.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>

namespace fs = std::filesystem;
using namespace rfphate;

namespace {

ExperimentReport sample_report()
{
  ExperimentReport r;
  auto cell = [](std::string ds, VariantKey v, double l, std::uint64_t s, std::optional<double> m, double secs) {
    CellRecord c;
    c.dataset = std::move(ds);
    c.variant = v;
    c.lambda = l;
    c.seed = s;
    c.mantel = m;
    c.fit_seconds = secs;
    if (!m) c.error = "boom, with a comma";
    return c;
  };
  VariantKey prn{Variant::rf_prn, std::nullopt};
  VariantKey grae{Variant::rf_grae, std::nullopt};
  VariantKey pro{Variant::rf_prn_pro, 0.1};
  VariantKey pro5{Variant::rf_prn_pro, 0.5};
  r.cells = {cell("a", prn, 1, 0, 0.8, 2.0),   cell("a", prn, 10, 0, 0.9, 2.0),  cell("a", grae, 1, 0, 0.5, 1.0),
             cell("a", grae, 10, 0, std::nullopt, 1.0), cell("a", pro, 1, 0, 0.7, 1.0), cell("a", pro, 10, 0, 0.6, 1.5),
             cell("a", pro5, 1, 0, 0.75, 1.8), cell("a", pro5, 10, 0, 0.85, 1.9)};
  r.aggregate();
  return r;
}

}  // namespace

TEST_SUITE("eval")
{
  TEST_CASE("pairwise distances")
  {
    Matrix x(2, 1);
    x << 0, 3;
    CHECK(pairwise_distances(x)(0, 1) == 3.0);
    Matrix dup = Matrix::Ones(2, 2);
    CHECK(pairwise_distances(dup)(0, 1) == 0.0);

    std::mt19937_64 rng(41);
    std::normal_distribution<double> g;
    Matrix p(5, 2);
    for (Index i = 0; i < p.size(); ++i) p.data()[i] = g(rng);
    Matrix d = pairwise_distances(p);
    for (Index i = 0; i < 5; ++i)
      for (Index j = 0; j < 5; ++j) CHECK(d(i, j) == doctest::Approx(std::hypot(p(i, 0) - p(j, 0), p(i, 1) - p(j, 1))).epsilon(1e-15));

    double th = 0.7;
    Matrix rot(2, 2);
    rot << std::cos(th), -std::sin(th), std::sin(th), std::cos(th);
    Matrix moved = (p * rot).rowwise() + RowVector::Constant(2, 4.0);
    CHECK((pairwise_distances(moved) - d).cwiseAbs().maxCoeff() < 1e-9);
  }

  TEST_CASE("Mantel correlation")
  {
    std::mt19937_64 rng(42);
    for (int rep = 0; rep < 20; ++rep) {
      Matrix a = oracle::random_distances(rng, 6);
      Matrix b = oracle::random_distances(rng, 6);
      MantelResult r = mantel(a, b);
      CHECK(std::abs(r.correlation - oracle::spearman(a, b)) < 1e-12);
      CHECK(r.n_pairs == 15);
      CHECK(mantel(b, a).correlation == r.correlation);
      CHECK(std::abs(mantel(a, b, MantelMethod::pearson).correlation - oracle::pearson(oracle::upper(a), oracle::upper(b))) < 1e-12);
      CHECK(mantel(a, a).correlation == 1.0);
      CHECK(mantel(a, a.cwiseProduct(a)).correlation == 1.0);
      Matrix ex = a.array().exp().matrix();
      ex.diagonal().setZero();
      CHECK(mantel(ex, b).correlation == r.correlation);
    }
  }

  TEST_CASE("Mantel ties and errors")
  {
    Matrix a(4, 4), b(4, 4);
    a << 0, 1, 1, 2, 1, 0, 2, 2, 1, 2, 0, 3, 2, 2, 3, 0;
    b << 0, 5, 4, 4, 5, 0, 1, 2, 4, 1, 0, 3, 4, 2, 3, 0;
    CHECK(std::abs(mantel(a, b).correlation - oracle::spearman(a, b)) < 1e-12);
    CHECK(average_ranks(std::vector<double>{3, 1, 3, 2}) == std::vector<double>{3.5, 1, 3.5, 2});
    Matrix flat = Matrix::Ones(4, 4);
    flat.diagonal().setZero();
    CHECK_THROWS_AS(mantel(a, flat), Error);
    Matrix asym = a;
    asym(0, 1) = 9;
    CHECK_THROWS_AS(mantel(asym, b), Error);
    CHECK_THROWS_AS(mantel(a, Matrix::Zero(3, 3)), Error);
  }

  TEST_CASE("Mantel permutation p-value")
  {
    std::mt19937_64 rng(43);
    Matrix a = oracle::random_distances(rng, 8);
    MantelResult same = mantel(a, a, MantelMethod::spearman, 99, 1);
    REQUIRE(same.permutation_p);
    CHECK(*same.permutation_p < 0.05);
    MantelResult r1 = mantel(a, oracle::random_distances(rng, 8), MantelMethod::spearman, 50, 7);
    Matrix b = oracle::random_distances(rng, 8);
    CHECK(mantel(a, b, MantelMethod::spearman, 50, 7).permutation_p == mantel(a, b, MantelMethod::spearman, 50, 7).permutation_p);
    CHECK(*r1.permutation_p > 0.0);
    CHECK(*r1.permutation_p <= 1.0);
    CHECK_FALSE(mantel(a, b).permutation_p);
  }

  TEST_CASE("variant labels")
  {
    VariantKey k = parse_variant_key("RF-PRN-PRO(20%)");
    CHECK(k.variant == Variant::rf_prn_pro);
    CHECK(*k.fraction == doctest::Approx(0.2));
    CHECK(k.label() == "RF-PRN-PRO(20%)");
    CHECK(parse_variant_key("rf-grae").label() == "RF-GRAE");
    CHECK_THROWS_AS(parse_variant_key("RF-PRN-PRO"), Error);
    CHECK_THROWS_AS(parse_variant_key("RF-PRN(10%)"), Error);
  }

  TEST_CASE("cell plan")
  {
    ExperimentConfig cfg;
    cfg.datasets = {{"x", "x.csv", "y"}, {"z", "z.csv", "y"}};
    cfg.n_seeds = 2;
    auto plan = plan_cells(cfg);
    CHECK(plan.size() == 2 * 2 * (4 + 3) * 3);
    CHECK(plan.front().variant.label() == "RF-GRAE");
    cfg.variants = {Variant::rf_prn};
    cfg.datasets.resize(1);
    cfg.n_seeds = 1;
    cfg.lambdas = {1.0};
    CHECK(plan_cells(cfg).size() == 1);
    cfg.variants.clear();
    CHECK_THROWS_AS(plan_cells(cfg), Error);
  }

  TEST_CASE("aggregates")
  {
    ExperimentReport r = sample_report();
    const AggregateRow* prn = r.find("RF-PRN");
    REQUIRE(prn);
    CHECK(prn->mean == doctest::Approx(0.85));
    CHECK(prn->std == doctest::Approx(0.05));
    const AggregateRow* grae = r.find("RF-GRAE");
    CHECK(grae->cells == 1);
    CHECK(grae->failures == 1);
    CHECK(grae->mean == 0.5);
    CHECK(r.find("RF-PRN-PRO")->cells == 4);
    CHECK(r.find("RF-PRN-PRO", std::nullopt, 0.5)->mean == doctest::Approx(0.8));
    CHECK(r.find("RF-PRN", 10.0)->mean == 0.9);
    CHECK(r.failed_cells() == 1);
    CHECK_NOTHROW(r.verify());
    r.by_variant[0].mean += 1e-9;
    CHECK_THROWS_AS(r.verify(), Error);
  }

  TEST_CASE("report files round trip")
  {
    ExperimentReport r = sample_report();
    fs::path dir = fs::temp_directory_path() / "rfphate_eval_tests";
    fs::create_directories(dir);
    write_cells_csv(r, dir / "cells.csv");
    std::ofstream(dir / "agg.json") << aggregates_json(r).dump();
    ExperimentReport back = load_report(dir / "cells.csv", dir / "agg.json");
    REQUIRE(back.cells.size() == r.cells.size());
    CHECK(back.cells[3].error == "boom, with a comma");
    CHECK(back.cells[4].variant == r.cells[4].variant);
    CHECK(back.find("RF-PRN")->mean == r.find("RF-PRN")->mean);

    auto j = aggregates_json(r);
    j["by_variant"][0]["mean"] = 0.123;
    std::ofstream(dir / "bad.json") << j.dump();
    CHECK_THROWS_AS(load_report(dir / "cells.csv", dir / "bad.json"), Error);

    std::string table = format_table(r);
    CHECK(table.find("RF-PRN-PRO") != std::string::npos);
    CHECK(table.find("0.850 +- 0.050") != std::string::npos);
  }

  TEST_CASE("timing ratio")
  {
    ExperimentReport r = sample_report();
    VariantKey prn{Variant::rf_prn, std::nullopt};
    VariantKey pro{Variant::rf_prn_pro, 0.1};
    CHECK(timing_ratio(r, prn, prn) == 1.0);
    CHECK(timing_ratio(r, pro, prn) == doctest::Approx((0.5 + 0.75) / 2));
    CHECK_THROWS_AS(timing_ratio(r, pro, VariantKey{Variant::rf_prox_in, std::nullopt}), Error);
  }

  TEST_CASE("small experiment")
  {
    ExperimentConfig cfg;
    cfg.datasets = {{"iris", RFPHATE_DATA_DIR "/iris.csv", "species"}};
    cfg.variants = {Variant::rf_prn};
    cfg.lambdas = {1.0};
    cfg.n_seeds = 1;
    cfg.forest.n_trees = 40;
    cfg.ae.arch = {{16}, 2};
    cfg.ae.train = {.epochs = 10, .batch_size = 32};
    int seen = 0;
    ExperimentReport r = run_experiment(cfg, [&](const CellRecord&) { ++seen; });
    REQUIRE(r.cells.size() == 1);
    CHECK(seen == 1);
    REQUIRE(r.cells[0].mantel);
    CHECK(r.by_variant.size() == 1);
    CHECK(r.by_variant[0].mean == *r.cells[0].mantel);
    CHECK(r.cells[0].fit_seconds > 0.0);

    cfg.datasets.push_back({"ghost", "/nonexistent/ghost.csv", "y"});
    ExperimentReport partial = run_experiment(cfg);
    CHECK(partial.cells.size() == 2);
    CHECK(partial.failed_cells() == 1);
    CHECK(partial.cells[1].error.find("ghost") != std::string::npos);
  }

  TEST_CASE("experiment config file")
  {
    fs::path dir = fs::temp_directory_path() / "rfphate_eval_cfg";
    fs::create_directories(dir);
    std::ofstream(dir / "exp.json") << R"({"datasets": [{"path": "d/iris.csv", "label": "species"}],
      "variants": ["rf-prn", "RF-PRN-PRO"], "lambdas": [5], "n_seeds": 3,
      "forest": {"n_trees": 7}, "embed": {"t": "auto", "k": 3}, "ae": {"lambda": 2, "train": {"epochs": 4}}})";
    ExperimentConfig cfg = load_experiment_config(dir / "exp.json");
    CHECK(cfg.datasets[0].path == dir / "d/iris.csv");
    CHECK(cfg.datasets[0].name == "iris");
    CHECK(cfg.variants.size() == 2);
    CHECK(cfg.forest.n_trees == 7);
    CHECK(cfg.embed.k_dim == 3);
    CHECK_FALSE(cfg.embed.t);
    CHECK(cfg.ae.train.epochs == 4);
    CHECK(plan_cells(cfg).size() == 3 * (1 + 3));
  }
}
