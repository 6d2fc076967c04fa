#include "rfphate/data.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>

namespace fs = std::filesystem;
using namespace rfphate;

namespace {

fs::path write_temp(const std::string& name, const std::string& text)
{
  fs::path dir = fs::temp_directory_path() / "rfphate_data_tests";
  fs::create_directories(dir);
  fs::path p = dir / name;
  std::ofstream(p) << text;
  return p;
}

}  // namespace

TEST_SUITE("data")
{
  TEST_CASE("numeric and categorical columns")
  {
    auto p = write_temp("mixed.csv", "\xEF\xBB\xBFx,colour,y\n1.5,red,b\n2,\"blue, dark\",a\n-3e-1,red,b\n");
    Dataset ds = load_csv(p, "y");
    REQUIRE(ds.rows() == 3);
    REQUIRE(ds.cols() == 3);
    CHECK(ds.feature_names == std::vector<std::string>{"x", "colour=red", "colour=blue, dark"});
    CHECK(ds.class_names == std::vector<std::string>{"b", "a"});
    CHECK(ds.labels == std::vector<int>{0, 1, 0});
    CHECK(ds.features(2, 0) == -0.3);
    CHECK(ds.features(1, 2) == 1.0);
    CHECK(ds.features(1, 1) == 0.0);
    CHECK(ds.schema[1].categorical);
  }

  TEST_CASE("bad cells name their row and column")
  {
    auto p = write_temp("bad.csv", "x,z,y\n1,2,a\n2,oops,b\n3,4,a\n");
    try {
      load_csv(p, "y");
      FAIL("expected an error");
    } catch (const Error& e) {
      std::string msg = e.what();
      CHECK(msg.find("'z'") != std::string::npos);
      CHECK(msg.find("row 2") != std::string::npos);
    }
    CHECK_THROWS_AS(load_csv(write_temp("inf.csv", "x,y\n1,a\ninf,b\n"), "y"), Error);
    CHECK_THROWS_AS(load_csv(write_temp("nolabel.csv", "x,z\n1,2\n3,4\n"), "y"), Error);
    CHECK_THROWS_AS(load_csv(write_temp("short.csv", "x,y\n1,a\n2\n"), "y"), Error);
    CHECK_THROWS_AS(load_csv(write_temp("one.csv", "x,y\n1,a\n"), "y"), Error);
  }

  TEST_CASE("load_features skips the label column and zeroes unseen levels")
  {
    Dataset ds = load_csv(write_temp("train.csv", "c,x,y\nu,1,a\nv,2,b\n"), "y");
    Matrix f = load_features(write_temp("new.csv", "x,c\n5,v\n6,w\n"), ds.schema);
    REQUIRE(f.rows() == 2);
    REQUIRE(f.cols() == 3);
    CHECK(f.row(0) == (RowVector(3) << 0, 1, 5).finished());
    CHECK(f.row(1) == (RowVector(3) << 0, 0, 6).finished());
    CHECK_THROWS_AS(load_features(write_temp("missing.csv", "x\n1\n"), ds.schema), Error);
  }

  TEST_CASE("stratified split is a seeded partition")
  {
    Dataset ds = load_csv(RFPHATE_DATA_DIR "/iris.csv", "species");
    Split a = split(ds, {0.7, 5, true});
    Split b = split(ds, {0.7, 5, true});
    Split c = split(ds, {0.7, 6, true});
    CHECK(a.train == b.train);
    CHECK(a.train != c.train);
    CHECK(a.train.size() == 105);
    std::set<Index> all(a.train.begin(), a.train.end());
    all.insert(a.test.begin(), a.test.end());
    CHECK(all.size() == 150);
    std::vector<int> per_class(3, 0);
    for (Index i : a.train) ++per_class[static_cast<std::size_t>(ds.labels[static_cast<std::size_t>(i)])];
    CHECK(per_class == std::vector<int>{35, 35, 35});
    CHECK(std::is_sorted(a.test.begin(), a.test.end()));
    CHECK_THROWS_AS(split(ds, {0.0, 1, true}), Error);
  }

  TEST_CASE("singleton class cannot be stratified")
  {
    Dataset ds = load_csv(write_temp("single.csv", "x,y\n1,a\n2,a\n3,b\n"), "y");
    CHECK_THROWS_AS(split(ds, {0.5, 0, true}), Error);
    CHECK_NOTHROW(split(ds, {0.5, 0, false}));
  }

  TEST_CASE("standardization uses training rows only")
  {
    Dataset ds = load_csv(write_temp("std.csv", "x,k,y\n1,7,a\n3,7,b\n100,7,a\n"), "y");
    std::vector<Index> train{0, 1};
    auto [scaled, s] = standardize(ds, train);
    CHECK(s.mean(0) == 2.0);
    CHECK(s.scale(0) == 1.0);
    CHECK(s.scale(1) == 1.0);  // constant column
    CHECK(scaled.features(0, 0) == -1.0);
    CHECK(scaled.features(2, 0) == 98.0);
    CHECK(scaled.features(2, 1) == 0.0);
  }

  TEST_CASE("shortest round-trip formatting")
  {
    for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.0, 0.0}) CHECK(std::stod(format_real(v)) == v);
    CHECK(format_real(0.1) == "0.1");
  }

  TEST_CASE("write_csv round trip")
  {
    Dataset ds = load_csv(RFPHATE_DATA_DIR "/wine.csv", "cultivar");
    auto p = fs::temp_directory_path() / "rfphate_data_tests" / "wine_copy.csv";
    write_csv(ds, p, "cultivar");
    Dataset back = load_csv(p, "cultivar");
    CHECK(back.features == ds.features);
    CHECK(back.labels == ds.labels);
  }
}
