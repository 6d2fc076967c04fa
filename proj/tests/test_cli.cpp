#include "rfphate/data.hpp"
#include "rfphate/embed.hpp"

#include <doctest.h>
#include <json.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

const std::string kData = RFPHATE_DATA_DIR;

int run(const std::string& args, const fs::path& log = {})
{
  std::string cmd = std::string(RFPHATE_CLI) + " " + args;
  cmd += log.empty() ? " > /dev/null 2>&1" : " > " + log.string() + " 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string slurp(const fs::path& p)
{
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

nlohmann::json read_json(const fs::path& p)
{
  return nlohmann::json::parse(slurp(p));
}

fs::path fresh_dir(const std::string& name)
{
  fs::path dir = fs::temp_directory_path() / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_SUITE("cli")
{
  TEST_CASE("fit is reproducible and validates its flags")
  {
    fs::path dir = fresh_dir("rfphate_cli_fit");
    std::string args = "fit --data " + kData + "/iris.csv --label species --trees 100 --seed 7 --out-dir " + dir.string();
    REQUIRE(run(args, dir / "log.txt") == 0);
    CHECK(fs::exists(dir / "forest.json"));
    CHECK(fs::exists(dir / "prox.csv"));
    CHECK(slurp(dir / "log.txt").find("OOB accuracy") != std::string::npos);
    std::string first = slurp(dir / "forest.json");
    REQUIRE(run(args) == 0);
    CHECK(slurp(dir / "forest.json") == first);

    // The sidecar alone reproduces the run.
    fs::copy_file(dir / "fit.meta.json", dir / "replay.json");
    fs::remove(dir / "forest.json");
    REQUIRE(run("fit --config " + (dir / "replay.json").string()) == 0);
    CHECK(slurp(dir / "forest.json") == first);

    CHECK(run("fit --data " + kData + "/iris.csv --label species --trees 0") == 2);
    CHECK(run("fit --bogus") == 2);
    CHECK(run("") == 2);
    CHECK(run("fit --data /nonexistent.csv --label y --out-dir " + dir.string()) == 1);
    CHECK(run("--help") == 0);
  }

  TEST_CASE("embed, train-ae and extend")
  {
    fs::path dir = fresh_dir("rfphate_cli_pipeline");
    std::string out = " --out-dir " + dir.string();
    REQUIRE(run("fit --data " + kData + "/iris.csv --label species --trees 60 --seed 3" + out) == 0);

    REQUIRE(run("embed --k 2 --t 8" + out) == 0);
    CHECK(read_json(dir / "embed.meta.json")["results"]["t"] == 8);
    REQUIRE(run("embed --k 2 --t auto" + out) == 0);
    auto meta = read_json(dir / "embed.meta.json");
    CHECK(meta["results"]["t_auto"] == true);
    CHECK(meta["results"]["t"].get<int>() >= 1);
    rfphate::Matrix e = rfphate::read_embedding_csv(dir / "embedding.csv");
    CHECK(e.rows() == 150);
    CHECK(e.cols() == 2);
    CHECK(slurp(dir / "embedding.csv").rfind("index,dim_0,dim_1\n", 0) == 0);
    CHECK(run("embed --t 0" + out) == 2);

    REQUIRE(run("train-ae --variant rf-prn --lambda 10 --epochs 5 --batch-size 32" + out) == 0);
    auto model = read_json(dir / "model.json");
    CHECK(model["lambda"] == 10.0);
    CHECK(model["variant"] == "RF-PRN");
    CHECK(run("train-ae --variant rf-nope" + out) == 2);

    // Unlabeled points: strip the label column.
    rfphate::Dataset ds = rfphate::load_csv(kData + "/iris.csv", "species");
    {
      std::ofstream csv(dir / "unlabeled.csv");
      for (std::size_t j = 0; j < ds.feature_names.size(); ++j) csv << (j ? "," : "") << ds.feature_names[j];
      csv << '\n';
      for (rfphate::Index i = 0; i < 10; ++i) {
        for (rfphate::Index j = 0; j < ds.cols(); ++j) csv << (j ? "," : "") << rfphate::format_real(ds.features(i, j));
        csv << '\n';
      }
    }
    REQUIRE(run("extend --data " + (dir / "unlabeled.csv").string() + out) == 0);
    rfphate::Matrix ext = rfphate::read_embedding_csv(dir / "extension.csv");
    CHECK(ext.rows() == 10);
    CHECK(ext.cols() == 2);

    // Raw-feature encoders reproduce their training latents on the training file.
    REQUIRE(run("train-ae --variant rf-grae --lambda 1 --epochs 5" + out) == 0);
    REQUIRE(run("extend --data " + kData + "/iris.csv --out " + (dir / "self.csv").string() + out) == 0);
    rfphate::Matrix self = rfphate::read_embedding_csv(dir / "self.csv");
    rfphate::Matrix latent = rfphate::read_embedding_csv(dir / "train_latent.csv");
    CHECK(self == latent);

    CHECK(run("extend --data " + kData + "/wine.csv" + out) == 1);
  }

  TEST_CASE("benchmark")
  {
    fs::path dir = fresh_dir("rfphate_cli_bench");
    std::ofstream(dir / "exp.json") << R"({"datasets": [{"name": "iris", "path": ")" << kData
                                     << R"(/iris.csv", "label": "species"}],
      "variants": ["rf-prn"], "lambdas": [1], "n_seeds": 1,
      "forest": {"n_trees": 40}, "ae": {"architecture": {"hidden": [16]}, "train": {"epochs": 5, "batch_size": 32}}})";
    std::string cfg = " --config " + (dir / "exp.json").string();
    REQUIRE(run("benchmark --dry-run" + cfg, dir / "plan.txt") == 0);
    CHECK(slurp(dir / "plan.txt").find("1 cells") != std::string::npos);
    CHECK_FALSE(fs::exists(dir / "out" / "cells.csv"));

    REQUIRE(run("benchmark" + cfg + " --out-dir " + (dir / "out").string()) == 0);
    CHECK(fs::exists(dir / "out" / "cells.csv"));
    auto agg = read_json(dir / "out" / "aggregates.json");
    CHECK(agg["by_variant"].size() == 1);
    CHECK(slurp(dir / "out" / "table.txt").find("RF-PRN") != std::string::npos);

    CHECK(run("benchmark --dry-run --config " + (dir / "nope.json").string()) == 2);
  }
}
