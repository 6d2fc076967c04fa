// rfphate: fit / embed / train-ae / extend / benchmark.
//
// Every command writes a <command>.meta.json sidecar holding its effective
// settings; passing that file back through --config reruns the command.

#include "rfphate/autoencoder.hpp"
#include "rfphate/data.hpp"
#include "rfphate/embed.hpp"
#include "rfphate/eval.hpp"
#include "rfphate/forest.hpp"
#include "rfphate/proximity.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <chrono>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <numeric>

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rfphate;

namespace {

struct RunConfig
{
  std::string data;
  std::string label;
  fs::path out_dir = ".";
  std::string model;
  std::string out;
  ForestParams forest;
  DiffusionConfig embed;
  Variant variant = Variant::rf_prn;
  ExtensionOptions ae;
};

json to_json(const RunConfig& c)
{
  return {{"io", {{"data", c.data}, {"label", c.label}, {"out_dir", c.out_dir.string()}, {"model", c.model}, {"out", c.out}}},
          {"forest", c.forest},
          {"embed", c.embed},
          {"ae", {{"variant", to_string(c.variant)}, {"options", c.ae}}}};
}

void merge(RunConfig& c, const json& j)
{
  if (j.contains("io")) {
    const auto& io = j.at("io");
    c.data = io.value("data", c.data);
    c.label = io.value("label", c.label);
    c.out_dir = io.value("out_dir", c.out_dir.string());
    c.model = io.value("model", c.model);
    c.out = io.value("out", c.out);
  }
  if (j.contains("forest")) j.at("forest").get_to(c.forest);
  if (j.contains("embed")) j.at("embed").get_to(c.embed);
  if (j.contains("ae")) {
    const auto& ae = j.at("ae");
    if (ae.contains("variant")) c.variant = parse_variant(ae.at("variant").get<std::string>());
    if (ae.contains("options")) ae.at("options").get_to(c.ae);
  }
}

json read_json(const fs::path& path)
{
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw Error("'" + path.string() + "': " + e.what());
  }
}

void write_json(const json& j, const fs::path& path)
{
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << j.dump(2) << '\n';
}

void write_sidecar(const RunConfig& cfg, std::string_view command, json results)
{
  json j = to_json(cfg);
  j["command"] = command;
  j["results"] = std::move(results);
  write_json(j, cfg.out_dir / (std::string(command) + ".meta.json"));
}

std::vector<Index> all_rows(Index n)
{
  std::vector<Index> rows(static_cast<std::size_t>(n));
  std::iota(rows.begin(), rows.end(), Index{0});
  return rows;
}

double seconds_since(std::chrono::steady_clock::time_point start)
{
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// Flags shared by the pipeline commands. Values land in `cfg` only when the
// flag was given, after any --config file has been merged.
struct Flags
{
  std::string config;
  std::string data, label, out_dir, model, out;
  int trees = 0, epochs = 0, k = 0, jobs = 0, batch_size = 0;
  std::uint64_t seed = 0;
  std::string t;
  std::string variant, self_sim;
  double lambda = 0.0, proto_frac = 0.0, lr = 0.0;
  std::multimap<std::string, CLI::Option*> opts;  // one entry per subcommand using the flag

  bool has(const std::string& name) const
  {
    auto [lo, hi] = opts.equal_range(name);
    return std::any_of(lo, hi, [](const auto& kv) { return kv.second->count() > 0; });
  }
};

void add_flag(CLI::App* app, Flags& f, const std::string& name)
{
  CLI::Option* o = nullptr;
  if (name == "config") o = app->add_option("--config", f.config, "JSON settings; flags override it")->check(CLI::ExistingFile);
  else if (name == "data") o = app->add_option("--data", f.data, "CSV dataset");
  else if (name == "label") o = app->add_option("--label", f.label, "label column");
  else if (name == "out-dir") o = app->add_option("--out-dir", f.out_dir, "artifact directory");
  else if (name == "model") o = app->add_option("--model", f.model, "model file (default <out-dir>/model.json)");
  else if (name == "out") o = app->add_option("--out", f.out, "output CSV (default <out-dir>/extension.csv)");
  else if (name == "trees") o = app->add_option("--trees", f.trees, "number of trees")->check(CLI::PositiveNumber);
  else if (name == "seed") o = app->add_option("--seed", f.seed, "random seed");
  else if (name == "k") o = app->add_option("--k", f.k, "embedding dimension")->check(CLI::PositiveNumber);
  else if (name == "t") {
    o = app->add_option("--t", f.t, "diffusion time or 'auto'")->check([](const std::string& s) -> std::string {
      if (s == "auto") return {};
      try {
        std::size_t used = 0;
        if (std::stoi(s, &used) >= 1 && used == s.size()) return {};
      } catch (const std::exception&) {
      }
      return "--t takes a positive integer or 'auto'";
    });
  }
  else if (name == "variant") {
    o = app->add_option("--variant", f.variant, "rf-grae, rf-prox-in, rf-prox-reg, rf-prn or rf-prn-pro")
            ->check([](const std::string& s) -> std::string {
              try {
                parse_variant(s);
                return {};
              } catch (const Error& e) {
                return e.what();
              }
            });
  }
  else if (name == "lambda") o = app->add_option("--lambda", f.lambda, "geometric loss weight")->check(CLI::NonNegativeNumber);
  else if (name == "proto-frac") o = app->add_option("--proto-frac", f.proto_frac, "prototype fraction per class")->check(CLI::Range(1e-9, 1.0));
  else if (name == "epochs") o = app->add_option("--epochs", f.epochs, "training epochs")->check(CLI::NonNegativeNumber);
  else if (name == "batch-size") o = app->add_option("--batch-size", f.batch_size, "mini-batch size")->check(CLI::PositiveNumber);
  else if (name == "lr") o = app->add_option("--lr", f.lr, "learning rate")->check(CLI::PositiveNumber);
  else if (name == "jobs") o = app->add_option("--jobs", f.jobs, "worker threads")->check(CLI::PositiveNumber);
  else if (name == "self-sim") o = app->add_option("--self-sim", f.self_sim, "proximity diagonal: zero or passdown")->check(CLI::IsMember({"zero", "passdown"}));
  f.opts.emplace(name, o);
}

RunConfig resolve(const Flags& f)
{
  RunConfig c;
  if (!f.config.empty()) merge(c, read_json(f.config));
  if (f.has("data")) c.data = f.data;
  if (f.has("label")) c.label = f.label;
  if (f.has("out-dir")) c.out_dir = f.out_dir;
  if (f.has("model")) c.model = f.model;
  if (f.has("out")) c.out = f.out;
  if (f.has("trees")) c.forest.n_trees = f.trees;
  if (f.has("seed")) {
    c.forest.seed = f.seed;
    c.embed.seed = f.seed;
    c.ae.train.seed = f.seed;
  }
  if (f.has("k")) {
    c.embed.k_dim = f.k;
    c.ae.arch.bottleneck = f.k;
  }
  if (f.has("t")) c.embed.t = f.t == "auto" ? std::nullopt : std::optional<int>(std::stoi(f.t));
  if (f.has("variant")) c.variant = parse_variant(f.variant);
  if (f.has("lambda")) c.ae.lambda = f.lambda;
  if (f.has("proto-frac")) c.ae.proto_fraction = f.proto_frac;
  if (f.has("epochs")) c.ae.train.epochs = f.epochs;
  if (f.has("batch-size")) c.ae.train.batch_size = f.batch_size;
  if (f.has("lr")) c.ae.train.learning_rate = f.lr;
  if (f.has("jobs")) c.forest.threads = f.jobs;
  if (f.has("self-sim")) c.ae.self_similarity = parse_self_similarity(f.self_sim);
  if (c.forest.n_trees < 1) throw Error("forest.n_trees must be at least 1");
  fs::create_directories(c.out_dir);
  return c;
}

Dataset load_training(RunConfig& c)
{
  if (c.data.empty() || c.label.empty()) {
    // Fall back to the dataset the forest was fit on.
    fs::path meta = c.out_dir / "fit.meta.json";
    if (!fs::exists(meta)) throw Error("--data and --label are required");
    const auto io = read_json(meta).at("io");
    if (c.data.empty()) c.data = io.at("data").get<std::string>();
    if (c.label.empty()) c.label = io.at("label").get<std::string>();
  }
  Dataset ds = load_csv(c.data, c.label);
  ds.validate();
  return ds;
}

int cmd_fit(Flags& f)
{
  RunConfig c = resolve(f);
  auto start = std::chrono::steady_clock::now();
  Dataset ds = load_training(c);
  Forest forest = fit_forest(ds, all_rows(ds.rows()), c.forest);
  save_forest(forest, c.out_dir / "forest.json");
  write_proximity_csv(train_proximities(forest, c.ae.self_similarity).values, c.out_dir / "prox.csv");
  double oob = oob_accuracy(forest);
  std::cout << "OOB accuracy: " << oob << " (" << forest.trees.size() << " trees, " << ds.rows() << " rows)\n";
  write_sidecar(c, "fit", {{"oob_accuracy", std::isnan(oob) ? json(nullptr) : json(oob)},
                           {"n_train", ds.rows()},
                           {"n_features", ds.cols()},
                           {"classes", ds.class_names},
                           {"seconds", seconds_since(start)}});
  return 0;
}

int cmd_embed(Flags& f)
{
  RunConfig c = resolve(f);
  auto start = std::chrono::steady_clock::now();
  Forest forest = load_forest(c.out_dir / "forest.json");
  if (f.has("jobs")) forest.params.threads = c.forest.threads;
  EmbedResult r = rfphate_embed(forest, c.embed);
  write_embedding_csv(r.embedding, all_rows(r.embedding.coords.rows()), c.out_dir / "embedding.csv");
  json meta = embed_metadata(r, c.embed);
  meta["seconds"] = seconds_since(start);
  write_sidecar(c, "embed", meta);
  std::cout << "embedded " << r.embedding.coords.rows() << " points in " << r.embedding.k() << " dimensions, t = " << r.t
            << (r.t_auto ? " (auto)" : "") << ", normalized stress " << r.mds.normalized_stress << '\n';
  return 0;
}

int cmd_train_ae(Flags& f)
{
  RunConfig c = resolve(f);
  Dataset ds = load_training(c);
  Forest forest = load_forest(c.out_dir / "forest.json");
  if (f.has("jobs")) forest.params.threads = c.forest.threads;
  Matrix geometry = read_embedding_csv(c.out_dir / "embedding.csv");
  if (forest.n_train != ds.rows() || geometry.rows() != ds.rows()) {
    throw Error("dataset, forest and embedding disagree on the number of training rows");
  }
  if (!f.has("k")) c.ae.arch.bottleneck = static_cast<int>(geometry.cols());

  FittedExtension fit = fit_extension(c.variant, ds, forest, geometry, c.ae);
  fs::path model_path = c.model.empty() ? c.out_dir / "model.json" : fs::path(c.model);
  save_model(fit.model, model_path);
  write_embedding_csv({fit.train_latent, Embedding::Source::encoder}, all_rows(ds.rows()), c.out_dir / "train_latent.csv");
  write_sidecar(c, "train_ae", {{"model", model_path.string()},
                                {"variant", to_string(c.variant)},
                                {"lambda", c.ae.lambda},
                                {"final_loss",
                                 {{"total", fit.final_loss.total},
                                  {"recon", fit.final_loss.recon},
                                  {"geom", fit.final_loss.geom},
                                  {"prox", fit.final_loss.prox}}},
                                {"seconds", fit.training.seconds}});
  std::cout << to_string(c.variant) << ": loss " << fit.final_loss.total << " (recon " << fit.final_loss.recon
            << ", geom " << fit.final_loss.geom << ") in " << fit.training.seconds << " s\n";
  return 0;
}

int cmd_extend(Flags& f)
{
  RunConfig c = resolve(f);
  if (c.data.empty()) throw Error("--data is required");
  fs::path model_path = c.model.empty() ? c.out_dir / "model.json" : fs::path(c.model);
  AEModel model = load_model(model_path);
  Forest forest = load_forest(c.out_dir / "forest.json");
  if (f.has("jobs")) forest.params.threads = c.forest.threads;
  Matrix points = load_features(c.data, model.schema);
  Embedding e = extend(model, forest, points);
  fs::path out = c.out.empty() ? c.out_dir / "extension.csv" : fs::path(c.out);
  write_embedding_csv(e, all_rows(points.rows()), out);
  write_sidecar(c, "extend", {{"model", model_path.string()}, {"points", points.rows()}, {"output", out.string()}});
  std::cout << "extended " << points.rows() << " points with " << to_string(model.variant) << '\n';
  return 0;
}

int cmd_benchmark(Flags& f, bool dry_run)
{
  if (f.config.empty()) throw Error("--config is required");
  ExperimentConfig cfg = load_experiment_config(f.config);
  if (f.has("trees")) cfg.forest.n_trees = f.trees;
  if (f.has("epochs")) cfg.ae.train.epochs = f.epochs;
  if (f.has("jobs")) cfg.jobs = f.jobs;
  if (f.has("seed")) cfg.seed_base = f.seed;
  if (f.has("k")) {
    cfg.embed.k_dim = f.k;
    cfg.ae.arch.bottleneck = f.k;
  }
  if (f.has("lambda")) cfg.lambdas = {f.lambda};
  if (f.has("variant")) cfg.variants = {parse_variant(f.variant)};
  if (f.has("proto-frac")) cfg.proto_fractions = {f.proto_frac};

  auto plan = plan_cells(cfg);
  if (dry_run) {
    for (const auto& p : plan) {
      std::cout << cfg.datasets[p.dataset].name << " seed=" << p.seed << " " << p.variant.label()
                << " lambda=" << format_real(p.lambda) << '\n';
    }
    std::cout << plan.size() << " cells\n";
    return 0;
  }

  fs::path out_dir = f.has("out-dir") ? fs::path(f.out_dir) : fs::path(".");
  fs::create_directories(out_dir);
  std::size_t done = 0;
  ExperimentReport report = run_experiment(cfg, [&](const CellRecord& r) {
    ++done;
    std::cerr << '[' << done << '/' << plan.size() << "] " << r.dataset << " seed=" << r.seed << ' ' << r.variant.label()
              << " lambda=" << format_real(r.lambda) << ": ";
    if (r.mantel) std::cerr << "mantel " << *r.mantel << ", " << r.fit_seconds << " s\n";
    else std::cerr << "FAILED: " << r.error << '\n';
  });
  write_cells_csv(report, out_dir / "cells.csv");
  write_json(aggregates_json(report), out_dir / "aggregates.json");
  std::string table = format_table(report);
  std::ofstream(out_dir / "table.txt") << table;
  json meta = cfg;
  meta["command"] = "benchmark";
  write_json(meta, out_dir / "benchmark.meta.json");
  load_report(out_dir / "cells.csv", out_dir / "aggregates.json");
  std::cout << table;

  Index failed = report.failed_cells();
  if (failed > 0) std::cerr << failed << " of " << report.cells.size() << " cells failed\n";
  return failed == static_cast<Index>(report.cells.size()) ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv)
{
  CLI::App app{"Random-forest geometry embeddings and their autoencoder extensions"};
  app.require_subcommand(1);
  Flags f;
  bool dry_run = false;

  auto* fit = app.add_subcommand("fit", "fit a forest, write forest.json and prox.csv");
  for (auto n : {"config", "data", "label", "out-dir", "trees", "seed", "jobs", "self-sim"}) add_flag(fit, f, n);
  auto* embed = app.add_subcommand("embed", "embed the forest's training points");
  for (auto n : {"config", "out-dir", "k", "t", "seed", "jobs"}) add_flag(embed, f, n);
  auto* train_ae = app.add_subcommand("train-ae", "train an extension network on the embedding");
  for (auto n : {"config", "data", "label", "out-dir", "model", "variant", "lambda", "proto-frac", "epochs", "batch-size",
                 "lr", "k", "seed", "jobs", "self-sim"}) {
    add_flag(train_ae, f, n);
  }
  auto* ext = app.add_subcommand("extend", "map unlabeled points into the embedding");
  for (auto n : {"config", "data", "out-dir", "model", "out", "jobs"}) add_flag(ext, f, n);
  auto* bench = app.add_subcommand("benchmark", "run an experiment grid and write reports");
  for (auto n : {"config", "out-dir", "trees", "epochs", "seed", "k", "lambda", "variant", "proto-frac", "jobs"}) add_flag(bench, f, n);
  bench->add_flag("--dry-run", dry_run, "print the cell plan and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (fit->parsed()) return cmd_fit(f);
    if (embed->parsed()) return cmd_embed(f);
    if (train_ae->parsed()) return cmd_train_ae(f);
    if (ext->parsed()) return cmd_extend(f);
    if (bench->parsed()) return cmd_benchmark(f, dry_run);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
