#include "rfphate/eval.hpp"

#include "rfphate/data.hpp"
#include "rfphate/proximity.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <mutex>
#include <numeric>
#include <random>
#include <sstream>

namespace rfphate {

Matrix pairwise_distances(const Matrix& coords)
{
  const Index n = coords.rows();
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      double v = (coords.row(i) - coords.row(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

Matrix pairwise_distances(const Embedding& e)
{
  return pairwise_distances(e.coords);
}

MantelMethod parse_mantel_method(std::string_view text)
{
  if (text == "spearman") return MantelMethod::spearman;
  if (text == "pearson") return MantelMethod::pearson;
  throw Error("unknown Mantel method '" + std::string(text) + "'");
}

std::string_view to_string(MantelMethod m)
{
  return m == MantelMethod::spearman ? "spearman" : "pearson";
}

std::vector<double> average_ranks(std::span<const double> values)
{
  std::vector<std::size_t> order(values.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
  std::vector<double> ranks(values.size());
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j + 1 < order.size() && values[order[j + 1]] == values[order[i]]) ++j;
    double rank = (static_cast<double>(i) + static_cast<double>(j)) / 2.0 + 1.0;
    for (std::size_t k = i; k <= j; ++k) ranks[order[k]] = rank;
    i = j + 1;
  }
  return ranks;
}

namespace {

void check_distance_matrix(const Matrix& d, const char* name)
{
  if (d.rows() != d.cols()) throw Error(std::string(name) + " is not square");
  for (Index i = 0; i < d.rows(); ++i) {
    if (d(i, i) != 0.0) throw Error(std::string(name) + " has a nonzero diagonal at " + std::to_string(i));
    for (Index j = i + 1; j < d.cols(); ++j) {
      if (!std::isfinite(d(i, j))) throw Error(std::string(name) + " has a non-finite entry");
      if (std::abs(d(i, j) - d(j, i)) > 1e-9 * std::max(1.0, std::abs(d(i, j)))) {
        throw Error(std::string(name) + " is not symmetric at (" + std::to_string(i) + ", " + std::to_string(j) + ")");
      }
    }
  }
}

std::vector<double> upper_triangle(const Matrix& d, std::span<const Index> perm = {})
{
  std::vector<double> out;
  const Index n = d.rows();
  out.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      out.push_back(perm.empty() ? d(i, j) : d(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]));
    }
  }
  return out;
}

// Centered sums in a form symmetric in (x, y), so pearson(x, x) is exactly 1.
std::optional<double> pearson(const std::vector<double>& x, const std::vector<double>& y)
{
  const double n = static_cast<double>(x.size());
  double mx = std::accumulate(x.begin(), x.end(), 0.0) / n;
  double my = std::accumulate(y.begin(), y.end(), 0.0) / n;
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    double a = x[k] - mx;
    double b = y[k] - my;
    sxy += a * b;
    sxx += a * a;
    syy += b * b;
  }
  if (sxx == 0.0 || syy == 0.0) return std::nullopt;
  return std::clamp(sxy / std::sqrt(sxx * syy), -1.0, 1.0);
}

std::vector<double> prepare(std::vector<double> v, MantelMethod method)
{
  return method == MantelMethod::spearman ? average_ranks(v) : v;
}

}  // namespace

MantelResult mantel(const Matrix& d1, const Matrix& d2, MantelMethod method, int n_permutations, std::uint64_t seed)
{
  check_distance_matrix(d1, "first distance matrix");
  check_distance_matrix(d2, "second distance matrix");
  if (d1.rows() != d2.rows()) throw Error("distance matrices differ in size");
  if (d1.rows() < 3) throw Error("Mantel test needs at least 3 points");
  if (n_permutations < 0) throw Error("permutation count must be nonnegative");

  auto x = prepare(upper_triangle(d1), method);
  auto r = pearson(x, prepare(upper_triangle(d2), method));
  if (!r) throw Error("a distance matrix has a constant upper triangle; correlation is undefined");

  MantelResult out;
  out.correlation = *r;
  out.method = method;
  out.n_pairs = static_cast<Index>(x.size());
  if (n_permutations > 0) {
    std::mt19937_64 rng(seed);
    std::vector<Index> perm(static_cast<std::size_t>(d2.rows()));
    std::iota(perm.begin(), perm.end(), Index{0});
    int at_least = 0;
    for (int p = 0; p < n_permutations; ++p) {
      std::shuffle(perm.begin(), perm.end(), rng);
      if (*pearson(x, prepare(upper_triangle(d2, perm), method)) >= out.correlation) ++at_least;
    }
    out.permutation_p = (1.0 + at_least) / (1.0 + n_permutations);
  }
  return out;
}

std::string VariantKey::label() const
{
  std::string name(to_string(variant));
  if (!fraction) return name;
  std::ostringstream os;
  os << name << '(' << std::llround(*fraction * 100.0) << "%)";
  return os.str();
}

VariantKey parse_variant_key(std::string_view text)
{
  VariantKey key;
  auto open = text.find('(');
  if (open == std::string_view::npos) {
    key.variant = parse_variant(text);
  } else {
    key.variant = parse_variant(text.substr(0, open));
    auto close = text.find("%)", open);
    if (close == std::string_view::npos) throw Error("malformed variant label '" + std::string(text) + "'");
    key.fraction = std::stod(std::string(text.substr(open + 1, close - open - 1))) / 100.0;
  }
  if (key.fraction.has_value() != (key.variant == Variant::rf_prn_pro)) {
    throw Error("a prototype fraction goes with RF-PRN-PRO and only with it: '" + std::string(text) + "'");
  }
  return key;
}

void to_json(nlohmann::json& j, const ExperimentConfig& c)
{
  nlohmann::json datasets = nlohmann::json::array();
  for (const auto& d : c.datasets) datasets.push_back({{"name", d.name}, {"path", d.path.string()}, {"label", d.label}});
  std::vector<std::string> variants;
  for (Variant v : c.variants) variants.emplace_back(to_string(v));
  j = {{"datasets", std::move(datasets)},
       {"variants", variants},
       {"lambdas", c.lambdas},
       {"proto_fractions", c.proto_fractions},
       {"n_seeds", c.n_seeds},
       {"seed_base", c.seed_base},
       {"train_fraction", c.train_fraction},
       {"forest", c.forest},
       {"embed", c.embed},
       {"ae", c.ae},
       {"jobs", c.jobs}};
}

void from_json(const nlohmann::json& j, ExperimentConfig& c)
{
  if (j.contains("datasets")) {
    c.datasets.clear();
    for (const auto& d : j.at("datasets")) {
      DatasetEntry e;
      e.path = d.at("path").get<std::string>();
      e.label = d.at("label").get<std::string>();
      e.name = d.value("name", e.path.stem().string());
      c.datasets.push_back(std::move(e));
    }
  }
  if (j.contains("variants")) {
    c.variants.clear();
    for (const auto& v : j.at("variants")) c.variants.push_back(parse_variant(v.get<std::string>()));
  }
  c.lambdas = j.value("lambdas", c.lambdas);
  c.proto_fractions = j.value("proto_fractions", c.proto_fractions);
  c.n_seeds = j.value("n_seeds", c.n_seeds);
  c.seed_base = j.value("seed_base", c.seed_base);
  c.train_fraction = j.value("train_fraction", c.train_fraction);
  if (j.contains("forest")) j.at("forest").get_to(c.forest);
  if (j.contains("embed")) j.at("embed").get_to(c.embed);
  if (j.contains("ae")) j.at("ae").get_to(c.ae);
  c.jobs = j.value("jobs", c.jobs);
}

ExperimentConfig load_experiment_config(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  ExperimentConfig cfg;
  try {
    nlohmann::json::parse(in).get_to(cfg);
  } catch (const nlohmann::json::exception& e) {
    throw Error("'" + path.string() + "': " + e.what());
  }
  for (auto& d : cfg.datasets)
    if (d.path.is_relative()) d.path = path.parent_path() / d.path;
  return cfg;
}

std::vector<CellPlan> plan_cells(const ExperimentConfig& cfg)
{
  if (cfg.variants.empty()) throw Error("experiment lists no variants");
  if (cfg.datasets.empty()) throw Error("experiment lists no datasets");
  if (cfg.lambdas.empty()) throw Error("experiment lists no lambda values");
  if (cfg.n_seeds < 1) throw Error("n_seeds must be at least 1");
  std::vector<VariantKey> keys;
  for (Variant v : cfg.variants) {
    if (v != Variant::rf_prn_pro) {
      keys.push_back({v, std::nullopt});
      continue;
    }
    if (cfg.proto_fractions.empty()) throw Error("RF-PRN-PRO requested with no prototype fractions");
    for (double f : cfg.proto_fractions) keys.push_back({v, f});
  }
  std::vector<CellPlan> plan;
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d)
    for (int s = 0; s < cfg.n_seeds; ++s)
      for (const auto& key : keys)
        for (double lambda : cfg.lambdas) plan.push_back({d, key, lambda, cfg.seed_base + static_cast<std::uint64_t>(s)});
  return plan;
}

namespace {


// Everything a (dataset, seed) group shares across variants and lambdas.
struct GroupContext
{
  Dataset train;
  Forest forest;
  Matrix geometry;     // reference embedding of the training rows
  Matrix test_points;
  Matrix target;       // distances among test rows of the all-rows embedding
};

GroupContext prepare_group(const ExperimentConfig& cfg, const Dataset& ds, std::uint64_t seed)
{
  GroupContext g;
  Split sp = split(ds, {cfg.train_fraction, seed, true});
  ForestParams fp = cfg.forest;
  fp.seed = seed;
  DiffusionConfig dc = cfg.embed;
  dc.seed = seed;

  g.train = ds.subset(sp.train);
  g.forest = fit_forest(ds, sp.train, fp);
  g.geometry = rfphate_embed(g.forest, dc).embedding.coords;

  std::vector<Index> all(static_cast<std::size_t>(ds.rows()));
  std::iota(all.begin(), all.end(), Index{0});
  Matrix full = rfphate_embed(fit_forest(ds, all, fp), dc).embedding.coords;
  Matrix test_coords(static_cast<Index>(sp.test.size()), full.cols());
  g.test_points.resize(test_coords.rows(), ds.cols());
  for (std::size_t r = 0; r < sp.test.size(); ++r) {
    test_coords.row(static_cast<Index>(r)) = full.row(sp.test[r]);
    g.test_points.row(static_cast<Index>(r)) = ds.features.row(sp.test[r]);
  }
  g.target = pairwise_distances(test_coords);
  return g;
}

void run_cell(const ExperimentConfig& cfg, const GroupContext& g, const CellPlan& plan, CellRecord& rec)
{
  ExtensionOptions opt = cfg.ae;
  opt.lambda = plan.lambda;
  if (plan.variant.fraction) opt.proto_fraction = *plan.variant.fraction;
  opt.train.seed = plan.seed;
  FittedExtension fit = fit_extension(plan.variant.variant, g.train, g.forest, g.geometry, opt);
  rec.fit_seconds = fit.training.seconds;
  rec.recon_mse = fit.final_loss.recon;
  rec.geom_mse = fit.final_loss.geom;
  Embedding ext = extend(fit.model, g.forest, g.test_points);
  rec.mantel = mantel(g.target, pairwise_distances(ext)).correlation;
}

double mean_of(const std::vector<double>& v)
{
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

AggregateRow summarize(std::string variant, std::optional<double> lambda, std::optional<double> fraction,
                       const std::vector<const CellRecord*>& cells)
{
  AggregateRow row;
  row.variant = std::move(variant);
  row.lambda = lambda;
  row.fraction = fraction;
  std::vector<double> values;
  for (const auto* c : cells) {
    if (c->mantel) values.push_back(*c->mantel);
    else ++row.failures;
  }
  row.cells = static_cast<Index>(values.size());
  if (values.empty()) {
    row.mean = row.std = std::numeric_limits<double>::quiet_NaN();
    return row;
  }
  row.mean = mean_of(values);
  double ss = 0.0;
  for (double v : values) ss += (v - row.mean) * (v - row.mean);
  row.std = std::sqrt(ss / static_cast<double>(values.size()));
  return row;
}

bool same(double a, double b)
{
  return (std::isnan(a) && std::isnan(b)) || std::abs(a - b) <= 1e-12;
}

void compare_rows(const std::vector<AggregateRow>& stored, const std::vector<AggregateRow>& fresh)
{
  if (stored.size() != fresh.size()) throw Error("stored aggregates do not match the cells (row count differs)");
  for (std::size_t k = 0; k < stored.size(); ++k) {
    const auto& a = stored[k];
    const auto& b = fresh[k];
    if (a.variant != b.variant || a.lambda != b.lambda || a.fraction != b.fraction || a.cells != b.cells ||
        a.failures != b.failures || !same(a.mean, b.mean) || !same(a.std, b.std)) {
      throw Error("stored aggregate for " + a.variant + " does not match a recomputation from the cells");
    }
  }
}

std::string optional_text(const std::optional<double>& v)
{
  return v ? format_real(*v) : std::string{};
}

std::optional<double> optional_real(const std::string& text)
{
  if (text.empty()) return std::nullopt;
  return std::stod(text);
}

nlohmann::json row_json(const AggregateRow& r)
{
  auto num = [](double v) { return std::isnan(v) ? nlohmann::json(nullptr) : nlohmann::json(v); };
  return {{"variant", r.variant},
          {"lambda", r.lambda ? nlohmann::json(*r.lambda) : nlohmann::json(nullptr)},
          {"fraction", r.fraction ? nlohmann::json(*r.fraction) : nlohmann::json(nullptr)},
          {"mean", num(r.mean)},
          {"std", num(r.std)},
          {"cells", r.cells},
          {"failures", r.failures}};
}

AggregateRow row_from_json(const nlohmann::json& j)
{
  auto num = [](const nlohmann::json& v) { return v.is_null() ? std::numeric_limits<double>::quiet_NaN() : v.get<double>(); };
  AggregateRow r;
  r.variant = j.at("variant").get<std::string>();
  if (!j.at("lambda").is_null()) r.lambda = j.at("lambda").get<double>();
  if (!j.at("fraction").is_null()) r.fraction = j.at("fraction").get<double>();
  r.mean = num(j.at("mean"));
  r.std = num(j.at("std"));
  r.cells = j.at("cells").get<Index>();
  r.failures = j.at("failures").get<Index>();
  return r;
}

std::string mean_std(const AggregateRow* r)
{
  if (!r || r->cells == 0) return "n/a";
  std::ostringstream os;
  os << std::fixed << std::setprecision(3) << r->mean << " +- " << r->std;
  return os.str();
}

}  // namespace

ExperimentReport run_experiment(const ExperimentConfig& cfg, const ProgressFn& progress)
{
  auto plan = plan_cells(cfg);
  std::vector<Dataset> datasets(cfg.datasets.size());
  std::vector<std::string> load_errors(cfg.datasets.size());
  for (std::size_t d = 0; d < cfg.datasets.size(); ++d) {
    try {
      datasets[d] = load_csv(cfg.datasets[d].path, cfg.datasets[d].label);
      datasets[d].validate();
    } catch (const std::exception& e) {
      load_errors[d] = e.what();
    }
  }

  // Plan order groups cells by (dataset, seed); each group is one job.
  std::vector<std::pair<std::size_t, std::size_t>> groups;
  for (std::size_t k = 0; k < plan.size(); ++k) {
    if (groups.empty() || plan[k].dataset != plan[groups.back().first].dataset || plan[k].seed != plan[groups.back().first].seed) {
      groups.emplace_back(k, k);
    }
    groups.back().second = k + 1;
  }

  ExperimentReport report;
  report.cells.resize(plan.size());
  std::mutex progress_mutex;
  parallel_for(static_cast<Index>(groups.size()), std::max(1, cfg.jobs), [&](Index gi) {
    auto [begin, end] = groups[static_cast<std::size_t>(gi)];
    const auto d = plan[begin].dataset;
    std::optional<GroupContext> ctx;
    std::string group_error = load_errors[d];
    if (group_error.empty()) {
      try {
        ctx = prepare_group(cfg, datasets[d], plan[begin].seed);
      } catch (const std::exception& e) {
        group_error = e.what();
      }
    }
    for (std::size_t k = begin; k < end; ++k) {
      CellRecord& rec = report.cells[k];
      rec.dataset = cfg.datasets[d].name;
      rec.variant = plan[k].variant;
      rec.lambda = plan[k].lambda;
      rec.seed = plan[k].seed;
      if (!ctx) {
        rec.error = group_error;
      } else {
        try {
          run_cell(cfg, *ctx, plan[k], rec);
        } catch (const std::exception& e) {
          rec.mantel.reset();
          rec.error = e.what();
        }
      }
      if (progress) {
        std::lock_guard lock(progress_mutex);
        progress(rec);
      }
    }
  });
  report.aggregate();
  return report;
}

void ExperimentReport::aggregate()
{
  by_variant.clear();
  by_variant_lambda.clear();
  by_fraction.clear();
  std::vector<double> lambdas;
  std::vector<double> fractions;
  for (const auto& c : cells) {
    lambdas.push_back(c.lambda);
    if (c.variant.fraction) fractions.push_back(*c.variant.fraction);
  }
  for (auto* v : {&lambdas, &fractions}) {
    std::sort(v->begin(), v->end());
    v->erase(std::unique(v->begin(), v->end()), v->end());
  }
  for (Variant v : kAllVariants) {
    std::vector<const CellRecord*> mine;
    for (const auto& c : cells)
      if (c.variant.variant == v) mine.push_back(&c);
    if (mine.empty()) continue;
    std::string name(to_string(v));
    by_variant.push_back(summarize(name, std::nullopt, std::nullopt, mine));
    for (double l : lambdas) {
      std::vector<const CellRecord*> sub;
      for (const auto* c : mine)
        if (c->lambda == l) sub.push_back(c);
      if (!sub.empty()) by_variant_lambda.push_back(summarize(name, l, std::nullopt, sub));
    }
    if (v != Variant::rf_prn_pro) continue;
    for (double f : fractions) {
      std::vector<const CellRecord*> sub;
      for (const auto* c : mine)
        if (c->variant.fraction == f) sub.push_back(c);
      if (!sub.empty()) by_fraction.push_back(summarize(name, std::nullopt, f, sub));
    }
  }
}

void ExperimentReport::verify() const
{
  ExperimentReport fresh;
  fresh.cells = cells;
  fresh.aggregate();
  compare_rows(by_variant, fresh.by_variant);
  compare_rows(by_variant_lambda, fresh.by_variant_lambda);
  compare_rows(by_fraction, fresh.by_fraction);
}

const AggregateRow* ExperimentReport::find(std::string_view variant, std::optional<double> lambda,
                                           std::optional<double> fraction) const
{
  const auto& rows = lambda ? by_variant_lambda : fraction ? by_fraction : by_variant;
  std::string name(to_string(parse_variant(variant)));
  for (const auto& r : rows)
    if (r.variant == name && r.lambda == lambda && r.fraction == fraction) return &r;
  return nullptr;
}

Index ExperimentReport::failed_cells() const
{
  return std::count_if(cells.begin(), cells.end(), [](const CellRecord& c) { return !c.mantel; });
}

double timing_ratio(const ExperimentReport& report, const VariantKey& a, const VariantKey& b)
{
  using Key = std::tuple<std::string, std::uint64_t, double>;
  std::map<Key, double> denominators;
  for (const auto& c : report.cells)
    if (c.variant == b && c.mantel) denominators[{c.dataset, c.seed, c.lambda}] = c.fit_seconds;
  double sum = 0.0;
  int matched = 0;
  for (const auto& c : report.cells) {
    if (!(c.variant == a) || !c.mantel) continue;
    auto it = denominators.find({c.dataset, c.seed, c.lambda});
    if (it == denominators.end()) {
      throw Error("no " + b.label() + " cell matches " + a.label() + " on " + c.dataset + ", seed " +
                  std::to_string(c.seed) + ", lambda " + format_real(c.lambda));
    }
    if (!(it->second > 0.0)) throw Error("zero fit time recorded for " + b.label());
    sum += c.fit_seconds / it->second;
    ++matched;
  }
  if (matched == 0) throw Error("no successful " + a.label() + " cells");
  return sum / matched;
}

void write_cells_csv(const ExperimentReport& report, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "dataset,variant,fraction,lambda,seed,mantel,fit_seconds,recon_mse,geom_mse,error\n";
  for (const auto& c : report.cells) {
    out << quote_csv_field(c.dataset) << ',' << to_string(c.variant.variant) << ',' << optional_text(c.variant.fraction)
        << ',' << format_real(c.lambda) << ',' << c.seed << ',' << optional_text(c.mantel) << ','
        << format_real(c.fit_seconds) << ',' << format_real(c.recon_mse) << ',' << format_real(c.geom_mse) << ','
        << quote_csv_field(c.error) << '\n';
  }
}

ExperimentReport read_cells_csv(const std::filesystem::path& path)
{
  CsvTable table = read_csv_table(path);
  const std::vector<std::string> expected{"dataset", "variant", "fraction", "lambda", "seed",
                                          "mantel", "fit_seconds", "recon_mse", "geom_mse", "error"};
  if (table.header != expected) throw Error("'" + path.string() + "' is not a cells report");
  ExperimentReport report;
  for (const auto& row : table.rows) {
    CellRecord c;
    c.dataset = row[0];
    c.variant.variant = parse_variant(row[1]);
    c.variant.fraction = optional_real(row[2]);
    c.lambda = std::stod(row[3]);
    c.seed = std::stoull(row[4]);
    c.mantel = optional_real(row[5]);
    c.fit_seconds = std::stod(row[6]);
    c.recon_mse = std::stod(row[7]);
    c.geom_mse = std::stod(row[8]);
    c.error = row[9];
    report.cells.push_back(std::move(c));
  }
  report.aggregate();
  return report;
}

nlohmann::json aggregates_json(const ExperimentReport& report)
{
  nlohmann::json j = {{"cells", report.cells.size()}, {"failed_cells", report.failed_cells()}};
  for (auto [key, rows] : {std::pair{"by_variant", &report.by_variant}, std::pair{"by_variant_lambda", &report.by_variant_lambda},
                           std::pair{"by_fraction", &report.by_fraction}}) {
    j[key] = nlohmann::json::array();
    for (const auto& r : *rows) j[key].push_back(row_json(r));
  }
  return j;
}

ExperimentReport load_report(const std::filesystem::path& cells_csv, const std::filesystem::path& aggregates)
{
  ExperimentReport report = read_cells_csv(cells_csv);
  std::ifstream in(aggregates);
  if (!in) throw Error("cannot open '" + aggregates.string() + "'");
  auto j = nlohmann::json::parse(in);
  report.by_variant.clear();
  report.by_variant_lambda.clear();
  report.by_fraction.clear();
  for (const auto& r : j.at("by_variant")) report.by_variant.push_back(row_from_json(r));
  for (const auto& r : j.at("by_variant_lambda")) report.by_variant_lambda.push_back(row_from_json(r));
  for (const auto& r : j.at("by_fraction")) report.by_fraction.push_back(row_from_json(r));
  report.verify();
  return report;
}

std::string format_table(const ExperimentReport& report)
{
  std::vector<double> lambdas;
  for (const auto& r : report.by_variant_lambda)
    if (std::find(lambdas.begin(), lambdas.end(), *r.lambda) == lambdas.end()) lambdas.push_back(*r.lambda);
  std::sort(lambdas.begin(), lambdas.end());

  std::ostringstream os;
  os << std::left << std::setw(14) << "Variant" << std::setw(18) << "Mantel" << std::setw(7) << "cells" << "failed\n";
  for (const auto& r : report.by_variant) {
    os << std::setw(14) << r.variant << std::setw(18) << mean_std(&r) << std::setw(7) << r.cells << r.failures << '\n';
  }
  if (!lambdas.empty()) {
    os << '\n' << std::setw(14) << "Variant";
    for (double l : lambdas) os << std::setw(18) << ("lambda=" + format_real(l));
    os << '\n';
    for (const auto& r : report.by_variant) {
      os << std::setw(14) << r.variant;
      for (double l : lambdas) os << std::setw(18) << mean_std(report.find(r.variant, l));
      os << '\n';
    }
  }
  if (!report.by_fraction.empty()) {
    os << '\n' << std::setw(14) << "Prototypes" << "Mantel\n";
    for (const auto& r : report.by_fraction) {
      os << std::setw(14) << (std::to_string(std::llround(*r.fraction * 100.0)) + "%") << mean_std(&r) << '\n';
    }
  }
  return os.str();
}

}  // namespace rfphate
