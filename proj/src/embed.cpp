#include "rfphate/embed.hpp"

#include "rfphate/data.hpp"
#include "rfphate/proximity.hpp"

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>

namespace rfphate {

namespace {

EntropyKnee knee_from_spectrum(const Vector& magnitudes, int t_max)
{
  if (t_max < 3) throw Error("t_max must be at least 3");
  EntropyKnee out;
  Vector powered = magnitudes;
  for (int t = 1; t <= t_max; ++t) {
    double total = powered.sum();
    double h = 0.0;
    if (total > 0.0) {
      for (Index i = 0; i < powered.size(); ++i) {
        double p = powered(i) / total;
        if (p > 0.0) h -= p * std::log(p);
      }
    }
    out.entropy.push_back(h);
    powered = powered.cwiseProduct(magnitudes);
  }
  // Perpendicular distance to the chord, up to a constant factor; the argmax
  // is unaffected by how the two axes are scaled.
  const double h0 = out.entropy.front();
  const double dh = out.entropy.back() - h0;
  const double dt = static_cast<double>(t_max - 1);
  double best = -1.0;
  for (int t = 1; t <= t_max; ++t) {
    double cross = std::abs(static_cast<double>(t - 1) * dh - (out.entropy[static_cast<std::size_t>(t - 1)] - h0) * dt);
    if (cross > best) {
      best = cross;
      out.t = t;
    }
  }
  return out;
}

Matrix matrix_power(const Matrix& p, int t)
{
  Matrix result = Matrix::Identity(p.rows(), p.cols());
  Matrix base = p;
  for (int e = t; e > 0; e >>= 1) {
    if (e & 1) result = result * base;
    if (e > 1) base = base * base;
  }
  return result;
}

void check_square(const Matrix& m, const char* what)
{
  if (m.rows() != m.cols()) throw Error(std::string(what) + " must be square");
}

// Power iteration for the algebraically largest eigenpair of symmetric `b`.
std::pair<double, Vector> dominant_eigenpair(const Matrix& b, Vector v, double shift)
{
  constexpr int kMaxIters = 5000;
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < kMaxIters; ++it) {
    Vector w = b * v + shift * v;
    double norm = w.norm();
    if (norm == 0.0) return {-shift, v};
    w /= norm;
    double change = std::min((w - v).norm(), (w + v).norm());
    v = std::move(w);
    lambda = v.dot(b * v);
    if (change < 1e-13) break;
  }
  return {lambda, v};
}

}  // namespace

Matrix diffusion_operator(const Matrix& kernel)
{
  check_square(kernel, "kernel");
  Vector sums = kernel.rowwise().sum();
  for (Index i = 0; i < sums.size(); ++i) {
    if (!(sums(i) > 0.0)) throw Error("kernel row " + std::to_string(i) + " sums to zero (isolated point)");
  }
  return sums.cwiseInverse().asDiagonal() * kernel;
}

EntropyKnee von_neumann_entropy_t(const Matrix& diffusion, int t_max)
{
  check_square(diffusion, "diffusion operator");
  if (t_max < 3) throw Error("t_max must be at least 3");
  // A row-stochastic D^-1 K is similar to the symmetric D^-1/2 K D^-1/2, so
  // the moduli of its eigenvalues are that operator's spectrum.
  Eigen::EigenSolver<Matrix> solver(diffusion, false);
  if (solver.info() != Eigen::Success) throw Error("eigenvalue computation failed");
  return knee_from_spectrum(solver.eigenvalues().cwiseAbs(), t_max);
}

Matrix potential_distances(const Matrix& diffusion, int t, double eps)
{
  check_square(diffusion, "diffusion operator");
  if (t < 1) throw Error("diffusion time must be at least 1");
  // Columns of the transpose are the potential rows, stored contiguously.
  Matrix potential = -(matrix_power(diffusion, t).array() + eps).log().matrix().transpose();
  const Index n = potential.cols();
  Matrix d = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      double v = (potential.col(i) - potential.col(j)).norm();
      d(i, j) = v;
      d(j, i) = v;
    }
  }
  return d;
}

namespace {

using RowMajor = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

void pairwise(const RowMajor& x, Matrix& out)
{
  const Index n = x.rows();
  const Index k = x.cols();
  out.resize(n, n);
  for (Index i = 0; i < n; ++i) {
    out(i, i) = 0.0;
    const double* xi = x.data() + i * k;
    for (Index j = i + 1; j < n; ++j) {
      const double* xj = x.data() + j * k;
      double s = 0.0;
      for (Index c = 0; c < k; ++c) s += (xi[c] - xj[c]) * (xi[c] - xj[c]);
      out(i, j) = out(j, i) = std::sqrt(s);
    }
  }
}

double stress_of(const Matrix& fitted, const Matrix& distances)
{
  double s = 0.0;
  for (Index j = 0; j < fitted.cols(); ++j) {
    for (Index i = 0; i < j; ++i) {
      double r = fitted(i, j) - distances(i, j);
      s += r * r;
    }
  }
  return s;
}

}  // namespace

double stress(const Matrix& coords, const Matrix& distances)
{
  Matrix fitted;
  pairwise(coords, fitted);
  return stress_of(fitted, distances);
}

MdsResult mds(const Matrix& distances, int k, int max_iters, double tol, std::uint64_t seed)
{
  check_square(distances, "distance matrix");
  if (k < 1) throw Error("embedding dimension must be at least 1");
  const Index n = distances.rows();
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < n; ++j) {
      if (distances(i, j) != distances(j, i)) throw Error("distance matrix is not symmetric");
    }
  }

  // Torgerson start: B = -1/2 J D^2 J.
  Matrix sq = distances.array().square().matrix();
  Vector row_mean = sq.rowwise().mean();
  double grand = row_mean.mean();
  Matrix b = -0.5 * ((sq.colwise() - row_mean).rowwise() - row_mean.transpose()).array() - 0.5 * grand;
  b = (b + b.transpose()) / 2.0;

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss;
  MdsResult out;
  out.coords = Matrix::Zero(n, k);
  Matrix deflated = b;
  for (int c = 0; c < k && c < n; ++c) {
    Vector start(n);
    for (Index i = 0; i < n; ++i) start(i) = gauss(rng);
    auto [lambda, v] = dominant_eigenpair(deflated, start, 0.0);
    if (lambda < 0.0) std::tie(lambda, v) = dominant_eigenpair(deflated, start, -lambda);
    if (lambda <= 0.0) break;
    out.coords.col(c) = std::sqrt(lambda) * v;
    deflated -= lambda * v * v.transpose();
  }

  // SMACOF with unit weights: X <- (1/n) B(X) X.
  double target_norm = distances.squaredNorm() / 2.0;
  RowMajor x = out.coords;
  Matrix fitted;
  pairwise(x, fitted);
  double current = stress_of(fitted, distances);
  out.stress_history.push_back(current);
  Matrix guttman(n, n);
  // At round-off level stress only fluctuates.
  for (int it = 0; it < max_iters && current > 1e-24 * target_norm; ++it) {
    for (Index j = 0; j < n; ++j) {
      double diag = 0.0;
      for (Index i = 0; i < n; ++i) {
        if (i == j) continue;
        double bij = fitted(i, j) > 0.0 ? -distances(i, j) / fitted(i, j) : 0.0;
        guttman(i, j) = bij;
        diag -= bij;
      }
      guttman(j, j) = diag;
    }
    RowMajor next = guttman * x / static_cast<double>(n);
    Matrix next_fitted;
    pairwise(next, next_fitted);
    double candidate = stress_of(next_fitted, distances);
    // A rise can only be round-off once converged; keep the better iterate.
    if (candidate > current) break;
    double previous = current;
    x = std::move(next);
    fitted = std::move(next_fitted);
    current = candidate;
    ++out.iterations;
    out.stress_history.push_back(current);
    if ((previous - current) / previous < tol) break;
  }
  out.coords = x;
  out.normalized_stress = target_norm > 0.0 ? std::sqrt(current / target_norm) : 0.0;
  return out;
}

EmbedResult embed_kernel(const Matrix& kernel, const DiffusionConfig& cfg)
{
  if (cfg.k_dim < 1) throw Error("k_dim must be at least 1");
  if (cfg.t && *cfg.t < 1) throw Error("diffusion time must be at least 1");
  Matrix diffusion = diffusion_operator(kernel);

  EmbedResult out;
  if (cfg.t) {
    out.t = *cfg.t;
  } else {
    Vector d = kernel.rowwise().sum().cwiseSqrt().cwiseInverse();
    Matrix conj = d.asDiagonal() * kernel * d.asDiagonal();
    conj = (conj + conj.transpose()) / 2.0;
    Eigen::SelfAdjointEigenSolver<Matrix> solver(conj, Eigen::EigenvaluesOnly);
    if (solver.info() != Eigen::Success) throw Error("eigenvalue computation failed");
    EntropyKnee knee = knee_from_spectrum(solver.eigenvalues().cwiseAbs(), cfg.t_max);
    out.t = knee.t;
    out.t_auto = true;
    out.entropy = std::move(knee.entropy);
  }
  Matrix dist = potential_distances(diffusion, out.t, cfg.potential_eps);
  out.mds = mds(dist, cfg.k_dim, cfg.mds_iters, cfg.mds_tol, cfg.seed);
  out.embedding.coords = out.mds.coords;
  out.embedding.source = Embedding::Source::reference_pipeline;
  return out;
}

EmbedResult rfphate_embed(const Forest& forest, const DiffusionConfig& cfg)
{
  ProximityMatrix p = train_proximities(forest, SelfSimilarity::zero);
  return embed_kernel(symmetrize(p.values), cfg);
}

void write_embedding_csv(const Embedding& e, std::span<const Index> row_ids, const std::filesystem::path& path)
{
  if (!row_ids.empty() && static_cast<Index>(row_ids.size()) != e.coords.rows()) {
    throw Error("row id count does not match embedding rows");
  }
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << "index";
  for (Index c = 0; c < e.k(); ++c) out << ",dim_" << c;
  out << '\n';
  for (Index i = 0; i < e.coords.rows(); ++i) {
    out << (row_ids.empty() ? i : row_ids[static_cast<std::size_t>(i)]);
    for (Index c = 0; c < e.k(); ++c) out << ',' << format_real(e.coords(i, c));
    out << '\n';
  }
}

Matrix read_embedding_csv(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw Error("'" + path.string() + "' is empty");
  Index k = static_cast<Index>(std::count(line.begin(), line.end(), ','));
  if (k < 1) throw Error("'" + path.string() + "' has no coordinate columns");
  std::vector<double> values;
  Index rows = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::getline(ss, cell, ',');  // index
    for (Index c = 0; c < k; ++c) {
      if (!std::getline(ss, cell, ',')) throw Error("short embedding row " + std::to_string(rows));
      values.push_back(std::stod(cell));
    }
    ++rows;
  }
  return Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(values.data(), rows, k);
}

void to_json(nlohmann::json& j, const DiffusionConfig& c)
{
  j = {{"t", c.t ? nlohmann::json(*c.t) : nlohmann::json("auto")},
       {"t_max", c.t_max},
       {"k", c.k_dim},
       {"mds_iters", c.mds_iters},
       {"mds_tol", c.mds_tol},
       {"potential_eps", c.potential_eps},
       {"seed", c.seed}};
}

void from_json(const nlohmann::json& j, DiffusionConfig& c)
{
  if (j.contains("t")) {
    const auto& t = j.at("t");
    if (t.is_string() && t.get<std::string>() == "auto") c.t.reset();
    else c.t = t.get<int>();
  }
  c.t_max = j.value("t_max", c.t_max);
  c.k_dim = j.value("k", c.k_dim);
  c.mds_iters = j.value("mds_iters", c.mds_iters);
  c.mds_tol = j.value("mds_tol", c.mds_tol);
  c.potential_eps = j.value("potential_eps", c.potential_eps);
  c.seed = j.value("seed", c.seed);
}

nlohmann::json embed_metadata(const EmbedResult& r, const DiffusionConfig& cfg)
{
  return {{"config", cfg},
          {"t", r.t},
          {"t_auto", r.t_auto},
          {"entropy", r.entropy},
          {"stress", r.mds.stress_history.empty() ? 0.0 : r.mds.stress_history.back()},
          {"normalized_stress", r.mds.normalized_stress},
          {"mds_iterations", r.mds.iterations},
          {"seed", cfg.seed}};
}

}  // namespace rfphate
