#include "rfphate/autoencoder.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace rfphate {

namespace {

constexpr int kModelFormatVersion = 1;

std::string normalize_name(std::string_view text)
{
  std::string s;
  for (char c : text) s += c == '_' ? '-' : static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return s;
}

Matrix affine(const Dense& layer, const Matrix& x)
{
  Matrix z = x * layer.weight;
  z.rowwise() += layer.bias;
  if (layer.activation == Activation::relu) z = z.cwiseMax(0.0);
  return z;
}

// Backpropagates `delta` (gradient w.r.t. the stack's output) through
// `layers`, writing parameter gradients into `grads`; returns the gradient
// w.r.t. the stack's input.
Matrix backprop_stack(const std::vector<Dense>& layers, const Matrix& input, const std::vector<Matrix>& outputs,
                      Matrix delta, std::vector<Dense>& grads)
{
  for (std::size_t l = layers.size(); l-- > 0;) {
    if (layers[l].activation == Activation::relu) delta = delta.cwiseProduct((outputs[l].array() > 0.0).cast<double>().matrix());
    const Matrix& in = l == 0 ? input : outputs[l - 1];
    grads[l].weight = in.transpose() * delta;
    grads[l].bias = delta.colwise().sum();
    delta = delta * layers[l].weight.transpose();
  }
  return delta;
}

double mse(const Matrix& a, const Matrix& b)
{
  if (a.size() == 0) return 0.0;
  return (a - b).squaredNorm() / static_cast<double>(a.size());
}

Dense init_layer(Index in, Index out, Activation act, std::mt19937_64& rng)
{
  double bound = std::sqrt((act == Activation::relu ? 6.0 : 3.0) / static_cast<double>(in));
  std::uniform_real_distribution<double> u(-bound, bound);
  Dense layer;
  layer.weight.resize(in, out);
  for (Index j = 0; j < out; ++j)
    for (Index i = 0; i < in; ++i) layer.weight(i, j) = u(rng);
  layer.bias = RowVector::Zero(out);
  layer.activation = act;
  return layer;
}

Matrix take_rows(const Matrix& m, std::span<const Index> rows)
{
  Matrix out(static_cast<Index>(rows.size()), m.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) out.row(static_cast<Index>(r)) = m.row(rows[r]);
  return out;
}

Matrix take_cols(const Matrix& m, std::span<const Index> cols)
{
  Matrix out(m.rows(), static_cast<Index>(cols.size()));
  for (std::size_t c = 0; c < cols.size(); ++c) out.col(static_cast<Index>(c)) = m.col(cols[c]);
  return out;
}

void check_rows(const Batch& b)
{
  if (b.target.rows() != b.input.rows() || b.geometry.rows() != b.input.rows() ||
      (b.proximity && b.proximity->rows() != b.input.rows())) {
    throw Error("batch rows are misaligned: input, target, geometry and proximity must have equal row counts");
  }
}

}  // namespace

Variant parse_variant(std::string_view text)
{
  std::string s = normalize_name(text);
  if (s == "rf-grae") return Variant::rf_grae;
  if (s == "rf-prox-in") return Variant::rf_prox_in;
  if (s == "rf-prox-reg") return Variant::rf_prox_reg;
  if (s == "rf-prn") return Variant::rf_prn;
  if (s == "rf-prn-pro") return Variant::rf_prn_pro;
  throw Error("unknown variant '" + std::string(text) + "'");
}

std::string_view to_string(Variant v)
{
  switch (v) {
    case Variant::rf_grae: return "RF-GRAE";
    case Variant::rf_prox_in: return "RF-PROX-IN";
    case Variant::rf_prox_reg: return "RF-PROX-REG";
    case Variant::rf_prn: return "RF-PRN";
    case Variant::rf_prn_pro: return "RF-PRN-PRO";
  }
  return "?";
}

bool uses_proximity_input(Variant v)
{
  return v == Variant::rf_prox_in || v == Variant::rf_prn || v == Variant::rf_prn_pro;
}

std::vector<std::span<double>> ParameterSet::views()
{
  std::vector<std::span<double>> out;
  auto add = [&](Dense& d) {
    out.emplace_back(d.weight.data(), static_cast<std::size_t>(d.weight.size()));
    out.emplace_back(d.bias.data(), static_cast<std::size_t>(d.bias.size()));
  };
  for (auto& d : encoder) add(d);
  for (auto& d : decoder) add(d);
  if (prox_head) add(*prox_head);
  return out;
}

std::vector<std::span<const double>> ParameterSet::views() const
{
  auto mutable_views = const_cast<ParameterSet*>(this)->views();
  return {mutable_views.begin(), mutable_views.end()};
}

Index ParameterSet::size() const
{
  Index n = 0;
  for (auto v : views()) n += static_cast<Index>(v.size());
  return n;
}

ParameterSet ParameterSet::zeros_like() const
{
  ParameterSet out = *this;
  for (auto v : out.views()) std::fill(v.begin(), v.end(), 0.0);
  return out;
}

Vector ParameterSet::flatten() const
{
  Vector flat(size());
  Index k = 0;
  for (auto v : views())
    for (double x : v) flat(k++) = x;
  return flat;
}

void ParameterSet::assign(const Vector& flat)
{
  if (flat.size() != size()) throw Error("flat parameter vector has the wrong length");
  Index k = 0;
  for (auto v : views())
    for (double& x : v) x = flat(k++);
}

AEModel make_model(Variant variant, Index input_width, Index output_width, std::optional<Index> prox_width,
                   const Architecture& arch, double lambda, double gamma, std::uint64_t seed)
{
  if (input_width < 1 || output_width < 1) throw Error("network widths must be positive");
  if (arch.bottleneck < 1) throw Error("bottleneck dimension must be at least 1");
  if ((variant == Variant::rf_prox_reg) != prox_width.has_value()) {
    throw Error("a proximity head is required for RF-PROX-REG and only for it");
  }
  std::mt19937_64 rng(seed);
  AEModel m;
  m.variant = variant;
  m.lambda = lambda;
  m.gamma = gamma;

  Index in = input_width;
  for (int h : arch.hidden) {
    m.params.encoder.push_back(init_layer(in, h, Activation::relu, rng));
    in = h;
  }
  m.params.encoder.push_back(init_layer(in, arch.bottleneck, Activation::linear, rng));

  in = arch.bottleneck;
  for (auto it = arch.hidden.rbegin(); it != arch.hidden.rend(); ++it) {
    m.params.decoder.push_back(init_layer(in, *it, Activation::relu, rng));
    in = *it;
  }
  m.params.decoder.push_back(init_layer(in, output_width, Activation::linear, rng));

  if (prox_width) m.params.prox_head = init_layer(arch.bottleneck, *prox_width, Activation::linear, rng);
  return m;
}

VariantIO build_io(Variant variant, const Matrix& features, const ProximityMatrix& proximities,
                   const PrototypeSet* prototypes)
{
  const Matrix& p = proximities.values;
  if (p.rows() != features.rows()) throw Error("proximity rows do not match feature rows");
  if ((variant == Variant::rf_prn_pro) != (prototypes != nullptr)) {
    throw Error(variant == Variant::rf_prn_pro ? "RF-PRN-PRO requires a prototype set"
                                               : "prototypes are only used by RF-PRN-PRO");
  }
  VariantIO io;
  switch (variant) {
    case Variant::rf_grae:
      io.input = features;
      io.target = features;
      break;
    case Variant::rf_prox_in:
      io.input = p;
      io.target = features;
      break;
    case Variant::rf_prox_reg:
      io.input = features;
      io.target = features;
      io.proximity_target = p;
      break;
    case Variant::rf_prn:
      if (p.rows() != p.cols()) throw Error("RF-PRN needs a square training proximity matrix");
      io.input = p;
      io.target = p;
      break;
    case Variant::rf_prn_pro:
      if (p.rows() != p.cols()) throw Error("RF-PRN-PRO needs a square training proximity matrix");
      io.input = take_cols(p, prototypes->indices);
      io.target = io.input;
      break;
  }
  return io;
}

ForwardPass forward(const AEModel& m, const Matrix& batch)
{
  if (batch.cols() != m.input_width()) {
    throw Error("batch has width " + std::to_string(batch.cols()) + ", encoder expects " + std::to_string(m.input_width()));
  }
  ForwardPass pass;
  // `x` points into these vectors, so they must never reallocate.
  pass.encoder_outputs.reserve(m.params.encoder.size());
  pass.decoder_outputs.reserve(m.params.decoder.size());
  const Matrix* x = &batch;
  for (const auto& layer : m.params.encoder) {
    pass.encoder_outputs.push_back(affine(layer, *x));
    x = &pass.encoder_outputs.back();
  }
  for (const auto& layer : m.params.decoder) {
    pass.decoder_outputs.push_back(affine(layer, *x));
    x = &pass.decoder_outputs.back();
  }
  if (m.params.prox_head) pass.prox_prediction = affine(*m.params.prox_head, pass.latent());
  return pass;
}

LossTerms loss(const AEModel& m, const ForwardPass& pass, const Batch& batch)
{
  check_rows(batch);
  if (batch.geometry.cols() != m.bottleneck_dim()) throw Error("geometry width does not match the bottleneck");
  if (batch.target.cols() != m.output_width()) throw Error("target width does not match the decoder output");
  LossTerms t;
  t.recon = mse(pass.reconstruction(), batch.target);
  t.geom = mse(pass.latent(), batch.geometry);
  if (pass.prox_prediction) {
    if (!batch.proximity) throw Error("RF-PROX-REG needs proximity rows for its head");
    t.prox = mse(*pass.prox_prediction, *batch.proximity);
  }
  t.total = t.recon + m.lambda * t.geom + m.gamma * t.prox;
  return t;
}

LossTerms loss(const AEModel& m, const Batch& batch)
{
  return loss(m, forward(m, batch.input), batch);
}

ParameterSet backward(const AEModel& m, const Batch& batch)
{
  check_rows(batch);
  ForwardPass pass = forward(m, batch.input);
  ParameterSet grads = m.params.zeros_like();

  Matrix d_recon = (pass.reconstruction() - batch.target) * (2.0 / static_cast<double>(batch.target.size()));
  Matrix d_latent = backprop_stack(m.params.decoder, pass.latent(), pass.decoder_outputs, std::move(d_recon), grads.decoder);
  d_latent += (pass.latent() - batch.geometry) * (2.0 * m.lambda / static_cast<double>(batch.geometry.size()));

  if (m.params.prox_head) {
    if (!batch.proximity) throw Error("RF-PROX-REG needs proximity rows for its head");
    Matrix d_head = (*pass.prox_prediction - *batch.proximity) * (2.0 * m.gamma / static_cast<double>(batch.proximity->size()));
    grads.prox_head->weight = pass.latent().transpose() * d_head;
    grads.prox_head->bias = d_head.colwise().sum();
    d_latent += d_head * m.params.prox_head->weight.transpose();
  }
  backprop_stack(m.params.encoder, batch.input, pass.encoder_outputs, std::move(d_latent), grads.encoder);
  return grads;
}

TrainResult train(AEModel& m, const Batch& data, const TrainConfig& cfg)
{
  check_rows(data);
  if (cfg.epochs < 0) throw Error("epochs must be nonnegative");
  if (cfg.batch_size < 1) throw Error("batch_size must be at least 1");
  auto start = std::chrono::steady_clock::now();

  const Index n = data.input.rows();
  std::mt19937_64 rng(cfg.seed);
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  ParameterSet first = m.params.zeros_like();
  ParameterSet second = m.params.zeros_like();
  auto params = m.params.views();
  auto m1 = first.views();
  auto m2 = second.views();
  double lr = cfg.learning_rate;
  long step = 0;

  TrainResult result;
  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    LossTerms epoch_loss;
    for (Index begin = 0, b = 0; begin < n; begin += cfg.batch_size, ++b) {
      std::span<const Index> rows(order.data() + begin, static_cast<std::size_t>(std::min<Index>(cfg.batch_size, n - begin)));
      Batch batch{take_rows(data.input, rows), take_rows(data.target, rows), take_rows(data.geometry, rows), std::nullopt};
      if (data.proximity) batch.proximity = take_rows(*data.proximity, rows);

      LossTerms terms = loss(m, batch);
      if (!std::isfinite(terms.total)) {
        throw Error("non-finite loss at epoch " + std::to_string(epoch) + ", batch " + std::to_string(b) +
                    "; lower the learning rate");
      }
      double w = static_cast<double>(rows.size()) / static_cast<double>(n);
      epoch_loss.total += w * terms.total;
      epoch_loss.recon += w * terms.recon;
      epoch_loss.geom += w * terms.geom;
      epoch_loss.prox += w * terms.prox;

      ParameterSet grads = backward(m, batch);
      auto g = grads.views();
      ++step;
      if (cfg.optimizer == Optimizer::sgd) {
        for (std::size_t k = 0; k < params.size(); ++k)
          for (std::size_t e = 0; e < params[k].size(); ++e) params[k][e] -= lr * g[k][e];
      } else {
        const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
        const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
        for (std::size_t k = 0; k < params.size(); ++k) {
          for (std::size_t e = 0; e < params[k].size(); ++e) {
            double gk = g[k][e];
            m1[k][e] = cfg.beta1 * m1[k][e] + (1.0 - cfg.beta1) * gk;
            m2[k][e] = cfg.beta2 * m2[k][e] + (1.0 - cfg.beta2) * gk * gk;
            params[k][e] -= lr * (m1[k][e] / c1) / (std::sqrt(m2[k][e] / c2) + cfg.epsilon);
          }
        }
      }
    }
    result.history.push_back(epoch_loss);
    if (cfg.lr_decay) lr *= *cfg.lr_decay;
  }
  result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return result;
}

Matrix to_embedding_frame(const AEModel& m, const Matrix& latent)
{
  if (!m.geometry_scaling) return latent;
  const auto& s = *m.geometry_scaling;
  return ((latent.array().rowwise() * s.scale.array()).rowwise() + s.mean.array()).matrix();
}

Matrix encoder_inputs(const AEModel& m, const Forest& forest, const Matrix& new_points)
{
  if (new_points.cols() != forest.n_features) {
    throw Error("new points have " + std::to_string(new_points.cols()) + " features, expected " +
                std::to_string(forest.n_features));
  }
  if (!uses_proximity_input(m.variant)) return m.input_scaling ? m.input_scaling->apply(new_points) : new_points;
  Matrix p = extend_proximities(forest, new_points).values;
  if (m.variant == Variant::rf_prn_pro) {
    if (!m.prototypes) throw Error("RF-PRN-PRO model carries no prototype set");
    p = take_cols(p, m.prototypes->indices);
  }
  return p;
}

Embedding extend(const AEModel& m, const Forest& forest, const Matrix& new_points)
{
  Matrix inputs = encoder_inputs(m, forest, new_points);
  if (inputs.cols() != m.input_width()) throw Error("model input width does not match the forest it is paired with");
  Embedding e;
  e.coords = to_embedding_frame(m, forward(m, inputs).latent());
  e.source = Embedding::Source::encoder;
  return e;
}

FittedExtension fit_extension(Variant variant, const Dataset& train_ds, const Forest& forest, const Matrix& geometry,
                              const ExtensionOptions& options)
{
  if (forest.n_train != train_ds.rows()) throw Error("forest was not fit on this training set");
  if (geometry.rows() != train_ds.rows()) throw Error("geometry rows do not match training rows");
  if (geometry.cols() != options.arch.bottleneck) throw Error("geometry width does not match the bottleneck dimension");

  Standardization scaling = fit_standardization(train_ds.features);
  Matrix features = scaling.apply(train_ds.features);

  ProximityMatrix p;
  if (variant != Variant::rf_grae) p = train_proximities(forest, options.self_similarity);
  else p.values = Matrix::Zero(train_ds.rows(), 0);

  std::optional<PrototypeSet> prototypes;
  if (variant == Variant::rf_prn_pro) prototypes = select_prototypes(p, train_ds.labels, options.proto_fraction);
  VariantIO io = build_io(variant, features, p, prototypes ? &*prototypes : nullptr);

  FittedExtension out;
  std::optional<Index> head;
  if (io.proximity_target) head = io.proximity_target->cols();
  out.model = make_model(variant, io.input.cols(), io.target.cols(), head, options.arch, options.lambda, options.gamma,
                         options.train.seed);
  out.model.prototypes = prototypes;
  if (!uses_proximity_input(variant)) out.model.input_scaling = scaling;
  out.model.schema = train_ds.schema;

  Matrix g = geometry;
  if (options.standardize_geometry) {
    out.model.geometry_scaling = fit_standardization(geometry);
    g = out.model.geometry_scaling->apply(geometry);
  }
  Batch data{std::move(io.input), std::move(io.target), std::move(g), std::move(io.proximity_target)};
  out.training = train(out.model, data, options.train);
  ForwardPass pass = forward(out.model, data.input);
  out.final_loss = loss(out.model, pass, data);
  out.train_latent = to_embedding_frame(out.model, pass.latent());
  out.model.metadata = {{"options", options},
                        {"train_seconds", out.training.seconds},
                        {"final_loss",
                         {{"total", out.final_loss.total},
                          {"recon", out.final_loss.recon},
                          {"geom", out.final_loss.geom},
                          {"prox", out.final_loss.prox}}}};
  return out;
}

namespace {

nlohmann::json layer_json(const Dense& d)
{
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> w = d.weight;
  return {{"in", d.weight.rows()},
          {"out", d.weight.cols()},
          {"activation", d.activation == Activation::relu ? "relu" : "linear"},
          {"weight", std::vector<double>(w.data(), w.data() + w.size())},
          {"bias", std::vector<double>(d.bias.data(), d.bias.data() + d.bias.size())}};
}

Dense layer_from_json(const nlohmann::json& j)
{
  Dense d;
  auto in = j.at("in").get<Index>();
  auto out = j.at("out").get<Index>();
  auto w = j.at("weight").get<std::vector<double>>();
  auto b = j.at("bias").get<std::vector<double>>();
  if (static_cast<Index>(w.size()) != in * out || static_cast<Index>(b.size()) != out) throw Error("layer shape mismatch");
  d.weight = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(w.data(), in, out);
  d.bias = Eigen::Map<const RowVector>(b.data(), out);
  d.activation = j.at("activation").get<std::string>() == "relu" ? Activation::relu : Activation::linear;
  return d;
}

}  // namespace

void to_json(nlohmann::json& j, const AEModel& m)
{
  nlohmann::json enc = nlohmann::json::array();
  nlohmann::json dec = nlohmann::json::array();
  for (const auto& d : m.params.encoder) enc.push_back(layer_json(d));
  for (const auto& d : m.params.decoder) dec.push_back(layer_json(d));
  j = {{"format", "rfphate-model"},
       {"format_version", kModelFormatVersion},
       {"variant", to_string(m.variant)},
       {"lambda", m.lambda},
       {"gamma", m.gamma},
       {"encoder", std::move(enc)},
       {"decoder", std::move(dec)},
       {"prox_head", m.params.prox_head ? layer_json(*m.params.prox_head) : nlohmann::json(nullptr)},
       {"schema", m.schema},
       {"metadata", m.metadata}};
  j["input_scaling"] = m.input_scaling ? nlohmann::json(*m.input_scaling) : nlohmann::json(nullptr);
  j["geometry_scaling"] = m.geometry_scaling ? nlohmann::json(*m.geometry_scaling) : nlohmann::json(nullptr);
  if (m.prototypes) {
    j["prototypes"] = {{"indices", m.prototypes->indices},
                       {"per_class_counts", m.prototypes->per_class_counts},
                       {"fraction", m.prototypes->fraction}};
  } else {
    j["prototypes"] = nullptr;
  }
}

void from_json(const nlohmann::json& j, AEModel& m)
{
  if (j.value("format", std::string{}) != "rfphate-model") throw Error("not a model document");
  if (j.at("format_version").get<int>() != kModelFormatVersion) throw Error("unsupported model format version");
  m = AEModel{};
  m.variant = parse_variant(j.at("variant").get<std::string>());
  m.lambda = j.at("lambda").get<double>();
  m.gamma = j.at("gamma").get<double>();
  for (const auto& l : j.at("encoder")) m.params.encoder.push_back(layer_from_json(l));
  for (const auto& l : j.at("decoder")) m.params.decoder.push_back(layer_from_json(l));
  if (m.params.encoder.empty() || m.params.decoder.empty()) throw Error("model has no layers");
  if (!j.at("prox_head").is_null()) m.params.prox_head = layer_from_json(j.at("prox_head"));
  j.at("schema").get_to(m.schema);
  if (!j.at("input_scaling").is_null()) m.input_scaling = j.at("input_scaling").get<Standardization>();
  if (!j.at("geometry_scaling").is_null()) m.geometry_scaling = j.at("geometry_scaling").get<Standardization>();
  if (!j.at("prototypes").is_null()) {
    PrototypeSet p;
    j.at("prototypes").at("indices").get_to(p.indices);
    j.at("prototypes").at("per_class_counts").get_to(p.per_class_counts);
    p.fraction = j.at("prototypes").at("fraction").get<double>();
    m.prototypes = std::move(p);
  }
  m.metadata = j.value("metadata", nlohmann::json::object());
}

void save_model(const AEModel& m, const std::filesystem::path& path)
{
  std::ofstream out(path);
  if (!out) throw Error("cannot write '" + path.string() + "'");
  out << nlohmann::json(m).dump() << '\n';
}

AEModel load_model(const std::filesystem::path& path)
{
  std::ifstream in(path);
  if (!in) throw Error("cannot open '" + path.string() + "'");
  return nlohmann::json::parse(in).get<AEModel>();
}

void to_json(nlohmann::json& j, const Architecture& a)
{
  j = {{"hidden", a.hidden}, {"bottleneck", a.bottleneck}};
}

void from_json(const nlohmann::json& j, Architecture& a)
{
  a.hidden = j.value("hidden", a.hidden);
  a.bottleneck = j.value("bottleneck", a.bottleneck);
}

void to_json(nlohmann::json& j, const TrainConfig& c)
{
  j = {{"epochs", c.epochs},
       {"batch_size", c.batch_size},
       {"learning_rate", c.learning_rate},
       {"optimizer", c.optimizer == Optimizer::adam ? "adam" : "sgd"},
       {"beta1", c.beta1},
       {"beta2", c.beta2},
       {"epsilon", c.epsilon},
       {"seed", c.seed},
       {"lr_decay", c.lr_decay ? nlohmann::json(*c.lr_decay) : nlohmann::json(nullptr)}};
}

void from_json(const nlohmann::json& j, TrainConfig& c)
{
  c.epochs = j.value("epochs", c.epochs);
  c.batch_size = j.value("batch_size", c.batch_size);
  c.learning_rate = j.value("learning_rate", c.learning_rate);
  if (j.contains("optimizer")) {
    auto name = j.at("optimizer").get<std::string>();
    if (name == "adam") c.optimizer = Optimizer::adam;
    else if (name == "sgd") c.optimizer = Optimizer::sgd;
    else throw Error("unknown optimizer '" + name + "'");
  }
  c.beta1 = j.value("beta1", c.beta1);
  c.beta2 = j.value("beta2", c.beta2);
  c.epsilon = j.value("epsilon", c.epsilon);
  c.seed = j.value("seed", c.seed);
  if (j.contains("lr_decay") && !j.at("lr_decay").is_null()) c.lr_decay = j.at("lr_decay").get<double>();
}

void to_json(nlohmann::json& j, const ExtensionOptions& o)
{
  j = {{"architecture", o.arch},
       {"train", o.train},
       {"lambda", o.lambda},
       {"gamma", o.gamma},
       {"proto_fraction", o.proto_fraction},
       {"standardize_geometry", o.standardize_geometry},
       {"self_similarity", to_string(o.self_similarity)}};
}

void from_json(const nlohmann::json& j, ExtensionOptions& o)
{
  if (j.contains("architecture")) j.at("architecture").get_to(o.arch);
  if (j.contains("train")) j.at("train").get_to(o.train);
  o.lambda = j.value("lambda", o.lambda);
  o.gamma = j.value("gamma", o.gamma);
  o.proto_fraction = j.value("proto_fraction", o.proto_fraction);
  o.standardize_geometry = j.value("standardize_geometry", o.standardize_geometry);
  if (j.contains("self_similarity")) o.self_similarity = parse_self_similarity(j.at("self_similarity").get<std::string>());
}

}  // namespace rfphate
