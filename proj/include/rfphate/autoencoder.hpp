#pragma once

#include "rfphate/common.hpp"
#include "rfphate/data.hpp"
#include "rfphate/embed.hpp"
#include "rfphate/forest.hpp"
#include "rfphate/proximity.hpp"

#include <json.hpp>

#include <filesystem>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace rfphate {

/// Encoder input / decoder target pairings:
///   rf_grae      X -> X
///   rf_prox_in   P -> X
///   rf_prox_reg  X -> X, plus a linear bottleneck head predicting P
///   rf_prn       P -> P
///   rf_prn_pro   P[:, prototypes] -> P[:, prototypes]
enum class Variant { rf_grae, rf_prox_in, rf_prox_reg, rf_prn, rf_prn_pro };

inline constexpr Variant kAllVariants[] = {Variant::rf_grae, Variant::rf_prox_in, Variant::rf_prox_reg, Variant::rf_prn,
                                           Variant::rf_prn_pro};

/// Accepts "rf-prn", "RF-PRN", "rf_prn", ...
Variant parse_variant(std::string_view text);
/// Display name, e.g. "RF-PRN-PRO".
std::string_view to_string(Variant v);
bool uses_proximity_input(Variant v);

enum class Activation { linear, relu };

struct Dense
{
  Matrix weight;   // in x out
  RowVector bias;  // out
  Activation activation = Activation::linear;
};

/// Trainable weights. Gradients and optimizer moments use the same shape.
struct ParameterSet
{
  std::vector<Dense> encoder;
  std::vector<Dense> decoder;
  std::optional<Dense> prox_head;

  Index size() const;
  ParameterSet zeros_like() const;
  Vector flatten() const;
  void assign(const Vector& flat);

  /// Every weight and bias tensor as a flat span, in a fixed order
  /// (encoder, decoder, head; weight before bias).
  std::vector<std::span<double>> views();
  std::vector<std::span<const double>> views() const;
};

struct Architecture
{
  std::vector<int> hidden{800, 400, 100};
  int bottleneck = 2;
};

struct AEModel
{
  Variant variant = Variant::rf_grae;
  ParameterSet params;
  double lambda = 1.0;
  double gamma = 1.0;  // proximity-head weight, rf_prox_reg only
  std::optional<PrototypeSet> prototypes;
  std::optional<Standardization> input_scaling;     // raw-feature encoders
  std::optional<Standardization> geometry_scaling;  // maps latents back to the embedding's frame
  std::vector<ColumnSpec> schema;                   // how new CSV rows are encoded
  nlohmann::json metadata = nlohmann::json::object();

  Index input_width() const { return params.encoder.front().weight.rows(); }
  Index output_width() const { return params.decoder.back().weight.cols(); }
  Index bottleneck_dim() const { return params.encoder.back().weight.cols(); }
};

/// Builds the layer stack for a variant with uniform fan-in initialization
/// (bound sqrt(6 / fan_in) for ReLU layers, sqrt(3 / fan_in) for linear ones,
/// zero biases). The decoder mirrors the encoder's hidden widths.
AEModel make_model(Variant variant, Index input_width, Index output_width, std::optional<Index> prox_width,
                   const Architecture& arch, double lambda, double gamma, std::uint64_t seed);

struct VariantIO
{
  Matrix input;
  Matrix target;
  std::optional<Matrix> proximity_target;  // rf_prox_reg head target
};

/// `features` are the (standardized) training features, `proximities` the
/// training proximity block. `prototypes` is required iff rf_prn_pro.
VariantIO build_io(Variant variant, const Matrix& features, const ProximityMatrix& proximities,
                   const PrototypeSet* prototypes);

struct ForwardPass
{
  std::vector<Matrix> encoder_outputs;  // post-activation output of each encoder layer
  std::vector<Matrix> decoder_outputs;
  std::optional<Matrix> prox_prediction;

  const Matrix& latent() const { return encoder_outputs.back(); }
  const Matrix& reconstruction() const { return decoder_outputs.back(); }
};

ForwardPass forward(const AEModel& m, const Matrix& batch);

/// Rows of one mini-batch: encoder input, reconstruction target, regularizing
/// embedding rows, and (rf_prox_reg) proximity rows for the head.
struct Batch
{
  Matrix input;
  Matrix target;
  Matrix geometry;
  std::optional<Matrix> proximity;
};

struct LossTerms
{
  double total = 0.0;
  double recon = 0.0;
  double geom = 0.0;
  double prox = 0.0;
};

/// MSE(target, recon) + lambda MSE(Z, G) + gamma MSE(P, head(Z)); each MSE
/// averages over all entries.
LossTerms loss(const AEModel& m, const Batch& batch);
LossTerms loss(const AEModel& m, const ForwardPass& pass, const Batch& batch);

/// Exact gradient of loss() with respect to every weight and bias.
ParameterSet backward(const AEModel& m, const Batch& batch);

enum class Optimizer { sgd, adam };

struct TrainConfig
{
  int epochs = 200;
  int batch_size = 64;
  double learning_rate = 1e-3;
  Optimizer optimizer = Optimizer::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  std::uint64_t seed = 0;
  std::optional<double> lr_decay;  // per-epoch multiplicative factor
};

struct TrainResult
{
  std::vector<LossTerms> history;  // batch-size-weighted mean over each epoch
  double seconds = 0.0;
};

/// Mini-batch training with seeded shuffling. `data` rows are the full
/// training set. Throws on a non-finite loss, naming epoch and batch.
TrainResult train(AEModel& m, const Batch& data, const TrainConfig& cfg);

/// Maps encoder latents back into the regularizing embedding's frame.
Matrix to_embedding_frame(const AEModel& m, const Matrix& latent);

/// Encoder inputs for unlabeled points: scaled raw features, or out-of-sample
/// proximities (prototype columns for rf_prn_pro).
Matrix encoder_inputs(const AEModel& m, const Forest& forest, const Matrix& new_points);

/// Out-of-sample extension. Takes features only: no labels are consumed.
Embedding extend(const AEModel& m, const Forest& forest, const Matrix& new_points);

/// Everything needed to fit one extension network on a training block.
struct ExtensionOptions
{
  Architecture arch{};
  TrainConfig train{};
  double lambda = 1.0;
  double gamma = 1.0;
  double proto_fraction = 0.1;
  bool standardize_geometry = true;
  SelfSimilarity self_similarity = SelfSimilarity::zero;
};

struct FittedExtension
{
  AEModel model;
  TrainResult training;
  LossTerms final_loss;  // full training set, after training
  Matrix train_latent;   // embedding frame
};

/// Standardizes features (raw-feature variants), computes training
/// proximities and prototypes as needed, and trains. `train` holds the raw
/// training rows and labels, `forest` was fit on exactly those rows, and
/// `geometry` is the reference embedding of those rows.
FittedExtension fit_extension(Variant variant, const Dataset& train, const Forest& forest, const Matrix& geometry,
                              const ExtensionOptions& options);

void to_json(nlohmann::json& j, const AEModel& m);
void from_json(const nlohmann::json& j, AEModel& m);
void save_model(const AEModel& m, const std::filesystem::path& path);
AEModel load_model(const std::filesystem::path& path);

void to_json(nlohmann::json& j, const Architecture& a);
void from_json(const nlohmann::json& j, Architecture& a);
void to_json(nlohmann::json& j, const TrainConfig& c);
void from_json(const nlohmann::json& j, TrainConfig& c);
void to_json(nlohmann::json& j, const ExtensionOptions& o);
void from_json(const nlohmann::json& j, ExtensionOptions& o);

}  // namespace rfphate
