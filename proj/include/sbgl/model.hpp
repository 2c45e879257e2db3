#pragma once

#include "sbgl/data.hpp"
#include "sbgl/encoder.hpp"
#include "sbgl/metrics.hpp"

namespace sbgl {

enum class Ablation : std::uint8_t { Full = 0, NoRmp = 1, NoSpmp = 2 };

const char* ablation_name(Ablation a);
std::optional<Ablation> parse_ablation(const std::string& name);

/// Everything that defines a training run besides the data and the split.
/// final_dim is the width of the representation handed to the classifier;
/// the per-channel width is derived from it so that ablations keep the
/// classifier input comparable: final_dim / 4 with both encoders enabled,
/// final_dim / 2 with one.
struct HyperParams {
  int final_dim = 32;
  int layers = 2;
  double injection_ratio = 0.15;
  double rank_ratio = 0.1;
  int rank_override = 0;  // when positive, use this exact rank instead of the ratio
  double learning_rate = 5e-4;
  double weight_decay = 1e-5;
  int epochs = 200;
  int mlp_hidden = 32;
  Ablation ablation = Ablation::Full;
  std::uint64_t seed = 0;

  int encoder_count() const { return ablation == Ablation::Full ? 2 : 1; }
  int internal_dim() const;
  int resolve_rank(index_t n_u, index_t n_v) const;
  EncoderConfig encoder_config() const;
  void validate() const;

  /// Stable fingerprint of every field; stored in checkpoints so a file is
  /// never silently loaded under different settings.
  std::uint64_t digest() const;
};

/// Trainable state: free node features for both parts plus the two-layer
/// classifier. w1 maps the concatenated edge representation (width 2 *
/// final_dim) to the hidden layer.
struct ModelParams {
  Mat x_u, x_v;
  Mat w1;
  Vec b1;
  Vec w2;
  double b2 = 0.0;

  static ModelParams zeros_like(const ModelParams& shape);
  double sum_squares() const;
  bool all_finite() const;
};

/// Gradients share the parameter layout exactly.
using Gradients = ModelParams;

struct AdamState {
  ModelParams first, second;  // running moment estimates
  long step = 0;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState init(const ModelParams& shape);
};

/// Edge endpoints in struct-of-arrays form plus 0/1 labels
/// (positive sign = 1).
struct EdgeBatch {
  std::vector<index_t> u, v;
  Vec labels;

  index_t size() const { return static_cast<index_t>(u.size()); }
  static EdgeBatch from(const std::vector<SignedEdge>& edges);
};

/// Glorot-uniform draws for the features and weight matrices (limit
/// sqrt(6 / (fan_in + fan_out)) per matrix), zero biases. z_width is the
/// final representation width; the classifier input is twice that. The draw
/// order is fixed, so a seed pins every coefficient.
ModelParams init_params(index_t n_u, index_t n_v, int d, int hidden, int z_width,
                        std::uint64_t seed);

/// Runs the enabled encoders over the parameter features and concatenates.
FinalReps forward_reps(const NormalizedGraph& graph, const LowRankStore* store,
                       const EncoderConfig& config, const ModelParams& params);

/// Edge scores sigma(w2 . relu(w1^T [z_u | z_v] + b1) + b2), clamped to
/// [1e-12, 1 - 1e-12] so downstream logs stay finite. Processes edges in
/// fixed-size chunks; memory does not scale with the batch.
Vec score_edges(const FinalReps& z, const EdgeBatch& batch, const ModelParams& params);

/// Mean binary cross-entropy against 0/1 labels.
double bce_loss(const Vec& scores, const Vec& labels);

/// bce + weight_decay * sum of squares over every parameter tensor. The
/// quadratic penalty is the only weight decay in the system; the optimizer
/// applies no extra decay of its own.
double total_loss(double bce, const ModelParams& params, double weight_decay);

/// Exact gradient of total_loss for the full model: classifier backward,
/// scatter onto the representation rows, encoder adjoint back to the
/// features, plus the 2 * weight_decay * theta penalty term everywhere.
Gradients backward(const NormalizedGraph& graph, const LowRankStore* store,
                   const EncoderConfig& config, const ModelParams& params,
                   const EdgeBatch& batch, const FinalReps& z, const Vec& scores,
                   double weight_decay);

/// One Adam update in place (bias-corrected moments, epsilon added after the
/// square root).
void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr);

struct EpochLog {
  int epoch = 0;
  double train_loss = 0.0;
  double val_auc = 0.0;
  double val_macro_f1 = 0.0;
  double seconds = 0.0;
};

void write_training_log(const std::vector<EpochLog>& log, const std::string& path);

struct TrainedModel {
  ModelParams params;  // snapshot at the best validation AUC
  std::vector<EpochLog> log;
  int best_epoch = 0;
  double best_val_auc = 0.0;
  HyperParams hp;
};

/// Full-batch training on the split's training edges, validation evaluated
/// after every epoch, best-validation-AUC snapshot returned (ties keep the
/// earlier epoch). The propagation graph is built from training edges only.
/// A precomputed factor store for the training graph may be passed to share
/// work across runs; it must match the graph, rank, and seed that this run
/// would compute itself. Non-finite losses or gradients abort with a
/// Numeric error naming the epoch.
TrainedModel fit(const EdgeSplit& sp, index_t n_u, index_t n_v, const HyperParams& hp,
                 const LowRankStore* shared_store = nullptr);

/// Scores a batch against trained representations and evaluates it.
EvalReport evaluate_edges(const FinalReps& z, const EdgeBatch& batch,
                          const ModelParams& params);

void save_checkpoint(const TrainedModel& model, const std::string& path);

/// Loads a checkpoint written by save_checkpoint. The stored hyperparameter
/// digest must match `expected`, which guards against evaluating a model
/// under settings it was not trained with.
ModelParams load_checkpoint(const std::string& path, const HyperParams& expected);

}  // namespace sbgl
