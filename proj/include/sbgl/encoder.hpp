#pragma once

#include "sbgl/graph.hpp"
#include "sbgl/lowrank.hpp"

namespace sbgl {

/// Shared settings for both propagation encoders.
///
/// layers (L) counts propagation rounds; injection_ratio (c) is the restart
/// weight on the node's own features; layer_weights aggregates the L+1 layer
/// states and defaults to the uniform 1/(L+1) when left empty. When a custom
/// vector is supplied it must have L+1 non-negative entries summing to 1.
struct EncoderConfig {
  int layers = 2;
  double injection_ratio = 0.15;
  std::vector<double> layer_weights;
  bool use_spmp = true;
  bool use_rmp = true;

  void validate() const;
  std::vector<double> resolved_weights() const;
};

/// Per-part hidden embeddings. Columns [0, d) hold the aggregated positive
/// channel, columns [d, 2d) the negative channel.
struct HiddenEmbeddings {
  Mat h_u;  // |U| x 2d
  Mat h_v;  // |V| x 2d
};

/// Final node representations fed to the classifier.
struct FinalReps {
  Mat z_u;
  Mat z_v;
};

/// One propagation round, U side to V side. Reads the previous-layer states
/// (p_u, m_u) and writes the next-layer states (p_v, m_v):
///   p_v = (1-c) * (RT+ p_u + RT- m_u) + c * x_v
///   m_v = (1-c) * (RT- p_u + RT+ m_u)
/// Feature injection enters the positive channel only.
void spmp_step_u_to_v(const NormalizedGraph& graph, const Mat& p_u, const Mat& m_u,
                      const Mat& x_v, double injection_ratio, Mat& p_v, Mat& m_v);

/// Mirror of spmp_step_u_to_v using the QT operators.
void spmp_step_v_to_u(const NormalizedGraph& graph, const Mat& p_v, const Mat& m_v,
                      const Mat& x_u, double injection_ratio, Mat& p_u, Mat& m_u);

/// Runs the full signed propagation: both parts start from their features
/// (layer 0), each round updates both parts from the other part's
/// previous-layer states, and the weighted sum over layers 0..L forms the
/// positive and negative channels of the output.
HiddenEmbeddings spmp_encode(const NormalizedGraph& graph, const Mat& x_u,
                             const Mat& x_v, const EncoderConfig& config);

/// Same recurrence with every sparse product routed through the rank-k
/// factors of the corresponding operator.
HiddenEmbeddings rmp_encode(const LowRankStore& store, index_t n_u, index_t n_v,
                            const Mat& x_u, const Mat& x_v, const EncoderConfig& config);

/// Concatenates the hidden embeddings of the enabled encoders, exact-rank
/// block first. With a single encoder enabled the output is that encoder's
/// hidden embedding unchanged.
FinalReps combine_final(const HiddenEmbeddings& h_spmp, const HiddenEmbeddings& h_rmp,
                        const EncoderConfig& config);

/// Pulls gradients on the final representations back to gradients on the
/// input features. The whole encoder is linear in (x_u, x_v), so the adjoint
/// runs the transposed recurrence directly; no forward activations are
/// needed. grad_z_* must be |part| x (4d) when both encoders are enabled and
/// |part| x (2d) otherwise. The store pointer may be null when the rank-k
/// encoder is disabled.
void encoder_vjp(const NormalizedGraph& graph, const LowRankStore* store,
                 const EncoderConfig& config, const Mat& grad_z_u, const Mat& grad_z_v,
                 Mat& grad_x_u, Mat& grad_x_v);

}  // namespace sbgl
