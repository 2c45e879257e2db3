#include "sbgl/encoder.hpp"

#include <cmath>
#include <string>

namespace sbgl {

void EncoderConfig::validate() const {
  if (layers < 0)
    raise(Err::InvalidArgument, "layer count must be non-negative, got " + std::to_string(layers));
  if (!(injection_ratio >= 0.0 && injection_ratio <= 1.0))
    raise(Err::InvalidArgument,
          "injection ratio must lie in [0, 1], got " + std::to_string(injection_ratio));
  if (!use_spmp && !use_rmp)
    raise(Err::InvalidArgument, "at least one encoder must be enabled");
  if (!layer_weights.empty()) {
    if (static_cast<int>(layer_weights.size()) != layers + 1)
      raise(Err::InvalidArgument,
            "expected " + std::to_string(layers + 1) + " layer weights, got " +
                std::to_string(layer_weights.size()));
    double sum = 0.0;
    for (double w : layer_weights) {
      if (w < 0.0) raise(Err::InvalidArgument, "layer weights must be non-negative");
      sum += w;
    }
    if (std::abs(sum - 1.0) > 1e-9)
      raise(Err::InvalidArgument, "layer weights must sum to 1, got " + std::to_string(sum));
  }
}

std::vector<double> EncoderConfig::resolved_weights() const {
  if (!layer_weights.empty()) return layer_weights;
  return std::vector<double>(static_cast<std::size_t>(layers) + 1,
                             1.0 / static_cast<double>(layers + 1));
}

namespace {

// The two encoders share one recurrence; only the operator applications
// differ. Ops supplies the four part-to-part products and their adjoints.
struct SparseOps {
  const NormalizedGraph& g;
  void to_v_pos(const Mat& x, Mat& out) const { g.rt_pos.multiply_into(x, out); }
  void to_v_neg(const Mat& x, Mat& out) const { g.rt_neg.multiply_into(x, out); }
  void to_u_pos(const Mat& x, Mat& out) const { g.qt_pos.multiply_into(x, out); }
  void to_u_neg(const Mat& x, Mat& out) const { g.qt_neg.multiply_into(x, out); }
  void adj_to_v_pos(const Mat& x, Mat& out) const { g.rt_pos_adj.multiply_into(x, out); }
  void adj_to_v_neg(const Mat& x, Mat& out) const { g.rt_neg_adj.multiply_into(x, out); }
  void adj_to_u_pos(const Mat& x, Mat& out) const { g.qt_pos_adj.multiply_into(x, out); }
  void adj_to_u_neg(const Mat& x, Mat& out) const { g.qt_neg_adj.multiply_into(x, out); }
};

struct LowRankOps {
  const LowRankStore& s;
  void to_v_pos(const Mat& x, Mat& out) const { rmp_apply_into(s.at(MatrixId::RtPos), x, out); }
  void to_v_neg(const Mat& x, Mat& out) const { rmp_apply_into(s.at(MatrixId::RtNeg), x, out); }
  void to_u_pos(const Mat& x, Mat& out) const { rmp_apply_into(s.at(MatrixId::QtPos), x, out); }
  void to_u_neg(const Mat& x, Mat& out) const { rmp_apply_into(s.at(MatrixId::QtNeg), x, out); }
  void adj_to_v_pos(const Mat& x, Mat& out) const {
    rmp_apply_adjoint_into(s.at(MatrixId::RtPos), x, out);
  }
  void adj_to_v_neg(const Mat& x, Mat& out) const {
    rmp_apply_adjoint_into(s.at(MatrixId::RtNeg), x, out);
  }
  void adj_to_u_pos(const Mat& x, Mat& out) const {
    rmp_apply_adjoint_into(s.at(MatrixId::QtPos), x, out);
  }
  void adj_to_u_neg(const Mat& x, Mat& out) const {
    rmp_apply_adjoint_into(s.at(MatrixId::QtNeg), x, out);
  }
};

template <typename Ops>
HiddenEmbeddings encode_impl(const Ops& ops, index_t n_u, index_t n_v, const Mat& x_u,
                             const Mat& x_v, const EncoderConfig& config) {
  config.validate();
  if (x_u.rows() != n_u || x_v.rows() != n_v)
    raise(Err::ShapeMismatch, "feature row counts do not match the part sizes");
  if (x_u.cols() != x_v.cols())
    raise(Err::ShapeMismatch, "both parts must share the feature width");
  const index_t d = x_u.cols();
  const std::vector<double> w = config.resolved_weights();
  const double c = config.injection_ratio;
  const double prop = 1.0 - c;

  // Layer 0 states are the features themselves, on both channels.
  Mat p_u = x_u, m_u = x_u, p_v = x_v, m_v = x_v;
  Mat agg_pu = w[0] * x_u, agg_mu = w[0] * x_u;
  Mat agg_pv = w[0] * x_v, agg_mv = w[0] * x_v;

  Mat t1, t2, np_u, nm_u, np_v, nm_v;
  for (int l = 1; l <= config.layers; ++l) {
    // Both directions read the other part's previous-layer states, so all
    // four next states are formed before any current state is replaced.
    if (prop != 0.0) {
      ops.to_v_pos(p_u, t1);
      ops.to_v_neg(m_u, t2);
      np_v = prop * (t1 + t2) + c * x_v;
      ops.to_v_neg(p_u, t1);
      ops.to_v_pos(m_u, t2);
      nm_v = prop * (t1 + t2);
      ops.to_u_pos(p_v, t1);
      ops.to_u_neg(m_v, t2);
      np_u = prop * (t1 + t2) + c * x_u;
      ops.to_u_neg(p_v, t1);
      ops.to_u_pos(m_v, t2);
      nm_u = prop * (t1 + t2);
    } else {
      np_v = x_v;
      nm_v = Mat::Zero(n_v, d);
      np_u = x_u;
      nm_u = Mat::Zero(n_u, d);
    }
    p_u.swap(np_u);
    m_u.swap(nm_u);
    p_v.swap(np_v);
    m_v.swap(nm_v);
    agg_pu += w[static_cast<std::size_t>(l)] * p_u;
    agg_mu += w[static_cast<std::size_t>(l)] * m_u;
    agg_pv += w[static_cast<std::size_t>(l)] * p_v;
    agg_mv += w[static_cast<std::size_t>(l)] * m_v;
  }

  HiddenEmbeddings h;
  h.h_u.resize(n_u, 2 * d);
  h.h_u.leftCols(d) = agg_pu;
  h.h_u.rightCols(d) = agg_mu;
  h.h_v.resize(n_v, 2 * d);
  h.h_v.leftCols(d) = agg_pv;
  h.h_v.rightCols(d) = agg_mv;
  return h;
}

// Adjoint of encode_impl with respect to (x_u, x_v). The recurrence is
// linear, so the transposed recurrence runs on gradient states alone:
// start from the top layer's aggregation weight, walk down collecting each
// layer's direct aggregation term plus the flow from the layer above, and
// pick up the injection term (positive channel, layers >= 1) on the way.
template <typename Ops>
void vjp_impl(const Ops& ops, index_t n_u, index_t n_v, const Mat& grad_pu,
              const Mat& grad_mu, const Mat& grad_pv, const Mat& grad_mv,
              const EncoderConfig& config, Mat& gx_u, Mat& gx_v) {
  const std::vector<double> w = config.resolved_weights();
  const double c = config.injection_ratio;
  const double prop = 1.0 - c;
  const int layers = config.layers;
  const std::size_t top = static_cast<std::size_t>(layers);

  Mat g_pu = w[top] * grad_pu, g_mu = w[top] * grad_mu;
  Mat g_pv = w[top] * grad_pv, g_mv = w[top] * grad_mv;
  gx_u = Mat::Zero(n_u, grad_pu.cols());
  gx_v = Mat::Zero(n_v, grad_pv.cols());

  Mat t1, t2, n_pu, n_mu, n_pv, n_mv;
  for (int l = layers; l >= 1; --l) {
    gx_u += c * g_pu;
    gx_v += c * g_pv;
    const double wl = w[static_cast<std::size_t>(l - 1)];
    if (prop != 0.0) {
      ops.adj_to_v_pos(g_pv, t1);
      ops.adj_to_v_neg(g_mv, t2);
      n_pu = wl * grad_pu + prop * (t1 + t2);
      ops.adj_to_v_neg(g_pv, t1);
      ops.adj_to_v_pos(g_mv, t2);
      n_mu = wl * grad_mu + prop * (t1 + t2);
      ops.adj_to_u_pos(g_pu, t1);
      ops.adj_to_u_neg(g_mu, t2);
      n_pv = wl * grad_pv + prop * (t1 + t2);
      ops.adj_to_u_neg(g_pu, t1);
      ops.adj_to_u_pos(g_mu, t2);
      n_mv = wl * grad_mv + prop * (t1 + t2);
    } else {
      n_pu = wl * grad_pu;
      n_mu = wl * grad_mu;
      n_pv = wl * grad_pv;
      n_mv = wl * grad_mv;
    }
    g_pu.swap(n_pu);
    g_mu.swap(n_mu);
    g_pv.swap(n_pv);
    g_mv.swap(n_mv);
  }
  // Layer 0: both channels are the features themselves.
  gx_u += g_pu + g_mu;
  gx_v += g_pv + g_mv;
}

void check_store_dims(const LowRankStore& store, index_t n_u, index_t n_v) {
  if (!store.complete()) raise(Err::MissingFactors, "factor store is incomplete");
  const SvdFactors& rt = store.at(MatrixId::RtPos);
  const SvdFactors& qt = store.at(MatrixId::QtPos);
  if (rt.u_mat.rows() != n_v || rt.v_mat.rows() != n_u || qt.u_mat.rows() != n_u ||
      qt.v_mat.rows() != n_v)
    raise(Err::ShapeMismatch, "factor store dimensions do not match the graph");
}

}  // namespace

void spmp_step_u_to_v(const NormalizedGraph& graph, const Mat& p_u, const Mat& m_u,
                      const Mat& x_v, double injection_ratio, Mat& p_v, Mat& m_v) {
  const double prop = 1.0 - injection_ratio;
  Mat t1, t2;
  graph.rt_pos.multiply_into(p_u, t1);
  graph.rt_neg.multiply_into(m_u, t2);
  p_v = prop * (t1 + t2) + injection_ratio * x_v;
  graph.rt_neg.multiply_into(p_u, t1);
  graph.rt_pos.multiply_into(m_u, t2);
  m_v = prop * (t1 + t2);
}

void spmp_step_v_to_u(const NormalizedGraph& graph, const Mat& p_v, const Mat& m_v,
                      const Mat& x_u, double injection_ratio, Mat& p_u, Mat& m_u) {
  const double prop = 1.0 - injection_ratio;
  Mat t1, t2;
  graph.qt_pos.multiply_into(p_v, t1);
  graph.qt_neg.multiply_into(m_v, t2);
  p_u = prop * (t1 + t2) + injection_ratio * x_u;
  graph.qt_neg.multiply_into(p_v, t1);
  graph.qt_pos.multiply_into(m_v, t2);
  m_u = prop * (t1 + t2);
}

HiddenEmbeddings spmp_encode(const NormalizedGraph& graph, const Mat& x_u, const Mat& x_v,
                             const EncoderConfig& config) {
  return encode_impl(SparseOps{graph}, graph.n_u, graph.n_v, x_u, x_v, config);
}

HiddenEmbeddings rmp_encode(const LowRankStore& store, index_t n_u, index_t n_v,
                            const Mat& x_u, const Mat& x_v, const EncoderConfig& config) {
  check_store_dims(store, n_u, n_v);
  return encode_impl(LowRankOps{store}, n_u, n_v, x_u, x_v, config);
}

FinalReps combine_final(const HiddenEmbeddings& h_spmp, const HiddenEmbeddings& h_rmp,
                        const EncoderConfig& config) {
  config.validate();
  FinalReps z;
  if (config.use_spmp && config.use_rmp) {
    if (h_spmp.h_u.rows() != h_rmp.h_u.rows() || h_spmp.h_v.rows() != h_rmp.h_v.rows() ||
        h_spmp.h_u.cols() != h_rmp.h_u.cols() || h_spmp.h_v.cols() != h_rmp.h_v.cols())
      raise(Err::ShapeMismatch, "encoder outputs disagree in shape");
    z.z_u.resize(h_spmp.h_u.rows(), h_spmp.h_u.cols() + h_rmp.h_u.cols());
    z.z_u.leftCols(h_spmp.h_u.cols()) = h_spmp.h_u;
    z.z_u.rightCols(h_rmp.h_u.cols()) = h_rmp.h_u;
    z.z_v.resize(h_spmp.h_v.rows(), h_spmp.h_v.cols() + h_rmp.h_v.cols());
    z.z_v.leftCols(h_spmp.h_v.cols()) = h_spmp.h_v;
    z.z_v.rightCols(h_rmp.h_v.cols()) = h_rmp.h_v;
  } else if (config.use_spmp) {
    z.z_u = h_spmp.h_u;
    z.z_v = h_spmp.h_v;
  } else {
    z.z_u = h_rmp.h_u;
    z.z_v = h_rmp.h_v;
  }
  return z;
}

void encoder_vjp(const NormalizedGraph& graph, const LowRankStore* store,
                 const EncoderConfig& config, const Mat& grad_z_u, const Mat& grad_z_v,
                 Mat& grad_x_u, Mat& grad_x_v) {
  config.validate();
  if (grad_z_u.rows() != graph.n_u || grad_z_v.rows() != graph.n_v)
    raise(Err::ShapeMismatch, "gradient row counts do not match the part sizes");
  const int encoders = (config.use_spmp ? 1 : 0) + (config.use_rmp ? 1 : 0);
  const index_t width = grad_z_u.cols();
  if (width != grad_z_v.cols() || width % (2 * encoders) != 0)
    raise(Err::ShapeMismatch, "gradient width is not a multiple of the channel layout");
  const index_t d = width / (2 * encoders);
  if (config.use_rmp) {
    if (store == nullptr) raise(Err::MissingFactors, "rank-k encoder enabled without factors");
    check_store_dims(*store, graph.n_u, graph.n_v);
  }

  index_t offset = 0;
  grad_x_u = Mat::Zero(graph.n_u, d);
  grad_x_v = Mat::Zero(graph.n_v, d);
  Mat gx_u, gx_v;
  if (config.use_spmp) {
    vjp_impl(SparseOps{graph}, graph.n_u, graph.n_v, Mat(grad_z_u.middleCols(0, d)),
             Mat(grad_z_u.middleCols(d, d)), Mat(grad_z_v.middleCols(0, d)),
             Mat(grad_z_v.middleCols(d, d)), config, gx_u, gx_v);
    grad_x_u += gx_u;
    grad_x_v += gx_v;
    offset = 2 * d;
  }
  if (config.use_rmp) {
    vjp_impl(LowRankOps{*store}, graph.n_u, graph.n_v, Mat(grad_z_u.middleCols(offset, d)),
             Mat(grad_z_u.middleCols(offset + d, d)), Mat(grad_z_v.middleCols(offset, d)),
             Mat(grad_z_v.middleCols(offset + d, d)), config, gx_u, gx_v);
    grad_x_u += gx_u;
    grad_x_v += gx_v;
  }
}

}  // namespace sbgl
