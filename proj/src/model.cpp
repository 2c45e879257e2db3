#include "sbgl/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>

namespace sbgl {

const char* ablation_name(Ablation a) {
  switch (a) {
    case Ablation::Full: return "full";
    case Ablation::NoRmp: return "no-rmp";
    case Ablation::NoSpmp: return "no-spmp";
  }
  return "unknown";
}

std::optional<Ablation> parse_ablation(const std::string& name) {
  if (name == "full") return Ablation::Full;
  if (name == "no-rmp") return Ablation::NoRmp;
  if (name == "no-spmp") return Ablation::NoSpmp;
  return std::nullopt;
}

int HyperParams::internal_dim() const { return final_dim / (2 * encoder_count()); }

int HyperParams::resolve_rank(index_t n_u, index_t n_v) const {
  if (rank_override > 0) return rank_override;
  return target_rank(n_u, n_v, rank_ratio);
}

EncoderConfig HyperParams::encoder_config() const {
  EncoderConfig cfg;
  cfg.layers = layers;
  cfg.injection_ratio = injection_ratio;
  cfg.use_spmp = ablation != Ablation::NoSpmp;
  cfg.use_rmp = ablation != Ablation::NoRmp;
  return cfg;
}

void HyperParams::validate() const {
  const int channels = 2 * encoder_count();
  if (final_dim < channels || final_dim % channels != 0)
    raise(Err::InvalidArgument,
          "final dimension must be a positive multiple of " + std::to_string(channels));
  if (layers < 0) raise(Err::InvalidArgument, "negative layer count");
  if (!(injection_ratio >= 0.0 && injection_ratio <= 1.0))
    raise(Err::InvalidArgument, "injection ratio must lie in [0, 1]");
  if (ablation != Ablation::NoRmp && rank_override == 0 &&
      !(rank_ratio > 0.0 && rank_ratio < 1.0))
    raise(Err::InvalidRatio, "rank ratio must lie in (0, 1)");
  if (rank_override < 0) raise(Err::InvalidArgument, "negative rank override");
  if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
    raise(Err::InvalidArgument, "learning rate must be positive");
  if (weight_decay < 0.0) raise(Err::InvalidArgument, "negative weight decay");
  if (epochs < 1) raise(Err::InvalidArgument, "at least one epoch required");
  if (mlp_hidden < 1) raise(Err::InvalidArgument, "hidden width must be positive");
}

std::uint64_t HyperParams::digest() const {
  char buf[320];
  std::snprintf(buf, sizeof(buf), "%d|%d|%.17g|%.17g|%d|%.17g|%.17g|%d|%d|%s|%llu",
                final_dim, layers, injection_ratio, rank_ratio, rank_override,
                learning_rate, weight_decay, epochs, mlp_hidden, ablation_name(ablation),
                static_cast<unsigned long long>(seed));
  std::uint64_t hash = 0xcbf29ce484222325ULL;
  for (const char* p = buf; *p; ++p) {
    hash ^= static_cast<std::uint64_t>(static_cast<unsigned char>(*p));
    hash *= 0x100000001b3ULL;
  }
  return hash;
}

ModelParams ModelParams::zeros_like(const ModelParams& shape) {
  ModelParams p;
  p.x_u = Mat::Zero(shape.x_u.rows(), shape.x_u.cols());
  p.x_v = Mat::Zero(shape.x_v.rows(), shape.x_v.cols());
  p.w1 = Mat::Zero(shape.w1.rows(), shape.w1.cols());
  p.b1 = Vec::Zero(shape.b1.size());
  p.w2 = Vec::Zero(shape.w2.size());
  p.b2 = 0.0;
  return p;
}

double ModelParams::sum_squares() const {
  return x_u.squaredNorm() + x_v.squaredNorm() + w1.squaredNorm() + b1.squaredNorm() +
         w2.squaredNorm() + b2 * b2;
}

bool ModelParams::all_finite() const {
  return x_u.allFinite() && x_v.allFinite() && w1.allFinite() && b1.allFinite() &&
         w2.allFinite() && std::isfinite(b2);
}

AdamState AdamState::init(const ModelParams& shape) {
  AdamState s;
  s.first = ModelParams::zeros_like(shape);
  s.second = ModelParams::zeros_like(shape);
  return s;
}

EdgeBatch EdgeBatch::from(const std::vector<SignedEdge>& edges) {
  EdgeBatch b;
  b.u.reserve(edges.size());
  b.v.reserve(edges.size());
  b.labels.resize(static_cast<index_t>(edges.size()));
  for (std::size_t i = 0; i < edges.size(); ++i) {
    b.u.push_back(edges[i].u);
    b.v.push_back(edges[i].v);
    b.labels(static_cast<index_t>(i)) = edges[i].sign == Sign::Positive ? 1.0 : 0.0;
  }
  return b;
}

ModelParams init_params(index_t n_u, index_t n_v, int d, int hidden, int z_width,
                        std::uint64_t seed) {
  if (n_u < 1 || n_v < 1 || d < 1 || hidden < 1 || z_width < 1)
    raise(Err::InvalidArgument, "all parameter dimensions must be positive");
  Rng rng(seed);
  auto glorot = [](index_t fan_in, index_t fan_out) {
    return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  };
  ModelParams p;
  p.x_u.resize(n_u, d);
  rng.fill_uniform(p.x_u, -glorot(n_u, d), glorot(n_u, d));
  p.x_v.resize(n_v, d);
  rng.fill_uniform(p.x_v, -glorot(n_v, d), glorot(n_v, d));
  const index_t in_width = 2 * static_cast<index_t>(z_width);
  p.w1.resize(in_width, hidden);
  rng.fill_uniform(p.w1, -glorot(in_width, hidden), glorot(in_width, hidden));
  p.b1 = Vec::Zero(hidden);
  p.w2.resize(hidden);
  rng.fill_uniform(p.w2, -glorot(hidden, 1), glorot(hidden, 1));
  p.b2 = 0.0;
  return p;
}

FinalReps forward_reps(const NormalizedGraph& graph, const LowRankStore* store,
                       const EncoderConfig& config, const ModelParams& params) {
  HiddenEmbeddings h_spmp, h_rmp;
  if (config.use_spmp) h_spmp = spmp_encode(graph, params.x_u, params.x_v, config);
  if (config.use_rmp) {
    if (store == nullptr) raise(Err::MissingFactors, "rank-k encoder enabled without factors");
    h_rmp = rmp_encode(*store, graph.n_u, graph.n_v, params.x_u, params.x_v, config);
  }
  return combine_final(h_spmp, h_rmp, config);
}

namespace {

constexpr index_t kEdgeChunk = 32768;
constexpr double kScoreFloor = 1e-12;

double sigmoid(double s) {
  if (s >= 0.0) return 1.0 / (1.0 + std::exp(-s));
  double e = std::exp(s);
  return e / (1.0 + e);
}

void check_batch(const FinalReps& z, const EdgeBatch& batch, const ModelParams& params) {
  if (batch.size() == 0) raise(Err::EmptyBatch, "no edges to score");
  const index_t zw = z.z_u.cols();
  if (z.z_v.cols() != zw) raise(Err::ShapeMismatch, "representation widths disagree");
  if (params.w1.rows() != 2 * zw)
    raise(Err::ShapeMismatch, "classifier expects input width " +
                                  std::to_string(params.w1.rows()) + ", representations give " +
                                  std::to_string(2 * zw));
  if (params.w1.cols() != params.b1.size() || params.b1.size() != params.w2.size())
    raise(Err::ShapeMismatch, "classifier layer shapes disagree");
  for (index_t i = 0; i < batch.size(); ++i) {
    if (batch.u[static_cast<std::size_t>(i)] < 0 ||
        batch.u[static_cast<std::size_t>(i)] >= z.z_u.rows() ||
        batch.v[static_cast<std::size_t>(i)] < 0 ||
        batch.v[static_cast<std::size_t>(i)] >= z.z_v.rows())
      raise(Err::IndexOutOfRange, "edge endpoint outside the representation tables");
  }
}

void gather_chunk(const FinalReps& z, const EdgeBatch& batch, index_t start, index_t len,
                  Mat& f) {
  const index_t zw = z.z_u.cols();
  for (index_t i = 0; i < len; ++i) {
    f.row(i).head(zw) = z.z_u.row(batch.u[static_cast<std::size_t>(start + i)]);
    f.row(i).tail(zw) = z.z_v.row(batch.v[static_cast<std::size_t>(start + i)]);
  }
}

}  // namespace

Vec score_edges(const FinalReps& z, const EdgeBatch& batch, const ModelParams& params) {
  check_batch(z, batch, params);
  const index_t n = batch.size();
  const index_t zw = z.z_u.cols();
  Vec out(n);
  Mat f(std::min(kEdgeChunk, n), 2 * zw);
  for (index_t start = 0; start < n; start += kEdgeChunk) {
    const index_t len = std::min(kEdgeChunk, n - start);
    gather_chunk(z, batch, start, len, f);
    Mat h1 = (f.topRows(len) * params.w1).rowwise() + params.b1.transpose();
    h1 = h1.cwiseMax(0.0);
    Vec s = h1 * params.w2;
    for (index_t i = 0; i < len; ++i)
      out(start + i) = std::clamp(sigmoid(s(i) + params.b2), kScoreFloor, 1.0 - kScoreFloor);
  }
  return out;
}

double bce_loss(const Vec& scores, const Vec& labels) {
  if (scores.size() == 0) raise(Err::EmptyBatch, "no samples in loss");
  if (scores.size() != labels.size())
    raise(Err::ShapeMismatch, "scores and labels differ in length");
  double total = 0.0;
  for (index_t i = 0; i < scores.size(); ++i) {
    double p = std::clamp(scores(i), kScoreFloor, 1.0 - kScoreFloor);
    total += labels(i) == 1.0 ? -std::log(p) : -std::log(1.0 - p);
  }
  return total / static_cast<double>(scores.size());
}

double total_loss(double bce, const ModelParams& params, double weight_decay) {
  return bce + weight_decay * params.sum_squares();
}

Gradients backward(const NormalizedGraph& graph, const LowRankStore* store,
                   const EncoderConfig& config, const ModelParams& params,
                   const EdgeBatch& batch, const FinalReps& z, const Vec& scores,
                   double weight_decay) {
  check_batch(z, batch, params);
  if (scores.size() != batch.size())
    raise(Err::ShapeMismatch, "scores do not match the batch");
  const index_t n = batch.size();
  const index_t zw = z.z_u.cols();
  const double inv_n = 1.0 / static_cast<double>(n);

  Gradients g = ModelParams::zeros_like(params);
  Mat gz_u = Mat::Zero(z.z_u.rows(), zw);
  Mat gz_v = Mat::Zero(z.z_v.rows(), zw);

  Mat f(std::min(kEdgeChunk, n), 2 * zw);
  for (index_t start = 0; start < n; start += kEdgeChunk) {
    const index_t len = std::min(kEdgeChunk, n - start);
    gather_chunk(z, batch, start, len, f);
    Mat h1 = (f.topRows(len) * params.w1).rowwise() + params.b1.transpose();
    h1 = h1.cwiseMax(0.0);
    Vec ds(len);
    for (index_t i = 0; i < len; ++i)
      ds(i) = (scores(start + i) - batch.labels(start + i)) * inv_n;
    // Classifier backward for the chunk.
    Mat dh = ds * params.w2.transpose();
    dh.array() *= (h1.array() > 0.0).cast<double>();
    g.w2.noalias() += h1.transpose() * ds;
    g.b2 += ds.sum();
    g.w1.noalias() += f.topRows(len).transpose() * dh;
    g.b1.noalias() += dh.colwise().sum().transpose();
    Mat df = dh * params.w1.transpose();
    for (index_t i = 0; i < len; ++i) {
      gz_u.row(batch.u[static_cast<std::size_t>(start + i)]) += df.row(i).head(zw);
      gz_v.row(batch.v[static_cast<std::size_t>(start + i)]) += df.row(i).tail(zw);
    }
  }

  encoder_vjp(graph, store, config, gz_u, gz_v, g.x_u, g.x_v);

  const double decay = 2.0 * weight_decay;
  g.x_u += decay * params.x_u;
  g.x_v += decay * params.x_v;
  g.w1 += decay * params.w1;
  g.b1 += decay * params.b1;
  g.w2 += decay * params.w2;
  g.b2 += decay * params.b2;
  return g;
}

namespace {

template <typename T>
void adam_update(T& theta, const T& grad, T& first, T& second, double beta1, double beta2,
                 double corr1, double corr2, double lr, double eps) {
  first = beta1 * first + (1.0 - beta1) * grad;
  second = beta2 * second + (1.0 - beta2) * grad.cwiseProduct(grad);
  theta.array() -= lr * (first.array() / corr1) / ((second.array() / corr2).sqrt() + eps);
}

void adam_update(double& theta, double grad, double& first, double& second, double beta1,
                 double beta2, double corr1, double corr2, double lr, double eps) {
  first = beta1 * first + (1.0 - beta1) * grad;
  second = beta2 * second + (1.0 - beta2) * grad * grad;
  theta -= lr * (first / corr1) / (std::sqrt(second / corr2) + eps);
}

}  // namespace

void adam_step(ModelParams& params, const Gradients& grads, AdamState& state, double lr) {
  state.step += 1;
  const double corr1 = 1.0 - std::pow(state.beta1, static_cast<double>(state.step));
  const double corr2 = 1.0 - std::pow(state.beta2, static_cast<double>(state.step));
  adam_update(params.x_u, grads.x_u, state.first.x_u, state.second.x_u, state.beta1,
              state.beta2, corr1, corr2, lr, state.epsilon);
  adam_update(params.x_v, grads.x_v, state.first.x_v, state.second.x_v, state.beta1,
              state.beta2, corr1, corr2, lr, state.epsilon);
  adam_update(params.w1, grads.w1, state.first.w1, state.second.w1, state.beta1, state.beta2,
              corr1, corr2, lr, state.epsilon);
  adam_update(params.b1, grads.b1, state.first.b1, state.second.b1, state.beta1, state.beta2,
              corr1, corr2, lr, state.epsilon);
  adam_update(params.w2, grads.w2, state.first.w2, state.second.w2, state.beta1, state.beta2,
              corr1, corr2, lr, state.epsilon);
  adam_update(params.b2, grads.b2, state.first.b2, state.second.b2, state.beta1, state.beta2,
              corr1, corr2, lr, state.epsilon);
}

void write_training_log(const std::vector<EpochLog>& log, const std::string& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) raise(Err::Io, "cannot open " + path + " for writing");
  out << "epoch,train_loss,val_auc,val_macro_f1,seconds\n";
  char buf[160];
  for (const EpochLog& row : log) {
    std::snprintf(buf, sizeof(buf), "%d,%.9g,%.6f,%.6f,%.4f\n", row.epoch, row.train_loss,
                  row.val_auc, row.val_macro_f1, row.seconds);
    out << buf;
  }
  if (!out) raise(Err::Io, "write failed: " + path);
}

TrainedModel fit(const EdgeSplit& sp, index_t n_u, index_t n_v, const HyperParams& hp,
                 const LowRankStore* shared_store) {
  hp.validate();
  if (sp.train.empty() || sp.val.empty()) raise(Err::EmptySplit, "fit needs train and val edges");

  SignedBiadjacency graph = training_graph(sp, n_u, n_v);
  NormalizedGraph ng = normalize(graph);
  EncoderConfig cfg = hp.encoder_config();

  LowRankStore own;
  const LowRankStore* store = nullptr;
  if (cfg.use_rmp) {
    if (shared_store != nullptr) {
      store = shared_store;
    } else {
      own = preprocess(ng, hp.resolve_rank(n_u, n_v), hp.seed);
      store = &own;
    }
  }

  ModelParams params =
      init_params(n_u, n_v, hp.internal_dim(), hp.mlp_hidden, hp.final_dim, hp.seed);
  AdamState adam = AdamState::init(params);
  EdgeBatch train = EdgeBatch::from(sp.train);
  EdgeBatch val = EdgeBatch::from(sp.val);

  TrainedModel out;
  out.hp = hp;
  out.best_val_auc = -1.0;
  out.log.reserve(static_cast<std::size_t>(hp.epochs));

  // The encoder output after each update serves both that epoch's validation
  // pass and the next epoch's training pass; nothing changes the parameters
  // in between, so one encode per epoch suffices.
  FinalReps z = forward_reps(ng, store, cfg, params);
  for (int epoch = 1; epoch <= hp.epochs; ++epoch) {
    auto t0 = std::chrono::steady_clock::now();
    Vec scores = score_edges(z, train, params);
    double loss = total_loss(bce_loss(scores, train.labels), params, hp.weight_decay);
    if (!std::isfinite(loss))
      raise(Err::Numeric, "non-finite training loss at epoch " + std::to_string(epoch));
    Gradients grads =
        backward(ng, store, cfg, params, train, z, scores, hp.weight_decay);
    if (!grads.all_finite())
      raise(Err::Numeric, "non-finite gradients at epoch " + std::to_string(epoch));
    adam_step(params, grads, adam, hp.learning_rate);
    if (!params.all_finite())
      raise(Err::Numeric, "non-finite parameters after update at epoch " + std::to_string(epoch));

    z = forward_reps(ng, store, cfg, params);
    Vec val_scores = score_edges(z, val, params);
    double val_auc;
    try {
      val_auc = auc_roc(val_scores, val.labels);
    } catch (const Error& e) {
      if (e.code() != Err::DegenerateLabels) throw;
      val_auc = 0.5;  // single-class validation folds carry no ranking signal
    }
    F1Scores f1 = f1_suite(val_scores, val.labels);
    double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    out.log.push_back({epoch, loss, val_auc, f1.macro_f1, seconds});
    if (val_auc > out.best_val_auc) {
      out.best_val_auc = val_auc;
      out.best_epoch = epoch;
      out.params = params;
    }
  }
  return out;
}

EvalReport evaluate_edges(const FinalReps& z, const EdgeBatch& batch,
                          const ModelParams& params) {
  Vec scores = score_edges(z, batch, params);
  return evaluate(scores, batch.labels);
}

namespace {

constexpr char kCkptMagic[8] = {'S', 'B', 'G', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kCkptVersion = 1;

void put(std::ofstream& out, const void* data, std::size_t size) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void get(std::ifstream& in, void* data, std::size_t size, const std::string& path) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
  if (!in) raise(Err::Io, "truncated checkpoint: " + path);
}

}  // namespace

void save_checkpoint(const TrainedModel& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Err::Io, "cannot open " + path + " for writing");
  const ModelParams& p = model.params;
  put(out, kCkptMagic, sizeof(kCkptMagic));
  put(out, &kCkptVersion, sizeof(kCkptVersion));
  std::int64_t n_u = p.x_u.rows(), n_v = p.x_v.rows();
  std::int32_t d = static_cast<std::int32_t>(p.x_u.cols());
  std::int32_t hidden = static_cast<std::int32_t>(p.b1.size());
  std::int32_t in_width = static_cast<std::int32_t>(p.w1.rows());
  std::uint64_t digest = model.hp.digest();
  put(out, &n_u, sizeof(n_u));
  put(out, &n_v, sizeof(n_v));
  put(out, &d, sizeof(d));
  put(out, &hidden, sizeof(hidden));
  put(out, &in_width, sizeof(in_width));
  put(out, &digest, sizeof(digest));
  put(out, p.x_u.data(), sizeof(double) * static_cast<std::size_t>(p.x_u.size()));
  put(out, p.x_v.data(), sizeof(double) * static_cast<std::size_t>(p.x_v.size()));
  put(out, p.w1.data(), sizeof(double) * static_cast<std::size_t>(p.w1.size()));
  put(out, p.b1.data(), sizeof(double) * static_cast<std::size_t>(p.b1.size()));
  put(out, p.w2.data(), sizeof(double) * static_cast<std::size_t>(p.w2.size()));
  put(out, &p.b2, sizeof(p.b2));
  if (!out) raise(Err::Io, "write failed: " + path);
}

ModelParams load_checkpoint(const std::string& path, const HyperParams& expected) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Err::Io, "cannot open " + path);
  char magic[8];
  get(in, magic, sizeof(magic), path);
  if (std::memcmp(magic, kCkptMagic, sizeof(magic)) != 0)
    raise(Err::Io, "not a checkpoint: " + path);
  std::uint32_t version = 0;
  get(in, &version, sizeof(version), path);
  if (version != kCkptVersion)
    raise(Err::Io, "unsupported checkpoint version " + std::to_string(version));
  std::int64_t n_u = 0, n_v = 0;
  std::int32_t d = 0, hidden = 0, in_width = 0;
  std::uint64_t digest = 0;
  get(in, &n_u, sizeof(n_u), path);
  get(in, &n_v, sizeof(n_v), path);
  get(in, &d, sizeof(d), path);
  get(in, &hidden, sizeof(hidden), path);
  get(in, &in_width, sizeof(in_width), path);
  get(in, &digest, sizeof(digest), path);
  if (digest != expected.digest())
    raise(Err::Io, "checkpoint at " + path + " was trained under different hyperparameters");
  if (n_u < 1 || n_v < 1 || d != expected.internal_dim() || hidden != expected.mlp_hidden ||
      in_width != 2 * expected.final_dim)
    raise(Err::Io, "checkpoint shapes disagree with the hyperparameters");
  ModelParams p;
  p.x_u.resize(n_u, d);
  p.x_v.resize(n_v, d);
  p.w1.resize(in_width, hidden);
  p.b1.resize(hidden);
  p.w2.resize(hidden);
  get(in, p.x_u.data(), sizeof(double) * static_cast<std::size_t>(p.x_u.size()), path);
  get(in, p.x_v.data(), sizeof(double) * static_cast<std::size_t>(p.x_v.size()), path);
  get(in, p.w1.data(), sizeof(double) * static_cast<std::size_t>(p.w1.size()), path);
  get(in, p.b1.data(), sizeof(double) * static_cast<std::size_t>(p.b1.size()), path);
  get(in, p.w2.data(), sizeof(double) * static_cast<std::size_t>(p.w2.size()), path);
  get(in, &p.b2, sizeof(p.b2), path);
  return p;
}

}  // namespace sbgl
