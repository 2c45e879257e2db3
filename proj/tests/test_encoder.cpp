#include "sbgl/encoder.hpp"

#include "oracle.hpp"

#include <doctest.h>

using namespace sbgl;

namespace {

std::vector<SignedEdge> random_edges(index_t n_u, index_t n_v, index_t m, Rng& rng) {
  std::vector<SignedEdge> edges;
  std::vector<bool> used(static_cast<std::size_t>(n_u * n_v), false);
  while (static_cast<index_t>(edges.size()) < m) {
    index_t flat = static_cast<index_t>(rng.below(static_cast<std::uint64_t>(n_u * n_v)));
    if (used[static_cast<std::size_t>(flat)]) continue;
    used[static_cast<std::size_t>(flat)] = true;
    edges.push_back({flat / n_v, flat % n_v,
                     rng.uniform() < 0.5 ? Sign::Positive : Sign::Negative});
  }
  return edges;
}

struct Setup {
  std::vector<SignedEdge> edges;
  NormalizedGraph graph;
  Mat x_u, x_v;
};

Setup random_setup(std::uint64_t seed, index_t max_nodes = 10, index_t d = 3) {
  Rng rng(seed);
  Setup s;
  index_t n_u = 2 + static_cast<index_t>(rng.below(static_cast<std::uint64_t>(max_nodes - 1)));
  index_t n_v = 2 + static_cast<index_t>(rng.below(static_cast<std::uint64_t>(max_nodes - 1)));
  index_t m = 1 + static_cast<index_t>(rng.below(static_cast<std::uint64_t>(n_u * n_v)));
  s.edges = random_edges(n_u, n_v, m, rng);
  s.graph = normalize(build_graph(s.edges, n_u, n_v));
  s.x_u.resize(n_u, d);
  s.x_v.resize(n_v, d);
  rng.fill_gaussian(s.x_u);
  rng.fill_gaussian(s.x_v);
  return s;
}

}  // namespace

TEST_CASE("propagation matches the dense reference over many random graphs") {
  for (std::uint64_t seed = 0; seed < 40; ++seed) {
    Setup s = random_setup(seed + 1000);
    EncoderConfig cfg;
    cfg.layers = static_cast<int>(seed % 4);
    cfg.injection_ratio = 0.15 + 0.2 * static_cast<double>(seed % 3);
    HiddenEmbeddings h = spmp_encode(s.graph, s.x_u, s.x_v, cfg);
    oracle::DenseEmbeddings ref = oracle::dense_propagation(
        s.edges, s.graph.n_u, s.graph.n_v, s.x_u, s.x_v, cfg.layers, cfg.injection_ratio, {});
    CHECK(oracle::rel_err(h.h_u, ref.h_u) < 1e-10);
    CHECK(oracle::rel_err(h.h_v, ref.h_v) < 1e-10);
  }
}

TEST_CASE("full injection collapses the embedding to scaled features") {
  // With injection ratio 1 each propagation layer reproduces the features on
  // the positive channel and zeroes the negative channel, so the aggregate is
  // [x, x / (L + 1)] under uniform layer weights.
  Setup s = random_setup(42);
  EncoderConfig cfg;
  cfg.layers = 3;
  cfg.injection_ratio = 1.0;
  HiddenEmbeddings h = spmp_encode(s.graph, s.x_u, s.x_v, cfg);
  const index_t d = s.x_u.cols();
  CHECK(oracle::rel_err(Mat(h.h_u.leftCols(d)), s.x_u) < 1e-12);
  CHECK(oracle::rel_err(Mat(h.h_u.rightCols(d)), Mat(s.x_u / 4.0)) < 1e-12);
  CHECK(oracle::rel_err(Mat(h.h_v.leftCols(d)), s.x_v) < 1e-12);
  CHECK(oracle::rel_err(Mat(h.h_v.rightCols(d)), Mat(s.x_v / 4.0)) < 1e-12);
}

TEST_CASE("zero layers returns the features on both channels") {
  Setup s = random_setup(43);
  EncoderConfig cfg;
  cfg.layers = 0;
  HiddenEmbeddings h = spmp_encode(s.graph, s.x_u, s.x_v, cfg);
  const index_t d = s.x_u.cols();
  CHECK((h.h_u.leftCols(d) - s.x_u).cwiseAbs().maxCoeff() == 0.0);
  CHECK((h.h_u.rightCols(d) - s.x_u).cwiseAbs().maxCoeff() == 0.0);
  CHECK((h.h_v.leftCols(d) - s.x_v).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("injection feeds only the positive channel") {
  // On an edgeless graph every propagated message is zero, so whatever
  // remains comes from injection alone: positive channel carries it, the
  // negative channel must stay empty past layer zero.
  NormalizedGraph g = normalize(build_graph({}, 4, 3));
  Mat x_u(4, 2), x_v(3, 2);
  Rng rng(5);
  rng.fill_gaussian(x_u);
  rng.fill_gaussian(x_v);
  EncoderConfig cfg;
  cfg.layers = 2;
  cfg.injection_ratio = 0.4;
  HiddenEmbeddings h = spmp_encode(g, x_u, x_v, cfg);
  // Positive channel: (1/3) x + (1/3) c x + (1/3) c x; negative: (1/3) x.
  Mat expect_p = x_u * (1.0 + 2.0 * 0.4) / 3.0;
  Mat expect_m = x_u / 3.0;
  CHECK(oracle::rel_err(Mat(h.h_u.leftCols(2)), expect_p) < 1e-12);
  CHECK(oracle::rel_err(Mat(h.h_u.rightCols(2)), expect_m) < 1e-12);
}

TEST_CASE("two negative hops route mass into the positive channel") {
  // u0 -(neg)- v0 -(neg)- u1. Both channels start from the features, so the
  // first hop carries u0's mass symmetrically; the asymmetry created by
  // injecting features into the positive channel only needs one extra round
  // to reach the far endpoint. At layer 3, u1's positive channel holds the
  // enemy-of-my-enemy mass and its negative channel holds none.
  std::vector<SignedEdge> edges = {{0, 0, Sign::Negative}, {1, 0, Sign::Negative}};
  NormalizedGraph g = normalize(build_graph(edges, 2, 1));
  Mat x_u(2, 1), x_v(1, 1);
  x_u << 1.0, 0.0;  // indicator on u0
  x_v << 0.0;
  EncoderConfig cfg;
  cfg.layers = 3;
  cfg.injection_ratio = 0.5;
  cfg.layer_weights = {0.0, 0.0, 0.0, 1.0};  // isolate layer 3
  HiddenEmbeddings h = spmp_encode(g, x_u, x_v, cfg);
  // Hand-rolled: layer 1 leaves u0 with (1/2, 0) from injection; layer 2
  // moves it through the negative edge into v0's negative channel (1/4);
  // layer 3 crosses the second negative edge back into u1's positive
  // channel with weight (1/2) * (1/2) * (1/4).
  CHECK(h.h_u(1, 0) == doctest::Approx(0.0625));
  CHECK(h.h_u(1, 1) == doctest::Approx(0.0));

  // Flip the first hop to positive: the path becomes hostile overall and the
  // same mass lands in u1's negative channel instead.
  edges[0].sign = Sign::Positive;
  NormalizedGraph g2 = normalize(build_graph(edges, 2, 1));
  HiddenEmbeddings h2 = spmp_encode(g2, x_u, x_v, cfg);
  CHECK(h2.h_u(1, 0) == doctest::Approx(0.0));
  CHECK(h2.h_u(1, 1) == doctest::Approx(0.0625));
}

TEST_CASE("single steps compose into the full encoder") {
  Setup s = random_setup(77);
  EncoderConfig cfg;
  cfg.layers = 2;
  cfg.injection_ratio = 0.3;
  Mat p_u = s.x_u, m_u = s.x_u, p_v = s.x_v, m_v = s.x_v;
  Mat agg_pu = p_u / 3.0, agg_mu = m_u / 3.0, agg_pv = p_v / 3.0, agg_mv = m_v / 3.0;
  for (int l = 1; l <= 2; ++l) {
    Mat np_v, nm_v, np_u, nm_u;
    spmp_step_u_to_v(s.graph, p_u, m_u, s.x_v, cfg.injection_ratio, np_v, nm_v);
    spmp_step_v_to_u(s.graph, p_v, m_v, s.x_u, cfg.injection_ratio, np_u, nm_u);
    p_u = np_u;
    m_u = nm_u;
    p_v = np_v;
    m_v = nm_v;
    agg_pu += p_u / 3.0;
    agg_mu += m_u / 3.0;
    agg_pv += p_v / 3.0;
    agg_mv += m_v / 3.0;
  }
  HiddenEmbeddings h = spmp_encode(s.graph, s.x_u, s.x_v, cfg);
  CHECK(oracle::rel_err(Mat(h.h_u.leftCols(3)), agg_pu) < 1e-12);
  CHECK(oracle::rel_err(Mat(h.h_u.rightCols(3)), agg_mu) < 1e-12);
  CHECK(oracle::rel_err(Mat(h.h_v.leftCols(3)), agg_pv) < 1e-12);
  CHECK(oracle::rel_err(Mat(h.h_v.rightCols(3)), agg_mv) < 1e-12);
}

TEST_CASE("custom layer weights select the intended layers") {
  Setup s = random_setup(88);
  EncoderConfig pick_last;
  pick_last.layers = 2;
  pick_last.injection_ratio = 0.2;
  pick_last.layer_weights = {0.0, 0.0, 1.0};
  EncoderConfig uniform1;  // L = 1 states equal layer 1 of the L = 2 run
  uniform1.layers = 2;
  uniform1.injection_ratio = 0.2;
  uniform1.layer_weights = {0.0, 1.0, 0.0};

  HiddenEmbeddings last = spmp_encode(s.graph, s.x_u, s.x_v, pick_last);
  HiddenEmbeddings middle = spmp_encode(s.graph, s.x_u, s.x_v, uniform1);
  // Weighted sums of the two runs with uniform thirds reproduce the default.
  EncoderConfig def;
  def.layers = 2;
  def.injection_ratio = 0.2;
  HiddenEmbeddings whole = spmp_encode(s.graph, s.x_u, s.x_v, def);
  Mat combined = (last.h_u + middle.h_u) / 3.0;
  combined.leftCols(3) += s.x_u / 3.0;
  combined.rightCols(3) += s.x_u / 3.0;
  CHECK(oracle::rel_err(whole.h_u, combined) < 1e-12);
}

TEST_CASE("invalid configurations are rejected") {
  EncoderConfig cfg;
  cfg.layers = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.layers = 2;
  cfg.injection_ratio = 1.5;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.injection_ratio = 0.5;
  cfg.layer_weights = {0.5, 0.5};  // wrong length for L = 2
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.layer_weights = {0.5, 0.4, 0.2};  // sums to 1.1
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.layer_weights = {0.5, -0.5, 1.0};
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg.layer_weights.clear();
  cfg.use_spmp = false;
  cfg.use_rmp = false;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("full-rank factored propagation equals the sparse propagation") {
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    Setup s = random_setup(seed + 300, 9);
    int full = static_cast<int>(std::min(s.graph.n_u, s.graph.n_v));
    LowRankStore store = preprocess(s.graph, full, seed);
    EncoderConfig cfg;
    cfg.layers = 2;
    cfg.injection_ratio = 0.15;
    HiddenEmbeddings sparse = spmp_encode(s.graph, s.x_u, s.x_v, cfg);
    HiddenEmbeddings factored =
        rmp_encode(store, s.graph.n_u, s.graph.n_v, s.x_u, s.x_v, cfg);
    CHECK(oracle::rel_err(factored.h_u, sparse.h_u) < 1e-6);
    CHECK(oracle::rel_err(factored.h_v, sparse.h_v) < 1e-6);
  }
}

TEST_CASE("final representations stack the exact block first") {
  Setup s = random_setup(55);
  EncoderConfig cfg;
  cfg.layers = 1;
  int full = static_cast<int>(std::min(s.graph.n_u, s.graph.n_v));
  LowRankStore store = preprocess(s.graph, full, 4);
  HiddenEmbeddings hs = spmp_encode(s.graph, s.x_u, s.x_v, cfg);
  HiddenEmbeddings hr = rmp_encode(store, s.graph.n_u, s.graph.n_v, s.x_u, s.x_v, cfg);
  FinalReps z = combine_final(hs, hr, cfg);
  CHECK(z.z_u.cols() == hs.h_u.cols() + hr.h_u.cols());
  CHECK((z.z_u.leftCols(hs.h_u.cols()) - hs.h_u).cwiseAbs().maxCoeff() == 0.0);
  CHECK((z.z_u.rightCols(hr.h_u.cols()) - hr.h_u).cwiseAbs().maxCoeff() == 0.0);

  EncoderConfig only_spmp = cfg;
  only_spmp.use_rmp = false;
  FinalReps zs = combine_final(hs, HiddenEmbeddings{}, only_spmp);
  CHECK((zs.z_u - hs.h_u).cwiseAbs().maxCoeff() == 0.0);
  CHECK((zs.z_v - hs.h_v).cwiseAbs().maxCoeff() == 0.0);

  EncoderConfig only_rmp = cfg;
  only_rmp.use_spmp = false;
  FinalReps zr = combine_final(HiddenEmbeddings{}, hr, only_rmp);
  CHECK((zr.z_u - hr.h_u).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("encoder adjoint matches finite differences") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Setup s = random_setup(seed + 600, 7);
    EncoderConfig cfg;
    cfg.layers = 2 + static_cast<int>(seed % 2);
    cfg.injection_ratio = 0.25;
    int full = static_cast<int>(std::min(s.graph.n_u, s.graph.n_v));
    LowRankStore store = preprocess(s.graph, full, seed);

    Rng rng(seed + 1);
    Mat g_u(s.graph.n_u, 4 * s.x_u.cols()), g_v(s.graph.n_v, 4 * s.x_v.cols());
    rng.fill_gaussian(g_u);
    rng.fill_gaussian(g_v);

    auto objective_u = [&](const Mat& x_u_trial) {
      HiddenEmbeddings hs = spmp_encode(s.graph, x_u_trial, s.x_v, cfg);
      HiddenEmbeddings hr = rmp_encode(store, s.graph.n_u, s.graph.n_v, x_u_trial, s.x_v, cfg);
      FinalReps z = combine_final(hs, hr, cfg);
      return (z.z_u.cwiseProduct(g_u)).sum() + (z.z_v.cwiseProduct(g_v)).sum();
    };
    auto objective_v = [&](const Mat& x_v_trial) {
      HiddenEmbeddings hs = spmp_encode(s.graph, s.x_u, x_v_trial, cfg);
      HiddenEmbeddings hr = rmp_encode(store, s.graph.n_u, s.graph.n_v, s.x_u, x_v_trial, cfg);
      FinalReps z = combine_final(hs, hr, cfg);
      return (z.z_u.cwiseProduct(g_u)).sum() + (z.z_v.cwiseProduct(g_v)).sum();
    };

    Mat gx_u, gx_v;
    encoder_vjp(s.graph, &store, cfg, g_u, g_v, gx_u, gx_v);
    CHECK(oracle::rel_err(gx_u, oracle::fd_grad(objective_u, s.x_u)) < 1e-4);
    CHECK(oracle::rel_err(gx_v, oracle::fd_grad(objective_v, s.x_v)) < 1e-4);
  }
}

TEST_CASE("encoder adjoint is linear and vanishes on zero gradients") {
  Setup s = random_setup(700, 8);
  EncoderConfig cfg;
  cfg.layers = 2;
  cfg.use_rmp = false;
  Mat zero_u = Mat::Zero(s.graph.n_u, 2 * s.x_u.cols());
  Mat zero_v = Mat::Zero(s.graph.n_v, 2 * s.x_v.cols());
  Mat gx_u, gx_v;
  encoder_vjp(s.graph, nullptr, cfg, zero_u, zero_v, gx_u, gx_v);
  CHECK(gx_u.cwiseAbs().maxCoeff() == 0.0);
  CHECK(gx_v.cwiseAbs().maxCoeff() == 0.0);

  Rng rng(3);
  Mat g_u(s.graph.n_u, 2 * s.x_u.cols()), g_v(s.graph.n_v, 2 * s.x_v.cols());
  rng.fill_gaussian(g_u);
  rng.fill_gaussian(g_v);
  Mat a_u, a_v, b_u, b_v;
  encoder_vjp(s.graph, nullptr, cfg, g_u, g_v, a_u, a_v);
  encoder_vjp(s.graph, nullptr, cfg, Mat(2.5 * g_u), Mat(2.5 * g_v), b_u, b_v);
  CHECK(oracle::rel_err(b_u, Mat(2.5 * a_u)) < 1e-12);
  CHECK(oracle::rel_err(b_v, Mat(2.5 * a_v)) < 1e-12);
}

TEST_CASE("adjoint needs factors only when the factored encoder is on") {
  Setup s = random_setup(800, 6);
  EncoderConfig cfg;
  cfg.layers = 1;
  Mat g_u = Mat::Zero(s.graph.n_u, 4 * s.x_u.cols());
  Mat g_v = Mat::Zero(s.graph.n_v, 4 * s.x_v.cols());
  Mat gx_u, gx_v;
  try {
    encoder_vjp(s.graph, nullptr, cfg, g_u, g_v, gx_u, gx_v);
    FAIL("expected a missing factors error");
  } catch (const Error& e) {
    CHECK(e.code() == Err::MissingFactors);
  }
}
