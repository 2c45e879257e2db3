#include "sbgl/lowrank.hpp"

#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <cstring>
#include <thread>
#include <vector>
#include <fstream>

namespace sbgl {

const char* matrix_id_name(MatrixId id) {
  switch (id) {
    case MatrixId::RtPos: return "rt_pos";
    case MatrixId::RtNeg: return "rt_neg";
    case MatrixId::QtPos: return "qt_pos";
    case MatrixId::QtNeg: return "qt_neg";
  }
  return "unknown";
}

const SvdFactors& LowRankStore::at(MatrixId id) const {
  auto it = factors.find(id);
  if (it == factors.end())
    raise(Err::MissingFactors, std::string("no factors stored for ") + matrix_id_name(id));
  return it->second;
}

int target_rank(index_t n_u, index_t n_v, double ratio) {
  if (!(ratio > 0.0 && ratio < 1.0))
    raise(Err::InvalidRatio, "rank ratio must lie in (0, 1), got " + std::to_string(ratio));
  if (n_u < 1 || n_v < 1) raise(Err::InvalidArgument, "empty part");
  double scaled = static_cast<double>(std::min(n_u, n_v)) * ratio;
  int k = static_cast<int>(std::floor(scaled));
  return std::max(1, k);
}

namespace {

// Replaces m with an orthonormal basis of its column span (thin Q).
void orthonormalize(Mat& m) {
  Eigen::HouseholderQR<Mat> qr(m);
  Mat thin = Mat::Identity(m.rows(), m.cols());
  thin.applyOnTheLeft(qr.householderQ());
  m = thin;
}

}  // namespace

SvdFactors randomized_svd(const CsrMatrix& a, int k, int oversample, int power_iters,
                          std::uint64_t seed) {
  index_t min_dim = std::min(a.rows, a.cols);
  if (min_dim < 1) raise(Err::InvalidArgument, "cannot factor an empty matrix");
  if (k < 1) raise(Err::InvalidArgument, "rank must be positive, got " + std::to_string(k));
  if (k > min_dim)
    raise(Err::RankTooLarge, "rank " + std::to_string(k) + " exceeds min dimension " +
                                 std::to_string(min_dim));
  if (oversample < 0 || power_iters < 0)
    raise(Err::InvalidArgument, "oversample and power iterations must be non-negative");

  index_t sketch = std::min<index_t>(static_cast<index_t>(k) + oversample, min_dim);
  Rng rng(seed);
  Mat omega(a.cols, sketch);
  rng.fill_gaussian(omega);

  CsrMatrix at = a.transposed();
  Mat range = a.multiply(omega);  // rows x sketch
  orthonormalize(range);
  for (int it = 0; it < power_iters; ++it) {
    Mat co_range = at.multiply(range);  // cols x sketch
    orthonormalize(co_range);
    range = a.multiply(co_range);
    orthonormalize(range);
  }

  // projected = A^T Q has the same singular values as Q^T A; factoring the
  // cols x sketch matrix keeps the small SVD small. Bidiagonal
  // divide-and-conquer: Jacobi iteration on a cols x sketch panel dominates
  // the whole preprocessing budget once sketch reaches the hundreds.
  Mat projected = at.multiply(range);
  Eigen::BDCSVD<Mat> svd(projected, Eigen::ComputeThinU | Eigen::ComputeThinV);

  SvdFactors f;
  f.u_mat.resize(a.rows, k);
  f.u_mat.noalias() = range * svd.matrixV().leftCols(k);
  f.sigma = svd.singularValues().head(k);
  f.v_mat = svd.matrixU().leftCols(k);
  return f;
}

LowRankStore preprocess(const NormalizedGraph& graph, int k, std::uint64_t seed,
                        int workers) {
  constexpr int kOversample = 10;
  constexpr int kPowerIters = 2;
  LowRankStore store;
  store.rank = k;
  const std::pair<MatrixId, const CsrMatrix*> operators[] = {
      {MatrixId::RtPos, &graph.rt_pos},
      {MatrixId::RtNeg, &graph.rt_neg},
      {MatrixId::QtPos, &graph.qt_pos},
      {MatrixId::QtNeg, &graph.qt_neg},
  };
  // Each matrix draws from its own derived stream, so factoring them on
  // parallel threads is bitwise identical to the sequential order.
  SvdFactors slots[4];
  auto factor_one = [&](int i) {
    auto [id, matrix] = operators[i];
    slots[i] = randomized_svd(*matrix, k, kOversample, kPowerIters,
                              derive_seed(seed, static_cast<std::uint64_t>(id)));
  };
  if (workers > 1) {
    std::vector<std::thread> pool;
    for (int i = 0; i < 4; ++i) pool.emplace_back(factor_one, i);
    for (std::thread& t : pool) t.join();
  } else {
    for (int i = 0; i < 4; ++i) factor_one(i);
  }
  for (int i = 0; i < 4; ++i) store.factors[operators[i].first] = std::move(slots[i]);
  return store;
}

void rmp_apply_into(const SvdFactors& f, const Mat& x, Mat& out) {
  if (x.rows() != f.v_mat.rows())
    raise(Err::ShapeMismatch, "rmp apply: input has " + std::to_string(x.rows()) +
                                  " rows, factors expect " + std::to_string(f.v_mat.rows()));
  // Strictly right-to-left: never materialize a product of the two factor
  // matrices.
  Mat small = f.v_mat.transpose() * x;  // k x d
  small.array().colwise() *= f.sigma.array();
  out.resize(f.u_mat.rows(), x.cols());
  out.noalias() = f.u_mat * small;
}

Mat rmp_apply(const SvdFactors& f, const Mat& x) {
  Mat out;
  rmp_apply_into(f, x, out);
  return out;
}

void rmp_apply_adjoint_into(const SvdFactors& f, const Mat& g, Mat& out) {
  if (g.rows() != f.u_mat.rows())
    raise(Err::ShapeMismatch, "rmp adjoint: input has " + std::to_string(g.rows()) +
                                  " rows, factors expect " + std::to_string(f.u_mat.rows()));
  Mat small = f.u_mat.transpose() * g;  // k x d
  small.array().colwise() *= f.sigma.array();
  out.resize(f.v_mat.rows(), g.cols());
  out.noalias() = f.v_mat * small;
}

Mat rmp_apply_adjoint(const SvdFactors& f, const Mat& g) {
  Mat out;
  rmp_apply_adjoint_into(f, g, out);
  return out;
}

namespace {

constexpr char kStoreMagic[8] = {'S', 'B', 'G', 'L', 'F', 'A', 'C', 'S'};
constexpr std::uint32_t kStoreVersion = 1;

void write_bytes(std::ofstream& out, const void* data, std::size_t size) {
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(size));
}

void read_bytes(std::ifstream& in, void* data, std::size_t size, const std::string& path) {
  in.read(static_cast<char*>(data), static_cast<std::streamsize>(size));
  if (!in) raise(Err::Io, "truncated factor cache: " + path);
}

}  // namespace

void save_store(const LowRankStore& store, const std::string& path) {
  if (!store.complete()) raise(Err::MissingFactors, "store is incomplete, refusing to save");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) raise(Err::Io, "cannot open " + path + " for writing");
  write_bytes(out, kStoreMagic, sizeof(kStoreMagic));
  write_bytes(out, &kStoreVersion, sizeof(kStoreVersion));
  std::int32_t rank = store.rank;
  write_bytes(out, &rank, sizeof(rank));
  for (auto id : {MatrixId::RtPos, MatrixId::RtNeg, MatrixId::QtPos, MatrixId::QtNeg}) {
    const SvdFactors& f = store.at(id);
    std::int64_t rows = f.u_mat.rows(), cols = f.v_mat.rows(), k = f.sigma.size();
    write_bytes(out, &rows, sizeof(rows));
    write_bytes(out, &cols, sizeof(cols));
    write_bytes(out, &k, sizeof(k));
    write_bytes(out, f.u_mat.data(), sizeof(double) * static_cast<std::size_t>(rows * k));
    write_bytes(out, f.sigma.data(), sizeof(double) * static_cast<std::size_t>(k));
    write_bytes(out, f.v_mat.data(), sizeof(double) * static_cast<std::size_t>(cols * k));
  }
  if (!out) raise(Err::Io, "write failed: " + path);
}

LowRankStore load_store(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) raise(Err::Io, "cannot open " + path);
  char magic[8];
  read_bytes(in, magic, sizeof(magic), path);
  if (std::memcmp(magic, kStoreMagic, sizeof(magic)) != 0)
    raise(Err::Io, "not a factor cache: " + path);
  std::uint32_t version = 0;
  read_bytes(in, &version, sizeof(version), path);
  if (version != kStoreVersion)
    raise(Err::Io, "unsupported factor cache version " + std::to_string(version));
  LowRankStore store;
  std::int32_t rank = 0;
  read_bytes(in, &rank, sizeof(rank), path);
  store.rank = rank;
  for (auto id : {MatrixId::RtPos, MatrixId::RtNeg, MatrixId::QtPos, MatrixId::QtNeg}) {
    std::int64_t rows = 0, cols = 0, k = 0;
    read_bytes(in, &rows, sizeof(rows), path);
    read_bytes(in, &cols, sizeof(cols), path);
    read_bytes(in, &k, sizeof(k), path);
    if (rows < 0 || cols < 0 || k < 0) raise(Err::Io, "corrupt factor cache: " + path);
    SvdFactors f;
    f.u_mat.resize(rows, k);
    f.sigma.resize(k);
    f.v_mat.resize(cols, k);
    read_bytes(in, f.u_mat.data(), sizeof(double) * static_cast<std::size_t>(rows * k), path);
    read_bytes(in, f.sigma.data(), sizeof(double) * static_cast<std::size_t>(k), path);
    read_bytes(in, f.v_mat.data(), sizeof(double) * static_cast<std::size_t>(cols * k), path);
    store.factors[id] = std::move(f);
  }
  return store;
}

}  // namespace sbgl
