#pragma once

#include "sbgl/graph.hpp"

#include <map>
#include <string>

namespace sbgl {

/// Truncated SVD factors of one propagation operator: A ~ u_mat * diag(sigma)
/// * v_mat^T with orthonormal columns in u_mat and v_mat and sigma sorted
/// in non-increasing order.
struct SvdFactors {
  Mat u_mat;  // rows x k
  Vec sigma;  // k
  Mat v_mat;  // cols x k
};

/// Identifies which of the four normalized operators a factor set belongs to.
enum class MatrixId : std::uint8_t { RtPos = 0, RtNeg = 1, QtPos = 2, QtNeg = 3 };

const char* matrix_id_name(MatrixId id);

/// Factor sets for all four operators at a common rank.
struct LowRankStore {
  int rank = 0;
  std::map<MatrixId, SvdFactors> factors;

  const SvdFactors& at(MatrixId id) const;
  bool complete() const { return factors.size() == 4; }
};

/// floor(min(n_u, n_v) * ratio), raised to at least 1. ratio must lie in
/// (0, 1) exclusive.
int target_rank(index_t n_u, index_t n_v, double ratio);

/// Randomized range-finder SVD (gaussian test matrix, power iterations with
/// re-orthonormalization, exact SVD of the projected matrix). Deterministic
/// given the seed. k must lie in [1, min(rows, cols)].
SvdFactors randomized_svd(const CsrMatrix& a, int k, int oversample, int power_iters,
                          std::uint64_t seed);

/// Factors all four operators of a normalized graph at rank k. Each operator
/// uses a seed derived from `seed` and its MatrixId, so the four
/// factorizations are decorrelated but reproducible; workers > 1 factors
/// them on parallel threads with identical results.
LowRankStore preprocess(const NormalizedGraph& graph, int k, std::uint64_t seed,
                        int workers = 1);

/// Applies the rank-k operator to x in factored order: u_mat * (sigma *
/// (v_mat^T x)). Cost scales with k and the part sizes, never with the
/// product of the part sizes.
Mat rmp_apply(const SvdFactors& f, const Mat& x);
void rmp_apply_into(const SvdFactors& f, const Mat& x, Mat& out);

/// Applies the transpose of the factored operator: v_mat * (sigma *
/// (u_mat^T g)). Serves the encoder adjoint.
Mat rmp_apply_adjoint(const SvdFactors& f, const Mat& g);
void rmp_apply_adjoint_into(const SvdFactors& f, const Mat& g, Mat& out);

/// Binary factor cache, exact to the bit on round trip.
void save_store(const LowRankStore& store, const std::string& path);
LowRankStore load_store(const std::string& path);

}  // namespace sbgl
