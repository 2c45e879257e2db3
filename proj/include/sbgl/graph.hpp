#pragma once

#include "sbgl/types.hpp"

namespace sbgl {

enum class Sign : std::uint8_t { Positive = 0, Negative = 1 };

struct SignedEdge {
  index_t u = 0;
  index_t v = 0;
  Sign sign = Sign::Positive;
};

struct Triplet {
  index_t row = 0;
  index_t col = 0;
  double value = 0.0;
};

/// Compressed sparse rows with column indices sorted within each row.
struct CsrMatrix {
  index_t rows = 0;
  index_t cols = 0;
  std::vector<index_t> indptr;   // size rows + 1
  std::vector<index_t> indices;  // column ids, strictly increasing per row
  std::vector<double> values;

  static CsrMatrix from_triplets(index_t rows, index_t cols,
                                 const std::vector<Triplet>& entries);

  index_t nnz() const { return static_cast<index_t>(indices.size()); }

  /// out = A x, overwriting out. x must have `cols` rows.
  void multiply_into(const Mat& x, Mat& out) const;
  Mat multiply(const Mat& x) const;

  CsrMatrix transposed() const;
  Mat dense() const;
};

/// Per-sign biadjacency of a signed bipartite graph together with the
/// transposed copies used for propagation in the V-to-U direction.
/// q_pos / q_neg are exact transposes of r_pos / r_neg by construction.
struct SignedBiadjacency {
  index_t n_u = 0;
  index_t n_v = 0;
  CsrMatrix r_pos, r_neg;  // |U| x |V|
  CsrMatrix q_pos, q_neg;  // |V| x |U|
};

/// Validates edges against the part sizes and splits them by sign.
/// Each (u, v) pair may carry at most one edge of one sign; a repeat of the
/// pair, with either sign, is a DuplicateEdge error.
SignedBiadjacency build_graph(const std::vector<SignedEdge>& edges, index_t n_u,
                              index_t n_v);

/// Row-normalized propagation operators, stored pre-transposed so a
/// part-to-part step is a single CSR-times-dense product.
///
/// Rows of R^s (and Q^s) are divided by the node's total degree counted
/// across both signs; a zero-degree node keeps an all-zero row rather than
/// producing NaN. rt_* and qt_* feed the forward recurrence; the *_adj
/// members are their exact transposes and feed the encoder adjoint, which
/// needs them as separate matrices because the normalization is one-sided.
struct NormalizedGraph {
  index_t n_u = 0;
  index_t n_v = 0;
  CsrMatrix rt_pos, rt_neg;          // (D_U^-1 R^s)^T, |V| x |U|
  CsrMatrix qt_pos, qt_neg;          // (D_V^-1 Q^s)^T, |U| x |V|
  CsrMatrix rt_pos_adj, rt_neg_adj;  // D_U^-1 R^s, |U| x |V|
  CsrMatrix qt_pos_adj, qt_neg_adj;  // D_V^-1 Q^s, |V| x |U|
  std::vector<index_t> degree_u, degree_v;  // total degree over both signs
};

NormalizedGraph normalize(const SignedBiadjacency& g);

}  // namespace sbgl
