#include "sbgl/graph.hpp"

#include <algorithm>
#include <string>

namespace sbgl {

CsrMatrix CsrMatrix::from_triplets(index_t rows, index_t cols,
                                   const std::vector<Triplet>& entries) {
  CsrMatrix m;
  m.rows = rows;
  m.cols = cols;
  m.indptr.assign(static_cast<std::size_t>(rows) + 1, 0);
  for (const Triplet& t : entries) {
    if (t.row < 0 || t.row >= rows || t.col < 0 || t.col >= cols)
      raise(Err::IndexOutOfRange, "triplet (" + std::to_string(t.row) + ", " +
                                      std::to_string(t.col) + ") outside " +
                                      std::to_string(rows) + "x" + std::to_string(cols));
    ++m.indptr[static_cast<std::size_t>(t.row) + 1];
  }
  for (index_t r = 0; r < rows; ++r)
    m.indptr[static_cast<std::size_t>(r) + 1] += m.indptr[static_cast<std::size_t>(r)];
  m.indices.resize(entries.size());
  m.values.resize(entries.size());
  std::vector<index_t> cursor(m.indptr.begin(), m.indptr.end() - 1);
  for (const Triplet& t : entries) {
    index_t at = cursor[static_cast<std::size_t>(t.row)]++;
    m.indices[static_cast<std::size_t>(at)] = t.col;
    m.values[static_cast<std::size_t>(at)] = t.value;
  }
  for (index_t r = 0; r < rows; ++r) {
    index_t lo = m.indptr[static_cast<std::size_t>(r)];
    index_t hi = m.indptr[static_cast<std::size_t>(r) + 1];
    // Sort each row segment by column; rows are short, so pair up and sort.
    std::vector<std::pair<index_t, double>> row;
    row.reserve(static_cast<std::size_t>(hi - lo));
    for (index_t k = lo; k < hi; ++k)
      row.emplace_back(m.indices[static_cast<std::size_t>(k)],
                       m.values[static_cast<std::size_t>(k)]);
    std::sort(row.begin(), row.end());
    for (index_t k = lo; k < hi; ++k) {
      m.indices[static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k - lo)].first;
      m.values[static_cast<std::size_t>(k)] = row[static_cast<std::size_t>(k - lo)].second;
    }
  }
  return m;
}

void CsrMatrix::multiply_into(const Mat& x, Mat& out) const {
  if (x.rows() != cols)
    raise(Err::ShapeMismatch, "csr multiply: " + std::to_string(rows) + "x" +
                                  std::to_string(cols) + " times " +
                                  std::to_string(x.rows()) + "x" + std::to_string(x.cols()));
  out.resize(rows, x.cols());
  out.setZero();
  for (index_t r = 0; r < rows; ++r) {
    auto dst = out.row(r);
    for (index_t k = indptr[static_cast<std::size_t>(r)];
         k < indptr[static_cast<std::size_t>(r) + 1]; ++k) {
      dst += values[static_cast<std::size_t>(k)] *
             x.row(indices[static_cast<std::size_t>(k)]);
    }
  }
}

Mat CsrMatrix::multiply(const Mat& x) const {
  Mat out;
  multiply_into(x, out);
  return out;
}

CsrMatrix CsrMatrix::transposed() const {
  std::vector<Triplet> entries;
  entries.reserve(static_cast<std::size_t>(nnz()));
  for (index_t r = 0; r < rows; ++r)
    for (index_t k = indptr[static_cast<std::size_t>(r)];
         k < indptr[static_cast<std::size_t>(r) + 1]; ++k)
      entries.push_back({indices[static_cast<std::size_t>(k)], r,
                         values[static_cast<std::size_t>(k)]});
  return from_triplets(cols, rows, entries);
}

Mat CsrMatrix::dense() const {
  Mat d = Mat::Zero(rows, cols);
  for (index_t r = 0; r < rows; ++r)
    for (index_t k = indptr[static_cast<std::size_t>(r)];
         k < indptr[static_cast<std::size_t>(r) + 1]; ++k)
      d(r, indices[static_cast<std::size_t>(k)]) = values[static_cast<std::size_t>(k)];
  return d;
}

SignedBiadjacency build_graph(const std::vector<SignedEdge>& edges, index_t n_u,
                              index_t n_v) {
  if (n_u < 0 || n_v < 0) raise(Err::InvalidArgument, "negative part size");
  std::vector<std::uint64_t> keys;
  keys.reserve(edges.size());
  for (const SignedEdge& e : edges) {
    if (e.u < 0 || e.u >= n_u)
      raise(Err::IndexOutOfRange,
            "edge u index " + std::to_string(e.u) + " outside [0, " + std::to_string(n_u) + ")");
    if (e.v < 0 || e.v >= n_v)
      raise(Err::IndexOutOfRange,
            "edge v index " + std::to_string(e.v) + " outside [0, " + std::to_string(n_v) + ")");
    keys.push_back(static_cast<std::uint64_t>(e.u) << 32 |
                   static_cast<std::uint64_t>(e.v));
  }
  std::sort(keys.begin(), keys.end());
  auto dup = std::adjacent_find(keys.begin(), keys.end());
  if (dup != keys.end())
    raise(Err::DuplicateEdge, "pair (" + std::to_string(*dup >> 32) + ", " +
                                  std::to_string(*dup & 0xffffffffULL) +
                                  ") appears more than once");

  std::vector<Triplet> pos, neg;
  for (const SignedEdge& e : edges) {
    (e.sign == Sign::Positive ? pos : neg).push_back({e.u, e.v, 1.0});
  }
  SignedBiadjacency g;
  g.n_u = n_u;
  g.n_v = n_v;
  g.r_pos = CsrMatrix::from_triplets(n_u, n_v, pos);
  g.r_neg = CsrMatrix::from_triplets(n_u, n_v, neg);
  g.q_pos = g.r_pos.transposed();
  g.q_neg = g.r_neg.transposed();
  return g;
}

namespace {

// Copies a structure and assigns each entry a value drawn from the row's
// scale (by_row) or the entry's column scale (otherwise).
CsrMatrix with_scales(const CsrMatrix& structure, const std::vector<double>& scale,
                      bool by_row) {
  CsrMatrix out = structure;
  for (index_t r = 0; r < out.rows; ++r)
    for (index_t k = out.indptr[static_cast<std::size_t>(r)];
         k < out.indptr[static_cast<std::size_t>(r) + 1]; ++k) {
      index_t node = by_row ? r : out.indices[static_cast<std::size_t>(k)];
      out.values[static_cast<std::size_t>(k)] = scale[static_cast<std::size_t>(node)];
    }
  return out;
}

}  // namespace

NormalizedGraph normalize(const SignedBiadjacency& g) {
  NormalizedGraph n;
  n.n_u = g.n_u;
  n.n_v = g.n_v;
  n.degree_u.assign(static_cast<std::size_t>(g.n_u), 0);
  n.degree_v.assign(static_cast<std::size_t>(g.n_v), 0);
  for (index_t u = 0; u < g.n_u; ++u)
    n.degree_u[static_cast<std::size_t>(u)] =
        (g.r_pos.indptr[static_cast<std::size_t>(u) + 1] - g.r_pos.indptr[static_cast<std::size_t>(u)]) +
        (g.r_neg.indptr[static_cast<std::size_t>(u) + 1] - g.r_neg.indptr[static_cast<std::size_t>(u)]);
  for (index_t v = 0; v < g.n_v; ++v)
    n.degree_v[static_cast<std::size_t>(v)] =
        (g.q_pos.indptr[static_cast<std::size_t>(v) + 1] - g.q_pos.indptr[static_cast<std::size_t>(v)]) +
        (g.q_neg.indptr[static_cast<std::size_t>(v) + 1] - g.q_neg.indptr[static_cast<std::size_t>(v)]);

  // Zero-degree nodes keep scale zero; their rows carry no entries anyway.
  std::vector<double> inv_u(n.degree_u.size(), 0.0), inv_v(n.degree_v.size(), 0.0);
  for (std::size_t i = 0; i < inv_u.size(); ++i)
    if (n.degree_u[i] > 0) inv_u[i] = 1.0 / static_cast<double>(n.degree_u[i]);
  for (std::size_t i = 0; i < inv_v.size(); ++i)
    if (n.degree_v[i] > 0) inv_v[i] = 1.0 / static_cast<double>(n.degree_v[i]);

  // All eight operators share the sparsity of r_* / q_*; only the value
  // pattern differs (which side the degree is read from).
  n.rt_pos = with_scales(g.q_pos, inv_u, /*by_row=*/false);
  n.rt_neg = with_scales(g.q_neg, inv_u, /*by_row=*/false);
  n.qt_pos = with_scales(g.r_pos, inv_v, /*by_row=*/false);
  n.qt_neg = with_scales(g.r_neg, inv_v, /*by_row=*/false);
  n.rt_pos_adj = with_scales(g.r_pos, inv_u, /*by_row=*/true);
  n.rt_neg_adj = with_scales(g.r_neg, inv_u, /*by_row=*/true);
  n.qt_pos_adj = with_scales(g.q_pos, inv_v, /*by_row=*/true);
  n.qt_neg_adj = with_scales(g.q_neg, inv_v, /*by_row=*/true);
  return n;
}

}  // namespace sbgl
