#include "sbgl/metrics.hpp"

#include <algorithm>
#include <cstdio>
#include <numeric>
#include <string>
#include <vector>

namespace sbgl {

namespace {

void check_labels(const Vec& scores, const Vec& labels) {
  if (scores.size() != labels.size())
    raise(Err::ShapeMismatch, "scores and labels differ in length");
  if (scores.size() == 0) raise(Err::EmptyInput, "no samples to evaluate");
  for (index_t i = 0; i < labels.size(); ++i)
    if (labels(i) != 0.0 && labels(i) != 1.0)
      raise(Err::InvalidArgument, "labels must be 0 or 1");
}

}  // namespace

double auc_roc(const Vec& scores, const Vec& labels) {
  check_labels(scores, labels);
  const index_t n = scores.size();
  index_t n_pos = 0;
  for (index_t i = 0; i < n; ++i) n_pos += labels(i) == 1.0 ? 1 : 0;
  const index_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0)
    raise(Err::DegenerateLabels, "AUC needs both classes present");

  std::vector<index_t> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), index_t{0});
  std::sort(order.begin(), order.end(),
            [&](index_t a, index_t b) { return scores(a) < scores(b); });

  // Walk runs of equal scores and hand every member the run's average rank.
  double rank_sum_pos = 0.0;
  index_t i = 0;
  while (i < n) {
    index_t j = i;
    while (j < n && scores(order[static_cast<std::size_t>(j)]) ==
                        scores(order[static_cast<std::size_t>(i)]))
      ++j;
    double avg_rank = 0.5 * static_cast<double>(i + 1 + j);  // ranks are 1-based
    for (index_t t = i; t < j; ++t)
      if (labels(order[static_cast<std::size_t>(t)]) == 1.0) rank_sum_pos += avg_rank;
    i = j;
  }
  double u_stat = rank_sum_pos -
                  0.5 * static_cast<double>(n_pos) * static_cast<double>(n_pos + 1);
  return u_stat / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

F1Scores f1_suite(const Vec& scores, const Vec& labels, double threshold) {
  check_labels(scores, labels);
  const index_t n = scores.size();
  index_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (index_t i = 0; i < n; ++i) {
    bool pred = scores(i) >= threshold;
    bool truth = labels(i) == 1.0;
    if (pred && truth)
      ++tp;
    else if (pred && !truth)
      ++fp;
    else if (!pred && truth)
      ++fn;
    else
      ++tn;
  }
  auto f1_of = [](index_t tp_c, index_t fp_c, index_t fn_c) {
    double denom = static_cast<double>(2 * tp_c + fp_c + fn_c);
    return denom == 0.0 ? 0.0 : 2.0 * static_cast<double>(tp_c) / denom;
  };
  F1Scores out;
  out.binary_f1 = f1_of(tp, fp, fn);
  // The negative class plays the positive role in its own score.
  double neg_f1 = f1_of(tn, fn, fp);
  out.macro_f1 = 0.5 * (out.binary_f1 + neg_f1);
  out.micro_f1 = static_cast<double>(tp + tn) / static_cast<double>(n);
  return out;
}

const char* EvalReport::csv_header() {
  return "auc,binary_f1,macro_f1,micro_f1,n,n_pos,n_neg";
}

std::string EvalReport::csv_row() const {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%.6f,%.6f,%.6f,%.6f,%lld,%lld,%lld", auc, binary_f1,
                macro_f1, micro_f1, static_cast<long long>(n),
                static_cast<long long>(n_pos), static_cast<long long>(n_neg));
  return buf;
}

EvalReport evaluate(const Vec& scores, const Vec& labels, double threshold) {
  EvalReport r;
  r.auc = auc_roc(scores, labels);
  F1Scores f1 = f1_suite(scores, labels, threshold);
  r.binary_f1 = f1.binary_f1;
  r.macro_f1 = f1.macro_f1;
  r.micro_f1 = f1.micro_f1;
  r.n = scores.size();
  for (index_t i = 0; i < labels.size(); ++i) r.n_pos += labels(i) == 1.0 ? 1 : 0;
  r.n_neg = r.n - r.n_pos;
  return r;
}

}  // namespace sbgl
