#pragma once

#include "sbgl/types.hpp"

namespace sbgl {

/// Area under the ROC curve via the rank statistic. Tied scores receive
/// average ranks, which credits each tied positive-negative pair with 1/2.
/// Labels must contain both classes; anything else is DegenerateLabels.
double auc_roc(const Vec& scores, const Vec& labels);

struct F1Scores {
  double binary_f1 = 0.0;  // F1 of the positive class
  double macro_f1 = 0.0;   // unweighted mean over both classes
  double micro_f1 = 0.0;   // equals accuracy for single-label binary data
};

/// Thresholds scores at `threshold` (score >= threshold predicts positive)
/// and computes the F1 family. A class that is absent from both labels and
/// predictions contributes an F1 of 0 to the macro average.
F1Scores f1_suite(const Vec& scores, const Vec& labels, double threshold = 0.5);

struct EvalReport {
  double auc = 0.0;
  double binary_f1 = 0.0;
  double macro_f1 = 0.0;
  double micro_f1 = 0.0;
  index_t n = 0;
  index_t n_pos = 0;
  index_t n_neg = 0;

  static const char* csv_header();
  std::string csv_row() const;
};

/// Full evaluation of a score vector against binary labels.
EvalReport evaluate(const Vec& scores, const Vec& labels, double threshold = 0.5);

}  // namespace sbgl
