#pragma once

#include <optional>
#include <span>
#include <string>

namespace texplain {

// Classification metrics with malignant as the positive class.
struct EvalReport {
  double accuracy = 0.0;
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;
  std::optional<double> auc;  // absent when only one class is present
  long tp = 0, fp = 0, fn = 0, tn = 0;
  double threshold = 0.5;
  // True when precision, recall, or f1 had a zero denominator and was
  // reported as 0 by convention.
  bool zero_denominator = false;
};

// AUC by rank-based pair counting, ties scored 0.5. Throws when labels
// contain a single class.
double auc_score(std::span<const double> scores, std::span<const int> labels);

// Thresholded confusion counts and derived metrics; a probability at the
// threshold counts as a positive call. Zero-denominator metrics are 0 and
// flagged. AUC is omitted (not an exception) when one class is absent so
// the rest of the report stays usable.
EvalReport evaluate(std::span<const double> probabilities,
                    std::span<const int> labels, double threshold = 0.5);

std::string eval_report_json(const EvalReport& report);
// One data row in Table order: precision,recall,f1,auc,accuracy.
std::string eval_report_csv(const EvalReport& report);

}  // namespace texplain
