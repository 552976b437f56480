#include "texplain/eval.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

#include "texplain/feature_table.hpp"

namespace texplain {

double auc_score(std::span<const double> scores, std::span<const int> labels) {
  if (scores.size() != labels.size()) {
    throw std::invalid_argument("scores and labels differ in length");
  }
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (int y : labels) n_pos += (y != 0);
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) {
    throw std::invalid_argument("AUC needs both classes present");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return scores[a] < scores[b];
  });

  // Mid-ranks over tied scores; positives' rank sum gives the
  // Mann-Whitney statistic, identical to pair counting with ties at 0.5.
  double positive_rank_sum = 0.0;
  std::size_t i = 0;
  while (i < n) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);  // 1-based
    for (std::size_t k = i; k < j; ++k) {
      if (labels[order[k]] != 0) positive_rank_sum += mid_rank;
    }
    i = j;
  }
  const double u = positive_rank_sum -
                   0.5 * static_cast<double>(n_pos) * (static_cast<double>(n_pos) + 1.0);
  return u / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

EvalReport evaluate(std::span<const double> probabilities,
                    std::span<const int> labels, double threshold) {
  if (probabilities.size() != labels.size()) {
    throw std::invalid_argument("probabilities and labels differ in length");
  }
  if (probabilities.empty()) {
    throw std::invalid_argument("nothing to evaluate");
  }
  for (double p : probabilities) {
    if (!(p >= 0.0 && p <= 1.0)) {
      throw std::invalid_argument("probability outside [0, 1]");
    }
  }

  EvalReport report;
  report.threshold = threshold;
  for (std::size_t i = 0; i < probabilities.size(); ++i) {
    const bool predicted = probabilities[i] >= threshold;
    const bool actual = labels[i] != 0;
    if (predicted && actual) ++report.tp;
    else if (predicted && !actual) ++report.fp;
    else if (!predicted && actual) ++report.fn;
    else ++report.tn;
  }
  const double n = static_cast<double>(probabilities.size());
  report.accuracy = static_cast<double>(report.tp + report.tn) / n;

  auto ratio = [&report](long num, long den) {
    if (den == 0) {
      report.zero_denominator = true;
      return 0.0;
    }
    return static_cast<double>(num) / static_cast<double>(den);
  };
  report.precision = ratio(report.tp, report.tp + report.fp);
  report.recall = ratio(report.tp, report.tp + report.fn);
  if (report.precision + report.recall == 0.0) {
    report.zero_denominator = true;
    report.f1 = 0.0;
  } else {
    report.f1 = 2.0 * report.precision * report.recall /
                (report.precision + report.recall);
  }

  const bool single_class = (report.tp + report.fn == 0) || (report.fp + report.tn == 0);
  if (!single_class) {
    report.auc = auc_score(probabilities, labels);
  }
  return report;
}

std::string eval_report_json(const EvalReport& report) {
  nlohmann::json j;
  j["accuracy"] = report.accuracy;
  j["precision"] = report.precision;
  j["recall"] = report.recall;
  j["f1"] = report.f1;
  if (report.auc.has_value()) {
    j["auc"] = *report.auc;
  } else {
    j["auc"] = nullptr;
  }
  j["confusion"] = {{"tp", report.tp},
                    {"fp", report.fp},
                    {"fn", report.fn},
                    {"tn", report.tn}};
  j["threshold"] = report.threshold;
  j["zero_denominator"] = report.zero_denominator;
  return j.dump(2) + "\n";
}

std::string eval_report_csv(const EvalReport& report) {
  std::string text = "precision,recall,f1,auc,accuracy\n";
  text += format_double(report.precision);
  text += ',';
  text += format_double(report.recall);
  text += ',';
  text += format_double(report.f1);
  text += ',';
  text += report.auc.has_value() ? format_double(*report.auc) : std::string("nan");
  text += ',';
  text += format_double(report.accuracy);
  text += '\n';
  return text;
}

}  // namespace texplain
