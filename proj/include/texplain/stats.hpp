#pragma once

#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "texplain/feature_table.hpp"

namespace texplain {

struct TTestResult {
  double mean_a = 0.0;
  double mean_b = 0.0;
  double t_statistic = 0.0;
  double degrees_of_freedom = 0.0;
  double p_value = 1.0;
};

// Regularized incomplete beta function I_x(a, b), evaluated with a
// continued fraction to 1e-12 accuracy.
double regularized_incomplete_beta(double a, double b, double x);

// Two-sided tail probability of Student's t distribution.
double student_t_two_sided_p(double t, double df);

// Welch's unequal-variance two-sided t-test with Welch-Satterthwaite
// degrees of freedom. Each group needs at least two values. Two
// zero-variance groups compare by mean: equal means give t=0, p=1;
// unequal means give p=0 with an infinite t of the matching sign.
TTestResult t_test(std::span<const double> group_a,
                   std::span<const double> group_b);

struct FeatureComparison {
  std::string feature;
  TTestResult test;  // mean_a = benign, mean_b = malignant
};

// Per-feature benign-vs-malignant t-tests, in the table's feature order.
// Requires at least two cases of each class.
std::vector<FeatureComparison> feature_comparison_report(
    const FeatureTable& table);

// CSV columns: feature,mean_benign,mean_malignant,t,df,p
std::string comparison_report_csv(const std::vector<FeatureComparison>& report);

}  // namespace texplain
