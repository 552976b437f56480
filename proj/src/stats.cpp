#include "texplain/stats.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

#include "texplain/error.hpp"

namespace texplain {

namespace {

constexpr double kBetaTolerance = 1e-12;
constexpr int kBetaMaxIterations = 500;

// Continued fraction for the incomplete beta function (modified Lentz).
double beta_continued_fraction(double a, double b, double x) {
  const double tiny = 1e-300;
  const double qab = a + b;
  const double qap = a + 1.0;
  const double qam = a - 1.0;
  double c = 1.0;
  double d = 1.0 - qab * x / qap;
  if (std::abs(d) < tiny) d = tiny;
  d = 1.0 / d;
  double h = d;
  for (int m = 1; m <= kBetaMaxIterations; ++m) {
    const int m2 = 2 * m;
    double aa = m * (b - m) * x / ((qam + m2) * (a + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    h *= d * c;
    aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
    d = 1.0 + aa * d;
    if (std::abs(d) < tiny) d = tiny;
    c = 1.0 + aa / c;
    if (std::abs(c) < tiny) c = tiny;
    d = 1.0 / d;
    const double del = d * c;
    h *= del;
    if (std::abs(del - 1.0) < kBetaTolerance) return h;
  }
  throw Error("incomplete beta continued fraction did not converge");
}

}  // namespace

double regularized_incomplete_beta(double a, double b, double x) {
  if (!(a > 0.0) || !(b > 0.0)) {
    throw std::invalid_argument("incomplete beta requires a > 0 and b > 0");
  }
  if (x < 0.0 || x > 1.0) {
    throw std::invalid_argument("incomplete beta requires x in [0, 1]");
  }
  if (x == 0.0) return 0.0;
  if (x == 1.0) return 1.0;
  const double log_front = std::lgamma(a + b) - std::lgamma(a) -
                           std::lgamma(b) + a * std::log(x) +
                           b * std::log1p(-x);
  const double front = std::exp(log_front);
  if (x < (a + 1.0) / (a + b + 2.0)) {
    return front * beta_continued_fraction(a, b, x) / a;
  }
  return 1.0 - front * beta_continued_fraction(b, a, 1.0 - x) / b;
}

double student_t_two_sided_p(double t, double df) {
  if (!(df > 0.0)) throw std::invalid_argument("degrees of freedom must be > 0");
  if (std::isinf(t)) return 0.0;
  if (t == 0.0) return 1.0;
  return regularized_incomplete_beta(0.5 * df, 0.5, df / (df + t * t));
}

namespace {

struct Moments {
  double mean = 0.0;
  double sample_variance = 0.0;  // divided by n - 1
  std::size_t n = 0;
};

Moments moments_of(std::span<const double> values) {
  Moments m;
  m.n = values.size();
  double sum = 0.0;
  for (double v : values) sum += v;
  m.mean = sum / static_cast<double>(m.n);
  double ss = 0.0;
  for (double v : values) {
    const double d = v - m.mean;
    ss += d * d;
  }
  m.sample_variance = ss / static_cast<double>(m.n - 1);
  return m;
}

}  // namespace

TTestResult t_test(std::span<const double> group_a,
                   std::span<const double> group_b) {
  if (group_a.size() < 2 || group_b.size() < 2) {
    throw std::invalid_argument("t-test groups need at least two values each");
  }
  const Moments a = moments_of(group_a);
  const Moments b = moments_of(group_b);

  TTestResult result;
  result.mean_a = a.mean;
  result.mean_b = b.mean;

  const double va = a.sample_variance / static_cast<double>(a.n);
  const double vb = b.sample_variance / static_cast<double>(b.n);
  const double diff = a.mean - b.mean;

  if (va + vb == 0.0) {
    // Both groups constant: compare by mean alone.
    result.degrees_of_freedom =
        static_cast<double>(a.n + b.n) - 2.0;
    if (diff == 0.0) {
      result.t_statistic = 0.0;
      result.p_value = 1.0;
    } else {
      result.t_statistic = diff > 0.0
                               ? std::numeric_limits<double>::infinity()
                               : -std::numeric_limits<double>::infinity();
      result.p_value = 0.0;
    }
    return result;
  }

  result.t_statistic = diff / std::sqrt(va + vb);
  result.degrees_of_freedom =
      (va + vb) * (va + vb) /
      (va * va / static_cast<double>(a.n - 1) +
       vb * vb / static_cast<double>(b.n - 1));
  result.p_value =
      student_t_two_sided_p(result.t_statistic, result.degrees_of_freedom);
  return result;
}

std::vector<FeatureComparison> feature_comparison_report(
    const FeatureTable& table) {
  std::vector<double> benign_buf, malignant_buf;
  std::size_t n_benign = 0, n_malignant = 0;
  for (int label : table.labels) (label == 0 ? n_benign : n_malignant)++;
  if (n_benign < 2 || n_malignant < 2) {
    throw std::invalid_argument(
        "feature comparison needs at least two cases per class");
  }

  std::vector<FeatureComparison> report;
  report.reserve(table.num_features());
  for (std::size_t f = 0; f < table.num_features(); ++f) {
    benign_buf.clear();
    malignant_buf.clear();
    for (std::size_t i = 0; i < table.num_cases(); ++i) {
      (table.labels[i] == 0 ? benign_buf : malignant_buf)
          .push_back(table.rows[i][f]);
    }
    report.push_back({table.feature_names[f], t_test(benign_buf, malignant_buf)});
  }
  return report;
}

std::string comparison_report_csv(
    const std::vector<FeatureComparison>& report) {
  std::string text = "feature,mean_benign,mean_malignant,t,df,p\n";
  for (const auto& entry : report) {
    text += entry.feature;
    text += ',';
    text += format_double(entry.test.mean_a);
    text += ',';
    text += format_double(entry.test.mean_b);
    text += ',';
    text += format_double(entry.test.t_statistic);
    text += ',';
    text += format_double(entry.test.degrees_of_freedom);
    text += ',';
    text += format_double(entry.test.p_value);
    text += '\n';
  }
  return text;
}

}  // namespace texplain
