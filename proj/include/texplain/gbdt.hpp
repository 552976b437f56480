#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "texplain/texture.hpp"

namespace texplain {

struct GbdtConfig {
  int num_iterations = 500;   // boosting rounds M
  double learning_rate = 0.05;
  int num_leaves = 10;        // terminal-node budget J per tree
  int max_bin = 512;
  int min_samples_leaf = 5;
  double lambda_l2 = 1.0;     // leaf value regularizer
  std::uint64_t seed = 0;

  void validate() const;
};

// Maps real feature values onto histogram bin indices. Per feature the
// thresholds are strictly increasing; bin(v) = number of thresholds < v,
// so v <= thresholds[b] exactly when bin(v) <= b.
struct BinMapper {
  std::vector<std::vector<double>> thresholds;

  int num_features() const { return static_cast<int>(thresholds.size()); }
  int bin_count(int feature) const {
    return static_cast<int>(thresholds[feature].size()) + 1;
  }
  int bin_index(int feature, double value) const;
};

// Distinct-value binning with midpoint thresholds when a feature has at
// most max_bin distinct values, otherwise quantile-spaced thresholds with
// every resulting bin non-empty. `columns` is one vector per feature.
BinMapper build_bins(const std::vector<std::vector<double>>& columns,
                     int max_bin);

struct TreeNode {
  int feature = -1;       // split feature index; -1 marks a leaf
  double threshold = 0.0; // value <= threshold routes left
  int left = -1;
  int right = -1;
  double value = 0.0;     // leaf value (unscaled by the learning rate)
  std::int64_t count = 0; // training samples that reached this node

  bool is_leaf() const { return feature < 0; }
};

struct DecisionTree {
  std::vector<TreeNode> nodes;  // nodes[0] is the root

  // Leaf reached by a dense row indexed by training feature order.
  int route(std::span<const double> row) const;
  double predict(std::span<const double> row) const {
    return nodes[route(row)].value;
  }
  int num_leaves() const;
  int max_depth() const;
  // Cover-weighted mean leaf value: the tree's output expectation under
  // the training distribution.
  double expected_value() const;
};

struct Ensemble {
  double base_score = 0.0;
  double learning_rate = 0.05;
  std::vector<std::string> feature_names;
  std::vector<DecisionTree> trees;
  // Training-time artifact; not serialized with the model.
  BinMapper bin_mapper;

  double margin_for_row(std::span<const double> row) const;
};

// Constant model initialization: the log-odds of the positive rate, the
// minimizer of the binary cross-entropy over constants. Throws when only
// one class is present.
double init_base_score(std::span<const int> labels);

// Residuals r = y - sigmoid(margin) and hessians h = p (1 - p).
void compute_gradients(std::span<const int> labels,
                       std::span<const double> margins,
                       std::vector<double>& gradients,
                       std::vector<double>& hessians);

// Grows one regression tree leaf-wise: repeatedly splits the live leaf
// whose best histogram split has the largest gain
//   G_L^2/(H_L+l2) + G_R^2/(H_R+l2) - G^2/(H+l2)
// until the leaf budget is reached or no split has positive gain. Leaf
// values are the Newton step G/(H+l2). Ties break on the lowest feature
// index, then the lowest threshold. `binned` is column-major
// (per-feature) bin indices.
DecisionTree grow_tree(const std::vector<std::vector<std::uint16_t>>& binned,
                       const BinMapper& bins,
                       std::span<const double> gradients,
                       std::span<const double> hessians,
                       const GbdtConfig& config);

struct TrainResult {
  Ensemble ensemble;
  std::vector<double> train_loss;  // per-iteration mean binary log loss
};

// Full boosting loop over named feature rows; labels are 0/1 with both
// classes required and all feature values finite.
TrainResult train(const std::vector<std::string>& feature_names,
                  const std::vector<std::vector<double>>& rows,
                  std::span<const int> labels, const GbdtConfig& config);
TrainResult train(const std::vector<FeatureVector>& cases,
                  std::span<const int> labels, const GbdtConfig& config);

// Raw additive margin base_score + lr * sum of tree outputs. The input
// vector is matched to the training features by name; order is free but
// the name set must match exactly.
double predict_margin(const Ensemble& ensemble, const FeatureVector& features);
// Probability of the malignant class, sigmoid(margin).
double predict_proba(const Ensemble& ensemble, const FeatureVector& features);

double sigmoid(double x);

// Reorders a named vector into training feature order.
std::vector<double> row_in_model_order(const Ensemble& ensemble,
                                       const FeatureVector& features);

// Versioned JSON round-trip; loading a saved model predicts bit-equal
// margins.
void save_model(const Ensemble& ensemble, const std::filesystem::path& path);
Ensemble load_model(const std::filesystem::path& path);
std::string model_to_json(const Ensemble& ensemble);
Ensemble model_from_json(const std::string& text);

}  // namespace texplain
