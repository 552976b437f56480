#pragma once

#include <span>
#include <string>
#include <vector>

#include "texplain/gbdt.hpp"

namespace texplain {

enum class StepDirection { left, right };

// One internal-node comparison along a tree's decision path.
struct DecisionPathStep {
  std::string feature_name;
  double threshold = 0.0;
  double observed_value = 0.0;
  StepDirection direction = StepDirection::left;  // left iff value <= threshold
  double node_train_fraction = 1.0;  // training cover of the node
};

struct DecisionPath {
  int tree_index = 0;
  std::vector<DecisionPathStep> steps;
  double leaf_value = 0.0;  // unscaled; margin contribution is lr * leaf_value
};

// Additive per-feature attribution on the margin scale.
struct ShapAttribution {
  double base_value = 0.0;  // expected margin under the training distribution
  std::vector<std::string> names;
  std::vector<double> contributions;

  double total() const;  // base_value + sum of contributions
};

// One decision path per tree, recording the comparison actually evaluated
// at every internal node plus the training cover of each visited node.
std::vector<DecisionPath> trace_paths(const Ensemble& ensemble,
                                      const FeatureVector& features);

// Exact path-dependent tree-Shapley attribution, with per-node training
// covers as conditional probabilities, summed over trees and scaled by the
// learning rate. Satisfies base_value + sum = predict_margin.
ShapAttribution shap_values(const Ensemble& ensemble,
                            const FeatureVector& features);

struct ImportanceEntry {
  std::string feature;
  double mean_abs_benign = 0.0;     // over cases predicted benign
  double mean_abs_malignant = 0.0;  // over cases predicted malignant
};

// Mean absolute Shapley contribution per feature, grouped by predicted
// class, sorted by the overall mean descending with ties broken by name.
std::vector<ImportanceEntry> global_importance(
    const Ensemble& ensemble, const std::vector<FeatureVector>& dataset);

// Graphviz export: one digraph per requested tree, node labels carrying
// split feature, threshold and cover, and the instance's path edges
// highlighted.
std::string trees_to_dot(const Ensemble& ensemble,
                         const FeatureVector& features,
                         std::span<const int> tree_indices);

}  // namespace texplain
