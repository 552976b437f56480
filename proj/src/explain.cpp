#include "texplain/explain.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>
#include <vector>

namespace texplain {

double ShapAttribution::total() const {
  double sum = base_value;
  for (double c : contributions) sum += c;
  return sum;
}

std::vector<DecisionPath> trace_paths(const Ensemble& ensemble,
                                      const FeatureVector& features) {
  const std::vector<double> row = row_in_model_order(ensemble, features);
  std::vector<DecisionPath> paths;
  paths.reserve(ensemble.trees.size());
  for (std::size_t t = 0; t < ensemble.trees.size(); ++t) {
    const DecisionTree& tree = ensemble.trees[t];
    const double root_count = static_cast<double>(tree.nodes[0].count);
    DecisionPath path;
    path.tree_index = static_cast<int>(t);
    int node = 0;
    while (!tree.nodes[node].is_leaf()) {
      const TreeNode& n = tree.nodes[node];
      const bool goes_left = row[n.feature] <= n.threshold;
      DecisionPathStep step;
      step.feature_name = ensemble.feature_names[n.feature];
      step.threshold = n.threshold;
      step.observed_value = row[n.feature];
      step.direction = goes_left ? StepDirection::left : StepDirection::right;
      step.node_train_fraction =
          root_count > 0.0 ? static_cast<double>(n.count) / root_count : 1.0;
      path.steps.push_back(std::move(step));
      node = goes_left ? n.left : n.right;
    }
    path.leaf_value = tree.nodes[node].value;
    paths.push_back(std::move(path));
  }
  return paths;
}

namespace {

// Weighted-subset bookkeeping for the polynomial-time tree-Shapley
// recursion: each element records one unique feature on the current
// root-to-node path together with the fraction of weighted subsets
// flowing through when the feature is excluded (zero) or included (one).
struct PathElement {
  int feature = -1;
  double zero_fraction = 0.0;
  double one_fraction = 0.0;
  double pweight = 0.0;
};

void extend_path(std::vector<PathElement>& path, int depth,
                 double zero_fraction, double one_fraction, int feature) {
  path.resize(static_cast<std::size_t>(depth) + 1);
  path[depth] = {feature, zero_fraction, one_fraction,
                 depth == 0 ? 1.0 : 0.0};
  for (int i = depth - 1; i >= 0; --i) {
    path[i + 1].pweight += one_fraction * path[i].pweight * (i + 1) /
                           static_cast<double>(depth + 1);
    path[i].pweight = zero_fraction * path[i].pweight * (depth - i) /
                      static_cast<double>(depth + 1);
  }
}

void unwind_path(std::vector<PathElement>& path, int depth, int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  for (int i = depth - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp = path[i].pweight;
      path[i].pweight =
          next_one_portion * (depth + 1) / ((i + 1) * one_fraction);
      next_one_portion = tmp - path[i].pweight * zero_fraction * (depth - i) /
                                   static_cast<double>(depth + 1);
    } else {
      path[i].pweight = path[i].pweight * (depth + 1) /
                        (zero_fraction * (depth - i));
    }
  }
  // Shift the removed element's successors down, keeping the pweights just
  // recomputed for the shortened path in place.
  for (int i = index; i < depth; ++i) {
    path[i].feature = path[i + 1].feature;
    path[i].zero_fraction = path[i + 1].zero_fraction;
    path[i].one_fraction = path[i + 1].one_fraction;
  }
}

// Total permutation weight the element at `index` would carry if removed;
// the leaf loop multiplies it by (one - zero) to get the feature's share.
double unwound_path_sum(const std::vector<PathElement>& path, int depth,
                        int index) {
  const double one_fraction = path[index].one_fraction;
  const double zero_fraction = path[index].zero_fraction;
  double next_one_portion = path[depth].pweight;
  double total = 0.0;
  for (int i = depth - 1; i >= 0; --i) {
    if (one_fraction != 0.0) {
      const double tmp =
          next_one_portion * (depth + 1) / ((i + 1) * one_fraction);
      total += tmp;
      next_one_portion = path[i].pweight - tmp * zero_fraction * (depth - i) /
                                               static_cast<double>(depth + 1);
    } else {
      total += path[i].pweight * (depth + 1) /
               (zero_fraction * (depth - i));
    }
  }
  return total;
}

void shap_recurse(const DecisionTree& tree, std::span<const double> row,
                  std::vector<double>& phi, int node_index,
                  std::vector<PathElement> path, int depth,
                  double zero_fraction, double one_fraction,
                  int parent_feature) {
  extend_path(path, depth, zero_fraction, one_fraction, parent_feature);
  const TreeNode& node = tree.nodes[node_index];

  if (node.is_leaf()) {
    for (int i = 1; i <= depth; ++i) {
      const double weight = unwound_path_sum(path, depth, i);
      phi[path[i].feature] +=
          weight * (path[i].one_fraction - path[i].zero_fraction) * node.value;
    }
    return;
  }

  const int hot =
      row[node.feature] <= node.threshold ? node.left : node.right;
  const int cold = hot == node.left ? node.right : node.left;
  const double node_count = static_cast<double>(node.count);
  const double hot_zero = static_cast<double>(tree.nodes[hot].count) / node_count;
  const double cold_zero =
      static_cast<double>(tree.nodes[cold].count) / node_count;

  // A feature met twice on one path folds into a single element.
  double incoming_zero = 1.0, incoming_one = 1.0;
  int seen = -1;
  for (int i = 1; i <= depth; ++i) {
    if (path[i].feature == node.feature) {
      seen = i;
      break;
    }
  }
  if (seen >= 0) {
    incoming_zero = path[seen].zero_fraction;
    incoming_one = path[seen].one_fraction;
    unwind_path(path, depth, seen);
    --depth;
  }

  shap_recurse(tree, row, phi, hot, path, depth + 1,
               hot_zero * incoming_zero, incoming_one, node.feature);
  shap_recurse(tree, row, phi, cold, path, depth + 1,
               cold_zero * incoming_zero, 0.0, node.feature);
}

void require_cover_counts(const Ensemble& ensemble) {
  for (const DecisionTree& tree : ensemble.trees) {
    for (const TreeNode& n : tree.nodes) {
      if (n.count < 1) {
        throw std::invalid_argument(
            "model lacks training cover counts; cannot attribute");
      }
    }
  }
}

}  // namespace

ShapAttribution shap_values(const Ensemble& ensemble,
                            const FeatureVector& features) {
  require_cover_counts(ensemble);
  const std::vector<double> row = row_in_model_order(ensemble, features);

  std::vector<double> phi(ensemble.feature_names.size(), 0.0);
  double expected = 0.0;
  for (const DecisionTree& tree : ensemble.trees) {
    shap_recurse(tree, row, phi, 0, {}, 0, 1.0, 1.0, -1);
    expected += tree.expected_value();
  }

  ShapAttribution result;
  result.base_value =
      ensemble.base_score + ensemble.learning_rate * expected;
  result.names = ensemble.feature_names;
  result.contributions.reserve(phi.size());
  for (double v : phi) {
    result.contributions.push_back(ensemble.learning_rate * v);
  }
  return result;
}

std::vector<ImportanceEntry> global_importance(
    const Ensemble& ensemble, const std::vector<FeatureVector>& dataset) {
  if (dataset.empty()) throw std::invalid_argument("empty dataset");
  const std::size_t num_features = ensemble.feature_names.size();
  std::vector<double> sum_benign(num_features, 0.0);
  std::vector<double> sum_malignant(num_features, 0.0);
  std::size_t n_benign = 0, n_malignant = 0;

  for (const FeatureVector& fv : dataset) {
    const ShapAttribution attribution = shap_values(ensemble, fv);
    const bool malignant = attribution.total() >= 0.0;
    auto& sums = malignant ? sum_malignant : sum_benign;
    (malignant ? n_malignant : n_benign) += 1;
    for (std::size_t f = 0; f < num_features; ++f) {
      sums[f] += std::abs(attribution.contributions[f]);
    }
  }

  std::vector<ImportanceEntry> entries(num_features);
  std::vector<double> overall(num_features, 0.0);
  const double total_cases = static_cast<double>(dataset.size());
  for (std::size_t f = 0; f < num_features; ++f) {
    entries[f].feature = ensemble.feature_names[f];
    entries[f].mean_abs_benign =
        n_benign > 0 ? sum_benign[f] / static_cast<double>(n_benign) : 0.0;
    entries[f].mean_abs_malignant =
        n_malignant > 0 ? sum_malignant[f] / static_cast<double>(n_malignant)
                        : 0.0;
    overall[f] = (sum_benign[f] + sum_malignant[f]) / total_cases;
  }

  std::vector<std::size_t> order(num_features);
  for (std::size_t f = 0; f < num_features; ++f) order[f] = f;
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    if (overall[a] != overall[b]) return overall[a] > overall[b];
    return entries[a].feature < entries[b].feature;
  });

  std::vector<ImportanceEntry> ranked;
  ranked.reserve(num_features);
  for (std::size_t f : order) ranked.push_back(std::move(entries[f]));
  return ranked;
}

namespace {

std::string short_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.6g", v);
  return buf;
}

}  // namespace

std::string trees_to_dot(const Ensemble& ensemble,
                         const FeatureVector& features,
                         std::span<const int> tree_indices) {
  const std::vector<double> row = row_in_model_order(ensemble, features);
  std::string out;
  for (int t : tree_indices) {
    if (t < 0 || t >= static_cast<int>(ensemble.trees.size())) {
      throw std::invalid_argument("tree index out of range: " +
                                  std::to_string(t));
    }
    const DecisionTree& tree = ensemble.trees[t];

    // Nodes the instance actually visits, for edge highlighting.
    std::vector<bool> on_path(tree.nodes.size(), false);
    int node = 0;
    on_path[0] = true;
    while (!tree.nodes[node].is_leaf()) {
      const TreeNode& n = tree.nodes[node];
      node = row[n.feature] <= n.threshold ? n.left : n.right;
      on_path[node] = true;
    }

    out += "digraph tree_" + std::to_string(t) + " {\n";
    out += "  node [shape=box, fontname=\"Helvetica\"];\n";
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const TreeNode& n = tree.nodes[i];
      out += "  n" + std::to_string(i) + " [label=\"";
      if (n.is_leaf()) {
        out += "leaf = " + short_double(n.value);
      } else {
        out += ensemble.feature_names[n.feature] +
               " <= " + short_double(n.threshold);
      }
      out += "\\ncover = " + std::to_string(n.count) + "\"";
      if (on_path[i]) out += ", color=orange, penwidth=2";
      out += "];\n";
    }
    for (std::size_t i = 0; i < tree.nodes.size(); ++i) {
      const TreeNode& n = tree.nodes[i];
      if (n.is_leaf()) continue;
      for (const auto& [child, tag] :
           {std::pair{n.left, "yes"}, std::pair{n.right, "no"}}) {
        out += "  n" + std::to_string(i) + " -> n" + std::to_string(child) +
               " [label=\"" + tag + "\"";
        if (on_path[i] && on_path[child]) {
          out += ", color=orange, penwidth=3";
        }
        out += "];\n";
      }
    }
    out += "}\n";
  }
  return out;
}

}  // namespace texplain
