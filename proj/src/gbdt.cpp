#include "texplain/gbdt.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>
#include <unordered_map>

#include <json.hpp>

#include "texplain/error.hpp"
#include "texplain/feature_table.hpp"

namespace texplain {

void GbdtConfig::validate() const {
  if (num_iterations < 1) throw std::invalid_argument("num_iterations must be >= 1");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) {
    throw std::invalid_argument("learning_rate must lie in (0, 1]");
  }
  if (num_leaves < 2) throw std::invalid_argument("num_leaves must be >= 2");
  if (max_bin < 2 || max_bin > 65535) {
    throw std::invalid_argument("max_bin must lie in [2, 65535]");
  }
  if (min_samples_leaf < 1) {
    throw std::invalid_argument("min_samples_leaf must be >= 1");
  }
  if (!(lambda_l2 >= 0.0)) throw std::invalid_argument("lambda_l2 must be >= 0");
}

double sigmoid(double x) {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

int BinMapper::bin_index(int feature, double value) const {
  const auto& t = thresholds[feature];
  return static_cast<int>(std::lower_bound(t.begin(), t.end(), value) -
                          t.begin());
}

BinMapper build_bins(const std::vector<std::vector<double>>& columns,
                     int max_bin) {
  if (!columns.empty() && columns.front().empty()) {
    throw std::invalid_argument("build_bins needs at least one sample");
  }
  BinMapper mapper;
  mapper.thresholds.resize(columns.size());
  std::vector<double> sorted;
  for (std::size_t f = 0; f < columns.size(); ++f) {
    sorted = columns[f];
    std::sort(sorted.begin(), sorted.end());

    std::vector<double> distinct;
    for (double v : sorted) {
      if (distinct.empty() || v != distinct.back()) distinct.push_back(v);
    }

    std::vector<double>& thresholds = mapper.thresholds[f];
    if (static_cast<int>(distinct.size()) <= max_bin) {
      // One bin per distinct value, cut halfway between neighbors.
      for (std::size_t i = 1; i < distinct.size(); ++i) {
        thresholds.push_back(0.5 * (distinct[i - 1] + distinct[i]));
      }
    } else {
      // Quantile cuts at ranks k*n/max_bin, skipping cuts that fall
      // inside a run of equal values so every bin keeps a sample.
      const std::size_t n = sorted.size();
      for (int k = 1; k < max_bin; ++k) {
        const std::size_t pos = static_cast<std::size_t>(k) * n /
                                static_cast<std::size_t>(max_bin);
        if (pos == 0 || pos >= n) continue;
        if (sorted[pos] > sorted[pos - 1]) {
          thresholds.push_back(0.5 * (sorted[pos - 1] + sorted[pos]));
        }
      }
      thresholds.erase(std::unique(thresholds.begin(), thresholds.end()),
                       thresholds.end());
    }
  }
  return mapper;
}

int DecisionTree::route(std::span<const double> row) const {
  int node = 0;
  while (!nodes[node].is_leaf()) {
    const TreeNode& t = nodes[node];
    node = row[t.feature] <= t.threshold ? t.left : t.right;
  }
  return node;
}

int DecisionTree::num_leaves() const {
  int leaves = 0;
  for (const TreeNode& n : nodes) leaves += n.is_leaf();
  return leaves;
}

int DecisionTree::max_depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int deepest = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) {
      deepest = std::max(deepest, depth[i]);
    } else {
      depth[nodes[i].left] = depth[i] + 1;
      depth[nodes[i].right] = depth[i] + 1;
    }
  }
  return deepest;
}

double DecisionTree::expected_value() const {
  const double root_count = static_cast<double>(nodes[0].count);
  double expectation = 0.0;
  for (const TreeNode& n : nodes) {
    if (n.is_leaf()) {
      expectation += n.value * (static_cast<double>(n.count) / root_count);
    }
  }
  return expectation;
}

double Ensemble::margin_for_row(std::span<const double> row) const {
  double sum = 0.0;
  for (const DecisionTree& tree : trees) sum += tree.predict(row);
  return base_score + learning_rate * sum;
}

double init_base_score(std::span<const int> labels) {
  if (labels.empty()) throw std::invalid_argument("no labels");
  std::size_t positives = 0;
  for (int y : labels) positives += (y != 0);
  if (positives == 0 || positives == labels.size()) {
    throw std::invalid_argument(
        "labels contain a single class; base score would be infinite");
  }
  const double rate = static_cast<double>(positives) /
                      static_cast<double>(labels.size());
  return std::log(rate / (1.0 - rate));
}

void compute_gradients(std::span<const int> labels,
                       std::span<const double> margins,
                       std::vector<double>& gradients,
                       std::vector<double>& hessians) {
  if (labels.size() != margins.size()) {
    throw std::invalid_argument("labels and margins differ in length");
  }
  gradients.resize(labels.size());
  hessians.resize(labels.size());
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double p = sigmoid(margins[i]);
    gradients[i] = static_cast<double>(labels[i] != 0) - p;
    hessians[i] = p * (1.0 - p);
  }
}

namespace {

struct SplitCandidate {
  double gain = 0.0;
  int feature = -1;
  int threshold_bin = -1;  // bins <= threshold_bin go left
  bool valid() const { return feature >= 0; }
};

struct LeafState {
  int node_id = 0;
  std::size_t begin = 0, end = 0;  // range in the shared sample-index array
  double sum_grad = 0.0;
  double sum_hess = 0.0;
  SplitCandidate best;
};

// Best histogram split of one leaf; scanning feature-major then
// threshold-major and replacing on strictly larger gain realizes the
// lowest-feature, lowest-threshold tie-break.
SplitCandidate find_best_split(const std::vector<std::vector<std::uint16_t>>& binned,
                               const BinMapper& bins,
                               std::span<const double> gradients,
                               std::span<const double> hessians,
                               std::span<const std::size_t> samples,
                               const LeafState& leaf, const GbdtConfig& config) {
  SplitCandidate best;
  const double l2 = config.lambda_l2;
  const double parent_score =
      leaf.sum_grad * leaf.sum_grad / (leaf.sum_hess + l2);
  const auto total_count = static_cast<std::int64_t>(leaf.end - leaf.begin);

  std::vector<double> hist_grad, hist_hess;
  std::vector<std::int64_t> hist_count;
  for (int f = 0; f < bins.num_features(); ++f) {
    const int nbins = bins.bin_count(f);
    if (nbins < 2) continue;
    hist_grad.assign(nbins, 0.0);
    hist_hess.assign(nbins, 0.0);
    hist_count.assign(nbins, 0);
    const auto& column = binned[f];
    for (std::size_t s = leaf.begin; s < leaf.end; ++s) {
      const std::uint16_t b = column[samples[s]];
      hist_grad[b] += gradients[samples[s]];
      hist_hess[b] += hessians[samples[s]];
      ++hist_count[b];
    }

    double left_grad = 0.0, left_hess = 0.0;
    std::int64_t left_count = 0;
    for (int b = 0; b + 1 < nbins; ++b) {
      left_grad += hist_grad[b];
      left_hess += hist_hess[b];
      left_count += hist_count[b];
      const std::int64_t right_count = total_count - left_count;
      if (left_count < config.min_samples_leaf ||
          right_count < config.min_samples_leaf) {
        continue;
      }
      const double right_grad = leaf.sum_grad - left_grad;
      const double right_hess = leaf.sum_hess - left_hess;
      const double gain = left_grad * left_grad / (left_hess + l2) +
                          right_grad * right_grad / (right_hess + l2) -
                          parent_score;
      if (gain > best.gain) {
        best.gain = gain;
        best.feature = f;
        best.threshold_bin = b;
      }
    }
  }
  return best;
}

}  // namespace

DecisionTree grow_tree(const std::vector<std::vector<std::uint16_t>>& binned,
                       const BinMapper& bins,
                       std::span<const double> gradients,
                       std::span<const double> hessians,
                       const GbdtConfig& config) {
  const std::size_t n = gradients.size();
  if (n < 2 * static_cast<std::size_t>(config.min_samples_leaf)) {
    throw std::invalid_argument("too few samples to grow a tree");
  }
  const double l2 = config.lambda_l2;

  std::vector<std::size_t> samples(n);
  for (std::size_t i = 0; i < n; ++i) samples[i] = i;

  DecisionTree tree;
  tree.nodes.reserve(2 * config.num_leaves);

  auto leaf_sums = [&](std::size_t begin, std::size_t end) {
    double g = 0.0, h = 0.0;
    for (std::size_t s = begin; s < end; ++s) {
      g += gradients[samples[s]];
      h += hessians[samples[s]];
    }
    return std::pair<double, double>(g, h);
  };

  LeafState root;
  root.node_id = 0;
  root.begin = 0;
  root.end = n;
  std::tie(root.sum_grad, root.sum_hess) = leaf_sums(0, n);

  TreeNode root_node;
  root_node.count = static_cast<std::int64_t>(n);
  root_node.value = root.sum_grad / (root.sum_hess + l2);
  tree.nodes.push_back(root_node);

  root.best = find_best_split(binned, bins, gradients, hessians, samples, root,
                              config);
  std::vector<LeafState> leaves{root};

  while (static_cast<int>(leaves.size()) < config.num_leaves) {
    int pick = -1;
    for (std::size_t i = 0; i < leaves.size(); ++i) {
      if (!leaves[i].best.valid() || leaves[i].best.gain <= 0.0) continue;
      if (pick < 0 || leaves[i].best.gain > leaves[pick].best.gain) {
        pick = static_cast<int>(i);
      }
    }
    if (pick < 0) break;

    LeafState leaf = leaves[pick];
    const SplitCandidate& split = leaf.best;
    const auto& column = binned[split.feature];
    const auto mid = std::stable_partition(
        samples.begin() + leaf.begin, samples.begin() + leaf.end,
        [&](std::size_t s) { return column[s] <= split.threshold_bin; });
    const std::size_t mid_pos =
        static_cast<std::size_t>(mid - samples.begin());

    const int left_id = static_cast<int>(tree.nodes.size());
    const int right_id = left_id + 1;

    LeafState left, right;
    left.node_id = left_id;
    left.begin = leaf.begin;
    left.end = mid_pos;
    std::tie(left.sum_grad, left.sum_hess) = leaf_sums(left.begin, left.end);
    right.node_id = right_id;
    right.begin = mid_pos;
    right.end = leaf.end;
    std::tie(right.sum_grad, right.sum_hess) = leaf_sums(right.begin, right.end);

    TreeNode& parent = tree.nodes[leaf.node_id];
    parent.feature = split.feature;
    parent.threshold = bins.thresholds[split.feature][split.threshold_bin];
    parent.left = left_id;
    parent.right = right_id;
    parent.value = 0.0;

    for (LeafState* child : {&left, &right}) {
      TreeNode node;
      node.count = static_cast<std::int64_t>(child->end - child->begin);
      node.value = child->sum_grad / (child->sum_hess + l2);
      tree.nodes.push_back(node);
      child->best = find_best_split(binned, bins, gradients, hessians, samples,
                                    *child, config);
    }

    leaves[pick] = left;
    leaves.push_back(right);
  }
  return tree;
}

namespace {

double mean_log_loss(std::span<const int> labels,
                     std::span<const double> margins) {
  double total = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const double m = margins[i];
    const double y = labels[i] != 0 ? 1.0 : 0.0;
    // log(1 + exp(m)) - y*m, rearranged to stay finite for large |m|.
    if (m > 0.0) {
      total += std::log1p(std::exp(-m)) + (1.0 - y) * m;
    } else {
      total += std::log1p(std::exp(m)) - y * m;
    }
  }
  return total / static_cast<double>(labels.size());
}

}  // namespace

TrainResult train(const std::vector<std::string>& feature_names,
                  const std::vector<std::vector<double>>& rows,
                  std::span<const int> labels, const GbdtConfig& config) {
  config.validate();
  const std::size_t n = rows.size();
  if (n != labels.size()) {
    throw std::invalid_argument("rows and labels differ in length");
  }
  if (n == 0) throw std::invalid_argument("no training data");
  const std::size_t num_features = feature_names.size();
  for (const auto& row : rows) {
    if (row.size() != num_features) {
      throw std::invalid_argument("feature row width differs from names");
    }
    for (double v : row) {
      if (!std::isfinite(v)) {
        throw std::invalid_argument("non-finite feature value in training data");
      }
    }
  }

  std::vector<std::vector<double>> columns(
      num_features, std::vector<double>(n));
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < num_features; ++f) columns[f][i] = rows[i][f];
  }

  TrainResult result;
  Ensemble& model = result.ensemble;
  model.base_score = init_base_score(labels);
  model.learning_rate = config.learning_rate;
  model.feature_names = feature_names;
  model.bin_mapper = build_bins(columns, config.max_bin);

  std::vector<std::vector<std::uint16_t>> binned(
      num_features, std::vector<std::uint16_t>(n));
  for (std::size_t f = 0; f < num_features; ++f) {
    for (std::size_t i = 0; i < n; ++i) {
      binned[f][i] =
          static_cast<std::uint16_t>(model.bin_mapper.bin_index(f, columns[f][i]));
    }
  }

  std::vector<double> margins(n, model.base_score);
  std::vector<double> gradients, hessians;
  result.train_loss.reserve(config.num_iterations);
  model.trees.reserve(config.num_iterations);

  for (int m = 0; m < config.num_iterations; ++m) {
    compute_gradients(labels, margins, gradients, hessians);
    DecisionTree tree =
        grow_tree(binned, model.bin_mapper, gradients, hessians, config);
    for (std::size_t i = 0; i < n; ++i) {
      margins[i] += config.learning_rate * tree.predict(rows[i]);
    }
    model.trees.push_back(std::move(tree));
    result.train_loss.push_back(mean_log_loss(labels, margins));
  }
  return result;
}

TrainResult train(const std::vector<FeatureVector>& cases,
                  std::span<const int> labels, const GbdtConfig& config) {
  if (cases.empty()) throw std::invalid_argument("no training data");
  const std::vector<std::string>& names = cases.front().names;
  std::vector<std::vector<double>> rows;
  rows.reserve(cases.size());
  for (const FeatureVector& fv : cases) {
    if (fv.names != names) {
      throw std::invalid_argument("inconsistent feature names across cases");
    }
    rows.push_back(fv.values);
  }
  return train(names, rows, labels, config);
}

std::vector<double> row_in_model_order(const Ensemble& ensemble,
                                       const FeatureVector& features) {
  if (features.names.size() != features.values.size()) {
    throw std::invalid_argument("feature names and values differ in length");
  }
  if (features.names == ensemble.feature_names) return features.values;

  std::unordered_map<std::string, double> by_name;
  by_name.reserve(features.names.size());
  for (std::size_t i = 0; i < features.names.size(); ++i) {
    by_name.emplace(features.names[i], features.values[i]);
  }
  if (by_name.size() != features.names.size()) {
    throw std::invalid_argument("duplicate feature names in input");
  }
  if (by_name.size() != ensemble.feature_names.size()) {
    throw std::invalid_argument("feature count differs from the model");
  }
  std::vector<double> row;
  row.reserve(ensemble.feature_names.size());
  for (const std::string& name : ensemble.feature_names) {
    auto it = by_name.find(name);
    if (it == by_name.end()) {
      throw std::invalid_argument("missing feature: " + name);
    }
    row.push_back(it->second);
  }
  return row;
}

double predict_margin(const Ensemble& ensemble, const FeatureVector& features) {
  return ensemble.margin_for_row(row_in_model_order(ensemble, features));
}

double predict_proba(const Ensemble& ensemble, const FeatureVector& features) {
  return sigmoid(predict_margin(ensemble, features));
}

namespace {

constexpr int kModelSchemaVersion = 1;

}  // namespace

std::string model_to_json(const Ensemble& ensemble) {
  nlohmann::json j;
  j["schema_version"] = kModelSchemaVersion;
  j["base_score"] = ensemble.base_score;
  j["learning_rate"] = ensemble.learning_rate;
  j["feature_names"] = ensemble.feature_names;
  nlohmann::json trees = nlohmann::json::array();
  for (const DecisionTree& tree : ensemble.trees) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const TreeNode& n : tree.nodes) {
      nodes.push_back({{"feature", n.feature},
                       {"threshold", n.threshold},
                       {"left", n.left},
                       {"right", n.right},
                       {"value", n.value},
                       {"count", n.count}});
    }
    trees.push_back({{"nodes", std::move(nodes)}});
  }
  j["trees"] = std::move(trees);
  return j.dump(1);
}

Ensemble model_from_json(const std::string& text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw SchemaError(std::string("corrupt model JSON: ") + e.what());
  }
  try {
    if (!j.contains("schema_version") ||
        j["schema_version"].get<int>() != kModelSchemaVersion) {
      throw SchemaError("unsupported model schema version");
    }
    Ensemble model;
    model.base_score = j.at("base_score").get<double>();
    model.learning_rate = j.at("learning_rate").get<double>();
    model.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    for (const auto& jt : j.at("trees")) {
      DecisionTree tree;
      for (const auto& jn : jt.at("nodes")) {
        TreeNode n;
        n.feature = jn.at("feature").get<int>();
        n.threshold = jn.at("threshold").get<double>();
        n.left = jn.at("left").get<int>();
        n.right = jn.at("right").get<int>();
        n.value = jn.at("value").get<double>();
        n.count = jn.at("count").get<std::int64_t>();
        tree.nodes.push_back(n);
      }
      if (tree.nodes.empty()) throw SchemaError("model tree has no nodes");
      for (const TreeNode& n : tree.nodes) {
        const int size = static_cast<int>(tree.nodes.size());
        if (!n.is_leaf() &&
            (n.left < 0 || n.left >= size || n.right < 0 || n.right >= size)) {
          throw SchemaError("model node child index out of range");
        }
      }
      model.trees.push_back(std::move(tree));
    }
    return model;
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("malformed model JSON: ") + e.what());
  }
}

void save_model(const Ensemble& ensemble, const std::filesystem::path& path) {
  atomic_write_file(path, model_to_json(ensemble) + "\n");
}

Ensemble load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open model file: " + path.string());
  std::stringstream buffer;
  buffer << in.rdbuf();
  return model_from_json(buffer.str());
}

}  // namespace texplain
