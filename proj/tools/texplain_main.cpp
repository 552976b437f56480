// texplain: explainable GLCM texture classification of ultrasound ROIs.
//
// Pipeline: extract -> compare -> train -> evaluate / predict / explain.
// Every stage exchanges plain CSV/JSON files and writes outputs through a
// temp-file-plus-rename so interrupted runs never leave partial files.

#include <algorithm>
#include <atomic>
#include <cstdint>
#include <exception>
#include <iostream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "texplain/dataset.hpp"
#include "texplain/error.hpp"
#include "texplain/eval.hpp"
#include "texplain/explain.hpp"
#include "texplain/feature_table.hpp"
#include "texplain/gbdt.hpp"
#include "texplain/image.hpp"
#include "texplain/stats.hpp"
#include "texplain/texture.hpp"

namespace {

using namespace texplain;

void emit(const std::string& path, const std::string& text) {
  if (path.empty()) {
    std::cout << text;
  } else {
    atomic_write_file(path, text);
  }
}

struct ExtractOptions {
  std::string dataset;
  std::string output;
  std::vector<int> distances{1, 3, 5};
  std::vector<int> angles{0, 45, 90, 135};
  int glcm_levels = 256;
  bool first_order = false;
  int shift_c = 0;
  int jobs = 1;
};

void run_extract(const ExtractOptions& o) {
  GlcmConfig glcm;
  glcm.levels = o.glcm_levels;
  glcm.distances = o.distances;
  glcm.angles.clear();
  for (int deg : o.angles) glcm.angles.push_back(angle_from_degrees(deg));
  FirstOrderConfig fo;
  fo.shift_c = o.shift_c;

  const ScanResult scan = scan_dataset(o.dataset);
  if (scan.skipped_without_mask > 0) {
    std::cerr << "warning: skipped " << scan.skipped_without_mask
              << " image(s) without a mask\n";
  }
  const std::size_t n = scan.cases.size();

  std::vector<FeatureVector> rows(n);
  std::vector<std::exception_ptr> failures(n);
  std::atomic<std::size_t> next{0};
  std::atomic<std::size_t> done{0};
  std::mutex io_mutex;

  auto worker = [&] {
    for (std::size_t i = next.fetch_add(1); i < n; i = next.fetch_add(1)) {
      const Case& c = scan.cases[i];
      try {
        const GrayImage image = load_image(c.image_path);
        const RoiMask mask = load_case_mask(c);
        rows[i] = feature_vector(image, mask, glcm, fo, o.first_order);
      } catch (...) {
        failures[i] = std::current_exception();
      }
      const std::size_t k = done.fetch_add(1) + 1;
      std::lock_guard<std::mutex> lock(io_mutex);
      std::cerr << "[" << k << "/" << n << "] " << c.id() << "\n";
    }
  };

  const int jobs = std::clamp<int>(o.jobs, 1, static_cast<int>(std::max<std::size_t>(n, 1)));
  std::vector<std::thread> pool;
  for (int t = 1; t < jobs; ++t) pool.emplace_back(worker);
  worker();
  for (std::thread& t : pool) t.join();

  for (std::size_t i = 0; i < n; ++i) {
    if (failures[i]) std::rethrow_exception(failures[i]);
  }

  FeatureTable table;
  table.feature_names = feature_names(glcm, o.first_order);
  for (std::size_t i = 0; i < n; ++i) {
    table.case_ids.push_back(scan.cases[i].id());
    table.labels.push_back(static_cast<int>(scan.cases[i].label));
    table.rows.push_back(std::move(rows[i].values));
  }
  write_feature_csv(o.output, table);
  std::cerr << "wrote " << n << " case(s), " << table.feature_names.size()
            << " feature(s) to " << o.output << "\n";
}

struct CompareOptions {
  std::string features;
  std::string output;
};

void run_compare(const CompareOptions& o) {
  const FeatureTable table = read_feature_csv(o.features);
  emit(o.output, comparison_report_csv(feature_comparison_report(table)));
}

// Rows used by a stage: everything, or one side of the seeded stratified
// split shared between train and evaluate.
enum class Subset { all, train, test };

std::vector<std::size_t> select_rows(const FeatureTable& table,
                                     double test_fraction, std::uint64_t seed,
                                     Subset subset) {
  std::vector<std::size_t> indices;
  if (subset == Subset::all) {
    indices.resize(table.num_cases());
    for (std::size_t i = 0; i < indices.size(); ++i) indices[i] = i;
    return indices;
  }
  if (test_fraction <= 0.0) {
    throw std::invalid_argument(
        "train/test subsets need --test-fraction in (0, 1)");
  }
  SplitIndices split =
      stratified_split_indices(table.labels, test_fraction, seed);
  return subset == Subset::train ? std::move(split.train)
                                 : std::move(split.test);
}

struct TrainOptions {
  std::string features;
  std::string model;
  std::string loss_curve;
  GbdtConfig config;
  double test_fraction = 0.0;  // 0: train on every row
};

void run_train(const TrainOptions& o) {
  const FeatureTable table = read_feature_csv(o.features);
  const Subset subset = o.test_fraction > 0.0 ? Subset::train : Subset::all;
  const std::vector<std::size_t> rows =
      select_rows(table, o.test_fraction, o.config.seed, subset);

  std::vector<std::vector<double>> x;
  std::vector<int> y;
  x.reserve(rows.size());
  y.reserve(rows.size());
  for (std::size_t i : rows) {
    x.push_back(table.rows[i]);
    y.push_back(table.labels[i]);
  }

  const TrainResult result = train(table.feature_names, x, y, o.config);
  save_model(result.ensemble, o.model);

  if (!o.loss_curve.empty()) {
    std::string csv = "iteration,train_loss\n";
    for (std::size_t m = 0; m < result.train_loss.size(); ++m) {
      csv += std::to_string(m + 1) + "," + format_double(result.train_loss[m]) +
             "\n";
    }
    atomic_write_file(o.loss_curve, csv);
  }
  std::cerr << "trained " << result.ensemble.trees.size() << " tree(s) on "
            << rows.size() << " case(s); model written to " << o.model << "\n";
}

struct ApplyOptions {
  std::string features;
  std::string model;
  std::string output;
  double threshold = 0.5;
  double test_fraction = 0.0;
  std::uint64_t seed = 0;
  Subset subset = Subset::all;
};

std::vector<double> probabilities_for(const Ensemble& model,
                                      const FeatureTable& table,
                                      const std::vector<std::size_t>& rows) {
  std::vector<double> probs;
  probs.reserve(rows.size());
  for (std::size_t i : rows) {
    probs.push_back(
        predict_proba(model, FeatureVector{table.feature_names, table.rows[i]}));
  }
  return probs;
}

void run_evaluate(const ApplyOptions& o) {
  const FeatureTable table = read_feature_csv(o.features);
  const Ensemble model = load_model(o.model);
  const std::vector<std::size_t> rows =
      select_rows(table, o.test_fraction, o.seed, o.subset);
  if (rows.empty()) throw Error("no cases selected for evaluation");

  const std::vector<double> probs = probabilities_for(model, table, rows);
  std::vector<int> labels;
  labels.reserve(rows.size());
  for (std::size_t i : rows) labels.push_back(table.labels[i]);

  const EvalReport report = evaluate(probs, labels, o.threshold);
  emit(o.output, eval_report_json(report));
}

void run_predict(const ApplyOptions& o) {
  const FeatureTable table = read_feature_csv(o.features);
  const Ensemble model = load_model(o.model);
  const std::vector<std::size_t> rows =
      select_rows(table, o.test_fraction, o.seed, o.subset);

  std::string csv = "case_id,prob_benign,prob_malignant\n";
  const std::vector<double> probs = probabilities_for(model, table, rows);
  for (std::size_t k = 0; k < rows.size(); ++k) {
    csv += table.case_ids[rows[k]] + "," + format_double(1.0 - probs[k]) +
           "," + format_double(probs[k]) + "\n";
  }
  emit(o.output, csv);
}

struct ExplainOptions {
  std::string features;
  std::string model;
  std::string output;
  std::string dot;
  std::string importance;
  std::string case_id;
  int trees = 2;
  bool probability_scale = false;
};

nlohmann::json path_to_json(const DecisionPath& path, double learning_rate) {
  nlohmann::json steps = nlohmann::json::array();
  for (const DecisionPathStep& s : path.steps) {
    steps.push_back(
        {{"feature", s.feature_name},
         {"threshold", s.threshold},
         {"value", s.observed_value},
         {"direction", s.direction == StepDirection::left ? "left" : "right"},
         {"node_train_fraction", s.node_train_fraction}});
  }
  return {{"tree", path.tree_index},
          {"leaf_value", path.leaf_value},
          {"margin_contribution", learning_rate * path.leaf_value},
          {"steps", std::move(steps)}};
}

void run_explain(const ExplainOptions& o) {
  if (o.case_id.empty() && o.importance.empty()) {
    throw std::invalid_argument("explain needs --case-id and/or --importance");
  }
  const FeatureTable table = read_feature_csv(o.features);
  const Ensemble model = load_model(o.model);

  if (!o.importance.empty()) {
    std::vector<FeatureVector> dataset;
    dataset.reserve(table.num_cases());
    for (const auto& row : table.rows) {
      dataset.push_back(FeatureVector{table.feature_names, row});
    }
    std::string csv = "feature,mean_abs_benign,mean_abs_malignant\n";
    for (const ImportanceEntry& e : global_importance(model, dataset)) {
      csv += e.feature + "," + format_double(e.mean_abs_benign) + "," +
             format_double(e.mean_abs_malignant) + "\n";
    }
    atomic_write_file(o.importance, csv);
    std::cerr << "wrote feature importance to " << o.importance << "\n";
  }

  if (o.case_id.empty()) return;
  const auto it =
      std::find(table.case_ids.begin(), table.case_ids.end(), o.case_id);
  if (it == table.case_ids.end()) {
    throw Error("case id not found in feature CSV: " + o.case_id);
  }
  const std::size_t row = static_cast<std::size_t>(it - table.case_ids.begin());
  const FeatureVector fv{table.feature_names, table.rows[row]};

  if (o.trees < 1) throw std::invalid_argument("--trees must be >= 1");
  const int shown =
      std::min<int>(o.trees, static_cast<int>(model.trees.size()));

  const ShapAttribution attribution = shap_values(model, fv);
  const std::vector<DecisionPath> paths = trace_paths(model, fv);
  const double margin = attribution.total();

  nlohmann::json contributions = nlohmann::json::array();
  for (std::size_t f = 0; f < attribution.names.size(); ++f) {
    contributions.push_back({{"feature", attribution.names[f]},
                             {"value", attribution.contributions[f]}});
  }
  nlohmann::json shown_paths = nlohmann::json::array();
  for (int t = 0; t < shown; ++t) {
    shown_paths.push_back(path_to_json(paths[t], model.learning_rate));
  }

  nlohmann::json doc{
      {"case_id", o.case_id},
      {"label", label_name(static_cast<Label>(table.labels[row]))},
      {"margin", margin},
      {"probability_malignant", sigmoid(margin)},
      {"shap",
       {{"base_value", attribution.base_value},
        {"contributions", std::move(contributions)}}},
      {"paths", std::move(shown_paths)}};
  if (o.probability_scale) {
    doc["probability_scale"] = {{"base_value", sigmoid(attribution.base_value)},
                                {"prediction", sigmoid(margin)}};
  }
  emit(o.output, doc.dump(2) + "\n");

  if (!o.dot.empty()) {
    std::vector<int> indices(shown);
    for (int t = 0; t < shown; ++t) indices[t] = t;
    atomic_write_file(o.dot, trees_to_dot(model, fv, indices));
  }
}

void add_subset_flags(CLI::App* cmd, ApplyOptions& o) {
  cmd->add_option("--test-fraction", o.test_fraction,
                  "Fraction held out by the seeded stratified split")
      ->check(CLI::Range(0.0, 1.0));
  cmd->add_option("--seed", o.seed, "Split seed (must match train)");
  std::map<std::string, Subset> names{
      {"all", Subset::all}, {"train", Subset::train}, {"test", Subset::test}};
  cmd->add_option("--subset", o.subset, "Rows to use: all, train or test")
      ->transform(CLI::CheckedTransformer(names, CLI::ignore_case));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{
      "Explainable GLCM texture classification of breast-ultrasound ROIs"};
  app.require_subcommand(1);

  ExtractOptions extract;
  CLI::App* cmd = app.add_subcommand(
      "extract", "Compute texture features for every case in a dataset");
  cmd->add_option("--dataset", extract.dataset,
                  "Dataset root with benign/ and malignant/ PNG folders")
      ->required();
  cmd->add_option("--output", extract.output, "Feature CSV to write")
      ->required();
  cmd->add_option("--distances", extract.distances,
                  "GLCM pixel distances (default 1,3,5)")
      ->delimiter(',');
  cmd->add_option("--angles", extract.angles,
                  "GLCM angles in degrees (default 0,45,90,135)")
      ->delimiter(',');
  cmd->add_option("--glcm-levels", extract.glcm_levels,
                  "Gray levels for GLCM quantization")
      ->check(CLI::Range(2, 256));
  cmd->add_flag("--first-order", extract.first_order,
                "Append the eight first-order statistics");
  cmd->add_option("--shift-c", extract.shift_c,
                  "Intensity shift added before energy/RMS");
  cmd->add_option("--jobs", extract.jobs, "Parallel extraction threads")
      ->check(CLI::PositiveNumber);
  cmd->callback([&] { run_extract(extract); });

  CompareOptions compare;
  cmd = app.add_subcommand(
      "compare", "Per-feature benign-vs-malignant Welch t-tests");
  cmd->add_option("--features", compare.features, "Feature CSV")->required();
  cmd->add_option("--output", compare.output,
                  "Report CSV (stdout when omitted)");
  cmd->callback([&] { run_compare(compare); });

  TrainOptions tr;
  cmd = app.add_subcommand("train", "Fit the boosted-tree classifier");
  cmd->add_option("--features", tr.features, "Feature CSV")->required();
  cmd->add_option("--model", tr.model, "Model JSON to write")->required();
  cmd->add_option("--loss-curve", tr.loss_curve,
                  "Optional per-iteration training-loss CSV");
  cmd->add_option("--num-iterations", tr.config.num_iterations,
                  "Boosting rounds");
  cmd->add_option("--learning-rate", tr.config.learning_rate, "Shrinkage");
  cmd->add_option("--num-leaves", tr.config.num_leaves, "Leaves per tree");
  cmd->add_option("--max-bin", tr.config.max_bin, "Histogram bins per feature");
  cmd->add_option("--min-samples-leaf", tr.config.min_samples_leaf,
                  "Minimum training samples per leaf");
  cmd->add_option("--lambda-l2", tr.config.lambda_l2,
                  "L2 regularization on leaf values");
  cmd->add_option("--seed", tr.config.seed, "Split seed");
  cmd->add_option("--test-fraction", tr.test_fraction,
                  "Hold out this fraction (seeded stratified split) and "
                  "train on the rest")
      ->check(CLI::Range(0.0, 1.0));
  cmd->callback([&] { run_train(tr); });

  ApplyOptions ev;
  cmd = app.add_subcommand("evaluate",
                           "Score a model against labeled features");
  cmd->add_option("--features", ev.features, "Feature CSV")->required();
  cmd->add_option("--model", ev.model, "Model JSON")->required();
  cmd->add_option("--output", ev.output,
                  "Report JSON (stdout when omitted)");
  cmd->add_option("--threshold", ev.threshold,
                  "Malignant probability threshold");
  add_subset_flags(cmd, ev);
  cmd->callback([&] { run_evaluate(ev); });

  ApplyOptions pr;
  cmd = app.add_subcommand("predict", "Per-case class probabilities");
  cmd->add_option("--features", pr.features, "Feature CSV")->required();
  cmd->add_option("--model", pr.model, "Model JSON")->required();
  cmd->add_option("--output", pr.output,
                  "Prediction CSV (stdout when omitted)");
  add_subset_flags(cmd, pr);
  cmd->callback([&] { run_predict(pr); });

  ExplainOptions ex;
  cmd = app.add_subcommand(
      "explain", "Decision paths, Shapley attributions and DOT export");
  cmd->add_option("--features", ex.features, "Feature CSV")->required();
  cmd->add_option("--model", ex.model, "Model JSON")->required();
  cmd->add_option("--case-id", ex.case_id, "Case to explain");
  cmd->add_option("--output", ex.output,
                  "Explanation JSON (stdout when omitted)");
  cmd->add_option("--dot", ex.dot, "Graphviz file for the selected trees");
  cmd->add_option("--trees", ex.trees,
                  "Number of trees to export in paths/DOT");
  cmd->add_option("--importance", ex.importance,
                  "Write dataset-wide mean |SHAP| per feature to this CSV");
  cmd->add_flag("--probability-scale", ex.probability_scale,
                "Also report base value and prediction through the sigmoid");
  cmd->callback([&] { run_explain(ex); });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
