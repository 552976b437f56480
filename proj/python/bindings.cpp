// Python bindings for the texplain core: feature extraction, training,
// prediction, attribution and the statistical utilities.

#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "texplain/dataset.hpp"
#include "texplain/error.hpp"
#include "texplain/eval.hpp"
#include "texplain/explain.hpp"
#include "texplain/gbdt.hpp"
#include "texplain/image.hpp"
#include "texplain/stats.hpp"
#include "texplain/texture.hpp"

namespace py = pybind11;
using namespace texplain;

namespace {

GrayImage image_from_array(const py::array_t<std::uint8_t>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("image must be 2-D uint8");
  GrayImage img;
  img.height = static_cast<int>(a.shape(0));
  img.width = static_cast<int>(a.shape(1));
  img.data.resize(static_cast<std::size_t>(img.width) * img.height);
  auto r = a.unchecked<2>();
  for (py::ssize_t y = 0; y < a.shape(0); ++y) {
    for (py::ssize_t x = 0; x < a.shape(1); ++x) {
      img.data[static_cast<std::size_t>(y) * img.width + x] = r(y, x);
    }
  }
  return img;
}

RoiMask mask_from_array(const py::array_t<bool>& a) {
  if (a.ndim() != 2) throw std::invalid_argument("mask must be 2-D bool");
  RoiMask mask;
  mask.height = static_cast<int>(a.shape(0));
  mask.width = static_cast<int>(a.shape(1));
  mask.data.resize(static_cast<std::size_t>(mask.width) * mask.height);
  auto r = a.unchecked<2>();
  for (py::ssize_t y = 0; y < a.shape(0); ++y) {
    for (py::ssize_t x = 0; x < a.shape(1); ++x) {
      mask.data[static_cast<std::size_t>(y) * mask.width + x] = r(y, x);
    }
  }
  return mask;
}

GlcmConfig glcm_config_from(const std::vector<int>& distances,
                            const std::vector<int>& angles, int levels,
                            bool symmetric) {
  GlcmConfig config;
  config.levels = levels;
  config.distances = distances;
  config.symmetric = symmetric;
  config.angles.clear();
  for (int deg : angles) config.angles.push_back(angle_from_degrees(deg));
  return config;
}

std::vector<std::vector<double>> rows_from_matrix(
    const py::array_t<double>& x) {
  if (x.ndim() != 2) throw std::invalid_argument("X must be a 2-D array");
  auto r = x.unchecked<2>();
  std::vector<std::vector<double>> rows(static_cast<std::size_t>(x.shape(0)));
  for (py::ssize_t i = 0; i < x.shape(0); ++i) {
    rows[i].resize(static_cast<std::size_t>(x.shape(1)));
    for (py::ssize_t f = 0; f < x.shape(1); ++f) rows[i][f] = r(i, f);
  }
  return rows;
}

py::array_t<double> predictions(const Ensemble& model,
                                const py::array_t<double>& x, bool proba) {
  const auto rows = rows_from_matrix(x);
  if (!rows.empty() && rows.front().size() != model.feature_names.size()) {
    throw std::invalid_argument("X column count differs from the model");
  }
  // Shape+strides form: the count-only constructor derives strides from the
  // dtype descriptor, which pybind11 < 2.12 misreads under numpy 2.
  py::array_t<double> out({static_cast<py::ssize_t>(rows.size())},
                          {static_cast<py::ssize_t>(sizeof(double))});
  auto w = out.mutable_unchecked<1>();
  for (std::size_t i = 0; i < rows.size(); ++i) {
    const double margin = model.margin_for_row(rows[i]);
    w(static_cast<py::ssize_t>(i)) = proba ? sigmoid(margin) : margin;
  }
  return out;
}

}  // namespace

PYBIND11_MODULE(_texplain, m) {
  m.doc() = "GLCM texture features, boosted trees and Shapley explanations";

  m.def(
      "load_image",
      [](const std::filesystem::path& path) {
        const GrayImage img = load_image(path);
        py::array_t<std::uint8_t> out({img.height, img.width});
        auto w = out.mutable_unchecked<2>();
        for (int y = 0; y < img.height; ++y) {
          for (int x = 0; x < img.width; ++x) w(y, x) = img.at(y, x);
        }
        return out;
      },
      py::arg("path"), "Decode a PNG to a 2-D uint8 grayscale array");

  m.def(
      "load_mask",
      [](const std::filesystem::path& path) {
        const RoiMask mask = load_mask(path);
        py::array_t<bool> out({mask.height, mask.width});
        auto w = out.mutable_unchecked<2>();
        for (int y = 0; y < mask.height; ++y) {
          for (int x = 0; x < mask.width; ++x) w(y, x) = mask.at(y, x);
        }
        return out;
      },
      py::arg("path"), "Decode a PNG mask to a 2-D bool array");

  m.def(
      "first_order",
      [](const py::array_t<std::uint8_t>& image,
         const py::array_t<bool>& mask, int shift_c) {
        FirstOrderConfig config;
        config.shift_c = shift_c;
        const FirstOrderFeatures f = first_order_features(
            extract_roi_pixels(image_from_array(image), mask_from_array(mask)),
            config);
        py::dict d;
        const auto names = FirstOrderFeatures::names();
        const auto values = f.values();
        for (std::size_t i = 0; i < names.size(); ++i) {
          d[py::str(names[i])] = values[i];
        }
        return d;
      },
      py::arg("image"), py::arg("mask"), py::arg("shift_c") = 0,
      "Eight first-order statistics of the masked pixels");

  m.def(
      "glcm",
      [](const py::array_t<std::uint8_t>& image, const py::array_t<bool>& mask,
         int distance, int angle, int levels, bool symmetric) {
        const GlcmConfig config =
            glcm_config_from({distance}, {angle}, levels, symmetric);
        const GlcmMatrix g =
            compute_glcm(image_from_array(image), mask_from_array(mask),
                         distance, angle_from_degrees(angle), config);
        py::array_t<double> out({g.levels, g.levels});
        auto w = out.mutable_unchecked<2>();
        for (int i = 0; i < g.levels; ++i) {
          for (int j = 0; j < g.levels; ++j) w(i, j) = g.at(i, j);
        }
        return out;
      },
      py::arg("image"), py::arg("mask"), py::arg("distance"), py::arg("angle"),
      py::arg("levels") = 256, py::arg("symmetric") = true,
      "Normalized (and by default symmetrized) co-occurrence matrix");

  m.def(
      "extract_features",
      [](const py::array_t<std::uint8_t>& image, const py::array_t<bool>& mask,
         const std::vector<int>& distances, const std::vector<int>& angles,
         int levels, bool first_order, int shift_c) {
        const GlcmConfig config =
            glcm_config_from(distances, angles, levels, true);
        FirstOrderConfig fo;
        fo.shift_c = shift_c;
        const FeatureVector fv =
            feature_vector(image_from_array(image), mask_from_array(mask),
                           config, fo, first_order);
        py::dict d;
        for (std::size_t i = 0; i < fv.names.size(); ++i) {
          d[py::str(fv.names[i])] = fv.values[i];
        }
        return d;
      },
      py::arg("image"), py::arg("mask"),
      py::arg("distances") = std::vector<int>{1, 3, 5},
      py::arg("angles") = std::vector<int>{0, 45, 90, 135},
      py::arg("levels") = 256, py::arg("first_order") = false,
      py::arg("shift_c") = 0,
      "Full named feature vector of one image/mask pair");

  m.def(
      "t_test",
      [](const std::vector<double>& a, const std::vector<double>& b) {
        const TTestResult r = t_test(a, b);
        return py::dict(
            py::arg("mean_a") = r.mean_a, py::arg("mean_b") = r.mean_b,
            py::arg("t") = r.t_statistic, py::arg("df") = r.degrees_of_freedom,
            py::arg("p") = r.p_value);
      },
      py::arg("a"), py::arg("b"), "Welch's two-sided unequal-variance t-test");

  m.def(
      "auc",
      [](const std::vector<double>& scores, const std::vector<int>& labels) {
        return auc_score(scores, labels);
      },
      py::arg("scores"), py::arg("labels"),
      "Pairwise ranking AUC with ties counted half");

  m.def(
      "evaluate",
      [](const std::vector<double>& probabilities,
         const std::vector<int>& labels, double threshold) {
        const EvalReport r = evaluate(probabilities, labels, threshold);
        py::dict d(py::arg("accuracy") = r.accuracy,
                   py::arg("precision") = r.precision,
                   py::arg("recall") = r.recall, py::arg("f1") = r.f1,
                   py::arg("tp") = r.tp, py::arg("fp") = r.fp,
                   py::arg("fn") = r.fn, py::arg("tn") = r.tn,
                   py::arg("threshold") = r.threshold);
        d["auc"] = r.auc ? py::cast(*r.auc) : py::none();
        return d;
      },
      py::arg("probabilities"), py::arg("labels"), py::arg("threshold") = 0.5,
      "Confusion-matrix metrics with malignant as the positive class");

  py::class_<Ensemble>(m, "Model")
      .def_property_readonly(
          "feature_names",
          [](const Ensemble& model) { return model.feature_names; })
      .def_property_readonly(
          "num_trees",
          [](const Ensemble& model) { return model.trees.size(); })
      .def_property_readonly("base_score",
                             [](const Ensemble& m_) { return m_.base_score; })
      .def_property_readonly(
          "learning_rate",
          [](const Ensemble& m_) { return m_.learning_rate; })
      .def(
          "predict_margin",
          [](const Ensemble& model, const py::array_t<double>& x) {
            return predictions(model, x, false);
          },
          py::arg("X"), "Raw additive margins, rows in model feature order")
      .def(
          "predict_proba",
          [](const Ensemble& model, const py::array_t<double>& x) {
            return predictions(model, x, true);
          },
          py::arg("X"), "Malignant probabilities, rows in model feature order")
      .def(
          "shap_values",
          [](const Ensemble& model, const std::vector<double>& row) {
            if (row.size() != model.feature_names.size()) {
              throw std::invalid_argument(
                  "row length differs from the model");
            }
            const ShapAttribution a =
                shap_values(model, FeatureVector{model.feature_names, row});
            return py::make_tuple(a.base_value, a.contributions);
          },
          py::arg("row"),
          "(base_value, per-feature contributions) on the margin scale")
      .def(
          "save",
          [](const Ensemble& model, const std::filesystem::path& path) {
            save_model(model, path);
          },
          py::arg("path"));

  m.def(
      "train",
      [](const std::vector<std::string>& feature_names,
         const py::array_t<double>& x, const std::vector<int>& y,
         int num_iterations, double learning_rate, int num_leaves, int max_bin,
         int min_samples_leaf, double lambda_l2) {
        GbdtConfig config;
        config.num_iterations = num_iterations;
        config.learning_rate = learning_rate;
        config.num_leaves = num_leaves;
        config.max_bin = max_bin;
        config.min_samples_leaf = min_samples_leaf;
        config.lambda_l2 = lambda_l2;
        TrainResult result =
            train(feature_names, rows_from_matrix(x), y, config);
        return py::make_tuple(std::move(result.ensemble), result.train_loss);
      },
      py::arg("feature_names"), py::arg("X"), py::arg("y"),
      py::arg("num_iterations") = 500, py::arg("learning_rate") = 0.05,
      py::arg("num_leaves") = 10, py::arg("max_bin") = 512,
      py::arg("min_samples_leaf") = 5, py::arg("lambda_l2") = 1.0,
      "Fit the boosted-tree classifier; returns (model, per-iteration loss)");

  m.def(
      "load_model",
      [](const std::filesystem::path& path) { return load_model(path); },
      py::arg("path"));

  py::register_exception<Error>(m, "TexplainError", PyExc_RuntimeError);
}
