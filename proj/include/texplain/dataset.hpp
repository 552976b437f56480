#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "texplain/image.hpp"

namespace texplain {

enum class Label { benign = 0, malignant = 1 };

const char* label_name(Label label);
Label label_from_name(const std::string& name);

// One annotated case: an ultrasound image plus one or more ROI mask files
// (some datasets ship extra `_mask_1`, `_mask_2`, ... annotations which are
// unioned at load time).
struct Case {
  std::filesystem::path image_path;
  std::vector<std::filesystem::path> mask_paths;
  Label label = Label::benign;

  // Image file stem, unique within a dataset ("benign (12)", ...).
  std::string id() const { return image_path.stem().string(); }
};

struct ScanResult {
  std::vector<Case> cases;                 // sorted by image path
  std::size_t skipped_without_mask = 0;    // images that had no mask file
};

// Enumerates `<root>/benign` and `<root>/malignant` for `<stem>.png` images
// paired with `<stem>_mask*.png` masks. A `normal` directory is ignored:
// the classifier is strictly binary.
ScanResult scan_dataset(const std::filesystem::path& root);

struct SplitConfig {
  double test_fraction = 0.2;
  std::uint64_t seed = 0;
};

struct Split {
  std::vector<Case> train;
  std::vector<Case> test;
};

// Deterministic per-class index split: within each class the indices are
// shuffled with a seeded generator and llround(test_fraction * class_size)
// of them become the test set. Returned index lists are ascending.
// `labels` holds 0/1 class ids; both classes must be present.
struct SplitIndices {
  std::vector<std::size_t> train;
  std::vector<std::size_t> test;
};
SplitIndices stratified_split_indices(const std::vector<int>& labels,
                                      double test_fraction, std::uint64_t seed);

// Stratified, seeded train/test partition of a case list.
Split split_dataset(const std::vector<Case>& cases, const SplitConfig& config);

// Loads and unions every mask file of a case.
RoiMask load_case_mask(const Case& c);

}  // namespace texplain
