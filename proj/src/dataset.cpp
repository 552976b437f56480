#include "texplain/dataset.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <stdexcept>

#include "texplain/error.hpp"

namespace texplain {

const char* label_name(Label label) {
  return label == Label::benign ? "benign" : "malignant";
}

Label label_from_name(const std::string& name) {
  if (name == "benign") return Label::benign;
  if (name == "malignant") return Label::malignant;
  throw std::invalid_argument("unknown class label: " + name);
}

namespace {

bool has_png_extension(const std::filesystem::path& p) {
  std::string ext = p.extension().string();
  std::transform(ext.begin(), ext.end(), ext.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return ext == ".png";
}

// Splits "<stem>_mask" / "<stem>_mask_<k>" into the image stem it
// annotates; returns false for non-mask stems.
bool mask_stem_to_image_stem(const std::string& stem, std::string* image_stem) {
  const std::string tag = "_mask";
  auto pos = stem.rfind(tag);
  if (pos == std::string::npos) return false;
  std::string tail = stem.substr(pos + tag.size());
  if (!tail.empty()) {
    if (tail.front() != '_' || tail.size() < 2) return false;
    for (std::size_t i = 1; i < tail.size(); ++i) {
      if (!std::isdigit(static_cast<unsigned char>(tail[i]))) return false;
    }
  }
  *image_stem = stem.substr(0, pos);
  return true;
}

}  // namespace

ScanResult scan_dataset(const std::filesystem::path& root) {
  if (!std::filesystem::is_directory(root)) {
    throw IoError("dataset root not found: " + root.string());
  }
  ScanResult result;
  for (Label label : {Label::benign, Label::malignant}) {
    const std::filesystem::path class_dir = root / label_name(label);
    if (!std::filesystem::is_directory(class_dir)) continue;

    std::map<std::string, std::filesystem::path> images;
    std::map<std::string, std::vector<std::filesystem::path>> masks;
    for (const auto& entry : std::filesystem::directory_iterator(class_dir)) {
      if (!entry.is_regular_file() || !has_png_extension(entry.path())) continue;
      const std::string stem = entry.path().stem().string();
      std::string image_stem;
      if (mask_stem_to_image_stem(stem, &image_stem)) {
        masks[image_stem].push_back(entry.path());
      } else {
        images[stem] = entry.path();
      }
    }
    for (auto& [stem, image_path] : images) {
      auto it = masks.find(stem);
      if (it == masks.end()) {
        ++result.skipped_without_mask;
        continue;
      }
      Case c;
      c.image_path = image_path;
      c.mask_paths = it->second;
      std::sort(c.mask_paths.begin(), c.mask_paths.end());
      c.label = label;
      result.cases.push_back(std::move(c));
    }
  }
  std::sort(result.cases.begin(), result.cases.end(),
            [](const Case& a, const Case& b) {
              return a.image_path.generic_string() < b.image_path.generic_string();
            });
  if (result.cases.empty()) {
    throw Error("empty dataset: no image/mask pairs under " + root.string());
  }
  return result;
}

namespace {

// Fisher-Yates with an explicit draw so the permutation does not depend
// on the standard library's shuffle implementation.
void deterministic_shuffle(std::vector<std::size_t>& values,
                           std::mt19937_64& rng) {
  for (std::size_t i = values.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(rng() % i);
    std::swap(values[i - 1], values[j]);
  }
}

}  // namespace

SplitIndices stratified_split_indices(const std::vector<int>& labels,
                                      double test_fraction,
                                      std::uint64_t seed) {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    throw std::invalid_argument("test_fraction must lie in (0, 1)");
  }
  std::mt19937_64 rng(seed);
  SplitIndices out;
  for (int cls : {0, 1}) {
    std::vector<std::size_t> members;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      if (labels[i] == cls) members.push_back(i);
    }
    if (members.empty()) {
      throw std::invalid_argument(std::string("class has zero cases: ") +
                                  label_name(static_cast<Label>(cls)));
    }
    deterministic_shuffle(members, rng);
    const auto test_count = static_cast<std::size_t>(
        std::llround(test_fraction * static_cast<double>(members.size())));
    out.test.insert(out.test.end(), members.begin(), members.begin() + test_count);
    out.train.insert(out.train.end(), members.begin() + test_count, members.end());
  }
  std::sort(out.train.begin(), out.train.end());
  std::sort(out.test.begin(), out.test.end());
  return out;
}

Split split_dataset(const std::vector<Case>& cases, const SplitConfig& config) {
  std::vector<int> labels(cases.size());
  for (std::size_t i = 0; i < cases.size(); ++i) {
    labels[i] = static_cast<int>(cases[i].label);
  }
  const SplitIndices idx =
      stratified_split_indices(labels, config.test_fraction, config.seed);
  Split split;
  split.train.reserve(idx.train.size());
  split.test.reserve(idx.test.size());
  for (std::size_t i : idx.train) split.train.push_back(cases[i]);
  for (std::size_t i : idx.test) split.test.push_back(cases[i]);
  return split;
}

RoiMask load_case_mask(const Case& c) {
  std::vector<RoiMask> masks;
  masks.reserve(c.mask_paths.size());
  for (const auto& path : c.mask_paths) {
    masks.push_back(load_mask(path));
  }
  return mask_union(masks);
}

}  // namespace texplain
