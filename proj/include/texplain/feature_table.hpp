#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace texplain {

// Per-case feature rows as exchanged between pipeline stages.
// CSV layout: header `case_id,label,<feature names...>`, one row per case,
// labels spelled benign/malignant, values printed with 17 significant
// digits so a round-trip is lossless.
struct FeatureTable {
  std::vector<std::string> case_ids;
  std::vector<int> labels;  // 0 = benign, 1 = malignant
  std::vector<std::string> feature_names;
  std::vector<std::vector<double>> rows;

  std::size_t num_cases() const { return case_ids.size(); }
  std::size_t num_features() const { return feature_names.size(); }
};

std::string format_double(double v);  // 17 significant digits
double parse_double(const std::string& s);

void write_feature_csv(const std::filesystem::path& path,
                       const FeatureTable& table);
FeatureTable read_feature_csv(const std::filesystem::path& path);

// Writes `text` to `path` via a temporary file in the same directory plus
// an atomic rename, so failed runs leave no partial output behind.
void atomic_write_file(const std::filesystem::path& path,
                       const std::string& text);

}  // namespace texplain
