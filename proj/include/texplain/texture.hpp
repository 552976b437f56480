#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "texplain/image.hpp"

namespace texplain {

// Intensities of the pixels inside an ROI, row-major order.
struct PixelSample {
  std::vector<std::uint8_t> values;
};

struct FirstOrderConfig {
  double shift_c = 0.0;           // intensity offset used by energy and rms
  double entropy_epsilon = 0x1p-52;
  int histogram_bins = 256;       // one bin per 8-bit level by default
};

// The eight first-order statistics, fields in alphabetical order.
struct FirstOrderFeatures {
  double energy = 0.0;
  double entropy = 0.0;
  double kurtosis = 0.0;
  double mean = 0.0;
  double rms = 0.0;
  double skewness = 0.0;
  double uniformity = 0.0;
  double variance = 0.0;

  static const std::array<const char*, 8>& names();
  std::array<double, 8> values() const;
};

enum class Angle { deg0 = 0, deg45 = 45, deg90 = 90, deg135 = 135 };

int angle_degrees(Angle a);
Angle angle_from_degrees(int degrees);
// Unit pixel offset (delta_row, delta_col) of a direction.
std::pair<int, int> angle_offset(Angle a);

struct GlcmConfig {
  int levels = 256;  // gray-level quantization, 8-bit identity by default
  std::vector<int> distances = {1, 3, 5};
  std::vector<Angle> angles = {Angle::deg0, Angle::deg45, Angle::deg90,
                               Angle::deg135};
  bool symmetric = true;
};

// Normalized co-occurrence probability table for one (distance, angle),
// with the marginal moments used by the correlation feature.
struct GlcmMatrix {
  int levels = 0;
  std::vector<double> p;  // levels x levels, row-major
  double mean_x = 0.0;
  double mean_y = 0.0;
  double std_x = 0.0;
  double std_y = 0.0;

  double at(int i, int j) const {
    return p[static_cast<std::size_t>(i) * levels + j];
  }
};

// The five GLCM statistics, fields in alphabetical order.
struct GlcmFeatures {
  double contrast = 0.0;
  double correlation = 0.0;
  double dissimilarity = 0.0;
  double energy = 0.0;
  double homogeneity = 0.0;

  static const std::array<const char*, 5>& names();
  std::array<double, 5> values() const;
};

// Named, ordered feature vector.
struct FeatureVector {
  std::vector<std::string> names;
  std::vector<double> values;
};

// Intensities at true-mask positions, row-major. Throws on dimension
// mismatch or an empty mask.
PixelSample extract_roi_pixels(const GrayImage& image, const RoiMask& mask);

FirstOrderFeatures first_order_features(const PixelSample& sample,
                                        const FirstOrderConfig& config);

// Directed co-occurrence counts (before symmetrization and normalization)
// of ordered in-mask pixel pairs separated by distance * angle_offset.
// Intensities are quantized uniformly to `levels`.
std::vector<std::uint64_t> glcm_pair_counts(const GrayImage& image,
                                            const RoiMask& mask, int distance,
                                            Angle angle, int levels);

// Symmetrized (when configured) and normalized GLCM. Throws
// DegenerateGlcmError when no valid pair exists.
GlcmMatrix compute_glcm(const GrayImage& image, const RoiMask& mask,
                        int distance, Angle angle, const GlcmConfig& config);

GlcmFeatures glcm_features(const GlcmMatrix& glcm);

// Canonical feature naming: `{statistic}_d{distance}_a{angle}`, statistics
// alphabetical, then distance ascending, then angle ascending. First-order
// names are appended unqualified when requested.
std::vector<std::string> feature_names(const GlcmConfig& glcm_config,
                                       bool include_first_order);

// The full named feature vector of one case: all GLCM statistics over the
// configured distances and angles, optionally followed by the eight
// first-order statistics.
FeatureVector feature_vector(const GrayImage& image, const RoiMask& mask,
                             const GlcmConfig& glcm_config,
                             const FirstOrderConfig& fo_config,
                             bool include_first_order);

}  // namespace texplain
