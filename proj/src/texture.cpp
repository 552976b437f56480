#include "texplain/texture.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "texplain/error.hpp"

namespace texplain {

const std::array<const char*, 8>& FirstOrderFeatures::names() {
  static const std::array<const char*, 8> kNames = {
      "energy", "entropy", "kurtosis",   "mean",
      "rms",    "skewness", "uniformity", "variance"};
  return kNames;
}

std::array<double, 8> FirstOrderFeatures::values() const {
  return {energy, entropy, kurtosis, mean, rms, skewness, uniformity, variance};
}

const std::array<const char*, 5>& GlcmFeatures::names() {
  static const std::array<const char*, 5> kNames = {
      "contrast", "correlation", "dissimilarity", "energy", "homogeneity"};
  return kNames;
}

std::array<double, 5> GlcmFeatures::values() const {
  return {contrast, correlation, dissimilarity, energy, homogeneity};
}

int angle_degrees(Angle a) { return static_cast<int>(a); }

Angle angle_from_degrees(int degrees) {
  switch (degrees) {
    case 0: return Angle::deg0;
    case 45: return Angle::deg45;
    case 90: return Angle::deg90;
    case 135: return Angle::deg135;
    default:
      throw std::invalid_argument("angle must be one of 0, 45, 90, 135 degrees");
  }
}

std::pair<int, int> angle_offset(Angle a) {
  switch (a) {
    case Angle::deg0: return {0, 1};
    case Angle::deg45: return {-1, 1};
    case Angle::deg90: return {-1, 0};
    case Angle::deg135: return {-1, -1};
  }
  throw std::invalid_argument("invalid angle");
}

namespace {

void check_pair(const GrayImage& image, const RoiMask& mask) {
  if (image.width != mask.width || image.height != mask.height) {
    throw std::invalid_argument("image and mask dimensions differ");
  }
}

void check_glcm_args(int distance, int levels) {
  if (distance < 1) throw std::invalid_argument("distance must be >= 1");
  if (levels < 2 || levels > 256) {
    throw std::invalid_argument("levels must lie in [2, 256]");
  }
}

inline int quantize(std::uint8_t v, int levels) {
  return static_cast<int>(v) * levels / 256;
}

}  // namespace

PixelSample extract_roi_pixels(const GrayImage& image, const RoiMask& mask) {
  check_pair(image, mask);
  PixelSample sample;
  for (std::size_t i = 0; i < image.data.size(); ++i) {
    if (mask.data[i]) sample.values.push_back(image.data[i]);
  }
  if (sample.values.empty()) {
    throw std::invalid_argument("mask selects no pixels");
  }
  return sample;
}

FirstOrderFeatures first_order_features(const PixelSample& sample,
                                        const FirstOrderConfig& config) {
  if (sample.values.empty()) {
    throw std::invalid_argument("empty pixel sample");
  }
  if (config.histogram_bins < 2) {
    throw std::invalid_argument("histogram_bins must be >= 2");
  }
  if (!(config.entropy_epsilon > 0.0)) {
    throw std::invalid_argument("entropy_epsilon must be positive");
  }
  const double n = static_cast<double>(sample.values.size());

  FirstOrderFeatures f;
  double sum = 0.0;
  for (std::uint8_t v : sample.values) sum += v;
  f.mean = sum / n;

  double m2 = 0.0, m3 = 0.0, m4 = 0.0;
  for (std::uint8_t v : sample.values) {
    const double d = v - f.mean;
    const double d2 = d * d;
    m2 += d2;
    m3 += d2 * d;
    m4 += d2 * d2;
  }
  m2 /= n;
  m3 /= n;
  m4 /= n;
  f.variance = m2;
  if (m2 == 0.0) {
    // Constant sample: both shape statistics are 0 by convention.
    f.skewness = 0.0;
    f.kurtosis = 0.0;
  } else {
    const double sd = std::sqrt(m2);
    f.skewness = m3 / (sd * sd * sd);
    f.kurtosis = m4 / (m2 * m2);
  }

  double energy = 0.0;
  for (std::uint8_t v : sample.values) {
    const double shifted = v + config.shift_c;
    energy += shifted * shifted;
  }
  f.energy = energy;
  f.rms = std::sqrt(energy / n);

  std::vector<double> hist(static_cast<std::size_t>(config.histogram_bins), 0.0);
  for (std::uint8_t v : sample.values) {
    hist[static_cast<std::size_t>(quantize(v, config.histogram_bins))] += 1.0;
  }
  double entropy = 0.0, uniformity = 0.0;
  for (double count : hist) {
    const double p = count / n;
    if (p > 0.0) entropy -= p * std::log2(p + config.entropy_epsilon);
    uniformity += p * p;
  }
  f.entropy = entropy;
  f.uniformity = uniformity;
  return f;
}

std::vector<std::uint64_t> glcm_pair_counts(const GrayImage& image,
                                            const RoiMask& mask, int distance,
                                            Angle angle, int levels) {
  check_pair(image, mask);
  check_glcm_args(distance, levels);
  const auto [dr, dc] = angle_offset(angle);
  const int step_r = dr * distance;
  const int step_c = dc * distance;

  std::vector<std::uint64_t> counts(
      static_cast<std::size_t>(levels) * levels, 0);
  for (int r = 0; r < image.height; ++r) {
    for (int c = 0; c < image.width; ++c) {
      if (!mask.at(r, c)) continue;
      const int r2 = r + step_r;
      const int c2 = c + step_c;
      if (r2 < 0 || r2 >= image.height || c2 < 0 || c2 >= image.width) continue;
      if (!mask.at(r2, c2)) continue;
      const int a = quantize(image.at(r, c), levels);
      const int b = quantize(image.at(r2, c2), levels);
      ++counts[static_cast<std::size_t>(a) * levels + b];
    }
  }
  return counts;
}

GlcmMatrix compute_glcm(const GrayImage& image, const RoiMask& mask,
                        int distance, Angle angle, const GlcmConfig& config) {
  std::vector<std::uint64_t> counts =
      glcm_pair_counts(image, mask, distance, angle, config.levels);
  const int levels = config.levels;

  if (config.symmetric) {
    std::vector<std::uint64_t> sym(counts.size());
    for (int i = 0; i < levels; ++i) {
      for (int j = 0; j < levels; ++j) {
        sym[static_cast<std::size_t>(i) * levels + j] =
            counts[static_cast<std::size_t>(i) * levels + j] +
            counts[static_cast<std::size_t>(j) * levels + i];
      }
    }
    counts.swap(sym);
  }

  std::uint64_t total = 0;
  for (std::uint64_t c : counts) total += c;
  if (total == 0) {
    throw DegenerateGlcmError("no valid pixel pair at distance " +
                              std::to_string(distance) + ", angle " +
                              std::to_string(angle_degrees(angle)));
  }

  GlcmMatrix glcm;
  glcm.levels = levels;
  glcm.p.resize(counts.size());
  for (std::size_t i = 0; i < counts.size(); ++i) {
    glcm.p[i] = static_cast<double>(counts[i]) / static_cast<double>(total);
  }

  std::vector<double> px(levels, 0.0), py(levels, 0.0);
  for (int i = 0; i < levels; ++i) {
    for (int j = 0; j < levels; ++j) {
      const double v = glcm.at(i, j);
      px[i] += v;
      py[j] += v;
    }
  }
  double mx = 0.0, my = 0.0;
  for (int i = 0; i < levels; ++i) {
    mx += i * px[i];
    my += i * py[i];
  }
  double vx = 0.0, vy = 0.0;
  for (int i = 0; i < levels; ++i) {
    vx += (i - mx) * (i - mx) * px[i];
    vy += (i - my) * (i - my) * py[i];
  }
  glcm.mean_x = mx;
  glcm.mean_y = my;
  glcm.std_x = std::sqrt(vx);
  glcm.std_y = std::sqrt(vy);
  return glcm;
}

GlcmFeatures glcm_features(const GlcmMatrix& glcm) {
  GlcmFeatures f;
  double covariance = 0.0;
  for (int i = 0; i < glcm.levels; ++i) {
    for (int j = 0; j < glcm.levels; ++j) {
      const double p = glcm.at(i, j);
      if (p == 0.0) continue;
      const double diff = static_cast<double>(i - j);
      f.contrast += diff * diff * p;
      f.dissimilarity += std::abs(diff) * p;
      f.energy += p * p;
      f.homogeneity += p / (1.0 + std::abs(diff));
      covariance += p * (i - glcm.mean_x) * (j - glcm.mean_y);
    }
  }
  const double sigma = glcm.std_x * glcm.std_y;
  // A flat marginal (constant ROI) makes correlation 0/0; call it 1.
  f.correlation = sigma < 1e-12 ? 1.0 : covariance / sigma;
  return f;
}

namespace {

std::vector<int> sorted_unique_distances(const GlcmConfig& config) {
  std::vector<int> d = config.distances;
  if (d.empty()) throw std::invalid_argument("no GLCM distances configured");
  std::sort(d.begin(), d.end());
  d.erase(std::unique(d.begin(), d.end()), d.end());
  return d;
}

std::vector<Angle> sorted_unique_angles(const GlcmConfig& config) {
  std::vector<Angle> a = config.angles;
  if (a.empty()) throw std::invalid_argument("no GLCM angles configured");
  std::sort(a.begin(), a.end(), [](Angle x, Angle y) {
    return angle_degrees(x) < angle_degrees(y);
  });
  a.erase(std::unique(a.begin(), a.end()), a.end());
  return a;
}

}  // namespace

std::vector<std::string> feature_names(const GlcmConfig& glcm_config,
                                       bool include_first_order) {
  const auto distances = sorted_unique_distances(glcm_config);
  const auto angles = sorted_unique_angles(glcm_config);
  std::vector<std::string> names;
  names.reserve(GlcmFeatures::names().size() * distances.size() * angles.size() +
                (include_first_order ? 8 : 0));
  for (const char* stat : GlcmFeatures::names()) {
    for (int d : distances) {
      for (Angle a : angles) {
        names.push_back(std::string(stat) + "_d" + std::to_string(d) + "_a" +
                        std::to_string(angle_degrees(a)));
      }
    }
  }
  if (include_first_order) {
    for (const char* stat : FirstOrderFeatures::names()) {
      names.emplace_back(stat);
    }
  }
  return names;
}

FeatureVector feature_vector(const GrayImage& image, const RoiMask& mask,
                             const GlcmConfig& glcm_config,
                             const FirstOrderConfig& fo_config,
                             bool include_first_order) {
  const auto distances = sorted_unique_distances(glcm_config);
  const auto angles = sorted_unique_angles(glcm_config);

  // One GLCM per (distance, angle), reused by all five statistics.
  std::vector<GlcmFeatures> per_combo;
  per_combo.reserve(distances.size() * angles.size());
  for (int d : distances) {
    for (Angle a : angles) {
      per_combo.push_back(
          glcm_features(compute_glcm(image, mask, d, a, glcm_config)));
    }
  }

  FeatureVector fv;
  fv.names = feature_names(glcm_config, include_first_order);
  fv.values.reserve(fv.names.size());
  for (std::size_t stat = 0; stat < GlcmFeatures::names().size(); ++stat) {
    for (const GlcmFeatures& gf : per_combo) {
      fv.values.push_back(gf.values()[stat]);
    }
  }
  if (include_first_order) {
    const FirstOrderFeatures fo =
        first_order_features(extract_roi_pixels(image, mask), fo_config);
    for (double v : fo.values()) fv.values.push_back(v);
  }
  return fv;
}

}  // namespace texplain
