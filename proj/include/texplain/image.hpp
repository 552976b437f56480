#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <vector>

namespace texplain {

// 8-bit grayscale raster, row-major.
struct GrayImage {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;

  std::uint8_t at(int row, int col) const {
    return data[static_cast<std::size_t>(row) * width + col];
  }
  std::size_t size() const { return data.size(); }
};

// Binary region-of-interest mask aligned with a GrayImage.
struct RoiMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> data;  // 0 or 1, row-major

  bool at(int row, int col) const {
    return data[static_cast<std::size_t>(row) * width + col] != 0;
  }
  std::size_t true_count() const;
};

// Integer-rounded luma combination of an RGB triple (round half up).
std::uint8_t luma_gray(std::uint8_t r, std::uint8_t g, std::uint8_t b);

// Decodes a PNG file into an 8-bit grayscale raster. Color inputs are
// reduced with luma_gray; palette and 16-bit inputs are expanded/narrowed
// by the decoder. Alpha channels are dropped.
GrayImage load_image(const std::filesystem::path& path);

// Decodes a PNG file into a binary mask: a pixel is true iff its
// grayscale value exceeds 127. An all-false mask loads fine; feature
// extraction rejects it later.
RoiMask load_mask(const std::filesystem::path& path);

// Pixel-wise OR of equally sized masks. Used for cases that ship several
// annotation files for one image.
RoiMask mask_union(const std::vector<RoiMask>& masks);

}  // namespace texplain
