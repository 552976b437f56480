#include "texplain/image.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "texplain/error.hpp"

namespace texplain {

std::size_t RoiMask::true_count() const {
  return static_cast<std::size_t>(
      std::count_if(data.begin(), data.end(), [](std::uint8_t v) { return v != 0; }));
}

std::uint8_t luma_gray(std::uint8_t r, std::uint8_t g, std::uint8_t b) {
  const double y = 0.299 * r + 0.587 * g + 0.114 * b;
  return static_cast<std::uint8_t>(std::floor(y + 0.5));
}

namespace {

// Decodes any PNG into 8-bit RGBA via the libpng simplified API.
struct DecodedPng {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> rgba;
};

DecodedPng decode_png_rgba(const std::filesystem::path& path) {
  if (!std::filesystem::exists(path)) {
    throw IoError("file not found: " + path.string());
  }
  png_image image;
  std::memset(&image, 0, sizeof(image));
  image.version = PNG_IMAGE_VERSION;

  if (!png_image_begin_read_from_file(&image, path.string().c_str())) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  image.format = PNG_FORMAT_RGBA;

  DecodedPng out;
  out.width = static_cast<int>(image.width);
  out.height = static_cast<int>(image.height);
  if (out.width < 1 || out.height < 1) {
    png_image_free(&image);
    throw IoError("zero-dimension image: " + path.string());
  }
  out.rgba.resize(PNG_IMAGE_SIZE(image));
  if (!png_image_finish_read(&image, nullptr, out.rgba.data(), 0, nullptr)) {
    std::string msg = image.message;
    png_image_free(&image);
    throw IoError("cannot decode PNG " + path.string() + ": " + msg);
  }
  return out;
}

}  // namespace

GrayImage load_image(const std::filesystem::path& path) {
  DecodedPng png = decode_png_rgba(path);
  GrayImage img;
  img.width = png.width;
  img.height = png.height;
  img.data.resize(static_cast<std::size_t>(png.width) * png.height);
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    const std::uint8_t* px = &png.rgba[i * 4];
    img.data[i] = luma_gray(px[0], px[1], px[2]);
  }
  return img;
}

RoiMask load_mask(const std::filesystem::path& path) {
  GrayImage img = load_image(path);
  RoiMask mask;
  mask.width = img.width;
  mask.height = img.height;
  mask.data.resize(img.data.size());
  for (std::size_t i = 0; i < img.data.size(); ++i) {
    mask.data[i] = img.data[i] > 127 ? 1 : 0;
  }
  return mask;
}

RoiMask mask_union(const std::vector<RoiMask>& masks) {
  if (masks.empty()) {
    throw std::invalid_argument("mask_union: no masks given");
  }
  RoiMask out = masks.front();
  for (std::size_t m = 1; m < masks.size(); ++m) {
    const RoiMask& next = masks[m];
    if (next.width != out.width || next.height != out.height) {
      throw std::invalid_argument("mask_union: mask dimensions differ");
    }
    for (std::size_t i = 0; i < out.data.size(); ++i) {
      out.data[i] = out.data[i] || next.data[i] ? 1 : 0;
    }
  }
  return out;
}

}  // namespace texplain
