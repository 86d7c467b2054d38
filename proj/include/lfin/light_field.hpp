#pragma once

// 4D light-field data model and the two 2D flattenings used by the network.
//
// All C++ indices are 0-based. A light field of angular resolution A holds
// A x A views of H x W pixels in row-major (u, v, h, w) order.
//
//   SAI array:  pixel (x, y) = L(x / H, y / W, x % H, y % W)
//   MacPI:      pixel (x, y) = L(x % A, y % A, x / A, y / A)

#include <cstddef>
#include <vector>

namespace lfin {

/// Dense row-major single-channel image.
struct Image {
  int rows = 0;
  int cols = 0;
  std::vector<float> data;

  Image() = default;
  Image(int r, int c, float fill = 0.0f);

  float& at(int r, int c) { return data[static_cast<std::size_t>(r) * cols + c]; }
  float at(int r, int c) const { return data[static_cast<std::size_t>(r) * cols + c]; }

  bool operator==(const Image&) const = default;
};

class LightField {
 public:
  LightField() = default;
  LightField(int ang_res, int height, int width, float fill = 0.0f);
  LightField(int ang_res, int height, int width, std::vector<float> data);

  int ang_res() const { return ang_res_; }
  int height() const { return height_; }
  int width() const { return width_; }
  std::size_t size() const { return data_.size(); }

  float& at(int u, int v, int h, int w) { return data_[index(u, v, h, w)]; }
  float at(int u, int v, int h, int w) const { return data_[index(u, v, h, w)]; }

  const std::vector<float>& data() const { return data_; }
  std::vector<float>& data() { return data_; }

  bool operator==(const LightField&) const = default;

 private:
  std::size_t index(int u, int v, int h, int w) const {
    return ((static_cast<std::size_t>(u) * ang_res_ + v) * height_ + h) * width_ + w;
  }

  int ang_res_ = 0;
  int height_ = 0;
  int width_ = 0;
  std::vector<float> data_;
};

struct SaiArrayImage {
  int ang_res = 0;
  int view_h = 0;
  int view_w = 0;
  Image image;  // (A*H) x (A*W)
};

struct MacPiImage {
  int ang_res = 0;
  int view_h = 0;
  int view_w = 0;
  Image image;  // (A*H) x (A*W)
};

MacPiImage lf_to_macpi(const LightField& lf);
LightField macpi_to_lf(const MacPiImage& m);
SaiArrayImage lf_to_sai_array(const LightField& lf);
LightField sai_array_to_lf(const SaiArrayImage& s);

/// Wraps a raw image as a MacPI / SAI array; throws ShapeError if the extents
/// are not divisible by ang_res.
MacPiImage as_macpi(Image img, int ang_res);
SaiArrayImage as_sai_array(Image img, int ang_res);

/// LF reshape: direct coordinate map from MacPI to SAI array.
SaiArrayImage macpi_to_sai(const MacPiImage& m);
MacPiImage sai_to_macpi(const SaiArrayImage& s);

/// Closed-form LF-reshape row map with 1-based coordinates:
///   x = H(xi - 1) + floor((xi - 1) / A)(1 - AH) + 1
/// The same form applies to columns with W in place of H.
int macpi_to_sai_coord(int xi, int ang_res, int extent);

/// View (u, v) as an H x W image. Throws RangeError on bad coordinates.
Image extract_view(const LightField& lf, int u, int v);
/// Macro-pixel at (h, w) as an A x A image. Throws RangeError on bad coordinates.
Image extract_macro_pixel(const LightField& lf, int h, int w);

/// Centered a x a sub-grid of views. Throws ParameterError when a > A or when
/// the parity of a and A differ.
LightField center_crop_angular(const LightField& lf, int a);

/// Replaces view (u, v) with img (H x W).
void set_view(LightField& lf, int u, int v, const Image& img);

}  // namespace lfin
