#include "lfin/light_field.hpp"

#include <string>

#include "lfin/errors.hpp"

namespace lfin {

Image::Image(int r, int c, float fill) : rows(r), cols(c) {
  if (r < 0 || c < 0) throw ShapeError("negative image extent");
  data.assign(static_cast<std::size_t>(r) * c, fill);
}

LightField::LightField(int ang_res, int height, int width, float fill)
    : ang_res_(ang_res), height_(height), width_(width) {
  if (ang_res < 1 || height < 1 || width < 1)
    throw ShapeError("light field extents must be positive");
  data_.assign(static_cast<std::size_t>(ang_res) * ang_res * height * width, fill);
}

LightField::LightField(int ang_res, int height, int width, std::vector<float> data)
    : ang_res_(ang_res), height_(height), width_(width), data_(std::move(data)) {
  if (ang_res < 1 || height < 1 || width < 1)
    throw ShapeError("light field extents must be positive");
  if (data_.size() != static_cast<std::size_t>(ang_res) * ang_res * height * width)
    throw ShapeError("light field data has " + std::to_string(data_.size()) +
                     " elements, expected A*A*H*W");
}

MacPiImage lf_to_macpi(const LightField& lf) {
  const int a = lf.ang_res(), h = lf.height(), w = lf.width();
  MacPiImage m{a, h, w, Image(a * h, a * w)};
  for (int u = 0; u < a; ++u)
    for (int v = 0; v < a; ++v)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) m.image.at(y * a + u, x * a + v) = lf.at(u, v, y, x);
  return m;
}

LightField macpi_to_lf(const MacPiImage& m) {
  const int a = m.ang_res, h = m.view_h, w = m.view_w;
  if (m.image.rows != a * h || m.image.cols != a * w) throw ShapeError("MacPI extent mismatch");
  LightField lf(a, h, w);
  for (int u = 0; u < a; ++u)
    for (int v = 0; v < a; ++v)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) lf.at(u, v, y, x) = m.image.at(y * a + u, x * a + v);
  return lf;
}

SaiArrayImage lf_to_sai_array(const LightField& lf) {
  const int a = lf.ang_res(), h = lf.height(), w = lf.width();
  SaiArrayImage s{a, h, w, Image(a * h, a * w)};
  for (int u = 0; u < a; ++u)
    for (int v = 0; v < a; ++v)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) s.image.at(u * h + y, v * w + x) = lf.at(u, v, y, x);
  return s;
}

LightField sai_array_to_lf(const SaiArrayImage& s) {
  const int a = s.ang_res, h = s.view_h, w = s.view_w;
  if (s.image.rows != a * h || s.image.cols != a * w) throw ShapeError("SAI array extent mismatch");
  LightField lf(a, h, w);
  for (int u = 0; u < a; ++u)
    for (int v = 0; v < a; ++v)
      for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) lf.at(u, v, y, x) = s.image.at(u * h + y, v * w + x);
  return lf;
}

namespace {

void check_divisible(const Image& img, int ang_res) {
  if (ang_res < 1) throw ParameterError("angular resolution must be >= 1");
  if (img.rows % ang_res != 0 || img.cols % ang_res != 0)
    throw ShapeError("image extent " + std::to_string(img.rows) + "x" + std::to_string(img.cols) +
                     " not divisible by angular resolution " + std::to_string(ang_res));
}

}  // namespace

MacPiImage as_macpi(Image img, int ang_res) {
  check_divisible(img, ang_res);
  const int h = img.rows / ang_res, w = img.cols / ang_res;
  return MacPiImage{ang_res, h, w, std::move(img)};
}

SaiArrayImage as_sai_array(Image img, int ang_res) {
  check_divisible(img, ang_res);
  const int h = img.rows / ang_res, w = img.cols / ang_res;
  return SaiArrayImage{ang_res, h, w, std::move(img)};
}

int macpi_to_sai_coord(int xi, int ang_res, int extent) {
  return extent * (xi - 1) + ((xi - 1) / ang_res) * (1 - ang_res * extent) + 1;
}

SaiArrayImage macpi_to_sai(const MacPiImage& m) {
  const int a = m.ang_res, h = m.view_h, w = m.view_w;
  if (m.image.rows != a * h || m.image.cols != a * w) throw ShapeError("MacPI extent mismatch");
  SaiArrayImage s{a, h, w, Image(a * h, a * w)};
  for (int xi = 1; xi <= a * h; ++xi) {
    const int x = macpi_to_sai_coord(xi, a, h);
    for (int eta = 1; eta <= a * w; ++eta)
      s.image.at(x - 1, macpi_to_sai_coord(eta, a, w) - 1) = m.image.at(xi - 1, eta - 1);
  }
  return s;
}

MacPiImage sai_to_macpi(const SaiArrayImage& s) {
  const int a = s.ang_res, h = s.view_h, w = s.view_w;
  if (s.image.rows != a * h || s.image.cols != a * w) throw ShapeError("SAI array extent mismatch");
  MacPiImage m{a, h, w, Image(a * h, a * w)};
  for (int xi = 1; xi <= a * h; ++xi) {
    const int x = macpi_to_sai_coord(xi, a, h);
    for (int eta = 1; eta <= a * w; ++eta)
      m.image.at(xi - 1, eta - 1) = s.image.at(x - 1, macpi_to_sai_coord(eta, a, w) - 1);
  }
  return m;
}

Image extract_view(const LightField& lf, int u, int v) {
  if (u < 0 || u >= lf.ang_res() || v < 0 || v >= lf.ang_res())
    throw RangeError("view (" + std::to_string(u) + ", " + std::to_string(v) + ") out of range");
  Image out(lf.height(), lf.width());
  for (int y = 0; y < lf.height(); ++y)
    for (int x = 0; x < lf.width(); ++x) out.at(y, x) = lf.at(u, v, y, x);
  return out;
}

Image extract_macro_pixel(const LightField& lf, int h, int w) {
  if (h < 0 || h >= lf.height() || w < 0 || w >= lf.width())
    throw RangeError("macro-pixel (" + std::to_string(h) + ", " + std::to_string(w) +
                     ") out of range");
  Image out(lf.ang_res(), lf.ang_res());
  for (int u = 0; u < lf.ang_res(); ++u)
    for (int v = 0; v < lf.ang_res(); ++v) out.at(u, v) = lf.at(u, v, h, w);
  return out;
}

void set_view(LightField& lf, int u, int v, const Image& img) {
  if (u < 0 || u >= lf.ang_res() || v < 0 || v >= lf.ang_res())
    throw RangeError("view index out of range");
  if (img.rows != lf.height() || img.cols != lf.width()) throw ShapeError("view extent mismatch");
  for (int y = 0; y < lf.height(); ++y)
    for (int x = 0; x < lf.width(); ++x) lf.at(u, v, y, x) = img.at(y, x);
}

LightField center_crop_angular(const LightField& lf, int a) {
  const int big = lf.ang_res();
  if (a < 1 || a > big || (big - a) % 2 != 0)
    throw ParameterError("cannot take a centered " + std::to_string(a) + "x" + std::to_string(a) +
                         " crop from " + std::to_string(big) + "x" + std::to_string(big) + " views");
  const int off = (big - a) / 2;
  LightField out(a, lf.height(), lf.width());
  for (int u = 0; u < a; ++u)
    for (int v = 0; v < a; ++v)
      for (int y = 0; y < lf.height(); ++y)
        for (int x = 0; x < lf.width(); ++x) out.at(u, v, y, x) = lf.at(u + off, v + off, y, x);
  return out;
}

}  // namespace lfin
