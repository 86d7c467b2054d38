#include <doctest.h>

#include <cmath>
#include <random>

#include "lfin/errors.hpp"
#include "lfin/metrics.hpp"
#include "test_support.hpp"

using namespace lfin;
using namespace lfin::test;

namespace {

Image random_image(int rows, int cols, std::mt19937_64& rng) {
  std::uniform_real_distribution<float> d(0.0f, 1.0f);
  Image img(rows, cols);
  for (auto& x : img.data) x = d(rng);
  return img;
}

// Windowed statistics evaluated position by position with a full 2D Gaussian.
double ssim_oracle(const Image& a, const Image& b) {
  const int n = 11;
  double w[n][n], total = 0.0;
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double di = i - 5, dj = j - 5;
      w[i][j] = std::exp(-(di * di + dj * dj) / (2 * 1.5 * 1.5));
      total += w[i][j];
    }
  const double c1 = 0.01 * 0.01, c2 = 0.03 * 0.03;
  double acc = 0.0;
  int count = 0;
  for (int r = 0; r + n <= a.rows; ++r)
    for (int c = 0; c + n <= a.cols; ++c) {
      double ma = 0, mb = 0, saa = 0, sbb = 0, sab = 0;
      for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
          const double k = w[i][j] / total, x = a.at(r + i, c + j), y = b.at(r + i, c + j);
          ma += k * x;
          mb += k * y;
          saa += k * x * x;
          sbb += k * y * y;
          sab += k * x * y;
        }
      const double va = saa - ma * ma, vb = sbb - mb * mb, cov = sab - ma * mb;
      acc += ((2 * ma * mb + c1) * (2 * cov + c2)) / ((ma * ma + mb * mb + c1) * (va + vb + c2));
      ++count;
    }
  return acc / count;
}

SceneScores scene(const std::string& name, int a, std::vector<double> psnr) {
  SceneScores s;
  s.name = name;
  s.ang_res = a;
  s.psnr = psnr;
  s.ssim.assign(psnr.size(), 0.9);
  return s;
}

}  // namespace

TEST_CASE("PSNR cap and closed form") {
  std::mt19937_64 rng(1);
  const auto a = random_image(8, 8, rng);
  CHECK(psnr(a, a) == kPsnrCap);
  const Image x(6, 7, 0.2f), y(6, 7, 0.3f);
  CHECK(psnr(x, y) == doctest::Approx(20.0).epsilon(1e-5));
  CHECK_THROWS_AS(psnr(x, Image(6, 6)), ShapeError);
}

TEST_CASE("SSIM identity, constant offset and direct oracle") {
  std::mt19937_64 rng(2);
  const auto a = random_image(20, 17, rng);
  CHECK(ssim(a, a) == doctest::Approx(1.0).epsilon(1e-9));

  const double ma = 0.3, mb = 0.45, c1 = 1e-4;
  const double want = (2 * ma * mb + c1) / (ma * ma + mb * mb + c1);
  CHECK(ssim(Image(16, 16, 0.3f), Image(16, 16, 0.45f)) == doctest::Approx(want).epsilon(1e-5));

  auto b = a;
  for (auto& v : b.data) v = std::clamp(v + 0.1f * (std::uniform_real_distribution<float>(-1, 1)(rng)), 0.0f, 1.0f);
  CHECK(ssim(a, b) == doctest::Approx(ssim_oracle(a, b)).epsilon(1e-6));
  CHECK(ssim(a, b) < 1.0);
  CHECK_THROWS_AS(ssim(a, Image(20, 16)), ShapeError);
}

TEST_CASE("border cropping") {
  Image img(6, 5);
  for (int i = 0; i < 30; ++i) img.data[i] = static_cast<float>(i);
  const auto c = crop_border(img, 1);
  CHECK(c.rows == 4);
  CHECK(c.cols == 3);
  CHECK(c.at(0, 0) == img.at(1, 1));
  CHECK(crop_border(img, 0) == img);
  CHECK_THROWS_AS(crop_border(img, 3), ParameterError);
}

TEST_CASE("two-level aggregation") {
  const auto one = aggregate("d", {scene("s", 1, {27.5})});
  CHECK(one.psnr == 27.5);
  CHECK(one.ssim == doctest::Approx(0.9));

  const auto two = aggregate("d", {scene("a", 2, {30, 30, 30, 30}), scene("b", 2, {31, 33, 31, 33})});
  CHECK(two.scenes[0].mean_psnr == 30.0);
  CHECK(two.scenes[1].mean_psnr == 32.0);
  CHECK(two.psnr == 31.0);

  // unequal view counts: the two-level mean differs from the flat mean
  const auto uneq = aggregate("d", {scene("a", 1, {30}), scene("b", 2, {34, 34, 34, 34})});
  const double flat = (30.0 + 4 * 34.0) / 5.0;
  CHECK(uneq.psnr == 32.0);
  CHECK(uneq.psnr != doctest::Approx(flat));

  CHECK_THROWS_AS(aggregate("d", {scene("a", 2, {30, 30, 30})}), ParameterError);
  auto ragged = scene("a", 1, {30});
  ragged.ssim.clear();
  CHECK_THROWS_AS(aggregate("d", {ragged}), ParameterError);
}

TEST_CASE("ground truth against itself scores the cap") {
  std::mt19937_64 rng(3);
  const auto gt = random_lf(3, 12, 12, rng);
  const auto s = evaluate_scene("x", gt, gt);
  CHECK(s.psnr.size() == 9);
  const auto r = aggregate("d", {s});
  CHECK(r.psnr == kPsnrCap);
  CHECK(r.ssim == doctest::Approx(1.0));
  CHECK_THROWS_AS(evaluate_scene("x", gt, random_lf(3, 12, 11, rng)), ShapeError);

  auto sr = gt;
  sr.at(1, 2, 0, 0) += 0.5f;
  const auto cropped = evaluate_scene("x", sr, gt, 1);
  CHECK(cropped.psnr[5] == kPsnrCap);
  CHECK(evaluate_scene("x", sr, gt).psnr[5] < kPsnrCap);
}
