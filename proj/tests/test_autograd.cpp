#include <doctest.h>

#include "gradcheck.hpp"
#include "test_support.hpp"

using namespace lfin;
using namespace lfin::test;

TEST_CASE("a value used twice collects both gradient contributions") {
  const TensorD x0({1, 2, 2}, std::vector<double>{1, -2, 3, -4});
  auto x = ag::leaf(x0, true);
  ag::backward(ag::add(x, x), TensorD({1, 2, 2}, 1.0));
  for (double g : x.grad().values()) CHECK(g == 2.0);

  // diamond: relu(x) + x
  auto z = ag::leaf(x0, true);
  ag::backward(ag::add(ag::relu(z), z), TensorD({1, 2, 2}, 1.0));
  CHECK(z.grad().values() == std::vector<double>{2, 1, 2, 1});
}

TEST_CASE("leaf gradients accumulate across backward calls until cleared") {
  auto x = ag::leaf(TensorD({1, 1, 2}, 1.0), true);
  const TensorD seed({1, 1, 2}, 1.0);
  ag::backward(ag::relu(x), seed);
  ag::backward(ag::relu(x), seed);
  CHECK(x.grad().values() == std::vector<double>{2, 2});
  x.zero_grad();
  ag::backward(ag::relu(x), seed);
  CHECK(x.grad().values() == std::vector<double>{1, 1});
}

TEST_CASE("constants receive no gradient and record no graph") {
  auto c = ag::leaf(TensorD({1, 1, 2}, 1.0));
  auto x = ag::leaf(TensorD({1, 1, 2}, 3.0), true);
  const auto y = ag::add(c, x);
  ag::backward(y, TensorD({1, 1, 2}, 1.0));
  CHECK(c.grad().empty());
  CHECK(x.grad().values() == std::vector<double>{1, 1});

  const auto k = ag::relu(c);
  CHECK_FALSE(k.requires_grad());
  CHECK(k.node()->parents.empty());
}

TEST_CASE("NoGradGuard disables recording and restores the previous mode") {
  CHECK(ag::grad_enabled());
  auto x = ag::leaf(TensorD({1, 1, 1}, 1.0), true);
  {
    ag::NoGradGuard outer;
    {
      ag::NoGradGuard inner;
      CHECK_FALSE(ag::grad_enabled());
    }
    CHECK_FALSE(ag::grad_enabled());
    CHECK_FALSE(ag::relu(x).requires_grad());
  }
  CHECK(ag::grad_enabled());
  CHECK(ag::relu(x).requires_grad());
}

TEST_CASE("scalar backward seeds with one and checks the seed shape") {
  auto p = ag::leaf(TensorD({1, 1, 2}, std::vector<double>{0.5, -0.5}), true);
  const auto loss = ag::l1_loss(p, TensorD({1, 1, 2}));
  CHECK(loss.value()[0] == doctest::Approx(0.5));
  ag::backward(loss);
  CHECK(p.grad().values() == std::vector<double>{0.5, -0.5});
  CHECK_THROWS_AS(ag::backward(loss, TensorD({2})), ShapeError);
}

TEST_CASE("finite differences through a composite graph") {
  // conv -> relu -> (upsample | shuffle) -> concat -> conv -> residual -> l1
  std::mt19937_64 rng(11);
  const auto target = random_tensor<double>({2, 4, 4}, rng);
  const GraphFn f = [target](const std::vector<ag::Var<double>>& v) {
    const auto a = ag::relu(ag::conv2d(v[0], v[1], v[2], afe_geometry(2)));
    const auto up = ag::pixel_shuffle(ag::conv2d(a, v[3], v[4], pointwise_geometry()), 2);
    const auto cat = ag::concat<double>({v[0], up});
    const auto s = ag::conv2d(cat, v[5], v[6], sfe_geometry(2));
    return ag::l1_loss(ag::add(s, v[0]), target);
  };
  const std::vector<TensorD> inputs{random_tensor<double>({2, 4, 4}, rng),    random_tensor<double>({3, 2, 2, 2}, rng),
                                    random_tensor<double>({3}, rng),          random_tensor<double>({4, 3, 1, 1}, rng),
                                    random_tensor<double>({4}, rng),          random_tensor<double>({2, 3, 3, 3}, rng),
                                    random_tensor<double>({2}, rng)};
  CHECK(gradcheck(inputs, f, rng) <= 1e-4);
}
