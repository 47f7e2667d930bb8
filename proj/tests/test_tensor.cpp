#include <doctest.h>

#include <cmath>

#include "laker/adam.hpp"
#include "laker/grad_check.hpp"
#include "laker/rng.hpp"
#include "laker/tensor.hpp"

using namespace laker;

namespace {

Tensor random_tensor(std::vector<std::size_t> shape, Rng& rng, double scale = 1.0) {
  std::size_t n = 1;
  for (auto e : shape) n *= e;
  std::vector<double> data(n);
  for (auto& v : data) v = rng.normal(0.0, scale);
  return Tensor::from(std::move(shape), std::move(data));
}

void expect_grad_pass(const std::function<Tensor(const Tensor&)>& f, const Tensor& x) {
  auto report = grad_check(f, x);
  CAPTURE(report.max_rel_err);
  CAPTURE(report.checked);
  CHECK(report.checked > 0);
  CHECK(report.pass);
}

}  // namespace

TEST_CASE("softmax of a constant row is uniform") {
  Tensor x = Tensor::from({3}, {0.0, 0.0, 0.0});
  Tensor y = softmax(x);
  for (std::size_t i = 0; i < 3; ++i) CHECK(y.at(i) == doctest::Approx(1.0 / 3).epsilon(1e-12));
}

TEST_CASE("softmax rows sum to one") {
  Rng rng(11);
  Tensor x = random_tensor({5, 7}, rng, 3.0);
  Tensor y = softmax(x);
  for (std::size_t i = 0; i < 5; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < 7; ++j) s += y.at(i * 7 + j);
    CHECK(std::abs(s - 1.0) < 1e-9);
  }
}

TEST_CASE("cosine similarity of a vector with itself is 1") {
  Tensor v = Tensor::from({4}, {0.3, -1.2, 2.0, 0.5});
  CHECK(cosine_sim(v, v).item() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cosine similarity guards the zero vector") {
  Tensor z = Tensor::from({3}, {0.0, 0.0, 0.0});
  Tensor v = Tensor::from({3}, {1.0, 2.0, 3.0});
  CHECK(cosine_sim(z, v).item() == doctest::Approx(0.0));
}

TEST_CASE("cross entropy of uniform logits is ln C") {
  for (std::size_t c : {2, 5, 17}) {
    Tensor logits = Tensor::zeros({3, c});
    Tensor loss = cross_entropy(logits, {0, c - 1, c / 2});
    CHECK(loss.item() == doctest::Approx(std::log(static_cast<double>(c))).epsilon(1e-12));
  }
}

TEST_CASE("bce at logit zero is ln 2") {
  Tensor logits = Tensor::zeros({4});
  Tensor loss = bce(logits, {1.0, 0.0, 1.0, 0.0});
  CHECK(loss.item() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
}

TEST_CASE("layer_norm output has zero mean and unit variance per row") {
  Rng rng(23);
  Tensor x = random_tensor({6, 32}, rng, 100.0);  // large variance so eps is negligible
  Tensor y = layer_norm(x, 1e-5);
  for (std::size_t i = 0; i < 6; ++i) {
    double mu = 0.0, var = 0.0;
    for (std::size_t j = 0; j < 32; ++j) mu += y.at(i * 32 + j);
    mu /= 32.0;
    for (std::size_t j = 0; j < 32; ++j) {
      double d = y.at(i * 32 + j) - mu;
      var += d * d;
    }
    var /= 32.0;
    CHECK(std::abs(mu) < 1e-9);
    CHECK(std::abs(var - 1.0) < 1e-6);
  }
}

TEST_CASE("backward of sum gives all-ones gradient") {
  Tensor w = Tensor::from({2, 3}, {1, 2, 3, 4, 5, 6}, true);
  backward(sum_all(w));
  for (double g : w.grad()) CHECK(g == doctest::Approx(1.0));
}

TEST_CASE("backward of squared norm gives 2x") {
  Tensor x = Tensor::from({4}, {1.0, -2.0, 0.5, 3.0}, true);
  backward(sum_all(mul(x, x)));
  for (std::size_t i = 0; i < 4; ++i) CHECK(x.grad()[i] == doctest::Approx(2.0 * x.at(i)));
}

TEST_CASE("gradients accumulate across graphs") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  backward(sum_all(x));
  backward(sum_all(x));
  CHECK(x.grad()[0] == doctest::Approx(2.0));
}

TEST_CASE("backward rejects non-scalar losses and consumed graphs") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  Tensor y = mul(x, x);
  CHECK_THROWS_WITH_AS(backward(y), doctest::Contains("scalar"), Error);
  Tensor loss = sum_all(y);
  backward(loss);
  CHECK_THROWS_AS(backward(loss), Error);
}

TEST_CASE("shape mismatch is rejected") {
  Tensor a = Tensor::zeros({2, 3});
  Tensor b = Tensor::zeros({3, 3});
  CHECK_THROWS_AS(add(a, b), Error);
  CHECK_THROWS_AS(matmul(a, Tensor::zeros({2, 2})), Error);
}

TEST_CASE("softmax rejects non-finite input") {
  Tensor a = Tensor::from({2}, {1.0, std::numeric_limits<double>::infinity()});
  CHECK_THROWS_AS(softmax(a), Error);
}

TEST_CASE("finite differences validate every primitive op") {
  Rng rng(7);

  SUBCASE("matmul") {
    Tensor b = random_tensor({3, 4}, rng);
    expect_grad_pass([&](const Tensor& x) { return sum_all(matmul(x, b)); },
                     random_tensor({2, 3}, rng));
    Tensor a = random_tensor({2, 3}, rng);
    expect_grad_pass([&](const Tensor& x) { return sum_all(mul(matmul(a, x), matmul(a, x))); },
                     random_tensor({3, 4}, rng));
  }
  SUBCASE("transpose") {
    Tensor c = random_tensor({4, 2}, rng);
    expect_grad_pass([&](const Tensor& x) { return sum_all(mul(transpose(x), c)); },
                     random_tensor({2, 4}, rng));
  }
  SUBCASE("add and mul") {
    Tensor b = random_tensor({3, 3}, rng);
    expect_grad_pass([&](const Tensor& x) { return sum_all(mul(add(x, b), x)); },
                     random_tensor({3, 3}, rng));
  }
  SUBCASE("row-vector broadcast ops") {
    Tensor m = random_tensor({3, 4}, rng);
    expect_grad_pass([&](const Tensor& x) { return sum_all(mul_rowvec(add_rowvec(m, x), x)); },
                     random_tensor({4}, rng));
    Tensor v = random_tensor({4}, rng);
    expect_grad_pass([&](const Tensor& x) { return sum_all(add_rowvec(mul_rowvec(x, v), v)); },
                     random_tensor({3, 4}, rng));
  }
  SUBCASE("scale, concat, gather") {
    Tensor b = random_tensor({2, 3}, rng);
    expect_grad_pass(
        [&](const Tensor& x) {
          Tensor joined = concat({x, b}, 0);
          Tensor wide = concat({x, x}, 1);
          return add(sum_all(gather_rows(joined, {0, 3, 1})), sum_all(scale(wide, -1.7)));
        },
        random_tensor({2, 3}, rng));
  }
  SUBCASE("reductions") {
    expect_grad_pass(
        [&](const Tensor& x) {
          Tensor a = mean_axis(x, 0);
          Tensor bb = mean_axis(x, 1);
          return add(add(sum_all(mul(a, a)), sum_all(mul(bb, bb))),
                     add(mean_all(x), sum_all(sum_last(mul(x, x)))));
        },
        random_tensor({3, 5}, rng));
  }
  SUBCASE("softmax") {
    Tensor w = random_tensor({4, 4}, rng);
    expect_grad_pass([&](const Tensor& x) { return sum_all(mul(softmax(x), w)); },
                     random_tensor({4, 4}, rng, 2.0));
  }
  SUBCASE("layer_norm") {
    Tensor w = random_tensor({3, 8}, rng);
    expect_grad_pass([&](const Tensor& x) { return sum_all(mul(layer_norm(x, 1e-5), w)); },
                     random_tensor({3, 8}, rng));
  }
  SUBCASE("pointwise nonlinearities") {
    Tensor w = random_tensor({3, 4}, rng);
    expect_grad_pass(
        [&](const Tensor& x) {
          return sum_all(mul(add(relu(x), sigmoid(x)), w));
        },
        random_tensor({3, 4}, rng));
    expect_grad_pass([&](const Tensor& x) { return sum_all(exp(scale(x, 0.3))); },
                     random_tensor({2, 3}, rng));
    expect_grad_pass([&](const Tensor& x) { return sum_all(log(add(mul(x, x), Tensor::full({2, 3}, 0.5)))); },
                     random_tensor({2, 3}, rng));
  }
  SUBCASE("norms") {
    expect_grad_pass([&](const Tensor& x) { return sum_all(l2_norm(x)); },
                     random_tensor({3, 5}, rng));
    Tensor w = random_tensor({3, 5}, rng);
    expect_grad_pass([&](const Tensor& x) { return sum_all(mul(l2_normalize(x), w)); },
                     random_tensor({3, 5}, rng));
    Tensor other = random_tensor({3, 5}, rng);
    expect_grad_pass([&](const Tensor& x) { return sum_all(cosine_sim(x, other)); },
                     random_tensor({3, 5}, rng));
  }
  SUBCASE("losses") {
    expect_grad_pass([&](const Tensor& x) { return cross_entropy(x, {1, 0, 3}); },
                     random_tensor({3, 4}, rng, 2.0));
    expect_grad_pass([&](const Tensor& x) { return bce(x, {1.0, 0.0, 1.0, 1.0, 0.0}); },
                     random_tensor({5}, rng, 2.0));
  }
}

TEST_CASE("finite differences validate a random composite graph") {
  Rng rng(99);
  Tensor w1 = random_tensor({6, 5}, rng, 0.7);
  Tensor w2 = random_tensor({5, 3}, rng, 0.7);
  auto f = [&](const Tensor& x) {
    Tensor h = relu(matmul(x, w1));
    Tensor p = softmax(matmul(layer_norm(h, 1e-5), w2));
    return cross_entropy(scale(p, 4.0), {2, 0});
  };
  expect_grad_pass(f, random_tensor({2, 6}, rng));
}

TEST_CASE("relu at an exact zero coordinate is excluded from grad_check") {
  Tensor x = Tensor::from({3}, {0.0, 1.0, -1.0});
  auto report = grad_check([](const Tensor& t) { return sum_all(relu(t)); }, x);
  CHECK(report.skipped == 1);
  CHECK(report.checked == 2);
  CHECK(report.pass);
}

TEST_CASE("no-grad mode records nothing") {
  Tensor x = Tensor::from({2}, {1.0, 2.0}, true);
  NoGradGuard ng;
  Tensor y = sum_all(mul(x, x));
  CHECK_FALSE(y.requires_grad());
}

TEST_CASE("adam leaves parameters unchanged on zero gradients") {
  Tensor p = Tensor::from({3}, {1.0, -2.0, 0.25}, true);
  Adam opt({p}, {});
  opt.zero_grad();
  opt.step();
  CHECK(p.at(0) == doctest::Approx(1.0));
  CHECK(p.at(1) == doctest::Approx(-2.0));
  CHECK(p.at(2) == doctest::Approx(0.25));
}

TEST_CASE("adam single step from zero state matches hand computation") {
  // With zero moments, one step moves by -lr * g / (|g| + eps) after bias correction.
  Tensor p = Tensor::from({2}, {1.0, -0.5}, true);
  backward(sum_all(mul(p, Tensor::from({2}, {0.5, -0.2}))));
  AdamConfig cfg;
  cfg.lr = 0.1;
  Adam opt({p}, cfg);
  opt.step();
  CHECK(p.at(0) == doctest::Approx(1.0 - 0.1 * 0.5 / (0.5 + 1e-8)).epsilon(1e-12));
  CHECK(p.at(1) == doctest::Approx(-0.5 - 0.1 * (-0.2) / (0.2 + 1e-8)).epsilon(1e-12));
}

TEST_CASE("adam is deterministic") {
  auto run = [] {
    Tensor p = Tensor::from({3}, {0.4, 0.6, -1.0}, true);
    Adam opt({p}, {});
    for (int s = 0; s < 5; ++s) {
      opt.zero_grad();
      backward(sum_all(mul(p, p)));
      opt.step();
    }
    return p.values();
  };
  CHECK(run() == run());
}

TEST_CASE("forward math is bit-deterministic") {
  auto run = [] {
    Rng rng(5);
    Tensor a = random_tensor({4, 4}, rng);
    Tensor b = random_tensor({4, 4}, rng);
    return softmax(matmul(layer_norm(a, 1e-5), sigmoid(b))).values();
  };
  CHECK(run() == run());
}
