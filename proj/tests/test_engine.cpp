#include <doctest.h>

#include <cmath>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "support/temp_dir.hpp"
#include "textmatch/checkpoint.hpp"
#include "textmatch/errors.hpp"
#include "textmatch/ops.hpp"
#include "textmatch/optim.hpp"
#include "textmatch/tensor.hpp"

using namespace textmatch;

namespace {

std::vector<double> grad_of(const Tensor& t) {
  auto g = t.grad();
  return {g.begin(), g.end()};
}

Tensor leaf(std::vector<std::size_t> shape, std::vector<double> values) {
  Tensor t = Tensor::from_values(std::move(shape), std::move(values));
  t.set_requires_grad(true);
  return t;
}

}  // namespace

TEST_CASE("tensor factories and accessors") {
  Tensor z = Tensor::zeros({2, 3});
  CHECK(z.shape() == std::vector<std::size_t>{2, 3});
  CHECK(z.numel() == 6);
  CHECK(z.at(1, 2) == 0.0);

  Tensor f = Tensor::full({2, 2}, 1.5);
  CHECK(f.at(0, 0) == 1.5);
  CHECK(f.at(1, 1) == 1.5);

  Tensor s = Tensor::scalar(4.0);
  CHECK(s.is_scalar());
  CHECK(s.value() == 4.0);
  CHECK(s.shape() == std::vector<std::size_t>{1, 1});

  Tensor r = Tensor::row({1.0, 2.0, 3.0});
  CHECK(r.rows() == 1);
  CHECK(r.cols() == 3);
  CHECK(r.at(0, 1) == 2.0);

  CHECK_THROWS_AS(Tensor::zeros({2, 0}), std::invalid_argument);
  CHECK_THROWS_AS(Tensor::from_values({2, 2}, {1.0, 2.0}), std::invalid_argument);
  CHECK_THROWS_AS(r.value(), std::invalid_argument);
}

TEST_CASE("tensor copies share storage") {
  Tensor a = Tensor::row({1.0, 2.0});
  Tensor b = a;
  CHECK(a.id() == b.id());
  b.mutable_values()[0] = 9.0;
  CHECK(a.at(0, 0) == 9.0);
}

TEST_CASE("ops without an active tape produce constants") {
  Tensor x = leaf({1, 2}, {1.0, -1.0});
  Tensor y = relu(x);
  CHECK_FALSE(y.requires_grad());
  CHECK_FALSE(y.has_grad());
  CHECK(y.at(0, 0) == 1.0);
  CHECK(y.at(0, 1) == 0.0);
}

TEST_CASE("relu forward and subgradient, zero maps to zero") {
  Tensor x = leaf({1, 3}, {-1.0, 0.0, 2.0});
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(relu(x));
  }
  CHECK(loss.value() == 2.0);
  tape.backward(loss);
  CHECK(grad_of(x) == std::vector<double>{0.0, 0.0, 1.0});
}

TEST_CASE("sigmoid values and derivative") {
  Tensor x = leaf({1, 3}, {0.0, 2.0, -2.0});
  Tape tape;
  Tensor y, loss;
  {
    TapeScope scope(tape);
    y = sigmoid(x);
    loss = sum(y);
  }
  CHECK(y.at(0, 0) == 0.5);
  CHECK(y.at(0, 1) == doctest::Approx(0.8807970779778823).epsilon(1e-15));
  CHECK(y.at(0, 2) == doctest::Approx(1.0 - 0.8807970779778823).epsilon(1e-14));

  tape.backward(loss);
  auto g = grad_of(x);
  for (std::size_t i = 0; i < 3; ++i) {
    const double yi = y.at(0, i);
    CHECK(g[i] == doctest::Approx(yi * (1.0 - yi)).epsilon(1e-14));
  }
}

TEST_CASE("sigmoid is finite and monotone over a wide range") {
  CHECK(sigmoid(Tensor::scalar(1000.0)).value() == 1.0);
  CHECK(sigmoid(Tensor::scalar(-1000.0)).value() == 0.0);

  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> dist(-30.0, 30.0);
  for (int trial = 0; trial < 100; ++trial) {
    double a = dist(rng), b = dist(rng);
    if (a > b) std::swap(a, b);
    const double ya = sigmoid(Tensor::scalar(a)).value();
    const double yb = sigmoid(Tensor::scalar(b)).value();
    CHECK(ya > 0.0);
    CHECK(yb < 1.0);
    CHECK(ya <= yb);
  }
}

TEST_CASE("matmul forward against hand-computed product") {
  Tensor a = Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = Tensor::from_values({3, 2}, {7, 8, 9, 10, 11, 12});
  Tensor c = matmul(a, b);
  CHECK(c.shape() == std::vector<std::size_t>{2, 2});
  CHECK(c.at(0, 0) == 58.0);
  CHECK(c.at(0, 1) == 64.0);
  CHECK(c.at(1, 0) == 139.0);
  CHECK(c.at(1, 1) == 154.0);

  CHECK_THROWS_AS(matmul(a, a), std::invalid_argument);
}

TEST_CASE("matmul gradients are row sums and column sums under a sum loss") {
  Tensor a = leaf({2, 3}, {1, 2, 3, 4, 5, 6});
  Tensor b = leaf({3, 2}, {7, 8, 9, 10, 11, 12});
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(matmul(a, b));
  }
  tape.backward(loss);
  // d/dA[i,p] = sum_j B[p,j], d/dB[p,j] = sum_i A[i,p]
  CHECK(grad_of(a) == std::vector<double>{15, 19, 23, 15, 19, 23});
  CHECK(grad_of(b) == std::vector<double>{5, 5, 7, 7, 9, 9});
}

TEST_CASE("matmul is associative on matrix-vector chains") {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t m = 1 + rng() % 4, k = 1 + rng() % 4, n = 1 + rng() % 4;
    auto fill = [&](std::size_t r, std::size_t c) {
      std::vector<double> v(r * c);
      for (double& x : v) x = dist(rng);
      return Tensor::from_values({r, c}, std::move(v));
    };
    Tensor a = fill(m, k), b = fill(k, n), v = fill(n, 1);
    Tensor left = matmul(matmul(a, b), v);
    Tensor right = matmul(a, matmul(b, v));
    for (std::size_t i = 0; i < m; ++i) {
      CHECK(left.at(i, 0) == doctest::Approx(right.at(i, 0)).epsilon(1e-9));
    }
  }
}

TEST_CASE("add sub scale sum backward") {
  Tensor a = leaf({1, 2}, {1.0, 2.0});
  Tensor b = leaf({1, 2}, {10.0, 20.0});
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(add(scale(a, 3.0), sub(a, b)));
  }
  CHECK(loss.value() == doctest::Approx(3.0 + 6.0 + (1.0 - 10.0) + (2.0 - 20.0)).epsilon(1e-15));
  tape.backward(loss);
  CHECK(grad_of(a) == std::vector<double>{4.0, 4.0});
  CHECK(grad_of(b) == std::vector<double>{-1.0, -1.0});

  CHECK_THROWS_AS(add(a, Tensor::row({1.0})), std::invalid_argument);
}

TEST_CASE("gradient accumulates across repeated uses of one tensor") {
  Tensor x = leaf({1, 2}, {1.0, 2.0});
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(add(x, x));
  }
  tape.backward(loss);
  CHECK(grad_of(x) == std::vector<double>{2.0, 2.0});
}

TEST_CASE("backward resets leaf gradients instead of accumulating across calls") {
  Tensor x = leaf({1, 2}, {1.0, 2.0});
  Tape tape;
  Tensor l1, l2;
  {
    TapeScope scope(tape);
    l1 = sum(scale(x, 2.0));
    l2 = sum(scale(x, 3.0));
  }
  tape.backward(l1);
  CHECK(grad_of(x) == std::vector<double>{2.0, 2.0});
  tape.backward(l2);
  CHECK(grad_of(x) == std::vector<double>{3.0, 3.0});
  tape.backward(l1);
  CHECK(grad_of(x) == std::vector<double>{2.0, 2.0});
}

TEST_CASE("backward runs only the ancestors of the loss") {
  Tensor x = leaf({1, 2}, {1.0, 1.0});
  Tape tape;
  Tensor wanted, unwanted, loss;
  {
    TapeScope scope(tape);
    wanted = scale(x, 2.0);
    unwanted = scale(x, 100.0);
    loss = sum(wanted);
  }
  tape.backward(loss);
  CHECK(grad_of(x) == std::vector<double>{2.0, 2.0});
  CHECK_FALSE(unwanted.has_grad());
}

TEST_CASE("backward edge cases") {
  Tape tape;
  Tensor vec = Tensor::row({1.0, 2.0});
  CHECK_THROWS_AS(tape.backward(vec), std::invalid_argument);
  CHECK_THROWS_AS(tape.backward(Tensor()), std::invalid_argument);

  // Constant loss: no gradients anywhere, no error.
  Tensor c = Tensor::scalar(5.0);
  tape.backward(c);
  CHECK_FALSE(c.has_grad());

  // A requires-grad leaf used directly as the loss gets d(loss)/d(loss) = 1.
  Tensor p = leaf({1, 1}, {3.0});
  tape.backward(p);
  CHECK(grad_of(p) == std::vector<double>{1.0});
}

TEST_CASE("values computed on an older tape act as constants on a new one") {
  Tensor x = leaf({1, 2}, {1.0, 2.0});
  Tensor stale;
  {
    Tape old_tape;
    TapeScope scope(old_tape);
    stale = scale(x, 5.0);
  }
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(add(stale, x));
  }
  tape.backward(loss);
  // Only the direct use of x contributes; the path through `stale` is frozen.
  CHECK(grad_of(x) == std::vector<double>{1.0, 1.0});
}

TEST_CASE("abs_diff forward, signs, and zero subgradient at equality") {
  Tensor a = leaf({1, 3}, {1.0, 5.0, 2.0});
  Tensor b = leaf({1, 3}, {1.0, 2.0, 7.0});
  Tape tape;
  Tensor d, loss;
  {
    TapeScope scope(tape);
    d = abs_diff(a, b);
    loss = sum(d);
  }
  CHECK(d.at(0, 0) == 0.0);
  CHECK(d.at(0, 1) == 3.0);
  CHECK(d.at(0, 2) == 5.0);
  tape.backward(loss);
  CHECK(grad_of(a) == std::vector<double>{0.0, 1.0, -1.0});
  CHECK(grad_of(b) == std::vector<double>{0.0, -1.0, 1.0});
}

TEST_CASE("concat layouts on both axes") {
  Tensor a = Tensor::from_values({1, 2}, {1, 2});
  Tensor b = Tensor::from_values({2, 2}, {3, 4, 5, 6});
  Tensor rows = concat({a, b}, 0);
  CHECK(rows.shape() == std::vector<std::size_t>{3, 2});
  CHECK(std::vector<double>(rows.values().begin(), rows.values().end()) ==
        std::vector<double>{1, 2, 3, 4, 5, 6});

  Tensor c = Tensor::from_values({2, 1}, {7, 8});
  Tensor cols = concat({b, c}, 1);
  CHECK(cols.shape() == std::vector<std::size_t>{2, 3});
  CHECK(std::vector<double>(cols.values().begin(), cols.values().end()) ==
        std::vector<double>{3, 4, 7, 5, 6, 8});

  CHECK_THROWS_AS(concat({a, c}, 0), std::invalid_argument);
  CHECK_THROWS_AS(concat({a, b}, 2), std::invalid_argument);
  CHECK_THROWS_AS(concat(std::span<const Tensor>(), 0), std::invalid_argument);
}

TEST_CASE("concat of a single part returns the same tensor") {
  Tensor a = Tensor::row({1.0, 2.0});
  Tensor same = concat({a}, 0);
  CHECK(same.id() == a.id());
}

TEST_CASE("concat routes gradients back to each part") {
  Tensor a = leaf({1, 2}, {0.0, 0.0});
  Tensor b = leaf({1, 2}, {0.0, 0.0});
  Tensor w = Tensor::from_values({4, 1}, {1, 2, 3, 4});
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = matmul(concat({a, b}, 1), w);
  }
  tape.backward(loss);
  CHECK(grad_of(a) == std::vector<double>{1.0, 2.0});
  CHECK(grad_of(b) == std::vector<double>{3.0, 4.0});

  Tensor c = leaf({1, 2}, {0.0, 0.0});
  Tensor d = leaf({2, 2}, {0.0, 0.0, 0.0, 0.0});
  Tensor w2 = Tensor::from_values({2, 1}, {1, 1});
  Tape tape2;
  Tensor loss2;
  {
    TapeScope scope(tape2);
    loss2 = sum(matmul(concat({c, d}, 0), w2));
  }
  tape2.backward(loss2);
  CHECK(grad_of(c) == std::vector<double>{1.0, 1.0});
  CHECK(grad_of(d) == std::vector<double>{1.0, 1.0, 1.0, 1.0});
}

TEST_CASE("cosine similarity values") {
  Tensor a = Tensor::row({1.0, 0.0});
  Tensor b = Tensor::row({1.0, 1.0});
  CHECK(cosine_sim(a, b).value() == doctest::Approx(0.7071067811865475).epsilon(1e-15));
  CHECK(cosine_sim(a, a).value() == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cosine_sim(a, Tensor::row({0.0, 1.0})).value() == 0.0);
  CHECK(cosine_sim(a, Tensor::row({-2.0, 0.0})).value() == doctest::Approx(-1.0).epsilon(1e-15));

  CHECK_THROWS_AS(cosine_sim(a, Tensor::row({0.0, 0.0})), std::domain_error);
  CHECK_THROWS_AS(cosine_sim(Tensor::row({1e-13, 0.0}), b), std::domain_error);
}

TEST_CASE("cosine similarity is symmetric and bounded") {
  std::mt19937_64 rng(13);
  std::uniform_real_distribution<double> dist(-2.0, 2.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> av(5), bv(5);
    for (double& x : av) x = dist(rng);
    for (double& x : bv) x = dist(rng);
    Tensor a = Tensor::row(av), b = Tensor::row(bv);
    const double ab = cosine_sim(a, b).value();
    const double ba = cosine_sim(b, a).value();
    CHECK(ab == doctest::Approx(ba).epsilon(1e-14));
    CHECK(ab >= -1.0 - 1e-12);
    CHECK(ab <= 1.0 + 1e-12);
  }
}

TEST_CASE("cosine similarity gradients on orthogonal unit vectors") {
  Tensor a = leaf({1, 2}, {1.0, 0.0});
  Tensor b = leaf({1, 2}, {0.0, 1.0});
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = cosine_sim(a, b);
  }
  tape.backward(loss);
  CHECK(grad_of(a) == std::vector<double>{0.0, 1.0});
  CHECK(grad_of(b) == std::vector<double>{1.0, 0.0});
}

TEST_CASE("logsumexp value, shift invariance, and overflow safety") {
  CHECK(logsumexp(Tensor::row({0.0, 0.0})).value() ==
        doctest::Approx(0.6931471805599453).epsilon(1e-15));
  CHECK(logsumexp(Tensor::row({1000.0, 1000.0})).value() ==
        doctest::Approx(1000.0 + 0.6931471805599453).epsilon(1e-15));

  std::mt19937_64 rng(17);
  std::uniform_real_distribution<double> dist(-5.0, 5.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(4);
    for (double& x : v) x = dist(rng);
    const double c = dist(rng);
    std::vector<double> shifted = v;
    for (double& x : shifted) x += c;
    const double base = logsumexp(Tensor::row(v)).value();
    const double moved = logsumexp(Tensor::row(shifted)).value();
    CHECK(moved == doctest::Approx(base + c).epsilon(1e-12));
  }
}

TEST_CASE("logsumexp gradient is a softmax") {
  Tensor x = leaf({1, 3}, {1.0, 2.0, 3.0});
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = logsumexp(x);
  }
  tape.backward(loss);
  auto g = grad_of(x);
  double total = 0.0;
  for (double v : g) {
    CHECK(v > 0.0);
    total += v;
  }
  CHECK(total == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g[2] > g[1]);
  CHECK(g[1] > g[0]);
}

TEST_CASE("embed_mean averages selected rows and skips the pad id") {
  Tensor table = leaf({4, 3}, {
      0, 0, 0,     // row 0
      9, 9, 9,     // row 1 (pad)
      3, 6, 9,     // row 2
      1, 1, 1,     // row 3
  });
  std::vector<int> ids{2, 1, 3};
  Tensor mean = embed_mean(table, ids, 1);
  CHECK(mean.shape() == std::vector<std::size_t>{1, 3});
  CHECK(mean.at(0, 0) == 2.0);
  CHECK(mean.at(0, 1) == 3.5);
  CHECK(mean.at(0, 2) == 5.0);

  std::vector<int> all_pad{1, 1};
  CHECK_THROWS_AS(embed_mean(table, all_pad, 1), std::invalid_argument);
  std::vector<int> out_of_range{4};
  CHECK_THROWS_AS(embed_mean(table, out_of_range, 1), std::invalid_argument);
}

TEST_CASE("embed_mean gradient scatters the mean weight to used rows") {
  Tensor table = leaf({4, 2}, std::vector<double>(8, 0.0));
  std::vector<int> ids{0, 2, 0};
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = sum(embed_mean(table, ids, 1));
  }
  tape.backward(loss);
  auto g = grad_of(table);
  const double third = 1.0 / 3.0;
  CHECK(g[0] == doctest::Approx(2.0 * third).epsilon(1e-15));
  CHECK(g[1] == doctest::Approx(2.0 * third).epsilon(1e-15));
  CHECK(g[2] == 0.0);
  CHECK(g[3] == 0.0);
  CHECK(g[4] == doctest::Approx(third).epsilon(1e-15));
  CHECK(g[5] == doctest::Approx(third).epsilon(1e-15));
  CHECK(g[6] == 0.0);
  CHECK(g[7] == 0.0);
}

TEST_CASE("summed binary cross-entropy value and gradient") {
  Tensor probs = leaf({1, 2}, {0.5, 0.5});
  std::vector<double> labels{1.0, 0.0};
  Tape tape;
  Tensor loss;
  {
    TapeScope scope(tape);
    loss = bce_sum(probs, labels);
  }
  CHECK(loss.value() == doctest::Approx(2.0 * 0.6931471805599453).epsilon(1e-15));
  tape.backward(loss);
  auto g = grad_of(probs);
  CHECK(g[0] == doctest::Approx(-2.0).epsilon(1e-14));
  CHECK(g[1] == doctest::Approx(2.0).epsilon(1e-14));

  std::vector<double> one{1.0};
  CHECK_THROWS_AS(bce_sum(Tensor::row({0.5, 0.5}), one), std::invalid_argument);
}

TEST_CASE("binary cross-entropy floors saturated logs at -100") {
  std::vector<double> pos{1.0};
  Tensor tiny = Tensor::row({1e-60});
  CHECK(bce_sum(tiny, pos).value() == 100.0);

  std::vector<double> neg{0.0};
  Tensor near_one = Tensor::row({1.0});
  CHECK(bce_sum(near_one, neg).value() == 100.0);
  CHECK(std::isfinite(bce_sum(near_one, pos).value()));
}

TEST_CASE("adamw first step follows the bias-corrected update") {
  Tensor p = leaf({1, 1}, {1.0});
  AdamWOptions opts;
  opts.weight_decay = 0.0;
  AdamW opt(opts);
  opt.add_group({p}, 0.1);

  p.zero_grad();
  p.node()->grad[0] = 0.5;
  opt.step();

  const double g = 0.5;
  const double m = (1.0 - opts.beta1) * g;
  const double v = (1.0 - opts.beta2) * g * g;
  const double m_hat = m / (1.0 - std::pow(opts.beta1, 1.0));
  const double v_hat = v / (1.0 - std::pow(opts.beta2, 1.0));
  const double expected = 1.0 - 0.1 * (m_hat / (std::sqrt(v_hat) + opts.eps) + 0.0);
  CHECK(p.value() == doctest::Approx(expected).epsilon(1e-15));
  CHECK(opt.step_count() == 1);
  CHECK_FALSE(p.has_grad());
}

TEST_CASE("adamw decoupled weight decay acts even with zero gradient") {
  Tensor p = leaf({1, 1}, {2.0});
  AdamW opt;  // defaults: wd = 0.01
  opt.add_group({p}, 0.1);
  p.zero_grad();
  opt.step();
  const double expected = 2.0 - 0.1 * (0.0 / (0.0 + 1e-8) + 0.01 * 2.0);
  CHECK(p.value() == doctest::Approx(expected).epsilon(1e-15));
}

TEST_CASE("adamw groups use their own learning rate but share the step count") {
  Tensor a = leaf({1, 1}, {1.0});
  Tensor b = leaf({1, 1}, {1.0});
  AdamWOptions opts;
  opts.weight_decay = 0.0;
  AdamW opt(opts);
  opt.add_group({a}, 0.1);
  opt.add_group({b}, 0.01);

  a.zero_grad();
  b.zero_grad();
  a.node()->grad[0] = 1.0;
  b.node()->grad[0] = 1.0;
  opt.step();

  const double da = 1.0 - a.value();
  const double db = 1.0 - b.value();
  CHECK(da == doctest::Approx(10.0 * db).epsilon(1e-10));
  CHECK(opt.step_count() == 1);
}

TEST_CASE("adamw requires a gradient on every parameter") {
  Tensor a = leaf({1, 1}, {1.0});
  Tensor b = leaf({1, 1}, {1.0});
  AdamW opt;
  opt.add_group({a, b}, 0.1);
  a.zero_grad();
  CHECK_THROWS_AS(opt.step(), std::logic_error);
}

TEST_CASE("adamw rejects bad hyperparameters") {
  AdamWOptions opts;
  opts.beta1 = 1.0;
  CHECK_THROWS_AS(AdamW{opts}, std::invalid_argument);
  AdamW opt;
  CHECK_THROWS_AS(opt.add_group({Tensor::scalar(1.0)}, 0.0), std::invalid_argument);
}

TEST_CASE("adamw state round-trips bit-exactly") {
  auto make = [](Tensor& p1, Tensor& p2) {
    AdamWOptions opts;
    AdamW opt(opts);
    opt.add_group({p1}, 0.1);
    opt.add_group({p2}, 0.01);
    return opt;
  };
  Tensor a1 = leaf({1, 2}, {1.0, 2.0}), a2 = leaf({1, 1}, {3.0});
  AdamW source = make(a1, a2);
  for (int i = 0; i < 3; ++i) {
    a1.zero_grad();
    a2.zero_grad();
    a1.node()->grad[0] = 0.3 + i;
    a1.node()->grad[1] = -0.2;
    a2.node()->grad[0] = 0.1 * (i + 1);
    source.step();
  }
  std::stringstream saved;
  source.save_state(saved);

  Tensor b1 = leaf({1, 2}, {0.0, 0.0}), b2 = leaf({1, 1}, {0.0});
  AdamW restored = make(b1, b2);
  restored.load_state(saved);
  CHECK(restored.step_count() == 3);

  std::stringstream resaved;
  restored.save_state(resaved);
  CHECK(saved.str() == resaved.str());

  // Structure mismatch is rejected.
  Tensor c = leaf({1, 3}, {0.0, 0.0, 0.0});
  AdamW other;
  other.add_group({c}, 0.1);
  std::stringstream replay(saved.str());
  CHECK_THROWS_AS(other.load_state(replay), std::runtime_error);
}

TEST_CASE("checkpoint round-trip preserves names, shapes, and values") {
  testsupport::TempDir dir;
  const std::string path = dir.file("model.ckpt");

  std::vector<std::pair<std::string, Tensor>> params{
      {"encoder.embed", Tensor::from_values({2, 3}, {1, 2, 3, 4, 5, 6})},
      {"classifier.b", Tensor::scalar(-0.25)},
  };
  save_checkpoint(path, params);

  auto entries = read_checkpoint(path);
  REQUIRE(entries.size() == 2);
  CHECK(entries[0].name == "encoder.embed");
  CHECK(entries[0].shape == std::vector<std::size_t>{2, 3});
  CHECK(entries[0].values == std::vector<double>{1, 2, 3, 4, 5, 6});
  CHECK(entries[1].name == "classifier.b");
  CHECK(entries[1].values == std::vector<double>{-0.25});

  std::vector<std::pair<std::string, Tensor>> fresh{
      {"encoder.embed", Tensor::zeros({2, 3})},
      {"classifier.b", Tensor::zeros({1, 1})},
  };
  load_checkpoint_into(path, fresh);
  CHECK(fresh[0].second.at(1, 2) == 6.0);
  CHECK(fresh[1].second.value() == -0.25);
}

TEST_CASE("checkpoint load rejects mismatches") {
  testsupport::TempDir dir;
  const std::string path = dir.file("model.ckpt");
  save_checkpoint(path, {{"a", Tensor::from_values({2, 2}, {1, 2, 3, 4})}});

  std::vector<std::pair<std::string, Tensor>> wrong_shape{{"a", Tensor::zeros({2, 3})}};
  CHECK_THROWS_AS(load_checkpoint_into(path, wrong_shape), DataError);

  std::vector<std::pair<std::string, Tensor>> wrong_name{{"b", Tensor::zeros({2, 2})}};
  CHECK_THROWS_AS(load_checkpoint_into(path, wrong_name), DataError);

  std::vector<std::pair<std::string, Tensor>> extra{
      {"a", Tensor::zeros({2, 2})},
      {"b", Tensor::zeros({1, 1})},
  };
  CHECK_THROWS_AS(load_checkpoint_into(path, extra), DataError);
}

TEST_CASE("checkpoint reader rejects foreign and truncated files") {
  testsupport::TempDir dir;

  const std::string garbage = dir.file("garbage.bin");
  {
    std::ofstream out(garbage, std::ios::binary);
    out << "not a checkpoint at all";
  }
  CHECK_THROWS_AS(read_checkpoint(garbage), DataError);

  const std::string good = dir.file("good.ckpt");
  save_checkpoint(good, {{"a", Tensor::from_values({2, 2}, {1, 2, 3, 4})}});
  std::ifstream in(good, std::ios::binary);
  std::string bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  const std::string cut = dir.file("cut.ckpt");
  {
    std::ofstream out(cut, std::ios::binary);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size() - 9));
  }
  CHECK_THROWS_AS(read_checkpoint(cut), DataError);

  CHECK_THROWS_AS(read_checkpoint(dir.file("missing.ckpt")), DataError);
}
