#include <doctest.h>

#include <cmath>
#include <cstdint>
#include <vector>

#include "test_support.hpp"
#include "vprd/matrix.hpp"
#include "vprd/mlp.hpp"
#include "vprd/prng.hpp"

using namespace vprd;
using vprd_test::naive_matmul;
using vprd_test::naive_transpose;
using vprd_test::random_matrix;

namespace {

Matrix from_rows(std::vector<std::vector<double>> rows) {
  Matrix m(rows.size(), rows[0].size());
  for (std::size_t r = 0; r < rows.size(); ++r)
    for (std::size_t c = 0; c < rows[r].size(); ++c) m(r, c) = rows[r][c];
  return m;
}

}  // namespace

TEST_CASE("enum names round-trip and aliases parse") {
  CHECK(to_string(Activation::Relu) == "relu");
  CHECK(activation_from_string("relu") == Activation::Relu);
  CHECK_THROWS_AS(activation_from_string("tanh"), std::invalid_argument);

  CHECK(loss_kind_from_string("mse") == LossKind::Mse);
  CHECK(loss_kind_from_string("anti_mean") == LossKind::AntiMean);
  CHECK(loss_kind_from_string("anti-mean") == LossKind::AntiMean);
  CHECK(to_string(LossKind::AntiMean) == "anti_mean");
  CHECK_THROWS_AS(loss_kind_from_string("mae"), std::invalid_argument);

  CHECK(reduction_from_string("sum") == Reduction::Sum);
  CHECK(reduction_from_string("mean") == Reduction::MeanPerElement);
  CHECK(reduction_from_string("mean_per_element") == Reduction::MeanPerElement);
  CHECK_THROWS_AS(reduction_from_string("median"), std::invalid_argument);
}

TEST_CASE("weight init is fan-in bounded, zero-biased and seed-stable") {
  const MlpModel m = init_weights(22, 294, 567, 42);
  CHECK(m.w1.rows == 294);
  CHECK(m.w1.cols == 22);
  CHECK(m.w2.rows == 567);
  CHECK(m.w2.cols == 294);
  for (double b : m.b1) CHECK(b == 0.0);
  for (double b : m.b2) CHECK(b == 0.0);

  const double l1 = std::sqrt(6.0 / 22.0);
  const double l2 = std::sqrt(6.0 / 294.0);
  double var1 = 0.0, var2 = 0.0;
  for (double w : m.w1.data) {
    CHECK(std::abs(w) <= l1);
    var1 += w * w;
  }
  for (double w : m.w2.data) {
    CHECK(std::abs(w) <= l2);
    var2 += w * w;
  }
  var1 /= static_cast<double>(m.w1.data.size());
  var2 /= static_cast<double>(m.w2.data.size());
  // U(-l, l) has variance l^2/3 = 2/fan_in
  CHECK(var1 == doctest::Approx(2.0 / 22.0).epsilon(0.2));
  CHECK(var2 == doctest::Approx(2.0 / 294.0).epsilon(0.2));

  const MlpModel same = init_weights(22, 294, 567, 42);
  CHECK(same.w1.data == m.w1.data);
  CHECK(same.w2.data == m.w2.data);
  const MlpModel other = init_weights(22, 294, 567, 43);
  CHECK(other.w1.data != m.w1.data);

  CHECK_THROWS_AS(init_weights(0, 4, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_weights(4, 0, 4, 1), std::invalid_argument);
  CHECK_THROWS_AS(init_weights(4, 4, 0, 1), std::invalid_argument);
}

TEST_CASE("forward matches a hand computation through the rectifier") {
  MlpModel m;
  m.d_in = 2;
  m.hidden = 2;
  m.d_out = 1;
  m.w1 = from_rows({{1.0, 0.0}, {0.0, 1.0}});
  m.b1 = {0.0, 0.0};
  m.w2 = from_rows({{1.0, 1.0}});
  m.b2 = {0.5};

  const Matrix x = from_rows({{2.0, -3.0}, {-1.0, -1.0}});
  const Matrix out = forward(m, x);
  REQUIRE(out.rows == 2);
  REQUIRE(out.cols == 1);
  CHECK(out(0, 0) == 2.5);  // relu([2,-3]) = [2,0] -> 2 + 0.5
  CHECK(out(1, 0) == 0.5);  // both units clipped
}

TEST_CASE("eval forward reproduces the naive pipeline exactly") {
  std::mt19937 gen(77);
  const MlpModel base = init_weights(5, 7, 4, 99);
  MlpModel m = base;
  Rng brng(5150);
  for (double& b : m.b1) b = brng.next_uniform(-0.5, 0.5);
  for (double& b : m.b2) b = brng.next_uniform(-0.5, 0.5);
  const Matrix x = random_matrix(3, 5, gen);

  ForwardCache cache;
  const Matrix out = forward(m, x, {0.45, false}, nullptr, &cache);

  Matrix z1 = naive_matmul(x, naive_transpose(m.w1));
  for (std::size_t r = 0; r < z1.rows; ++r)
    for (std::size_t c = 0; c < z1.cols; ++c) z1(r, c) += m.b1[c];
  Matrix a1 = z1;
  for (double& v : a1.data) v = v > 0.0 ? v : 0.0;
  Matrix want = naive_matmul(a1, naive_transpose(m.w2));
  for (std::size_t r = 0; r < want.rows; ++r)
    for (std::size_t c = 0; c < want.cols; ++c) want(r, c) += m.b2[c];

  CHECK(out.data == want.data);
  CHECK(cache.z1.data == z1.data);
  CHECK(cache.a1d.data == a1.data);
  CHECK(cache.mask.empty());
  CHECK_FALSE(cache.train_mode);
}

TEST_CASE("train-mode dropout zeroes about p of the units and rescales the rest") {
  const std::size_t hidden = 200, n = 50;
  MlpModel m;
  m.d_in = 1;
  m.hidden = hidden;
  m.d_out = 1;
  m.w1 = Matrix(hidden, 1);  // zero weights, bias 1 -> every unit pre-act is 1
  m.b1.assign(hidden, 1.0);
  m.w2 = Matrix(1, hidden);
  m.b2 = {0.0};

  Matrix x(n, 1);
  Rng rng(31337);
  ForwardCache cache;
  forward(m, x, {0.45, true}, &rng, &cache);

  REQUIRE(cache.mask.size() == n * hidden);
  std::size_t dropped = 0;
  for (std::size_t i = 0; i < cache.mask.size(); ++i) {
    if (cache.mask[i]) {
      CHECK(cache.a1d.data[i] == 1.0 / 0.55);  // inverted scaling of a unit value
    } else {
      CHECK(cache.a1d.data[i] == 0.0);
      ++dropped;
    }
  }
  const double frac = static_cast<double>(dropped) / static_cast<double>(n * hidden);
  CHECK(frac == doctest::Approx(0.45).epsilon(0.05));
  CHECK(cache.train_mode);

  // p = 0 in train mode is a plain pass, no rng required
  ForwardCache plain;
  const Matrix out = forward(m, x, {0.0, true}, nullptr, &plain);
  CHECK_FALSE(plain.train_mode);
  for (double v : plain.a1d.data) CHECK(v == 1.0);
  for (std::size_t r = 0; r < out.rows; ++r) CHECK(out(r, 0) == 0.0);  // w2 zero
}

TEST_CASE("forward rejects bad shapes and configs") {
  const MlpModel m = init_weights(3, 4, 2, 1);
  const Matrix wide(2, 5);
  CHECK_THROWS_AS(forward(m, wide), std::invalid_argument);
  const Matrix ok(2, 3);
  CHECK_THROWS_AS(forward(m, ok, {1.0, true}, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(forward(m, ok, {-0.1, false}, nullptr), std::invalid_argument);
  CHECK_THROWS_AS(forward(m, ok, {0.45, true}, nullptr), std::invalid_argument);
}

TEST_CASE("penalized loss matches hand-computed values") {
  struct Case {
    std::vector<std::vector<double>> pred, label;
    std::vector<double> y_hat;
    double alpha;
    Reduction reduction;
    double want;
  };
  const Case cases[] = {
      {{{2.0}}, {{0.0}}, {1.0}, 0.5, Reduction::Sum, 3.5},
      {{{1.0, 2.0, 3.0}}, {{1.0, 2.0, 3.0}}, {2.0, 2.0, 2.0}, 0.05,
       Reduction::Sum, -0.1},
      {{{3.0, -1.0}}, {{1.0, 1.0}}, {1.0, 0.0}, 0.1, Reduction::Sum, 7.5},
      {{{3.0, -1.0}}, {{1.0, 1.0}}, {1.0, 0.0}, 0.1, Reduction::MeanPerElement,
       3.75},
      {{{2.0, 0.0}}, {{1.0, 1.0}}, {3.0, 3.0}, 0.2, Reduction::Sum, 0.0},
      {{{-1.0, -2.0}}, {{-1.0, 0.0}}, {0.0, -1.0}, 0.05, Reduction::Sum, 3.9},
      {{{10.0}}, {{4.0}}, {10.0}, 1.0, Reduction::Sum, 36.0},
      {{{1.0, 2.0}}, {{0.0, 1.0}}, {0.5, 1.5}, 0.05, Reduction::Sum, 1.975},
      {{{1.0, 2.0}}, {{0.0, 1.0}}, {0.5, 1.5}, 0.05, Reduction::MeanPerElement,
       0.9875},
      {{{1.0, 0.0}, {0.0, 1.0}}, {{1.0, 1.0}, {1.0, 1.0}}, {0.0, 0.0}, 0.05,
       Reduction::Sum, 1.9},
      {{{1.0, 0.0}, {0.0, 1.0}}, {{1.0, 1.0}, {1.0, 1.0}}, {0.0, 0.0}, 0.05,
       Reduction::MeanPerElement, 0.475},
      {{{1.0, 1.0, 1.0, 1.0}}, {{0.0, 0.0, 0.0, 0.0}}, {1.0, 1.0, 1.0, 1.0},
       0.25, Reduction::Sum, 4.0},
      {{{2.0, -2.0}}, {{-2.0, 2.0}}, {1.0, -1.0}, 0.5, Reduction::Sum, 31.0},
      {{{0.5}}, {{-0.5}}, {1.5}, 0.1, Reduction::Sum, 0.9},
  };

  for (const Case& c : cases) {
    LossConfig cfg;
    cfg.kind = LossKind::AntiMean;
    cfg.alpha = c.alpha;
    cfg.y_hat = c.y_hat;
    cfg.reduction = c.reduction;
    const double got = loss_anti_mean(from_rows(c.pred), from_rows(c.label), cfg);
    CHECK(std::abs(got - c.want) <= 1e-12);
    CHECK(loss_value(from_rows(c.pred), from_rows(c.label), cfg) == got);
  }
}

TEST_CASE("alpha zero bypasses the penalty bit for bit") {
  std::mt19937 gen(2024);
  const Matrix pred = random_matrix(6, 9, gen);
  const Matrix label = random_matrix(6, 9, gen);

  for (Reduction red : {Reduction::Sum, Reduction::MeanPerElement}) {
    LossConfig anti;
    anti.kind = LossKind::AntiMean;
    anti.alpha = 0.0;
    anti.reduction = red;  // y_hat deliberately left empty

    CHECK(loss_anti_mean(pred, label, anti) == loss_mse(pred, label, red));
    CHECK(loss_value(pred, label, anti) == loss_mse(pred, label, red));

    LossConfig mse;
    mse.kind = LossKind::Mse;
    mse.reduction = red;
    const Matrix ga = loss_grad(pred, label, anti);
    const Matrix gm = loss_grad(pred, label, mse);
    CHECK(ga.data == gm.data);
  }
}

TEST_CASE("loss rejects inconsistent inputs") {
  const Matrix a(2, 3), b(3, 2);
  CHECK_THROWS_AS(loss_mse(a, b, Reduction::Sum), std::invalid_argument);
  CHECK_THROWS_AS(loss_grad(a, b, LossConfig{}), std::invalid_argument);

  LossConfig cfg;
  cfg.kind = LossKind::AntiMean;
  cfg.alpha = 0.1;  // penalty active but y_hat missing
  const Matrix p(2, 3), y(2, 3);
  CHECK_THROWS_AS(loss_anti_mean(p, y, cfg), std::invalid_argument);
  cfg.y_hat = {1.0, 2.0};  // wrong width
  CHECK_THROWS_AS(loss_anti_mean(p, y, cfg), std::invalid_argument);
  CHECK_THROWS_AS(loss_grad(p, y, cfg), std::invalid_argument);
}

namespace {

// Central-difference check of every parameter of a small net. In train mode
// the dropout mask is pinned by reseeding the same rng for every evaluation.
void check_gradients(std::uint64_t seed, double alpha, Reduction reduction,
                     bool train_mode) {
  std::mt19937 gen(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 5);
  const std::size_t d_in = dim(gen), hidden = dim(gen) + 1, d_out = dim(gen);
  const std::size_t n = 1 + seed % 4;
  const double p = train_mode ? 0.45 : 0.0;

  MlpModel model;
  Matrix x(1, 1);
  // keep pre-activations away from the rectifier kink so the finite
  // difference cannot cross it
  for (std::uint64_t attempt = 0;; ++attempt) {
    model = init_weights(d_in, hidden, d_out, seed * 1000 + attempt);
    Rng brng(seed * 77 + attempt);
    for (double& b : model.b1) b = brng.next_uniform(-0.5, 0.5);
    for (double& b : model.b2) b = brng.next_uniform(-0.5, 0.5);
    x = Matrix(n, d_in);
    for (double& v : x.data) v = brng.next_uniform(-2.0, 2.0);

    ForwardCache probe;
    forward(model, x, {0.0, false}, nullptr, &probe);
    bool near_kink = false;
    for (double z : probe.z1.data)
      if (std::abs(z) <= 1e-3) near_kink = true;
    if (!near_kink) break;
    REQUIRE(attempt < 50);
  }

  Matrix label(n, d_out);
  Rng lrng(seed + 31);
  for (double& v : label.data) v = lrng.next_uniform(-1.0, 1.0);

  LossConfig cfg;
  cfg.kind = alpha == 0.0 ? LossKind::Mse : LossKind::AntiMean;
  cfg.alpha = alpha;
  cfg.reduction = reduction;
  if (alpha != 0.0) {
    cfg.y_hat.resize(d_out);
    for (double& v : cfg.y_hat) v = lrng.next_uniform(-1.0, 1.0);
  }

  const std::uint64_t mask_seed = seed ^ 0xD0D0ULL;
  const DropoutConfig dropout{p, train_mode};
  auto eval_loss = [&](const MlpModel& m) {
    Rng rng(mask_seed);
    const Matrix pred = forward(m, x, dropout, train_mode ? &rng : nullptr);
    return loss_value(pred, label, cfg);
  };

  ForwardCache cache;
  Rng rng(mask_seed);
  const Matrix pred = forward(model, x, dropout, train_mode ? &rng : nullptr, &cache);
  const Gradients grads = backward(model, cache, loss_grad(pred, label, cfg));

  const double h = 1e-5;
  auto check_param = [&](double& theta, double analytic) {
    const double saved = theta;
    theta = saved + h;
    const double up = eval_loss(model);
    theta = saved - h;
    const double down = eval_loss(model);
    theta = saved;
    const double fd = (up - down) / (2.0 * h);
    const double rel = std::abs(analytic - fd) / std::max(1.0, std::abs(fd));
    CHECK(rel < 1e-5);
  };

  for (std::size_t i = 0; i < model.w1.data.size(); ++i)
    check_param(model.w1.data[i], grads.w1.data[i]);
  for (std::size_t i = 0; i < model.b1.size(); ++i)
    check_param(model.b1[i], grads.b1[i]);
  for (std::size_t i = 0; i < model.w2.data.size(); ++i)
    check_param(model.w2.data[i], grads.w2.data[i]);
  for (std::size_t i = 0; i < model.b2.size(); ++i)
    check_param(model.b2[i], grads.b2[i]);
}

}  // namespace

TEST_CASE("analytic gradients match central finite differences") {
  const double alphas[] = {0.0, 0.01, 0.05};
  for (std::uint64_t trial = 0; trial < 9; ++trial) {
    const Reduction red =
        trial % 2 == 0 ? Reduction::MeanPerElement : Reduction::Sum;
    check_gradients(trial + 1, alphas[trial % 3], red, false);
  }
  for (std::uint64_t trial = 0; trial < 6; ++trial)
    check_gradients(trial + 100, alphas[trial % 3], Reduction::MeanPerElement,
                    true);
}

TEST_CASE("backward validates its cache") {
  const MlpModel m = init_weights(3, 4, 2, 5);
  const MlpModel m2 = init_weights(3, 4, 2, 6);
  const Matrix x(2, 3);
  ForwardCache cache;
  CHECK_THROWS_AS(backward(m, cache, Matrix(2, 2)), std::invalid_argument);
  forward(m, x, {}, nullptr, &cache);
  CHECK_THROWS_AS(backward(m2, cache, Matrix(2, 2)), std::invalid_argument);
  CHECK_THROWS_AS(backward(m, cache, Matrix(2, 3)), std::invalid_argument);
  CHECK_THROWS_AS(backward(m, cache, Matrix(1, 2)), std::invalid_argument);
  CHECK_NOTHROW(backward(m, cache, Matrix(2, 2)));
}

TEST_CASE("adam matches a scalar reference and its frozen first step") {
  MlpModel m;
  m.d_in = 1;
  m.hidden = 1;
  m.d_out = 1;
  m.w1 = from_rows({{0.5}});
  m.b1 = {0.1};
  m.w2 = from_rows({{-0.3}});
  m.b2 = {0.2};
  AdamState state(m, 0.005);

  Gradients g;
  g.w1 = from_rows({{0.2}});
  g.b1 = {-0.4};
  g.w2 = from_rows({{1.0}});
  g.b2 = {3.0};

  // scalar reference of the same update rule
  struct Ref {
    double m = 0.0, v = 0.0;
    double step(double& theta, double grad, std::uint64_t t) {
      m = 0.9 * m + (1.0 - 0.9) * grad;
      v = 0.999 * v + (1.0 - 0.999) * grad * grad;
      const double m_hat = m / (1.0 - std::pow(0.9, static_cast<double>(t)));
      const double v_hat = v / (1.0 - std::pow(0.999, static_cast<double>(t)));
      theta -= 0.005 * m_hat / (std::sqrt(v_hat) + 1e-8);
      return theta;
    }
  };
  Ref rw1, rb1, rw2, rb2;
  double w1 = 0.5, b1 = 0.1, w2 = -0.3, b2 = 0.2;

  for (std::uint64_t t = 1; t <= 3; ++t) {
    adam_step(m, g, state);
    CHECK(m.w1(0, 0) == rw1.step(w1, 0.2, t));
    CHECK(m.b1[0] == rb1.step(b1, -0.4, t));
    CHECK(m.w2(0, 0) == rw2.step(w2, 1.0, t));
    CHECK(m.b2[0] == rb2.step(b2, 3.0, t));
    CHECK(state.t == t);
  }

  // first step with unit gradient moves every parameter by -lr/(1 + eps)
  MlpModel u = init_weights(2, 3, 2, 7);
  const MlpModel before = u;
  AdamState us(u, 0.005);
  Gradients ug;
  ug.w1 = Matrix(3, 2);
  ug.b1.assign(3, 1.0);
  ug.w2 = Matrix(2, 3);
  ug.b2.assign(2, 1.0);
  for (double& v : ug.w1.data) v = 1.0;
  for (double& v : ug.w2.data) v = 1.0;
  adam_step(u, ug, us);
  const double want = 0.005 / (1.0 + 1e-8);
  for (std::size_t i = 0; i < u.w1.data.size(); ++i)
    CHECK(std::abs((before.w1.data[i] - u.w1.data[i]) - want) <= 1e-12);
  for (std::size_t i = 0; i < u.b2.size(); ++i)
    CHECK(std::abs((before.b2[i] - u.b2[i]) - want) <= 1e-12);

  Gradients bad;
  bad.w1 = Matrix(2, 2);
  bad.b1.assign(3, 0.0);
  bad.w2 = Matrix(2, 3);
  bad.b2.assign(2, 0.0);
  CHECK_THROWS_AS(adam_step(u, bad, us), std::invalid_argument);
}

TEST_CASE("plateau scheduler reduces after patience is exceeded") {
  PlateauScheduler s;
  s.factor = 0.5;
  s.patience = 2;
  double lr = 1.0;

  CHECK_FALSE(s.step(5.0, lr));  // first value always improves
  CHECK_FALSE(s.step(5.0, lr));  // wait 1 (ties are not improvements)
  CHECK_FALSE(s.step(5.0, lr));  // wait 2 == patience, still tolerated
  CHECK(s.step(5.0, lr));        // wait 3 > patience -> reduce
  CHECK(lr == 0.5);
  CHECK_FALSE(s.step(5.0, lr));
  CHECK_FALSE(s.step(5.0, lr));
  CHECK(s.step(5.0, lr));
  CHECK(lr == 0.25);

  CHECK_FALSE(s.step(4.0, lr));  // improvement resets the counter
  CHECK_FALSE(s.step(4.5, lr));
  CHECK_FALSE(s.step(4.5, lr));
  CHECK(s.step(4.5, lr));
  CHECK(lr == 0.125);
}

TEST_CASE("plateau scheduler frozen product and min_lr clamp") {
  PlateauScheduler s;
  s.factor = 0.05;
  s.patience = 238;
  double lr = 0.005;
  std::size_t calls = 0;
  while (!s.step(1.0, lr)) {
    ++calls;
    REQUIRE(calls < 1000);
  }
  ++calls;
  CHECK(calls == 240);  // one improvement plus patience + 1 flat steps
  CHECK(lr == 0.005 * 0.05);

  PlateauScheduler c;
  c.factor = 0.05;
  c.patience = 0;
  c.min_lr = 0.001;
  double clr = 0.005;
  CHECK_FALSE(c.step(1.0, clr));
  CHECK(c.step(1.0, clr));  // max(0.00025, 0.001) = 0.001
  CHECK(clr == 0.001);
  CHECK_FALSE(c.step(1.0, clr));  // already at the floor, nothing to reduce
  CHECK(clr == 0.001);

  double bad = 0.1;
  CHECK_THROWS_AS(s.step(std::nan(""), bad), std::invalid_argument);
}

TEST_CASE("early stopper keeps the best model, not the last") {
  auto tagged = [](double tag) {
    MlpModel m = init_weights(1, 1, 1, 1);
    m.b2 = {tag};
    return m;
  };

  EarlyStopper s;
  s.patience = 3;
  CHECK_FALSE(s.step(5.0, tagged(1.0), 1));
  CHECK_FALSE(s.step(4.0, tagged(2.0), 2));  // best
  CHECK_FALSE(s.step(4.5, tagged(3.0), 3));  // wait 1
  CHECK_FALSE(s.step(4.0, tagged(4.0), 4));  // tie, wait 2
  CHECK(s.step(4.4, tagged(5.0), 5));        // wait 3 == patience -> stop
  CHECK(s.best == 4.0);
  CHECK(s.best_step == 2);
  CHECK(s.best_snapshot.b2[0] == 2.0);

  EarlyStopper flat;
  flat.patience = 5;
  std::size_t calls = 0;
  while (!flat.step(1.0, tagged(0.0), ++calls)) REQUIRE(calls < 100);
  CHECK(calls == 6);  // first call snapshots, then patience flat steps

  EarlyStopper nan_guard;
  CHECK_THROWS_AS(nan_guard.step(std::nan(""), tagged(0.0), 1),
                  std::invalid_argument);
}
