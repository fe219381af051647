#include <doctest.h>

#include <cmath>
#include <vector>

#include "vprd/data_model.hpp"
#include "vprd/matrix.hpp"
#include "vprd/mlp.hpp"
#include "vprd/prng.hpp"
#include "vprd/reconstruct.hpp"

using namespace vprd;

namespace {

MlpModel random_model(std::size_t d_in, std::size_t hidden, std::size_t d_out,
                      std::uint64_t seed) {
  MlpModel m = init_weights(d_in, hidden, d_out, seed);
  Rng rng(seed + 1);
  for (double& b : m.b1) b = rng.next_uniform(-0.3, 0.3);
  for (double& b : m.b2) b = rng.next_uniform(-0.3, 0.3);
  return m;
}

}  // namespace

TEST_CASE("predictor agrees with the training-path forward pass") {
  const std::size_t d_in = 7, hidden = 11, d_out = 9;
  const MlpModel model = random_model(d_in, hidden, d_out, 51);

  Standardization st;
  Rng rng(4);
  for (std::size_t j = 0; j < d_in; ++j) {
    st.mean.push_back(rng.next_uniform(-5.0, 5.0));
    st.stddev.push_back(rng.next_uniform(0.5, 3.0));
  }

  Predictor pred(model, st, 1.13);
  CHECK(pred.d_in() == d_in);
  CHECK(pred.d_out() == d_out);
  CHECK(pred.time_bin_fs() == 1.13);

  for (int trial = 0; trial < 20; ++trial) {
    MachineParameters params;
    for (std::size_t j = 0; j < d_in; ++j)
      params.values.push_back(rng.next_uniform(-10.0, 10.0));

    // reference: standardize, then the batched matrix path
    Matrix x(1, d_in);
    const MachineParameters std_params = standardize_apply(params, st);
    for (std::size_t j = 0; j < d_in; ++j) x(0, j) = std_params.values[j];
    const Matrix want = forward(model, x);

    const PowerProfile got = pred.predict(params);
    REQUIRE(got.power.size() == d_out);
    CHECK(got.time_bin_fs == 1.13);
    for (std::size_t k = 0; k < d_out; ++k) {
      // same math, different accumulation order: relative, not bitwise
      const double scale = std::max(1.0, std::abs(want(0, k)));
      CHECK(std::abs(got.power[k] - want(0, k)) / scale <= 1e-12);
    }
  }
}

TEST_CASE("predictor without standardization uses raw inputs") {
  const MlpModel model = random_model(3, 5, 4, 77);
  Predictor pred(model, std::nullopt, 2.0);

  Matrix x(1, 3);
  x(0, 0) = 0.4;
  x(0, 1) = -1.2;
  x(0, 2) = 2.5;
  const Matrix want = forward(model, x);

  std::vector<double> out(4);
  pred.predict(std::vector<double>{0.4, -1.2, 2.5}, out);
  for (std::size_t k = 0; k < 4; ++k)
    CHECK(std::abs(out[k] - want(0, k)) <= 1e-12);
}

TEST_CASE("predictor validates spans") {
  const MlpModel model = random_model(3, 5, 4, 78);
  Predictor pred(model, std::nullopt, 1.0);
  std::vector<double> in(3, 0.0), out(4, 0.0);
  CHECK_NOTHROW(pred.predict(in, out));
  std::vector<double> short_in(2, 0.0);
  CHECK_THROWS_AS(pred.predict(short_in, out), std::invalid_argument);
  std::vector<double> short_out(3, 0.0);
  CHECK_THROWS_AS(pred.predict(in, short_out), std::invalid_argument);

  Standardization bad;
  bad.mean = {0.0, 0.0};
  bad.stddev = {1.0, 1.0};
  CHECK_THROWS_AS(Predictor(model, bad, 1.0), std::invalid_argument);
}

TEST_CASE("photon power is the bin-wise lasing-on minus prediction") {
  PowerProfile on;
  on.power = {5.0, 4.0};
  on.time_bin_fs = 1.13;
  PowerProfile off;
  off.power = {3.0, 1.0};
  off.time_bin_fs = 1.13;

  const PhotonPower p = photon_power(on, off, "ckpt@abc", 17);
  CHECK(p.power == std::vector<double>{2.0, 3.0});
  CHECK(p.time_bin_fs == 1.13);
  CHECK(p.checkpoint_id == "ckpt@abc");
  CHECK(p.shot_index == 17);

  // antisymmetry: swapping the roles flips every bin's sign exactly
  const PhotonPower q = photon_power(off, on, "ckpt@abc", 17);
  for (std::size_t i = 0; i < p.power.size(); ++i)
    CHECK(q.power[i] == -p.power[i]);

  PowerProfile longer;
  longer.power = {1.0, 2.0, 3.0};
  longer.time_bin_fs = 1.13;
  CHECK_THROWS_AS(photon_power(on, longer, "x", 0), std::invalid_argument);

  PowerProfile other_bin = off;
  other_bin.time_bin_fs = 2.0;
  CHECK_THROWS_AS(photon_power(on, other_bin, "x", 0), std::invalid_argument);

  PowerProfile empty;
  empty.time_bin_fs = 1.13;
  CHECK_THROWS_AS(photon_power(empty, empty, "x", 0), std::invalid_argument);
}

TEST_CASE("bench floors its iteration counts and reports a positive mean") {
  const MlpModel model = random_model(4, 6, 5, 80);
  Predictor pred(model, std::nullopt, 1.0);
  const LatencyReport rep = bench_inference(pred, 10, 7);
  CHECK(rep.n_runs == 1000);
  CHECK(rep.warmup_runs == 100);
  CHECK(rep.mean_us > 0.0);
  CHECK(rep.std_us >= 0.0);
  CHECK(rep.threads == 1);
  CHECK_FALSE(rep.cpu_model.empty());

  const LatencyReport rep2 = bench_inference(pred, 2000, 150);
  CHECK(rep2.n_runs == 2000);
  CHECK(rep2.warmup_runs == 150);
}
