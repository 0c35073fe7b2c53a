#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "bubbleseg/loss.hpp"
#include "support.hpp"

using namespace bubbleseg;
using namespace bubbleseg::mtnet;

namespace {

using LossFn = LossResult<double> (*)(std::span<const std::uint8_t>, std::span<const double>, const LossConfig&);

double rel_err(double a, double b) { return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-8}); }

// Worst relative error between the analytic gradient and a central difference.
double fd_worst(LossFn f, const std::vector<std::uint8_t>& y, std::vector<double> p, const LossConfig& cfg) {
  const auto analytic = f(y, p, cfg).grad;
  double worst = 0.0;
  constexpr double h = 1e-3;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double keep = p[i];
    p[i] = keep + h;
    const double up = f(y, p, cfg).loss;
    p[i] = keep - h;
    const double down = f(y, p, cfg).loss;
    p[i] = keep;
    worst = std::max(worst, rel_err(analytic[i], (up - down) / (2 * h)));
  }
  return worst;
}

}  // namespace

TEST_CASE("dice hand values") {
  const LossConfig cfg;
  const std::vector<std::uint8_t> ones(9, 1), zeros(9, 0);
  CHECK(dice_loss<double>(ones, std::vector<double>(9, 1.0), cfg).loss == doctest::Approx(0.0));
  CHECK(dice_loss<double>(zeros, std::vector<double>(9, 0.0), cfg).loss == doctest::Approx(0.0));
  const std::vector<std::uint8_t> y{1, 0};
  const std::vector<double> p{0.5, 0.5};
  CHECK(dice_loss<double>(y, p, cfg).loss == doctest::Approx(1.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("wbce hand values") {
  const LossConfig cfg;
  const std::vector<std::uint8_t> one{1}, zero{0};
  CHECK(std::abs(wbce_loss<double>(one, std::vector<double>{0.9}, cfg).loss - (-0.9 * std::log(0.9))) < 1e-12);
  CHECK(std::abs(wbce_loss<double>(one, std::vector<double>{0.9}, cfg).loss - 0.09482) < 1e-5);
  CHECK(std::abs(wbce_loss<double>(zero, std::vector<double>{0.1}, cfg).loss - 0.01054) < 1e-5);
  CHECK(wbce_loss<double>(one, std::vector<double>{1.0 - 1e-12}, cfg).loss < 1e-5);
  CHECK(wbce_loss<double>(zero, std::vector<double>{1e-12}, cfg).loss < 1e-5);
}

TEST_CASE("wbce clips probabilities and zeroes the clipped gradient") {
  const LossConfig cfg;
  const std::vector<std::uint8_t> y{1, 0};
  const auto r = wbce_loss<double>(y, std::vector<double>{0.0, 1.0}, cfg);
  CHECK(std::isfinite(r.loss));
  CHECK(r.loss == doctest::Approx(-0.5 * (0.9 + 0.1) * std::log(1e-6)).epsilon(1e-9));
  CHECK(r.grad[0] == 0.0);
  CHECK(r.grad[1] == 0.0);
}

TEST_CASE("losses reject shape mismatch") {
  const LossConfig cfg;
  CHECK_THROWS_AS(dice_loss(BinaryMask(2, 2), ProbMap(2, 3), cfg), Error);
  CHECK_THROWS_AS(wbce_loss(BinaryMask(2, 2), ProbMap(3, 2), cfg), Error);
}

TEST_CASE("loss gradients match central differences") {
  const LossConfig cfg;
  std::mt19937_64 rng(42);
  std::uniform_real_distribution<double> u(0.02, 0.98);
  std::bernoulli_distribution b(0.4);
  double worst_dice = 0.0, worst_wbce = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<std::uint8_t> y(64);
    std::vector<double> p(64);
    for (auto& v : y) v = b(rng);
    for (auto& v : p) v = u(rng);
    worst_dice = std::max(worst_dice, fd_worst(&dice_loss<double>, y, p, cfg));
    worst_wbce = std::max(worst_wbce, fd_worst(&wbce_loss<double>, y, p, cfg));
  }
  CHECK(worst_dice <= 1e-3);
  CHECK(worst_wbce <= 1e-3);
}

TEST_CASE("loss ranges and permutation symmetry") {
  const LossConfig cfg;
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::bernoulli_distribution b(0.5);
  for (int trial = 0; trial < 200; ++trial) {
    std::vector<std::uint8_t> y(64);
    std::vector<double> p(64);
    for (auto& v : y) v = b(rng);
    for (auto& v : p) v = u(rng);
    const double d = dice_loss<double>(y, p, cfg).loss;
    CHECK(d >= 0.0);
    CHECK(d < 1.0);
    CHECK(wbce_loss<double>(y, p, cfg).loss >= 0.0);

    std::vector<std::size_t> perm(64);
    std::iota(perm.begin(), perm.end(), 0);
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<std::uint8_t> yp(64);
    std::vector<double> pp(64);
    for (std::size_t i = 0; i < 64; ++i) {
      yp[i] = y[perm[i]];
      pp[i] = p[perm[i]];
    }
    CHECK(dice_loss<double>(yp, pp, cfg).loss == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("wbce is linear in the boundary weight") {
  LossConfig cfg;
  cfg.w0 = 0.0;
  const std::vector<std::uint8_t> y{1, 1, 0, 1};
  const std::vector<double> p{0.3, 0.8, 0.4, 0.6};
  const double base = wbce_loss<double>(y, p, cfg).loss;
  cfg.w1 *= 2;
  CHECK(wbce_loss<double>(y, p, cfg).loss == doctest::Approx(2 * base).epsilon(1e-12));
}

TEST_CASE("loss config validation") {
  LossConfig cfg;
  cfg.prob_clip = 0.6;
  CHECK_THROWS_AS(cfg.validate(), Error);
  cfg = {};
  cfg.w0 = -1;
  CHECK_THROWS_AS(cfg.validate(), Error);
}
