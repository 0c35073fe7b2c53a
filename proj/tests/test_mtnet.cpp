#include "doctest.h"

#include <fstream>

#include "bubbleseg/io.hpp"
#include "bubbleseg/loss.hpp"
#include "bubbleseg/train.hpp"
#include "gradcheck.hpp"
#include "support.hpp"

using namespace bubbleseg;
using namespace bubbleseg::mtnet;

namespace {

GrayImage random_image(int n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  GrayImage img(n, n);
  for (auto& v : img.data()) v = u(rng);
  return img;
}

NetConfig small_net(int size, int levels) {
  NetConfig nc;
  nc.input_size = size;
  nc.encoder_levels = levels;
  nc.base_channels = 4;
  return nc;
}

}  // namespace

TEST_CASE("zero parameters give one half everywhere") {
  const auto params = zero_params<float>(NetConfig{});
  const auto out = forward(params, random_image(128, 1));
  for (auto v : out.region.data()) REQUIRE(v == 0.5f);
  for (auto v : out.boundary.data()) REQUIRE(v == 0.5f);
}

TEST_CASE("output shape follows the input size") {
  for (int n : {32, 64, 128}) {
    NetConfig nc;
    nc.input_size = n;
    const auto out = forward(init_params<float>(nc, 3), random_image(n, 2));
    CHECK(out.region.width() == n);
    CHECK(out.region.height() == n);
    CHECK(out.boundary.width() == n);
    CHECK(out.boundary.height() == n);
    for (auto v : out.region.data()) REQUIRE((v >= 0.0f && v <= 1.0f));
  }
  CHECK_THROWS_AS(forward(init_params<float>(NetConfig{}, 3), random_image(64, 2)), Error);
}

TEST_CASE("parameter layout") {
  const NetConfig nc;
  const auto params = init_params<float>(nc, 1);
  CHECK(params.count() == parameter_count(nc));
  CHECK(params.all_finite());
  CHECK(init_params<float>(nc, 1) == params);
  CHECK_FALSE(init_params<float>(nc, 2) == params);
  NetConfig bad;
  bad.input_size = 100;
  CHECK_THROWS_AS(bad.validate(), Error);
}

TEST_CASE("forward is deterministic") {
  const auto params = init_params<float>(NetConfig{}, 5);
  const auto img = random_image(128, 6);
  const auto a = forward(params, img), b = forward(params, img);
  CHECK(a.region == b.region);
  CHECK(a.boundary == b.boundary);
}

TEST_CASE("translation by one pooling stride translates interior outputs") {
  const auto nc = small_net(128, 2);
  const int stride = 1 << nc.encoder_levels;
  const auto params = init_params<float>(nc, 9);
  const auto img = random_image(128, 10);
  GrayImage shifted(128, 128, 0.0f);
  for (int y = 0; y < 128; ++y)
    for (int x = stride; x < 128; ++x) shifted(x, y) = img(x - stride, y);
  const auto a = forward(params, img), b = forward(params, shifted);
  // The receptive field of this net is well under 40 pixels.
  constexpr int margin = 40;
  for (int y = margin; y < 128 - margin; ++y)
    for (int x = margin; x < 128 - margin - stride; ++x) {
      REQUIRE(b.region(x + stride, y) == doctest::Approx(a.region(x, y)).epsilon(1e-5));
      REQUIRE(b.boundary(x + stride, y) == doctest::Approx(a.boundary(x, y)).epsilon(1e-5));
    }
}

TEST_CASE("network gradients match central differences") {
  const auto nc = small_net(16, 2);
  auto params = init_params<double>(nc, 21);
  const auto img = random_image(16, 22);
  std::mt19937_64 rng(23);
  const auto y1 = testing::random_mask(16, 16, 0.4, rng);
  const auto y2 = testing::random_mask(16, 16, 0.2, rng);
  const LossConfig lc;

  auto grads = zero_params<double>(nc);
  const auto loss = backward(params, img, y1, y2, lc, grads);
  CHECK(loss.total() == doctest::Approx(evaluate_loss(params, img, y1, y2, lc).total()).epsilon(1e-12));
  CHECK(grads.all_finite());

  const auto r = testing::check_network_gradients(params, img, y1, y2, lc);
  MESSAGE("checked ", r.checked, " at step 1e-3, ", r.refined, " across a kink at step 1e-6, worst ", r.worst);
  CHECK(r.checked + r.refined == params.count());
  CHECK(r.checked > params.count() / 2);
  CHECK(r.failures == 0);
  CHECK(r.worst <= 1e-3);
}

TEST_CASE("loss is non-negative and the boundary term scales with w1") {
  const auto nc = small_net(16, 2);
  const auto params = init_params<double>(nc, 31);
  const auto img = random_image(16, 32);
  std::mt19937_64 rng(33);
  const auto y1 = testing::random_mask(16, 16, 0.5, rng);
  const auto y2 = testing::random_mask(16, 16, 0.3, rng);
  LossConfig lc;
  lc.w0 = 1e-9;
  const auto a = evaluate_loss(params, img, y1, y2, lc);
  lc.w1 *= 2;
  const auto b = evaluate_loss(params, img, y1, y2, lc);
  CHECK(a.dice >= 0.0);
  CHECK(a.wbce >= 0.0);
  CHECK(b.wbce == doctest::Approx(2 * a.wbce).epsilon(1e-6));
  CHECK(b.dice == a.dice);
}

TEST_CASE("checkpoint round trip") {
  const auto dir = testing::temp_dir("ckpt");
  const auto params = init_params<float>(small_net(32, 2), 41);
  save_checkpoint(params, dir / "a.mtnp");
  CHECK(load_checkpoint(dir / "a.mtnp") == params);
  const auto bytes = io::read_bytes(dir / "a.mtnp");
  CHECK(std::string(bytes.begin(), bytes.begin() + 4) == "MTNP");

  auto expect_code = [](const std::filesystem::path& p, ErrorCode code) {
    try {
      load_checkpoint(p);
      FAIL("expected an error");
    } catch (const Error& e) {
      CHECK(e.code() == code);
    }
  };
  expect_code(dir / "missing.mtnp", ErrorCode::CheckpointNotFound);

  auto write = [&](const std::string& name, std::vector<std::uint8_t> b) {
    std::ofstream f(dir / name, std::ios::binary);
    f.write(reinterpret_cast<const char*>(b.data()), static_cast<std::streamsize>(b.size()));
    return dir / name;
  };
  auto bad_magic = bytes;
  bad_magic[0] = 'X';
  expect_code(write("magic.mtnp", bad_magic), ErrorCode::CorruptFile);
  expect_code(write("short.mtnp", {bytes.begin(), bytes.end() - 3}), ErrorCode::CorruptFile);
  auto extra = bytes;
  extra.push_back(0);
  expect_code(write("extra.mtnp", extra), ErrorCode::CorruptFile);
  auto nan = bytes;
  const float q = std::numeric_limits<float>::quiet_NaN();
  std::memcpy(nan.data() + nan.size() - 4, &q, 4);
  expect_code(write("nan.mtnp", nan), ErrorCode::CorruptFile);
}
