#include "doctest.h"

#include <numbers>

#include "bubbleseg/instances.hpp"
#include "support.hpp"

using namespace bubbleseg;
using namespace bubbleseg::instances;

namespace {

ProbMap as_prob(const BinaryMask& m) {
  ProbMap p(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) p[i] = m[i] ? 1.0f : 0.0f;
  return p;
}

Instance block(int id, int x0, int y0, int size, int w, int h, InstanceSource src, SizeClass sc) {
  BinaryMask m(w, h);
  for (int y = y0; y < y0 + size; ++y)
    for (int x = x0; x < x0 + size; ++x) m(x, y) = 1;
  return Instance::from_mask(id, m, src, sc);
}

void check_disjoint(const std::vector<Instance>& list) {
  if (list.empty()) return;
  BinaryMask seen(list[0].width(), list[0].height());
  for (const auto& inst : list)
    for (auto p : inst.pixels()) {
      REQUIRE(seen[p] == 0);
      seen[p] = 1;
    }
}

}  // namespace

TEST_CASE("empty region map gives no instances") {
  CHECK(extract_instances(ProbMap(32, 32), ProbMap(32, 32)).empty());
}

TEST_CASE("a single disk without boundary is one instance covering it") {
  const auto disk = testing::disk_mask(40, 40, 20, 20, 8);
  const auto found = extract_instances(as_prob(disk), ProbMap(40, 40));
  REQUIRE(found.size() == 1);
  for (std::size_t i = 0; i < disk.size(); ++i)
    if (disk[i]) REQUIRE(found[0].to_mask()[i] == 1);
  CHECK(found[0].source() == InstanceSource::Network);
  CHECK(found[0].size_class() == SizeClass::MediumLarge);
  CHECK(found[0].id() == 1);
}

TEST_CASE("small components are dropped") {
  const auto speck = testing::disk_mask(40, 40, 10, 10, 2);  // 13 px
  CHECK(extract_instances(as_prob(speck), ProbMap(40, 40)).empty());
  ExtractConfig cfg;
  cfg.min_component_area = 5;
  CHECK(extract_instances(as_prob(speck), ProbMap(40, 40), cfg).size() == 1);
}

TEST_CASE("a marked contact line separates touching disks") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const auto t = testing::tangent_pair(seed);
    REQUIRE(t.truth.instances.size() == 2);
    const auto found = extract_instances(t.region, t.boundary);
    REQUIRE(found.size() == 2);
    check_disjoint(found);
    for (int k = 0; k < 2; ++k) {
      const auto [cx, cy] = t.centers[k];
      const auto [ox, oy] = t.centers[1 - k];
      int owner = -1;
      for (int i = 0; i < 2; ++i)
        if (found[i].contains(cx, cy)) owner = i;
      REQUIRE(owner >= 0);
      CHECK_FALSE(found[owner].contains(ox, oy));
    }
    // Without the boundary map the pair is a single blob.
    CHECK(extract_instances(t.region, ProbMap(t.region.width(), t.region.height())).size() == 1);
  }
}

TEST_CASE("extracted instances are disjoint and intersect the region") {
  std::mt19937_64 rng(17);
  std::uniform_real_distribution<float> u(0.0f, 1.0f);
  for (int trial = 0; trial < 20; ++trial) {
    ProbMap region(48, 48), boundary(48, 48);
    BinaryMask m(48, 48);
    for (int k = 0; k < 6; ++k) {
      const auto d = testing::disk_mask(48, 48, 6 + u(rng) * 36, 6 + u(rng) * 36, 4 + u(rng) * 4);
      for (std::size_t i = 0; i < m.size(); ++i) m[i] |= d[i];
    }
    for (std::size_t i = 0; i < m.size(); ++i) {
      region[i] = m[i] ? 0.6f + 0.4f * u(rng) : 0.4f * u(rng);
      boundary[i] = u(rng) < 0.1f ? 0.9f : 0.1f;
    }
    for (const auto& cfg_iter : {1, 2}) {
      ExtractConfig cfg;
      cfg.dilation_iterations = cfg_iter;
      const auto found = extract_instances(region, boundary, cfg);
      check_disjoint(found);
      for (const auto& inst : found) {
        bool hits = false;
        for (auto p : inst.pixels()) hits = hits || region[p] >= 0.5f;
        CHECK(hits);
      }
      CHECK(extract_instances(region, boundary, cfg) == found);
      cfg.clip_to_region = true;
      for (const auto& inst : extract_instances(region, boundary, cfg))
        for (auto p : inst.pixels()) REQUIRE(region[p] >= 0.5f);
    }
  }
}

TEST_CASE("extract validates inputs") {
  CHECK_THROWS_AS(extract_instances(ProbMap(4, 4), ProbMap(4, 5)), Error);
  ExtractConfig cfg;
  cfg.region_threshold = 1.0;
  CHECK_THROWS_AS(cfg.validate(), Error);
}

TEST_CASE("merge keeps large instances and non-overlapping small ones") {
  const int w = 40, h = 40;
  const auto big1 = block(1, 5, 5, 10, w, h, InstanceSource::Network, SizeClass::MediumLarge);
  const auto big2 = block(2, 20, 2, 10, w, h, InstanceSource::Network, SizeClass::MediumLarge);
  const auto big3 = block(3, 5, 25, 10, w, h, InstanceSource::Network, SizeClass::MediumLarge);

  const auto only_large = merge_instances({big3, big2, big1}, {});
  REQUIRE(only_large.size() == 3);
  CHECK(only_large[0].bbox().min_y == 2);
  CHECK(only_large[1].bbox().min_y == 5);
  for (int i = 0; i < 3; ++i) CHECK(only_large[i].id() == i + 1);

  const auto inside = block(9, 8, 8, 3, w, h, InstanceSource::EdgeDetector, SizeClass::Small);
  CHECK(merge_instances({big1}, {inside}).size() == 1);

  std::vector<Instance> small;
  for (int k = 0; k < 4; ++k) small.push_back(block(k + 1, 22 + 4 * (k % 2), 20 + 4 * (k / 2) + 10, 3, w, h,
                                                    InstanceSource::EdgeDetector, SizeClass::Small));
  const auto merged = merge_instances({big1, big2, big3}, small);
  CHECK(merged.size() == 7);
  check_disjoint(merged);
  for (std::size_t i = 0; i + 1 < merged.size(); ++i) {
    const auto& a = merged[i].bbox();
    const auto& b = merged[i + 1].bbox();
    CHECK((a.min_y < b.min_y || (a.min_y == b.min_y && a.min_x <= b.min_x)));
  }
  CHECK(merge_instances({big1, big2, big3}, small) == merged);

  const auto other = block(1, 0, 0, 2, 10, 10, InstanceSource::EdgeDetector, SizeClass::Small);
  CHECK_THROWS_AS(merge_instances({big1}, {other}), Error);
}

TEST_CASE("threshold baseline") {
  CHECK(threshold_segment(GrayImage(32, 32, 1.0f), {{0.5}}).empty());

  const auto disk = testing::disk_mask(48, 48, 24, 24, 8);
  const auto one = threshold_segment(testing::paint(disk, 0.1f, 0.8f), {{0.5}});
  REQUIRE(one.size() == 1);
  CHECK(one[0].to_mask() == disk);
  CHECK(one[0].source() == InstanceSource::Baseline);

  const auto t = testing::tangent_pair(3);
  BinaryMask pair(t.region.width(), t.region.height());
  for (std::size_t i = 0; i < pair.size(); ++i) pair[i] = t.region[i] > 0.5f;
  CHECK(threshold_segment(testing::paint(pair, 0.1f, 0.8f), {{0.5}}).size() == 1);
}

TEST_CASE("threshold bands add only new components") {
  // A darker core inside a mid-grey disk is claimed once, at the first band.
  const auto outer = testing::disk_mask(48, 48, 24, 24, 10);
  const auto inner = testing::disk_mask(48, 48, 24, 24, 5);
  const auto lone = testing::disk_mask(48, 48, 6, 6, 4);
  GrayImage img(48, 48, 0.9f);
  for (std::size_t i = 0; i < img.size(); ++i) {
    if (outer[i] || lone[i]) img[i] = 0.5f;
    if (inner[i]) img[i] = 0.1f;
  }
  const auto found = threshold_segment(img, {{0.3, 0.6}});
  REQUIRE(found.size() == 2);
  check_disjoint(found);
  CHECK_THROWS_AS(threshold_segment(img, {{0.6, 0.3}}), Error);
  CHECK_THROWS_AS(threshold_segment(img, {{1.0}}), Error);
}

TEST_CASE("otsu separates a bimodal image") {
  const auto disk = testing::disk_mask(48, 48, 24, 24, 12);
  const double t = otsu_threshold(testing::paint(disk, 0.2f, 0.8f));
  CHECK(t > 0.2);
  CHECK(t < 0.8);
  ThresholdConfig cfg;
  cfg.otsu = true;
  CHECK(threshold_segment(testing::paint(disk, 0.2f, 0.8f), cfg).size() == 1);
}

TEST_CASE("overlay colors follow the instance source") {
  const auto net = block(1, 2, 2, 5, 16, 16, InstanceSource::Network, SizeClass::MediumLarge);
  const auto edge = block(2, 9, 9, 5, 16, 16, InstanceSource::EdgeDetector, SizeClass::Small);
  auto img = render_overlay(GrayImage(16, 16, 0.5f), {net, edge});
  CHECK(img.at(2, 2).b == 255);
  CHECK(img.at(9, 9).r == 255);
  CHECK(img.at(4, 4).r == img.at(4, 4).g);  // interior keeps the gray value
}
