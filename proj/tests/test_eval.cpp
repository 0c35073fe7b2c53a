#include "doctest.h"

#include <algorithm>

#include <fmt/format.h>

#include "bubbleseg/eval.hpp"
#include "bubbleseg/io.hpp"
#include "support.hpp"

using namespace bubbleseg;
using namespace bubbleseg::eval;

namespace {

const std::filesystem::path kData = BUBBLESEG_TEST_DATA;

Instance rect(int id, int x0, int y0, int w_box, int h_box, int w = 16, int h = 16) {
  BinaryMask m(w, h);
  for (int y = y0; y < y0 + h_box; ++y)
    for (int x = x0; x < x0 + w_box; ++x) m(x, y) = 1;
  return Instance::from_mask(id, m, InstanceSource::Human, SizeClass::Small);
}

ImageRow row_of(const testing::ReferenceRow& r) {
  ImageRow row{r.image_id, {}, static_cast<int>(r.gt), r.tp_pixels, r.gt_pixels};
  for (auto c : r.matched) row.matched.push_back(static_cast<int>(c));
  return row;
}

std::string printed(double v) { return fmt::format("{:.2f}", round2(v)); }

}  // namespace

TEST_CASE("iou of hand-counted pixel sets") {
  const auto a = rect(1, 2, 2, 2, 2);
  CHECK(iou(a, a) == 1.0);
  CHECK(iou(a, rect(2, 10, 10, 2, 2)) == 0.0);
  CHECK(iou(a, rect(3, 3, 2, 2, 2)) == doctest::Approx(1.0 / 3.0).epsilon(1e-15));
  CHECK_THROWS_AS(iou(a, rect(4, 0, 0, 2, 2, 20, 16)), Error);
}

TEST_CASE("greedy pairing picks the best prediction per ground truth") {
  const std::vector<Instance> gt{rect(1, 0, 0, 4, 4), rect(2, 8, 0, 4, 4), rect(3, 0, 10, 3, 3)};
  const auto same = pair_instances(gt, gt);
  REQUIRE(same.size() == 3);
  for (const auto& p : same) {
    CHECK(p.gt_id == p.pred_id);
    CHECK(p.iou == 1.0);
  }
  CHECK(pair_instances({}, gt).empty());

  // One prediction spanning two ground truths is shared by both.
  const std::vector<Instance> merged{rect(7, 0, 0, 12, 4)};
  const auto shared = pair_instances(merged, gt);
  REQUIRE(shared.size() == 2);
  CHECK(shared[0].pred_id == 7);
  CHECK(shared[1].pred_id == 7);
  CHECK(shared[0].iou == doctest::Approx(16.0 / 48.0));

  // Hungarian gives the prediction to one of them only.
  const auto one = pair_instances(merged, gt, MatchMode::Hungarian);
  CHECK(one.size() == 1);
}

TEST_CASE("greedy ties go to the lower prediction id regardless of order") {
  const std::vector<Instance> gt{rect(1, 4, 4, 2, 2)};
  const auto left = rect(5, 3, 4, 2, 2), right = rect(3, 5, 4, 2, 2);
  CHECK(pair_instances({left, right}, gt)[0].pred_id == 3);
  CHECK(pair_instances({right, left}, gt)[0].pred_id == 3);

  std::mt19937_64 rng(4);
  std::uniform_int_distribution<int> pos(0, 12), size(1, 4);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Instance> g, p;
    for (int k = 0; k < 5; ++k) g.push_back(rect(k + 1, pos(rng), pos(rng), size(rng), size(rng)));
    for (int k = 0; k < 7; ++k) p.push_back(rect(k + 1, pos(rng), pos(rng), size(rng), size(rng)));
    const auto a = pair_instances(p, g);
    std::shuffle(p.begin(), p.end(), rng);
    REQUIRE(pair_instances(p, g) == a);
  }
}

TEST_CASE("hungarian maximizes total overlap one to one") {
  // IoUs: gt1/p1 0.6, gt1/p2 0.5, gt2/p1 1/7, gt2/p2 0. Greedy gives p1 to
  // both; the assignment prefers 0.5 + 1/7 over 0.6 + 0.
  const std::vector<Instance> gt{rect(1, 0, 0, 4, 4), rect(2, 0, 4, 4, 4)};
  const std::vector<Instance> pred{rect(1, 0, 1, 4, 4), rect(2, 0, 0, 4, 2)};
  const auto g = pair_instances(pred, gt);
  CHECK(g[0].pred_id == 1);
  CHECK(g[1].pred_id == 1);
  const auto h = pair_instances(pred, gt, MatchMode::Hungarian);
  REQUIRE(h.size() == 2);
  CHECK(h[0].pred_id == 2);
  CHECK(h[1].pred_id == 1);
  CHECK(parse_match_mode(to_string(MatchMode::Hungarian)) == MatchMode::Hungarian);
  CHECK_THROWS_AS(parse_match_mode("best"), Error);
}

TEST_CASE("instance recall counts pairs at or above each threshold") {
  const std::vector<Pair> pairs{{1, 1, 1.0}, {2, 2, 0.75}, {3, 3, 0.5}, {4, 4, 0.49}};
  const auto r = instance_recall(pairs, 5);
  CHECK(r == std::vector<double>{0.6, 0.4, 0.4, 0.2, 0.2});
  CHECK(std::is_sorted(r.rbegin(), r.rend()));
  CHECK(instance_recall({{1, 1, 1.0}}, 1) == std::vector<double>(5, 1.0));
  CHECK_THROWS_AS(instance_recall(pairs, 0), Error);
}

TEST_CASE("instance recall reproduces the stored table rows and total") {
  const auto ref = testing::read_reference(kData / "reference_counts.csv");
  REQUIRE(ref.size() == 25);
  REQUIRE(ref.back().image_id == "Total");
  for (const auto& r : ref) {
    const auto rec = row_of(r).instance_recall();
    for (std::size_t k = 0; k < rec.size(); ++k) {
      INFO(r.image_id, " threshold ", k);
      CHECK(printed(rec[k]) == r.printed[k]);
      CHECK(testing::ratio2(r.matched[k], r.gt) == r.printed[k]);
    }
  }
  // A perfect row at 0.8 and the weakest row at 0.9.
  CHECK(printed(row_of(ref[9]).instance_recall()[3]) == "1.00");
  CHECK(printed(row_of(ref[9]).instance_recall()[4]) == "0.57");
  CHECK(printed(row_of(ref[21]).instance_recall()[4]) == "0.29");
}

TEST_CASE("pixel recall reproduces the stored table") {
  const auto ref = testing::read_reference(kData / "reference_counts.csv");
  for (const auto& r : ref) {
    INFO(r.image_id);
    CHECK(printed(row_of(r).pixel_recall()) == r.printed.back());
    CHECK(testing::ratio2(r.tp_pixels, r.gt_pixels) == r.printed.back());
  }
  CHECK(printed(row_of(ref[3]).pixel_recall()) == "0.84");
  CHECK(printed(row_of(ref[13]).pixel_recall()) == "0.96");

  BinaryMask g(4, 4), p(4, 4);
  g(0, 0) = g(1, 0) = g(2, 0) = g(3, 0) = 1;
  p(0, 0) = p(3, 3) = 1;
  CHECK(pixel_recall(g, g) == 1.0);
  CHECK(pixel_recall(p, g) == 0.25);
  CHECK_THROWS_AS(pixel_recall(g, BinaryMask(4, 4)), Error);
  CHECK_THROWS_AS(pixel_recall(g, BinaryMask(4, 5)), Error);
}

TEST_CASE("pooled totals sum counts across rows") {
  EvalReport report;
  report.thresholds = {0.5};
  report.rows = {{"a", {10}, 10, 0, 0}, {"b", {15}, 30, 0, 0}};
  CHECK(report.total().instance_recall()[0] == doctest::Approx(25.0 / 40.0));

  const auto ref = testing::read_reference(kData / "reference_counts.csv");
  EvalReport table;
  for (std::size_t i = 0; i + 1 < ref.size(); ++i) table.rows.push_back(row_of(ref[i]));
  const auto total = table.total();
  CHECK(total.matched == std::vector<int>{631, 620, 599, 552, 411});
  CHECK(total.gt_count == 685);
  CHECK(total.tp_pixels == 1615136);
  CHECK(total.gt_pixels == 1739347);
  std::vector<std::string> shown;
  for (double v : total.instance_recall()) shown.push_back(printed(v));
  CHECK(shown == std::vector<std::string>{"0.92", "0.91", "0.87", "0.81", "0.60"});
  CHECK(printed(total.pixel_recall()) == "0.93");
  // Averaging per-image recalls would print a different value.
  double mean = 0.0;
  for (const auto& r : table.rows) mean += r.instance_recall()[4] / static_cast<double>(table.rows.size());
  CHECK(printed(mean) != "0.60");
}

TEST_CASE("baseline comparison counts") {
  const auto ref = testing::read_reference(kData / "threshold_baseline_counts.csv");
  REQUIRE(ref.size() == 1);
  const auto rec = row_of(ref[0]).instance_recall();
  std::vector<std::string> shown;
  for (double v : rec) shown.push_back(printed(v));
  CHECK(shown == std::vector<std::string>{"0.54", "0.41", "0.27", "0.14", "0.03"});
  CHECK(shown == ref[0].printed);
}

TEST_CASE("round2 rounds half away from zero") {
  CHECK(round2(0.125) == doctest::Approx(0.13));
  CHECK(round2(0.5749) == doctest::Approx(0.57));
  CHECK(round2(1.0) == 1.0);
  CHECK(round2(0.0) == 0.0);
}

TEST_CASE("build_report pairs each image with its predictions") {
  AnnotationSet a{"a", 16, 16, true, {rect(1, 0, 0, 4, 4), rect(2, 8, 8, 4, 4)}};
  AnnotationSet b{"b", 16, 16, true, {rect(1, 0, 0, 4, 4)}};
  std::map<std::string, std::vector<Instance>> pred{{"a", {rect(1, 0, 0, 4, 4), rect(2, 8, 8, 4, 3)}},
                                                    {"b", {rect(1, 1, 0, 4, 4)}}};
  const auto report = build_report({a, b}, pred);
  REQUIRE(report.rows.size() == 2);
  CHECK(report.rows[0].matched == std::vector<int>{2, 2, 2, 1, 1});
  CHECK(report.rows[1].matched == std::vector<int>{1, 1, 0, 0, 0});
  CHECK(report.rows[0].tp_pixels == 28);
  CHECK(report.rows[0].gt_pixels == 32);
  CHECK(report.total().matched == std::vector<int>{3, 3, 2, 1, 1});
  for (std::size_t k = 1; k < 5; ++k) CHECK(report.total().matched[k] <= report.total().matched[k - 1]);

  const auto single = build_report({a}, pred);
  CHECK(single.total().matched == single.rows[0].matched);
  CHECK(single.total().gt_count == single.rows[0].gt_count);

  pred.erase("b");
  try {
    build_report({a, b}, pred);
    FAIL("expected MissingImage");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::MissingImage);
  }
}

TEST_CASE("report CSV and JSON round trip") {
  const auto ref = testing::read_reference(kData / "reference_counts.csv");
  EvalReport table;
  for (std::size_t i = 0; i + 1 < ref.size(); ++i) table.rows.push_back(row_of(ref[i]));
  const auto csv = report_csv(table);
  CHECK(csv.rfind("image_id,iou_0.5,iou_0.6,iou_0.7,iou_0.8,iou_0.9,gt,tp_pixels,gt_pixels,recall_0.5", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 26);
  const auto back = report_from_csv(csv);
  REQUIRE(back.rows.size() == 24);
  for (std::size_t i = 0; i < 24; ++i) {
    CHECK(back.rows[i].matched == table.rows[i].matched);
    CHECK(back.rows[i].tp_pixels == table.rows[i].tp_pixels);
  }
  CHECK(report_csv(back) == csv);
  // The stored fixture itself is readable; its printed columns are ignored.
  CHECK(report_from_csv(io::read_text(kData / "reference_counts.csv")).total().gt_count == 685);

  const auto j = report_json(table);
  CHECK(j["total"]["matched"] == nlohmann::json({631, 620, 599, 552, 411}));
  CHECK(j["rows"].size() == 24);
  CHECK(j.contains("thresholds"));
  CHECK_FALSE(j.dump().find("precision") != std::string::npos);

  CHECK_THROWS_AS(report_from_csv(""), Error);
  CHECK_THROWS_AS(report_from_csv("image_id,iou_0.5,gt\nx,5,3\n"), Error);
  CHECK_THROWS_AS(report_from_csv("image_id,iou_0.5,iou_0.6,gt\nx,2,3,5\n"), Error);
  CHECK_THROWS_AS(report_from_csv("image_id,iou_0.5,gt\nx,2\n"), Error);
}

TEST_CASE("tables print two decimals in the column layout") {
  const auto ref = testing::read_reference(kData / "reference_counts.csv");
  EvalReport table;
  for (std::size_t i = 0; i + 1 < ref.size(); ++i) table.rows.push_back(row_of(ref[i]));
  const auto text = format_instance_table(table);
  CHECK(text.find(">= 0.5") != std::string::npos);
  CHECK(text.find("GT") != std::string::npos);
  const auto last = text.substr(text.rfind("Total"));
  for (const char* v : {"631", "411", "685", "0.92", "0.91", "0.87", "0.81", "0.60"}) CHECK(last.find(v) != std::string::npos);
  const auto px = format_pixel_table(table);
  const auto px_last = px.substr(px.rfind("Total"));
  CHECK(px_last.find("1615136") != std::string::npos);
  CHECK(px_last.find("0.93") != std::string::npos);
}
