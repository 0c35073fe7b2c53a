#pragma once

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "bubbleseg/core.hpp"

namespace bubbleseg::eval {

inline const std::vector<double> kDefaultThresholds{0.5, 0.6, 0.7, 0.8, 0.9};

double iou(const Instance& a, const Instance& b);

enum class MatchMode {
  Greedy,     // each ground truth takes its best prediction; predictions may be shared
  Hungarian,  // one-to-one assignment maximizing total IoU
};

MatchMode parse_match_mode(std::string_view s);
std::string_view to_string(MatchMode m);

struct Pair {
  int gt_id = 0;
  int pred_id = 0;
  double iou = 0.0;
  bool operator==(const Pair&) const = default;
};

/// Pairs in ground-truth list order; ground truths overlapping nothing are
/// left out. Greedy ties go to the lower prediction id.
std::vector<Pair> pair_instances(const std::vector<Instance>& pred, const std::vector<Instance>& gt,
                                 MatchMode mode = MatchMode::Greedy);

std::vector<int> matched_counts(const std::vector<Pair>& pairs, const std::vector<double>& thresholds);
std::vector<double> instance_recall(const std::vector<Pair>& pairs, int gt_count,
                                    const std::vector<double>& thresholds = kDefaultThresholds);
double pixel_recall(const BinaryMask& pred_union, const BinaryMask& gt_union);

struct ImageRow {
  std::string image_id;
  std::vector<int> matched;  // per threshold
  int gt_count = 0;
  long long tp_pixels = 0;
  long long gt_pixels = 0;

  /// Throws EmptyGroundTruth when there is nothing to recall.
  std::vector<double> instance_recall() const;
  double pixel_recall() const;
};

/// Precision is deliberately absent: the ground truth is partial.
struct EvalReport {
  std::vector<double> thresholds = kDefaultThresholds;
  std::vector<ImageRow> rows;

  /// Counts summed over rows; its recalls pool those counts.
  ImageRow total() const;
};

/// Rounds half away from zero to two decimals, as the tables print.
double round2(double v);

EvalReport build_report(const std::vector<AnnotationSet>& gt, const std::map<std::string, std::vector<Instance>>& pred,
                        MatchMode mode = MatchMode::Greedy, const std::vector<double>& thresholds = kDefaultThresholds);

std::string format_instance_table(const EvalReport& report);
std::string format_pixel_table(const EvalReport& report);

/// Counts plus full-precision recalls, one row per image and a Total row.
std::string report_csv(const EvalReport& report);
nlohmann::json report_json(const EvalReport& report);
/// Reads the count columns of report_csv output; Total rows and recall
/// columns are ignored and recomputed.
EvalReport report_from_csv(std::string_view text);

}  // namespace bubbleseg::eval
