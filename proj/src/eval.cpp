#include "bubbleseg/eval.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include <fmt/format.h>

namespace bubbleseg::eval {

double iou(const Instance& a, const Instance& b) {
  if (a.width() != b.width() || a.height() != b.height())
    throw Error(ErrorCode::GeometryMismatch, "iou: instances come from different image geometries");
  if (a.area() == 0 && b.area() == 0) return 0.0;
  const auto &ba = a.bbox(), &bb = b.bbox();
  if (ba.max_x < bb.min_x || bb.max_x < ba.min_x || ba.max_y < bb.min_y || bb.max_y < ba.min_y) return 0.0;
  const auto pa = a.pixels(), pb = b.pixels();
  std::size_t i = 0, j = 0, inter = 0;
  while (i < pa.size() && j < pb.size()) {
    if (pa[i] < pb[j]) {
      ++i;
    } else if (pb[j] < pa[i]) {
      ++j;
    } else {
      ++inter;
      ++i;
      ++j;
    }
  }
  return static_cast<double>(inter) / static_cast<double>(pa.size() + pb.size() - inter);
}

MatchMode parse_match_mode(std::string_view s) {
  if (s == "greedy") return MatchMode::Greedy;
  if (s == "hungarian") return MatchMode::Hungarian;
  throw Error(ErrorCode::ConfigInvalid, "unknown match mode '" + std::string(s) + "'");
}

std::string_view to_string(MatchMode m) { return m == MatchMode::Greedy ? "greedy" : "hungarian"; }

namespace {

// Minimum-cost assignment on a square matrix (potentials method).
std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
  const int n = static_cast<int>(cost.size());
  const double inf = std::numeric_limits<double>::infinity();
  std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0);
  std::vector<int> p(n + 1, 0), way(n + 1, 0);
  for (int i = 1; i <= n; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(n + 1, inf);
    std::vector<char> used(n + 1, 0);
    do {
      used[j0] = 1;
      const int i0 = p[j0];
      double delta = inf;
      int j1 = 0;
      for (int j = 1; j <= n; ++j) {
        if (used[j]) continue;
        const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
        if (cur < minv[j]) {
          minv[j] = cur;
          way[j] = j0;
        }
        if (minv[j] < delta) {
          delta = minv[j];
          j1 = j;
        }
      }
      for (int j = 0; j <= n; ++j) {
        if (used[j]) {
          u[p[j]] += delta;
          v[j] -= delta;
        } else {
          minv[j] -= delta;
        }
      }
      j0 = j1;
    } while (p[j0] != 0);
    do {
      const int j1 = way[j0];
      p[j0] = p[j1];
      j0 = j1;
    } while (j0 != 0);
  }
  std::vector<int> row_to_col(n, -1);
  for (int j = 1; j <= n; ++j)
    if (p[j] > 0) row_to_col[p[j] - 1] = j - 1;
  return row_to_col;
}

}  // namespace

std::vector<Pair> pair_instances(const std::vector<Instance>& pred, const std::vector<Instance>& gt, MatchMode mode) {
  std::vector<std::vector<double>> m(gt.size(), std::vector<double>(pred.size(), 0.0));
  for (std::size_t g = 0; g < gt.size(); ++g)
    for (std::size_t p = 0; p < pred.size(); ++p) m[g][p] = iou(gt[g], pred[p]);

  std::vector<Pair> out;
  if (mode == MatchMode::Greedy) {
    for (std::size_t g = 0; g < gt.size(); ++g) {
      int best = -1;
      for (std::size_t p = 0; p < pred.size(); ++p) {
        if (m[g][p] <= 0.0) continue;
        if (best < 0 || m[g][p] > m[g][best] || (m[g][p] == m[g][best] && pred[p].id() < pred[best].id()))
          best = static_cast<int>(p);
      }
      if (best >= 0) out.push_back({gt[g].id(), pred[best].id(), m[g][best]});
    }
    return out;
  }

  const std::size_t n = std::max(gt.size(), pred.size());
  std::vector<std::vector<double>> cost(n, std::vector<double>(n, 0.0));
  for (std::size_t g = 0; g < gt.size(); ++g)
    for (std::size_t p = 0; p < pred.size(); ++p) cost[g][p] = -m[g][p];
  const auto assign = n ? hungarian(cost) : std::vector<int>{};
  for (std::size_t g = 0; g < gt.size(); ++g) {
    const int p = assign[g];
    if (p >= 0 && static_cast<std::size_t>(p) < pred.size() && m[g][p] > 0.0)
      out.push_back({gt[g].id(), pred[p].id(), m[g][p]});
  }
  return out;
}

std::vector<int> matched_counts(const std::vector<Pair>& pairs, const std::vector<double>& thresholds) {
  std::vector<int> out;
  for (double t : thresholds)
    out.push_back(static_cast<int>(std::count_if(pairs.begin(), pairs.end(), [t](const Pair& p) { return p.iou >= t; })));
  return out;
}

std::vector<double> instance_recall(const std::vector<Pair>& pairs, int gt_count, const std::vector<double>& thresholds) {
  if (gt_count <= 0) throw Error(ErrorCode::EmptyGroundTruth, "instance_recall: no ground truth instances");
  std::vector<double> out;
  for (int c : matched_counts(pairs, thresholds)) out.push_back(static_cast<double>(c) / gt_count);
  return out;
}

double pixel_recall(const BinaryMask& pred_union, const BinaryMask& gt_union) {
  require_same_shape(pred_union, gt_union, "pixel_recall");
  long long tp = 0, total = 0;
  for (std::size_t i = 0; i < gt_union.size(); ++i) {
    total += gt_union[i];
    tp += gt_union[i] && pred_union[i];
  }
  if (total == 0) throw Error(ErrorCode::EmptyGroundTruth, "pixel_recall: ground truth is empty");
  return static_cast<double>(tp) / static_cast<double>(total);
}

std::vector<double> ImageRow::instance_recall() const {
  if (gt_count <= 0) throw Error(ErrorCode::EmptyGroundTruth, "instance recall of '" + image_id + "': no ground truth");
  std::vector<double> out;
  for (int c : matched) out.push_back(static_cast<double>(c) / gt_count);
  return out;
}

double ImageRow::pixel_recall() const {
  if (gt_pixels <= 0) throw Error(ErrorCode::EmptyGroundTruth, "pixel recall of '" + image_id + "': no ground truth");
  return static_cast<double>(tp_pixels) / static_cast<double>(gt_pixels);
}

ImageRow EvalReport::total() const {
  ImageRow t{"Total", std::vector<int>(thresholds.size(), 0), 0, 0, 0};
  for (const auto& r : rows) {
    for (std::size_t k = 0; k < thresholds.size(); ++k) t.matched[k] += r.matched[k];
    t.gt_count += r.gt_count;
    t.tp_pixels += r.tp_pixels;
    t.gt_pixels += r.gt_pixels;
  }
  return t;
}

double round2(double v) { return std::floor(v * 100.0 + 0.5) / 100.0; }

EvalReport build_report(const std::vector<AnnotationSet>& gt, const std::map<std::string, std::vector<Instance>>& pred,
                        MatchMode mode, const std::vector<double>& thresholds) {
  EvalReport report;
  report.thresholds = thresholds;
  for (const auto& set : gt) {
    auto it = pred.find(set.image_id);
    if (it == pred.end()) throw Error(ErrorCode::MissingImage, "no predictions for image '" + set.image_id + "'");
    const auto pairs = pair_instances(it->second, set.instances, mode);
    ImageRow row{set.image_id, matched_counts(pairs, thresholds), static_cast<int>(set.instances.size()), 0, 0};
    const BinaryMask g = set.union_mask();
    const BinaryMask p = union_mask(it->second, set.width, set.height);
    for (std::size_t i = 0; i < g.size(); ++i) {
      row.gt_pixels += g[i];
      row.tp_pixels += g[i] && p[i];
    }
    report.rows.push_back(std::move(row));
  }
  return report;
}

namespace {

std::string recall_cell(const ImageRow& r, std::size_t k) {
  return r.gt_count > 0 ? fmt::format("{:.2f}", round2(static_cast<double>(r.matched[k]) / r.gt_count)) : "-";
}

}  // namespace

std::string format_instance_table(const EvalReport& report) {
  std::size_t id_w = 5;
  for (const auto& r : report.rows) id_w = std::max(id_w, r.image_id.size());
  std::string out = fmt::format("{:<{}}", "Img", id_w);
  for (double t : report.thresholds) out += fmt::format(" {:>7}", fmt::format(">= {:.1f}", t));
  out += fmt::format(" {:>6}", "GT");
  for (double t : report.thresholds) out += fmt::format(" {:>7}", fmt::format("R_{:.1f}", t));
  out += "\n";
  auto line = [&](const ImageRow& r) {
    std::string s = fmt::format("{:<{}}", r.image_id, id_w);
    for (int c : r.matched) s += fmt::format(" {:>7}", c);
    s += fmt::format(" {:>6}", r.gt_count);
    for (std::size_t k = 0; k < r.matched.size(); ++k) s += fmt::format(" {:>7}", recall_cell(r, k));
    return s + "\n";
  };
  for (const auto& r : report.rows) out += line(r);
  return out + line(report.total());
}

std::string format_pixel_table(const EvalReport& report) {
  std::size_t id_w = 5;
  for (const auto& r : report.rows) id_w = std::max(id_w, r.image_id.size());
  std::string out = fmt::format("{:<{}} {:>14} {:>14} {:>8}\n", "Img", id_w, "True Positive", "Total Positive", "R_P");
  auto line = [&](const ImageRow& r) {
    const std::string rp = r.gt_pixels > 0 ? fmt::format("{:.2f}", round2(r.pixel_recall())) : "-";
    return fmt::format("{:<{}} {:>14} {:>14} {:>8}\n", r.image_id, id_w, r.tp_pixels, r.gt_pixels, rp);
  };
  for (const auto& r : report.rows) out += line(r);
  return out + line(report.total());
}

std::string report_csv(const EvalReport& report) {
  std::string out = "image_id";
  for (double t : report.thresholds) out += fmt::format(",iou_{:.1f}", t);
  out += ",gt,tp_pixels,gt_pixels";
  for (double t : report.thresholds) out += fmt::format(",recall_{:.1f}", t);
  out += ",pixel_recall\n";
  auto line = [&](const ImageRow& r) {
    if (r.image_id.find_first_of(",\n\"") != std::string::npos)
      throw Error(ErrorCode::InvalidValue, "report_csv: image id '" + r.image_id + "' is not CSV-safe");
    std::string s = r.image_id;
    for (int c : r.matched) s += fmt::format(",{}", c);
    s += fmt::format(",{},{},{}", r.gt_count, r.tp_pixels, r.gt_pixels);
    for (std::size_t k = 0; k < r.matched.size(); ++k)
      s += r.gt_count > 0 ? fmt::format(",{:.17g}", static_cast<double>(r.matched[k]) / r.gt_count) : std::string(",");
    s += r.gt_pixels > 0 ? fmt::format(",{:.17g}", r.pixel_recall()) : std::string(",");
    return s + "\n";
  };
  for (const auto& r : report.rows) out += line(r);
  return out + line(report.total());
}

nlohmann::json report_json(const EvalReport& report) {
  auto row_json = [&](const ImageRow& r) {
    nlohmann::json j = {{"image_id", r.image_id}, {"matched", r.matched}, {"gt", r.gt_count},
                        {"tp_pixels", r.tp_pixels}, {"gt_pixels", r.gt_pixels}};
    j["instance_recall"] = r.gt_count > 0 ? nlohmann::json(r.instance_recall()) : nlohmann::json(nullptr);
    j["pixel_recall"] = r.gt_pixels > 0 ? nlohmann::json(r.pixel_recall()) : nlohmann::json(nullptr);
    return j;
  };
  nlohmann::json rows = nlohmann::json::array();
  for (const auto& r : report.rows) rows.push_back(row_json(r));
  return {{"thresholds", report.thresholds}, {"rows", rows}, {"total", row_json(report.total())}};
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) cells.push_back(cell);
  if (!line.empty() && line.back() == ',') cells.emplace_back();
  return cells;
}

template <typename T>
T parse_number(const std::string& s, const std::string& what) {
  T v{};
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || s.empty())
    throw Error(ErrorCode::InvalidValue, "counts csv: bad " + what + " '" + s + "'");
  return v;
}

}  // namespace

EvalReport report_from_csv(std::string_view text) {
  std::stringstream in{std::string(text)};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::InvalidValue, "counts csv: empty input");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_csv_line(line);
  EvalReport report;
  report.thresholds.clear();
  int col_gt = -1, col_tp = -1, col_px = -1;
  std::vector<int> col_iou;
  for (std::size_t c = 0; c < header.size(); ++c) {
    const auto& h = header[c];
    if (h.rfind("iou_", 0) == 0) {
      report.thresholds.push_back(std::stod(h.substr(4)));
      col_iou.push_back(static_cast<int>(c));
    } else if (h == "gt") {
      col_gt = static_cast<int>(c);
    } else if (h == "tp_pixels") {
      col_tp = static_cast<int>(c);
    } else if (h == "gt_pixels") {
      col_px = static_cast<int>(c);
    }
  }
  if (header.empty() || header[0] != "image_id" || col_gt < 0 || col_iou.empty())
    throw Error(ErrorCode::InvalidValue, "counts csv: header needs image_id, iou_<t> columns and gt");
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto cells = split_csv_line(line);
    if (cells.size() != header.size()) throw Error(ErrorCode::InvalidValue, "counts csv: ragged row '" + line + "'");
    if (cells[0] == "Total") continue;
    ImageRow row;
    row.image_id = cells[0];
    for (int c : col_iou) row.matched.push_back(parse_number<int>(cells[static_cast<std::size_t>(c)], "count"));
    row.gt_count = parse_number<int>(cells[static_cast<std::size_t>(col_gt)], "gt");
    if (col_tp >= 0) row.tp_pixels = parse_number<long long>(cells[static_cast<std::size_t>(col_tp)], "tp_pixels");
    if (col_px >= 0) row.gt_pixels = parse_number<long long>(cells[static_cast<std::size_t>(col_px)], "gt_pixels");
    for (std::size_t k = 0; k < row.matched.size(); ++k) {
      if (row.matched[k] < 0 || row.matched[k] > row.gt_count || (k > 0 && row.matched[k] > row.matched[k - 1]))
        throw Error(ErrorCode::InvalidValue, "counts csv: inconsistent counts for '" + row.image_id + "'");
    }
    if (row.tp_pixels < 0 || row.tp_pixels > row.gt_pixels)
      throw Error(ErrorCode::InvalidValue, "counts csv: inconsistent pixel counts for '" + row.image_id + "'");
    report.rows.push_back(std::move(row));
  }
  return report;
}

}  // namespace bubbleseg::eval
