#pragma once

#include <sys/wait.h>

#include <cmath>
#include <cstdio>
#include <deque>
#include <filesystem>
#include <fstream>
#include <map>
#include <random>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "bubbleseg/core.hpp"
#include "bubbleseg/synth.hpp"

namespace testing {

using namespace bubbleseg;

inline BinaryMask random_mask(int w, int h, double density, std::mt19937_64& rng) {
  std::bernoulli_distribution b(density);
  BinaryMask m(w, h);
  for (auto& v : m.data()) v = b(rng) ? 1 : 0;
  return m;
}

/// Pixels whose centers lie within r of (cx, cy).
inline BinaryMask disk_mask(int w, int h, double cx, double cy, double r) {
  BinaryMask m(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m(x, y) = (x - cx) * (x - cx) + (y - cy) * (y - cy) <= r * r ? 1 : 0;
  return m;
}

inline GrayImage paint(const BinaryMask& m, float fg, float bg) {
  GrayImage img(m.width(), m.height());
  for (std::size_t i = 0; i < m.size(); ++i) img[i] = m[i] ? fg : bg;
  return img;
}

inline std::size_t count(const BinaryMask& m) {
  std::size_t n = 0;
  for (auto v : m.data()) n += v;
  return n;
}

/// Breadth-first 8-connected labeling, independent of the union-find code.
inline std::vector<int> bfs_components(const BinaryMask& m, int& n) {
  const int w = m.width(), h = m.height();
  std::vector<int> lab(m.size(), 0);
  n = 0;
  for (int y0 = 0; y0 < h; ++y0)
    for (int x0 = 0; x0 < w; ++x0) {
      if (!m(x0, y0) || lab[y0 * w + x0]) continue;
      ++n;
      std::deque<std::pair<int, int>> q{{x0, y0}};
      lab[y0 * w + x0] = n;
      while (!q.empty()) {
        auto [x, y] = q.front();
        q.pop_front();
        for (int dy = -1; dy <= 1; ++dy)
          for (int dx = -1; dx <= 1; ++dx) {
            const int nx = x + dx, ny = y + dy;
            if (nx < 0 || ny < 0 || nx >= w || ny >= h || !m(nx, ny) || lab[ny * w + nx]) continue;
            lab[ny * w + nx] = n;
            q.emplace_back(nx, ny);
          }
      }
    }
  return lab;
}

/// True when two labelings induce the same partition.
inline bool same_partition(const std::vector<int>& a, std::span<const std::int32_t> b) {
  if (a.size() != b.size()) return false;
  std::map<int, int> ab, ba;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if ((a[i] == 0) != (b[i] == 0)) return false;
    if (a[i] == 0) continue;
    auto [it1, new1] = ab.emplace(a[i], b[i]);
    auto [it2, new2] = ba.emplace(b[i], a[i]);
    if (it1->second != b[i] || it2->second != a[i]) return false;
  }
  return true;
}

inline std::filesystem::path temp_dir(const std::string& name) {
  auto dir = std::filesystem::temp_directory_path() / ("bubbleseg_test_" + name);
  std::filesystem::remove_all(dir);
  std::filesystem::create_directories(dir);
  return dir;
}


/// Two touching bubbles from the generator, with probability maps that mark
/// the region exactly and, as boundary, only the contact line between them.
struct TangentPair {
  bubbleseg::AnnotationSet truth;
  bubbleseg::ProbMap region;
  bubbleseg::ProbMap boundary;
  std::pair<int, int> centers[2];
};

inline TangentPair tangent_pair(std::uint64_t seed) {
  bubbleseg::synth::SynthConfig sc;
  sc.n_bubbles_min = sc.n_bubbles_max = 0;
  sc.touching_pairs = 1;
  sc.seed = seed;
  const auto g = bubbleseg::synth::generate(sc, "pair");
  const int w = sc.width, h = sc.height;
  TangentPair t{g.annotation, bubbleseg::ProbMap(w, h), bubbleseg::ProbMap(w, h), {}};
  std::vector<int> owner(static_cast<std::size_t>(w) * h, 0);
  for (std::size_t k = 0; k < g.annotation.instances.size(); ++k)
    for (auto p : g.annotation.instances[k].pixels()) owner[p] = static_cast<int>(k) + 1;
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) {
      const int self = owner[static_cast<std::size_t>(y) * w + x];
      if (!self) continue;
      t.region(x, y) = 1.0f;
      for (int dy = -1; dy <= 1; ++dy)
        for (int dx = -1; dx <= 1; ++dx) {
          const int nx = x + dx, ny = y + dy;
          if (nx < 0 || ny < 0 || nx >= w || ny >= h) continue;
          const int other = owner[static_cast<std::size_t>(ny) * w + nx];
          if (other && other != self) t.boundary(x, y) = 1.0f;
        }
    }
  for (std::size_t k = 0; k < g.shapes.size() && k < 2; ++k)
    t.centers[k] = {static_cast<int>(std::lround(g.shapes[k].cx)), static_cast<int>(std::lround(g.shapes[k].cy))};
  return t;
}

/// One row of a stored counts table together with the recalls printed next to it.
struct ReferenceRow {
  std::string image_id;
  std::vector<long long> matched;
  long long gt = 0;
  long long tp_pixels = 0;
  long long gt_pixels = 0;
  std::vector<std::string> printed;  // instance recalls, then pixel recall when present
};

inline std::vector<ReferenceRow> read_reference(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  auto split = [](const std::string& line) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string c;
    while (std::getline(ss, c, ',')) cells.push_back(c);
    return cells;
  };
  std::string line;
  std::getline(in, line);
  const auto header = split(line);
  std::vector<ReferenceRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto cells = split(line);
    ReferenceRow r;
    r.image_id = cells[0];
    for (std::size_t c = 1; c < header.size(); ++c) {
      const auto& h = header[c];
      if (h.rfind("iou_", 0) == 0) r.matched.push_back(std::stoll(cells[c]));
      else if (h == "gt") r.gt = std::stoll(cells[c]);
      else if (h == "tp_pixels") r.tp_pixels = std::stoll(cells[c]);
      else if (h == "gt_pixels") r.gt_pixels = std::stoll(cells[c]);
      else if (h.rfind("printed_", 0) == 0) r.printed.push_back(cells[c]);
    }
    rows.push_back(std::move(r));
  }
  return rows;
}

/// num/den rounded half up to two decimals, in exact integer arithmetic.
inline std::string ratio2(long long num, long long den) {
  const long long hundredths = (200 * num + den) / (2 * den);
  return std::to_string(hundredths / 100) + "." + (hundredths % 100 < 10 ? "0" : "") + std::to_string(hundredths % 100);
}

struct CommandResult {
  int exit_code = -1;
  std::string output;  // stdout and stderr interleaved
};

inline CommandResult run_command(const std::string& cmd) {
  CommandResult r;
  FILE* pipe = ::popen((cmd + " 2>&1").c_str(), "r");
  if (!pipe) return r;
  char buf[4096];
  std::size_t n;
  while ((n = std::fread(buf, 1, sizeof buf, pipe)) > 0) r.output.append(buf, n);
  const int status = ::pclose(pipe);
  r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  return r;
}

}  // namespace testing
