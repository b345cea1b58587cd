#pragma once

// Fixed 30-case corpus of binary 2D mask pairs for metric oracle checks.

#include <cstdint>
#include <string>
#include <vector>

#include "m3hl/rng.hpp"

namespace corpus {

struct Case {
  std::string name;
  int h = 0, w = 0;
  std::vector<std::uint8_t> pred, gt;
};

inline std::vector<std::uint8_t> rect(int h, int w, int y0, int x0, int y1, int x1) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(h * w), 0);
  for (int y = y0; y < y1; ++y)
    for (int x = x0; x < x1; ++x) m[y * w + x] = 1;
  return m;
}

inline std::vector<std::uint8_t> disk(int h, int w, double cy, double cx, double r) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(h * w), 0);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x) m[y * w + x] = (y - cy) * (y - cy) + (x - cx) * (x - cx) <= r * r;
  return m;
}

inline std::vector<std::uint8_t> noise(int h, int w, double p, m3hl::SplitMix64& rng) {
  std::vector<std::uint8_t> m(static_cast<std::size_t>(h * w));
  for (auto& v : m) v = rng.uniform() < p;
  return m;
}

inline Case translated_square() { return {"translated_square", 8, 8, rect(8, 8, 2, 2, 5, 5), rect(8, 8, 2, 3, 5, 6)}; }
inline Case identical_mask() { return {"identical_mask", 12, 12, disk(12, 12, 5.5, 6, 4), disk(12, 12, 5.5, 6, 4)}; }

inline std::vector<Case> build() {
  std::vector<Case> cases;
  cases.push_back(translated_square());
  cases.push_back(identical_mask());
  cases.push_back({"both_empty", 6, 6, rect(6, 6, 0, 0, 0, 0), rect(6, 6, 0, 0, 0, 0)});
  cases.push_back({"pred_empty", 6, 6, rect(6, 6, 0, 0, 0, 0), rect(6, 6, 1, 1, 3, 4)});
  cases.push_back({"gt_empty", 6, 6, rect(6, 6, 2, 2, 4, 4), rect(6, 6, 0, 0, 0, 0)});
  cases.push_back({"single_pixels", 9, 9, rect(9, 9, 1, 1, 2, 2), rect(9, 9, 7, 5, 8, 6)});
  cases.push_back({"full_vs_full", 5, 7, rect(5, 7, 0, 0, 5, 7), rect(5, 7, 0, 0, 5, 7)});
  cases.push_back({"full_vs_corner", 6, 6, rect(6, 6, 0, 0, 6, 6), rect(6, 6, 0, 0, 2, 2)});
  cases.push_back({"nested_squares", 16, 16, rect(16, 16, 2, 2, 14, 14), rect(16, 16, 5, 5, 11, 11)});
  cases.push_back({"disjoint_rects", 10, 20, rect(10, 20, 1, 1, 5, 5), rect(10, 20, 4, 12, 9, 19)});
  cases.push_back({"edge_touching", 8, 8, rect(8, 8, 0, 0, 8, 3), rect(8, 8, 0, 1, 8, 4)});
  cases.push_back({"thin_lines", 12, 12, rect(12, 12, 6, 0, 7, 12), rect(12, 12, 0, 6, 12, 7)});
  cases.push_back({"diagonal_shift", 14, 14, disk(14, 14, 6, 6, 3.5), disk(14, 14, 8, 8, 3.5)});
  cases.push_back({"scaled_disk", 20, 20, disk(20, 20, 10, 10, 7), disk(20, 20, 10, 10, 4.2)});
  cases.push_back({"one_row_offset", 4, 10, rect(4, 10, 0, 2, 2, 8), rect(4, 10, 1, 2, 3, 8)});
  m3hl::SplitMix64 rng(20240611);
  for (int i = 0; i < 8; ++i) {
    const int h = 6 + static_cast<int>(rng.bounded(10)), w = 6 + static_cast<int>(rng.bounded(10));
    const double p = rng.uniform(0.15, 0.7);
    cases.push_back({"random_noise_" + std::to_string(i), h, w, noise(h, w, p, rng), noise(h, w, p, rng)});
  }
  for (int i = 0; i < 7; ++i) {
    const int h = 16, w = 16;
    auto a = disk(h, w, rng.uniform(4, 12), rng.uniform(4, 12), rng.uniform(2, 6));
    auto b = rect(h, w, static_cast<int>(rng.bounded(6)), static_cast<int>(rng.bounded(6)),
                  8 + static_cast<int>(rng.bounded(8)), 8 + static_cast<int>(rng.bounded(8)));
    cases.push_back({"disk_vs_rect_" + std::to_string(i), h, w, a, b});
  }
  return cases;
}

}  // namespace corpus
