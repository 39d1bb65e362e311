// Copyright 2026 The xlom Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Independent reference computations used by the unit and acceptance tests.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <limits>
#include <map>
#include <utility>
#include <vector>

namespace xlom::oracle {

using Points = std::vector<std::vector<double>>;

// Within-cluster sum of squares of a labelling, with centroids as exact means.
inline double partition_cost(const Points& pts, const std::vector<int>& labels, int k) {
  const std::size_t d = pts.front().size();
  std::vector<std::vector<double>> sum(k, std::vector<double>(d, 0.0));
  std::vector<int> count(k, 0);
  for (std::size_t i = 0; i < pts.size(); ++i) {
    ++count[labels[i]];
    for (std::size_t j = 0; j < d; ++j) sum[labels[i]][j] += pts[i][j];
  }
  double cost = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const int c = labels[i];
    for (std::size_t j = 0; j < d; ++j) {
      const double diff = pts[i][j] - sum[c][j] / count[c];
      cost += diff * diff;
    }
  }
  return cost;
}

// Minimum WCSS over every partition into exactly k non-empty blocks,
// enumerated as restricted growth strings.
inline double exhaustive_optimum(const Points& pts, int k) {
  const int n = static_cast<int>(pts.size());
  std::vector<int> labels(n, 0);
  double best = std::numeric_limits<double>::infinity();
  std::function<void(int, int)> rec = [&](int i, int used) {
    if (n - i < k - used) return;
    if (i == n) {
      if (used == k) best = std::min(best, partition_cost(pts, labels, k));
      return;
    }
    for (int c = 0; c < std::min(used + 1, k); ++c) {
      labels[i] = c;
      rec(i + 1, std::max(used, c + 1));
    }
  };
  rec(0, 0);
  return best;
}

// Pair counts between two labellings of the same items, by nested loops.
inline std::map<std::pair<unsigned, unsigned>, std::size_t> pair_counts(const std::vector<unsigned>& a,
                                                                        const std::vector<unsigned>& b) {
  std::map<std::pair<unsigned, unsigned>, std::size_t> out;
  unsigned ka = 0, kb = 0;
  for (auto x : a) ka = std::max(ka, x + 1);
  for (auto x : b) kb = std::max(kb, x + 1);
  for (unsigned i = 0; i < ka; ++i) {
    for (unsigned j = 0; j < kb; ++j) {
      std::size_t n = 0;
      for (std::size_t s = 0; s < a.size(); ++s) n += (a[s] == i && b[s] == j) ? 1 : 0;
      if (n > 0) out[{i, j}] = n;
    }
  }
  return out;
}

// Quantile by the textbook definition: sort a copy, then interpolate between
// the order statistics around rank p*(n-1).
inline double quantile(std::vector<double> v, double p) {
  std::sort(v.begin(), v.end());
  const double rank = p * static_cast<double>(v.size() - 1);
  const auto below = static_cast<std::size_t>(std::floor(rank));
  const auto above = static_cast<std::size_t>(std::ceil(rank));
  const double w = rank - std::floor(rank);
  return v[below] + w * (v[above] - v[below]);
}

}  // namespace xlom::oracle
