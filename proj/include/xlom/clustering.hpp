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

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "xlom/corpus.hpp"
#include "xlom/embeddings.hpp"
#include "xlom/error.hpp"
#include "xlom/rng.hpp"

namespace xlom::clustering {

using embeddings::EmbeddingMatrix;
using json = nlohmann::json;

inline constexpr const char* kAicFormula = "n*d*ln(W/(n*d)) + 2*k*d";

struct KMeansOptions {
  std::size_t n_init = 10;
  std::size_t max_iter = 300;
  double tol = 1e-4;  // relative inertia improvement below which Lloyd stops
};

struct ClusteringRun {
  std::size_t k = 0;
  std::size_t dim = 0;
  std::uint64_t seed = 0;
  std::vector<double> centroids;  // k x dim, row-major
  std::vector<std::string> ids;
  std::vector<std::uint32_t> assignments;  // parallel to ids
  double inertia = 0.0;
  double aic = 0.0;
  bool aic_degenerate = false;
  std::size_t iterations = 0;
  bool converged = false;
  std::size_t best_restart = 0;
  // Inertia after every assignment step, one trace per restart.
  std::vector<std::vector<double>> inertia_traces;

  std::span<const double> centroid(std::size_t c) const { return {centroids.data() + c * dim, dim}; }

  std::vector<std::size_t> cluster_sizes() const {
    std::vector<std::size_t> sizes(k, 0);
    for (auto a : assignments) ++sizes[a];
    return sizes;
  }

  std::map<std::string, std::uint32_t> assignment_map() const {
    std::map<std::string, std::uint32_t> m;
    for (std::size_t i = 0; i < ids.size(); ++i) m.emplace(ids[i], assignments[i]);
    return m;
  }
};

// ---------------------------------------------------------------------------
// AIC

struct AicValue {
  double value = 0.0;
  bool degenerate = false;  // W == 0: log term undefined, value is the lowest double
};

// Spherical-Gaussian AIC with k*d free parameters and constants dropped:
//   AIC = n*d*ln(W/(n*d)) + 2*k*d
inline AicValue aic(double inertia, std::size_t n, std::size_t d, std::size_t k) {
  require(n > 0 && d > 0, "aic: n*d must be positive");
  require(inertia >= 0.0, "aic: negative inertia");
  if (inertia == 0.0) return {std::numeric_limits<double>::lowest(), true};
  const double nd = static_cast<double>(n) * static_cast<double>(d);
  return {nd * std::log(inertia / nd) + 2.0 * static_cast<double>(k) * static_cast<double>(d), false};
}

inline AicValue aic(const ClusteringRun& run, std::size_t n, std::size_t d) { return aic(run.inertia, n, d, run.k); }

// ---------------------------------------------------------------------------
// Lloyd iterations

namespace detail {

inline double sq_dist(std::span<const float> x, const double* c, std::size_t dim) {
  double s = 0.0;
  for (std::size_t j = 0; j < dim; ++j) {
    const double diff = static_cast<double>(x[j]) - c[j];
    s += diff * diff;
  }
  return s;
}

// Nearest centroid per point, ties to the lowest index. Returns inertia.
inline double assign_points(const EmbeddingMatrix& X, const std::vector<double>& centroids, std::size_t k,
                            std::vector<std::uint32_t>& labels, std::vector<double>& dists) {
  const std::size_t dim = X.dim();
  labels.resize(X.size());
  dists.resize(X.size());
  double inertia = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const auto x = X.row(i);
    double best = std::numeric_limits<double>::infinity();
    std::uint32_t arg = 0;
    for (std::size_t c = 0; c < k; ++c) {
      const double d = sq_dist(x, centroids.data() + c * dim, dim);
      if (d < best) {
        best = d;
        arg = static_cast<std::uint32_t>(c);
      }
    }
    labels[i] = arg;
    dists[i] = best;
    inertia += best;
  }
  return inertia;
}

// Cluster means accumulated in point-index order.
inline std::vector<double> means(const EmbeddingMatrix& X, const std::vector<std::uint32_t>& labels, std::size_t k,
                                 std::vector<std::size_t>& counts) {
  const std::size_t dim = X.dim();
  std::vector<double> sums(k * dim, 0.0);
  counts.assign(k, 0);
  for (std::size_t i = 0; i < X.size(); ++i) {
    const auto x = X.row(i);
    double* s = sums.data() + labels[i] * dim;
    for (std::size_t j = 0; j < dim; ++j) s[j] += x[j];
    ++counts[labels[i]];
  }
  for (std::size_t c = 0; c < k; ++c) {
    if (counts[c] == 0) continue;
    const double inv = 1.0 / static_cast<double>(counts[c]);
    for (std::size_t j = 0; j < dim; ++j) sums[c * dim + j] *= inv;
  }
  return sums;
}

inline double labelled_inertia(const EmbeddingMatrix& X, const std::vector<double>& centroids,
                               const std::vector<std::uint32_t>& labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < X.size(); ++i) s += sq_dist(X.row(i), centroids.data() + labels[i] * X.dim(), X.dim());
  return s;
}

// Recomputes centroids as means of `labels`. Each empty cluster takes the
// point farthest from its own centroid (among clusters with >= 2 members,
// ties to the lowest point index); means are recomputed until none is empty.
inline std::vector<double> update_centroids(const EmbeddingMatrix& X, std::vector<std::uint32_t>& labels,
                                            std::size_t k) {
  std::vector<std::size_t> counts;
  auto centroids = means(X, labels, k, counts);
  while (true) {
    auto empty = std::find(counts.begin(), counts.end(), std::size_t{0});
    if (empty == counts.end()) return centroids;
    const auto target = static_cast<std::uint32_t>(empty - counts.begin());
    double far = -1.0;
    std::size_t pick = X.size();
    for (std::size_t i = 0; i < X.size(); ++i) {
      if (counts[labels[i]] < 2) continue;
      const double d = sq_dist(X.row(i), centroids.data() + labels[i] * X.dim(), X.dim());
      if (d > far) {
        far = d;
        pick = i;
      }
    }
    require(pick < X.size(), "cannot repair empty cluster ", target);
    --counts[labels[pick]];
    labels[pick] = target;
    centroids = means(X, labels, k, counts);
  }
}

// Sample an index with probability proportional to weights[i]; weights sum to total > 0.
inline std::size_t sample_weighted(const std::vector<double>& weights, double total, SplitMix64& rng) {
  const double r = rng.uniform() * total;
  double cum = 0.0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    cum += weights[i];
    if (cum > r) return i;
  }
  for (std::size_t i = weights.size(); i-- > 0;) {  // rounding at the top end
    if (weights[i] > 0.0) return i;
  }
  return 0;
}

// k-means++: first centre uniform, each further centre drawn with probability
// proportional to its squared distance from the nearest centre so far.
inline std::vector<double> kmeanspp_init(const EmbeddingMatrix& X, std::size_t k, SplitMix64& rng) {
  const std::size_t n = X.size();
  const std::size_t dim = X.dim();
  std::vector<double> centroids;
  centroids.reserve(k * dim);
  auto push = [&](std::size_t i) {
    for (float v : X.row(i)) centroids.push_back(v);
  };
  push(rng.below(n));
  std::vector<double> closest(n, std::numeric_limits<double>::infinity());
  for (std::size_t c = 1; c < k; ++c) {
    const double* last = centroids.data() + (c - 1) * dim;
    double total = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      closest[i] = std::min(closest[i], sq_dist(X.row(i), last, dim));
      total += closest[i];
    }
    push(total > 0.0 ? sample_weighted(closest, total, rng) : rng.below(n));
  }
  return centroids;
}

struct LloydResult {
  std::vector<double> centroids;
  std::vector<std::uint32_t> labels;
  double inertia = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
  std::vector<double> trace;
};

// Relative slack allowed for floating-point rounding when checking that
// inertia never increases between iterations.
inline constexpr double kMonotoneSlack = 1e-12;

inline LloydResult lloyd(const EmbeddingMatrix& X, std::size_t k, std::vector<double> centroids,
                         const KMeansOptions& options) {
  LloydResult r;
  std::vector<double> dists;
  r.inertia = assign_points(X, centroids, k, r.labels, dists);
  r.trace.push_back(r.inertia);
  while (r.iterations < options.max_iter) {
    if (r.inertia == 0.0) {
      r.converged = true;
      break;
    }
    auto labels = r.labels;
    centroids = update_centroids(X, labels, k);
    std::vector<std::uint32_t> next;
    const double inertia = assign_points(X, centroids, k, next, dists);
    ++r.iterations;
    if (inertia > r.inertia * (1.0 + kMonotoneSlack)) {
      fail("k-means inertia increased from ", r.inertia, " to ", inertia, " at iteration ", r.iterations);
    }
    r.trace.push_back(inertia);
    const bool unchanged = next == labels;
    const double improvement = r.inertia - inertia;
    r.labels = std::move(next);
    r.inertia = inertia;
    if (unchanged || improvement <= options.tol * (r.inertia + improvement)) {
      r.converged = true;
      break;
    }
  }
  // Duplicate points can leave a cluster with no nearest member; hand it one.
  std::vector<std::size_t> counts(k, 0);
  for (auto l : r.labels) ++counts[l];
  if (std::find(counts.begin(), counts.end(), std::size_t{0}) != counts.end()) {
    centroids = update_centroids(X, r.labels, k);
    r.inertia = labelled_inertia(X, centroids, r.labels);
    r.trace.push_back(r.inertia);
  }
  r.centroids = std::move(centroids);
  return r;
}

}  // namespace detail

// Best-of-restarts Lloyd from k-means++ seeding; restart r uses seed + r.
// An optional warm start (k x dim centroids) runs as one extra restart.
inline ClusteringRun kmeans_fit(const EmbeddingMatrix& X, std::size_t k, std::uint64_t seed,
                                const KMeansOptions& options = {},
                                const std::optional<std::vector<double>>& warm_start = std::nullopt) {
  require(!X.empty(), "kmeans: empty matrix");
  require(k >= 1, "kmeans: k must be at least 1");
  require(k <= X.size(), "kmeans: k = ", k, " exceeds the number of rows (", X.size(), ")");
  require(options.max_iter >= 1, "kmeans: max_iter must be at least 1");
  require(options.tol >= 0.0, "kmeans: tol must be non-negative");
  require(options.n_init >= 1 || warm_start, "kmeans: n_init must be at least 1");
  if (warm_start) require(warm_start->size() == k * X.dim(), "kmeans: warm start has wrong shape");

  ClusteringRun run;
  run.k = k;
  run.dim = X.dim();
  run.seed = seed;
  run.ids = X.ids();
  bool have_best = false;
  const std::size_t restarts = options.n_init + (warm_start ? 1 : 0);
  for (std::size_t r = 0; r < restarts; ++r) {
    std::vector<double> init;
    if (r < options.n_init) {
      SplitMix64 rng(seed + r);
      init = detail::kmeanspp_init(X, k, rng);
    } else {
      init = *warm_start;
    }
    auto result = detail::lloyd(X, k, std::move(init), options);
    run.inertia_traces.push_back(result.trace);
    if (!have_best || result.inertia < run.inertia) {
      have_best = true;
      run.inertia = result.inertia;
      run.centroids = std::move(result.centroids);
      run.assignments = std::move(result.labels);
      run.iterations = result.iterations;
      run.converged = result.converged;
      run.best_restart = r;
    }
  }
  const auto a = aic(run, X.size(), X.dim());
  run.aic = a.value;
  run.aic_degenerate = a.degenerate;
  return run;
}

// Nearest-centroid assignment for new points, ties to the lowest index.
inline std::vector<std::uint32_t> assign(const EmbeddingMatrix& X, const ClusteringRun& run) {
  require(X.dim() == run.dim, "assign: dim mismatch, points have ", X.dim(), ", run has ", run.dim);
  std::vector<std::uint32_t> labels;
  std::vector<double> dists;
  detail::assign_points(X, run.centroids, run.k, labels, dists);
  return labels;
}

// The run's centroids plus the point farthest from its assigned centroid
// (ties to the lowest index): a (k+1)-centroid start whose inertia cannot
// exceed the run's.
inline std::vector<double> nested_seed(const EmbeddingMatrix& X, const ClusteringRun& run) {
  double far = -1.0;
  std::size_t pick = 0;
  for (std::size_t i = 0; i < X.size(); ++i) {
    const double d = detail::sq_dist(X.row(i), run.centroids.data() + run.assignments[i] * run.dim, run.dim);
    if (d > far) {
      far = d;
      pick = i;
    }
  }
  auto seed = run.centroids;
  for (float v : X.row(pick)) seed.push_back(v);
  return seed;
}

// ---------------------------------------------------------------------------
// k sweep

struct SweepResult {
  std::vector<ClusteringRun> runs;
  std::map<std::size_t, double> inertia_curve;
  std::map<std::size_t, double> aic_curve;
  std::size_t selected_k = 0;

  const ClusteringRun& run_for(std::size_t k) const {
    for (const auto& r : runs) {
      if (r.k == k) return r;
    }
    fail("no run for k = ", k);
  }
};

// Global AIC minimum; ties resolve to the smallest k.
inline std::size_t select_k(const std::map<std::size_t, double>& aic_curve) {
  require(!aic_curve.empty(), "select_k: empty curve");
  auto best = aic_curve.begin();
  for (auto it = aic_curve.begin(); it != aic_curve.end(); ++it) {
    if (it->second < best->second) best = it;
  }
  return best->first;
}

inline SweepResult sweep(const EmbeddingMatrix& X, std::size_t k_min, std::size_t k_max, std::uint64_t seed,
                         const KMeansOptions& options = {}, bool nested_seeding = true) {
  require(!X.empty(), "sweep: empty matrix");
  require(k_min >= 1 && k_min <= k_max, "sweep: need 1 <= k_min <= k_max, got ", k_min, "..", k_max);
  require(k_max <= X.size(), "sweep: k range ", k_min, "..", k_max, " exceeds the number of rows (", X.size(), ")");
  SweepResult out;
  for (std::size_t k = k_min; k <= k_max; ++k) {
    std::optional<std::vector<double>> warm;
    if (nested_seeding && !out.runs.empty()) warm = nested_seed(X, out.runs.back());
    auto run = kmeans_fit(X, k, seed, options, warm);
    out.inertia_curve[k] = run.inertia;
    out.aic_curve[k] = run.aic;
    out.runs.push_back(std::move(run));
  }
  out.selected_k = select_k(out.aic_curve);
  return out;
}

inline json curves_to_json(const SweepResult& s, std::size_t n, std::size_t dim) {
  json ks = json::array(), inertia = json::array(), aic = json::array(), degenerate = json::array();
  for (const auto& r : s.runs) {
    ks.push_back(r.k);
    inertia.push_back(r.inertia);
    aic.push_back(r.aic_degenerate ? json(nullptr) : json(r.aic));
    degenerate.push_back(r.aic_degenerate);
  }
  return {{"k", ks},
          {"inertia", inertia},
          {"aic", aic},
          {"aic_degenerate", degenerate},
          {"selected_k", s.selected_k},
          {"aic_formula", kAicFormula},
          {"n", n},
          {"dim", dim}};
}

// ---------------------------------------------------------------------------
// Persistence: meta.json + centroids.emb/centroids.ids + assignments.jsonl

inline void write_run(const std::filesystem::path& dir, const ClusteringRun& run, const KMeansOptions& options = {}) {
  std::filesystem::create_directories(dir);
  const json meta = {{"k", run.k},
                     {"dim", run.dim},
                     {"seed", run.seed},
                     {"n", run.ids.size()},
                     {"inertia", run.inertia},
                     {"aic", run.aic_degenerate ? json(nullptr) : json(run.aic)},
                     {"aic_degenerate", run.aic_degenerate},
                     {"aic_formula", kAicFormula},
                     {"iterations", run.iterations},
                     {"converged", run.converged},
                     {"n_init", options.n_init},
                     {"max_iter", options.max_iter},
                     {"tol", options.tol}};
  {
    std::ofstream out(dir / "meta.json", std::ios::binary | std::ios::trunc);
    require(out.good(), "cannot write ", (dir / "meta.json").string());
    out << meta.dump(2) << '\n';
  }
  EmbeddingMatrix centroids(run.dim, "centroids");
  std::vector<float> row(run.dim);
  for (std::size_t c = 0; c < run.k; ++c) {
    const auto src = run.centroid(c);
    std::transform(src.begin(), src.end(), row.begin(), [](double v) { return static_cast<float>(v); });
    centroids.append("c" + std::to_string(c), row);
  }
  embeddings::write_embeddings(centroids, dir / "centroids.emb", dir / "centroids.ids");
  std::ofstream out(dir / "assignments.jsonl", std::ios::binary | std::ios::trunc);
  for (std::size_t i = 0; i < run.ids.size(); ++i) {
    out << json{{"sent_id", run.ids[i]}, {"cluster", run.assignments[i]}}.dump() << '\n';
  }
}

inline ClusteringRun read_run(const std::filesystem::path& dir) {
  std::ifstream in(dir / "meta.json", std::ios::binary);
  require(in.good(), "cannot open ", (dir / "meta.json").string());
  const json meta = json::parse(in);
  ClusteringRun run;
  run.k = meta.at("k").get<std::size_t>();
  run.dim = meta.at("dim").get<std::size_t>();
  run.seed = meta.at("seed").get<std::uint64_t>();
  run.inertia = meta.at("inertia").get<double>();
  run.aic_degenerate = meta.at("aic_degenerate").get<bool>();
  run.aic = run.aic_degenerate ? std::numeric_limits<double>::lowest() : meta.at("aic").get<double>();
  run.iterations = meta.at("iterations").get<std::size_t>();
  run.converged = meta.at("converged").get<bool>();
  const auto centroids = embeddings::load_embeddings(dir / "centroids.emb", dir / "centroids.ids", false);
  require(centroids.size() == run.k && centroids.dim() == run.dim, "centroid matrix does not match meta.json");
  for (float v : centroids.data()) run.centroids.push_back(v);
  corpus::read_jsonl(dir / "assignments.jsonl", [&](const json& j) {
    const auto c = j.at("cluster").get<std::uint32_t>();
    require(c < run.k, "assignment index ", c, " out of range for k = ", run.k);
    run.ids.push_back(j.at("sent_id").get<std::string>());
    run.assignments.push_back(c);
  });
  return run;
}

}  // namespace xlom::clustering
