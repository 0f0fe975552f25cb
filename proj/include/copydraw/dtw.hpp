#pragma once

// Dynamic time warping of a drawn trace against its template, open-ended on
// the template axis so unfinished drawings match only a template prefix.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <utility>
#include <vector>

#include "copydraw/error.hpp"
#include "copydraw/types.hpp"

namespace copydraw {

struct DtwAlignment {
  std::vector<std::pair<std::size_t, std::size_t>> path;  // (trace index, template index)
  double total_cost = 0.0;
  std::size_t n_c = 0;                    // number of template points up to the last matched one
  std::vector<double> per_trace_distance;  // one per trace sample
};

inline double euclidean(const Point2& a, const Point2& b) { return std::hypot(a.x - b.x, a.y - b.y); }

inline DtwAlignment align(const std::vector<Point2>& trace, const std::vector<Point2>& templ) {
  if (trace.size() < 2 || templ.size() < 2) fail(Errc::TooFewPoints, "both point lists need at least 2 points");
  for (const auto* pts : {&trace, &templ})
    for (const auto& p : *pts)
      if (!std::isfinite(p.x) || !std::isfinite(p.y)) fail(Errc::TooFewPoints, "non-finite coordinate");

  const std::size_t n = trace.size(), m = templ.size();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> cost(n * m), acc(n * m, inf);
  auto at = [m](std::size_t i, std::size_t j) { return i * m + j; };
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < m; ++j) cost[at(i, j)] = euclidean(trace[i], templ[j]);

  acc[0] = cost[0];
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (i == 0 && j == 0) continue;
      double best = inf;
      if (i > 0 && j > 0) best = std::min(best, acc[at(i - 1, j - 1)]);
      if (i > 0) best = std::min(best, acc[at(i - 1, j)]);
      if (j > 0) best = std::min(best, acc[at(i, j - 1)]);
      acc[at(i, j)] = cost[at(i, j)] + best;
    }
  }

  // open end: lowest-cost end column, first one on ties
  std::size_t j_end = 0;
  for (std::size_t j = 1; j < m; ++j)
    if (acc[at(n - 1, j)] < acc[at(n - 1, j_end)]) j_end = j;

  DtwAlignment a;
  a.total_cost = acc[at(n - 1, j_end)];
  a.n_c = j_end + 1;
  std::size_t i = n - 1, j = j_end;
  a.path.emplace_back(i, j);
  while (i > 0 || j > 0) {
    if (i == 0) {
      --j;
    } else if (j == 0) {
      --i;
    } else {
      const double d = acc[at(i - 1, j - 1)], up = acc[at(i - 1, j)], left = acc[at(i, j - 1)];
      if (d <= up && d <= left) {
        --i;
        --j;
      } else if (up <= left) {
        --i;
      } else {
        --j;
      }
    }
    a.path.emplace_back(i, j);
  }
  std::reverse(a.path.begin(), a.path.end());

  std::vector<double> sum(n, 0.0);
  std::vector<std::size_t> count(n, 0);
  for (const auto& [pi, pj] : a.path) {
    sum[pi] += cost[at(pi, pj)];
    ++count[pi];
  }
  a.per_trace_distance.resize(n);
  for (std::size_t k = 0; k < n; ++k) a.per_trace_distance[k] = sum[k] / static_cast<double>(count[k]);
  return a;
}

/// Speed-accuracy scalar: fraction of template covered over mean trace-to-template
/// distance. A zero mean distance yields the `perfect` sentinel with value +inf.
struct TaskPerformance {
  double fraction_matched = 0.0;
  double mean_distance = 0.0;
  double value = 0.0;
  bool perfect = false;
  double total_cost = 0.0;
  std::size_t n_c = 0;
  std::size_t n_total = 0;
};

inline TaskPerformance task_performance(const std::vector<Point2>& trace, const std::vector<Point2>& templ) {
  const auto a = align(trace, templ);
  TaskPerformance p;
  p.total_cost = a.total_cost;
  p.n_c = a.n_c;
  p.n_total = templ.size();
  p.fraction_matched = static_cast<double>(a.n_c) / static_cast<double>(templ.size());
  double s = 0.0;
  for (double d : a.per_trace_distance) s += d;
  p.mean_distance = s / static_cast<double>(trace.size());
  if (p.mean_distance == 0.0) {
    p.perfect = true;
    p.value = std::numeric_limits<double>::infinity();
  } else {
    p.value = p.fraction_matched / p.mean_distance;
  }
  return p;
}

inline TaskPerformance task_performance(const Trace& trace) { return task_performance(trace.points(), trace.templ); }

}  // namespace copydraw
