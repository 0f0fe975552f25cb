#include <gtest/gtest.h>

#include "test_util.hpp"

using namespace copydraw;

namespace {

std::vector<Point2> random_points(Rng& rng, std::size_t n, double scale = 10.0) {
  std::vector<Point2> p;
  for (std::size_t i = 0; i < n; ++i) p.push_back({rng.uniform(0, scale), rng.uniform(0, scale)});
  return p;
}

void expect_valid_path(const DtwAlignment& a, std::size_t n, std::size_t m) {
  ASSERT_FALSE(a.path.empty());
  EXPECT_EQ(a.path.front(), (std::pair<std::size_t, std::size_t>{0, 0}));
  EXPECT_EQ(a.path.back().first, n - 1);
  EXPECT_EQ(a.path.back().second + 1, a.n_c);
  EXPECT_LE(a.n_c, m);
  for (std::size_t k = 1; k < a.path.size(); ++k) {
    const auto di = a.path[k].first - a.path[k - 1].first;
    const auto dj = a.path[k].second - a.path[k - 1].second;
    EXPECT_TRUE((di == 1 && dj == 0) || (di == 0 && dj == 1) || (di == 1 && dj == 1));
  }
  EXPECT_EQ(a.per_trace_distance.size(), n);
}

}  // namespace

TEST(Dtw, IdentityAlignment) {
  Rng rng(1);
  const auto p = random_points(rng, 8);
  const auto a = align(p, p);
  EXPECT_EQ(a.total_cost, 0.0);
  EXPECT_EQ(a.n_c, p.size());
  ASSERT_EQ(a.path.size(), p.size());
  for (std::size_t k = 0; k < p.size(); ++k) EXPECT_EQ(a.path[k], (std::pair{k, k}));
  for (double d : a.per_trace_distance) EXPECT_EQ(d, 0.0);
}

TEST(Dtw, PrefixMatching) {
  std::vector<Point2> templ;
  for (int i = 0; i < 10; ++i) templ.push_back({3.0 * i, std::sin(i)});
  for (std::size_t k = 2; k <= templ.size(); ++k) {
    const std::vector<Point2> trace(templ.begin(), templ.begin() + static_cast<long>(k));
    const auto a = align(trace, templ);
    EXPECT_EQ(a.n_c, k);
    EXPECT_EQ(a.total_cost, 0.0);
    EXPECT_DOUBLE_EQ(task_performance(trace, templ).fraction_matched, static_cast<double>(k) / 10.0);
  }
}

TEST(Dtw, FourVersusFiveExample) {
  const std::vector<Point2> trace = {{0, 0}, {1, 0}, {2, 0}, {3, 0}};
  const std::vector<Point2> templ = {{0, 0}, {1, 0}, {2, 0}, {3, 0}, {4, 0}};
  const auto a = align(trace, templ);
  EXPECT_EQ(a.n_c, 4u);
  const auto tp = task_performance(trace, templ);
  EXPECT_EQ(tp.mean_distance, 0.0);
  EXPECT_TRUE(tp.perfect);

  const std::vector<Point2> perturbed = {{0, 0.3}, {1.4, -0.2}, {1.9, 0.5}, {3.6, 0.1}};
  const auto p = align(perturbed, templ);
  const auto bf = brute_force_dtw(perturbed, templ);
  EXPECT_EQ(p.total_cost, bf.total_cost);
  EXPECT_EQ(p.n_c, bf.n_c);
}

TEST(Dtw, AllTwoByTwoIntegerSetsMatchBruteForce) {
  // every 2-point trace vs 2-point template with integer coordinates in [0, 2]
  std::vector<Point2> grid;
  for (int x = 0; x <= 2; ++x)
    for (int y = 0; y <= 2; ++y) grid.push_back({double(x), double(y)});
  std::size_t cases = 0;
  for (const auto& a0 : grid)
    for (const auto& a1 : grid)
      for (const auto& b0 : grid)
        for (const auto& b1 : grid) {
          const std::vector<Point2> a = {a0, a1}, b = {b0, b1};
          const auto dp = align(a, b);
          const auto bf = brute_force_dtw(a, b);
          ASSERT_EQ(dp.total_cost, bf.total_cost);
          ASSERT_EQ(dp.n_c, bf.n_c);
          ++cases;
        }
  EXPECT_EQ(cases, 6561u);
}

TEST(Dtw, AsymmetricThreeVersusFive) {
  const std::vector<Point2> trace = {{0, 0}, {2, 1}, {3, 3}};
  const std::vector<Point2> templ = {{0, 0}, {1, 1}, {2, 2}, {3, 3}, {4, 4}};
  const auto dp = align(trace, templ);
  const auto bf = brute_force_dtw(trace, templ);
  EXPECT_EQ(dp.total_cost, bf.total_cost);
  EXPECT_EQ(dp.n_c, bf.n_c);
  EXPECT_EQ(dp.n_c, 4u);
}

TEST(Dtw, RandomSmallCasesMatchBruteForce) {
  Rng rng(42);
  for (int rep = 0; rep < 300; ++rep) {
    const auto n = 2 + rng.below(5), m = 2 + rng.below(5);
    const auto a = random_points(rng, n), b = random_points(rng, m);
    const auto dp = align(a, b);
    const auto bf = brute_force_dtw(a, b);
    ASSERT_EQ(dp.total_cost, bf.total_cost);
    ASSERT_EQ(dp.n_c, bf.n_c);
    expect_valid_path(dp, n, m);
    double sum = 0;
    for (std::size_t i = 0; i < n; ++i) sum += dp.per_trace_distance[i];
    EXPECT_GE(sum, 0.0);
  }
}

TEST(Dtw, MonotonePathProperty) {
  Rng rng(7);
  for (int rep = 0; rep < 50; ++rep) {
    const auto n = 2 + rng.below(40), m = 2 + rng.below(40);
    const auto a = align(random_points(rng, n, 100), random_points(rng, m, 100));
    expect_valid_path(a, n, m);
  }
}

TEST(Dtw, Errors) {
  EXPECT_ERRC(align({{0, 0}}, {{0, 0}, {1, 1}}), Errc::TooFewPoints);
  EXPECT_ERRC(align({{0, 0}, {NAN, 0}}, {{0, 0}, {1, 1}}), Errc::TooFewPoints);
  std::vector<Point2> seven(7, Point2{0, 0});
  EXPECT_ERRC(brute_force_dtw(seven, {{0, 0}}), Errc::TooLarge);
  EXPECT_EQ(brute_force_dtw({{1, 1}, {2, 2}, {3, 3}}, {{1, 1}, {2, 2}, {3, 3}}).total_cost, 0.0);
}

TEST(TaskPerformance, HalfTemplateUnitOffset) {
  std::vector<Point2> templ, trace;
  for (int i = 0; i < 20; ++i) templ.push_back({10.0 * i, 0.0});
  for (int i = 0; i < 10; ++i) trace.push_back({10.0 * i, 1.0});
  const auto tp = task_performance(trace, templ);
  EXPECT_NEAR(tp.value, 0.5, 1e-9);
  EXPECT_EQ(tp.n_c, 10u);
  EXPECT_DOUBLE_EQ(tp.mean_distance, 1.0);

  // same construction at brute-force size
  const std::vector<Point2> t6 = {{0, 0}, {10, 0}, {20, 0}, {30, 0}, {40, 0}, {50, 0}};
  const std::vector<Point2> tr3 = {{0, 1}, {10, 1}, {20, 1}};
  const auto bf = brute_force_dtw(tr3, t6);
  EXPECT_EQ(bf.n_c, 3u);
  EXPECT_EQ(bf.total_cost, 3.0);
  EXPECT_NEAR(task_performance(tr3, t6).value, 0.5, 1e-9);
}

TEST(TaskPerformance, FullCoverageDistanceTwo) {
  std::vector<Point2> templ, trace;
  for (int i = 0; i < 15; ++i) {
    templ.push_back({10.0 * i, 0.0});
    trace.push_back({10.0 * i, 2.0});
  }
  const auto tp = task_performance(trace, templ);
  EXPECT_DOUBLE_EQ(tp.fraction_matched, 1.0);
  EXPECT_DOUBLE_EQ(tp.value, 0.5);
}

TEST(TaskPerformance, PerfectSentinel) {
  std::vector<Point2> p = {{0, 0}, {5, 5}, {10, 0}};
  const auto tp = task_performance(p, p);
  EXPECT_TRUE(tp.perfect);
  EXPECT_TRUE(std::isinf(tp.value));
}

TEST(TaskPerformance, TranslationInvariant) {
  Rng rng(3);
  for (int rep = 0; rep < 20; ++rep) {
    auto a = random_points(rng, 12, 50), b = random_points(rng, 15, 50);
    const auto base = task_performance(a, b);
    for (auto* v : {&a, &b})
      for (auto& p : *v) {
        p.x += 64.0;
        p.y -= 32.0;
      }
    const auto moved = task_performance(a, b);
    EXPECT_EQ(moved.n_c, base.n_c);
    EXPECT_NEAR(moved.value, base.value, 1e-9 * base.value);
  }
}

TEST(TaskPerformance, LargerDistancesLowerValue) {
  std::vector<Point2> templ;
  for (int i = 0; i < 20; ++i) templ.push_back({10.0 * i, 0.0});
  double prev = INFINITY;
  for (double off : {0.5, 1.0, 2.0, 3.0, 4.0}) {
    std::vector<Point2> trace;
    for (int i = 0; i < 20; ++i) trace.push_back({10.0 * i, off});
    const double v = task_performance(trace, templ).value;
    EXPECT_LT(v, prev);
    prev = v;
  }
}
