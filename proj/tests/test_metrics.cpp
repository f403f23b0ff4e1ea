#include <gtest/gtest.h>

#include <cmath>

#include "fairsel/error.hpp"
#include "fairsel/metrics.hpp"
#include "support.hpp"

using namespace fairsel;

namespace {

constexpr Group A = Group::A;
constexpr Group B = Group::B;

EvalReport report_with_error(double e) {
  EvalReport r;
  r.test_error = e;
  return r;
}

}  // namespace

TEST(TestError, Examples) {
  EXPECT_EQ(test_error(std::vector<int>{1, 0, 1}, std::vector<int>{1, 0, 1}), 0.0);
  EXPECT_EQ(test_error(std::vector<int>{1, 0, 1, 1}, std::vector<int>{1, 0, 1, 0}), 0.25);
  EXPECT_THROW(test_error(std::vector<int>{}, std::vector<int>{}), Error);
  EXPECT_THROW(test_error(std::vector<int>{1}, std::vector<int>{1, 0}), Error);
}

TEST(TestError, BruteForceRecount) {
  rng::Engine e(3);
  std::vector<int> p(200), y(200);
  int wrong = 0;
  for (std::size_t i = 0; i < 200; ++i) {
    p[i] = static_cast<int>(e.below(2));
    y[i] = static_cast<int>(e.below(2));
    wrong += p[i] != y[i];
  }
  EXPECT_DOUBLE_EQ(test_error(p, y), wrong / 200.0);
}

TEST(Deo, HandTally) {
  // A: 5 positives, 4 predicted positive. B: 4 positives, 2 predicted positive.
  const std::vector<int> y{1, 1, 1, 1, 1, 1, 1, 1, 1};
  const std::vector<int> p{1, 1, 1, 1, 0, 1, 1, 0, 0};
  const std::vector<Group> g{A, A, A, A, A, B, B, B, B};
  EXPECT_NEAR(deo(p, y, g), 0.3, 1e-15);
  EXPECT_EQ(deo(y, y, g), 0.0);
  const std::vector<int> same{1, 0, 1, 0};
  EXPECT_EQ(deo(same, std::vector<int>{1, 1, 1, 1}, std::vector<Group>{A, A, B, B}), 0.0);
}

TEST(Deo, GroupWithoutPositivesIsUndefined) {
  try {
    deo(std::vector<int>{1, 0}, std::vector<int>{1, 0}, std::vector<Group>{A, B});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::UndefinedMetric);
  }
}

TEST(DpDistance, Examples) {
  const std::vector<Group> g{A, A, B, B};
  EXPECT_EQ(dp_distance(std::vector<int>{1, 0, 0, 1}, g), 0.0);
  EXPECT_EQ(dp_distance(std::vector<int>{1, 1, 1, 1}, g), 0.0);
  std::vector<int> p;
  std::vector<Group> gg;
  for (int i = 0; i < 10; ++i) {
    p.push_back(i < 5);
    gg.push_back(A);
  }
  for (int i = 0; i < 10; ++i) {
    p.push_back(i < 4);
    gg.push_back(B);
  }
  EXPECT_NEAR(dp_distance(p, gg), 0.1, 1e-15);
  EXPECT_NEAR(p_percent(p, gg).value, 0.8, 1e-15);
  EXPECT_THROW(dp_distance(std::vector<int>{1}, std::vector<Group>{A}), Error);
}

TEST(PPercent, Examples) {
  const std::vector<Group> g{A, A, B, B};
  const PPercent eq = p_percent(std::vector<int>{1, 0, 0, 1}, g);
  EXPECT_EQ(eq.value, 1.0);
  EXPECT_FALSE(eq.degenerate);
  const PPercent zero = p_percent(std::vector<int>{1, 1, 0, 0}, g);
  EXPECT_EQ(zero.value, 0.0);
  EXPECT_TRUE(zero.degenerate);
}

TEST(Metrics, PermutationAndGroupSwapInvariance) {
  rng::Engine e(5);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 20 + e.below(100);
    std::vector<int> p(n), y(n);
    std::vector<Group> g(n);
    for (std::size_t i = 0; i < n; ++i) {
      p[i] = static_cast<int>(e.below(2));
      y[i] = static_cast<int>(e.below(2));
      g[i] = i % 2 ? A : B;
    }
    y[0] = y[1] = 1;
    auto perm = fairsel::testing::iota(n);
    e.shuffle(std::span<std::size_t>(perm));
    std::vector<int> pp(n), yy(n);
    std::vector<Group> gg(n), swapped(n);
    for (std::size_t i = 0; i < n; ++i) {
      pp[i] = p[perm[i]];
      yy[i] = y[perm[i]];
      gg[i] = g[perm[i]];
      swapped[i] = g[i] == A ? B : A;
    }
    EXPECT_DOUBLE_EQ(test_error(p, y), test_error(pp, yy));
    EXPECT_DOUBLE_EQ(deo(p, y, g), deo(pp, yy, gg));
    EXPECT_DOUBLE_EQ(dp_distance(p, g), dp_distance(pp, gg));
    EXPECT_DOUBLE_EQ(deo(p, y, g), deo(p, y, swapped));
    EXPECT_DOUBLE_EQ(dp_distance(p, g), dp_distance(p, swapped));
    const PPercent pc = p_percent(p, g);
    EXPECT_GE(pc.value, 0.0);
    EXPECT_LE(pc.value, 1.0);
    EXPECT_DOUBLE_EQ(pc.value, p_percent(p, swapped).value);
    EXPECT_EQ(pc.value == 1.0, !pc.degenerate && dp_distance(p, g) == 0.0);
  }
}

TEST(DetectionScores, Examples) {
  // Rows 1, 2, 3 flipped.
  const Dataset d = fairsel::testing::make_dataset(Matrix(5, 1), {A, A, B, B, A}, {0, 1, 0, 1, 0},
                                                   std::vector<int>{0, 0, 1, 0, 0});
  const std::vector<std::size_t> exact{1, 2, 3};
  EXPECT_EQ(detection_scores(exact, d).precision, 1.0);
  EXPECT_EQ(detection_scores(exact, d).recall, 1.0);
  const DetectionScores none = detection_scores(std::vector<std::size_t>{}, d);
  EXPECT_EQ(none.precision, 1.0);
  EXPECT_EQ(none.recall, 0.0);
  const DetectionScores partial = detection_scores(std::vector<std::size_t>{2, 3, 4}, d);
  EXPECT_NEAR(partial.precision, 2.0 / 3.0, 1e-15);
  EXPECT_NEAR(partial.recall, 2.0 / 3.0, 1e-15);
  Dataset clean = d;
  clean.true_label = clean.observed_label;
  EXPECT_EQ(detection_scores(std::vector<std::size_t>{0}, clean).recall, 1.0);
  clean.true_label.reset();
  EXPECT_THROW(detection_scores(exact, clean), Error);
}

TEST(Evaluate, UsesTrueLabelsWhenPresent) {
  const Dataset d = fairsel::testing::make_dataset(Matrix(4, 1), {A, A, B, B}, {0, 0, 0, 0},
                                                   std::vector<int>{1, 0, 1, 0});
  const std::vector<int> pred{1, 0, 1, 0};
  const EvalReport r = evaluate(pred, d);
  EXPECT_EQ(r.test_error, 0.0);
  EXPECT_EQ(r.reference, LabelReference::TrueLabel);
  Dataset observed = d;
  observed.true_label.reset();
  const EvalReport o = evaluate(pred, observed);
  EXPECT_EQ(o.test_error, 0.5);
  EXPECT_EQ(o.reference, LabelReference::ObservedLabel);
  EXPECT_FALSE(o.deo.has_value());
}

TEST(Aggregate, Examples) {
  const std::vector<EvalReport> one{report_with_error(0.3)};
  const AggregateReport single = aggregate(one);
  EXPECT_EQ(single.trial_count, 1u);
  EXPECT_EQ(single.metrics.at("test_error").stddev, 0.0);
  const std::vector<EvalReport> two{report_with_error(0.2), report_with_error(0.4)};
  EXPECT_NEAR(aggregate(two).metrics.at("test_error").mean, 0.3, 1e-15);
  EXPECT_THROW(aggregate(std::vector<EvalReport>{}), Error);
}

TEST(Aggregate, BruteForceRecomputation) {
  rng::Engine e(8);
  std::vector<EvalReport> reports(10);
  std::vector<double> deos;
  for (std::size_t i = 0; i < 10; ++i) {
    reports[i].test_error = e.uniform();
    reports[i].dp_distance = e.uniform();
    if (i % 3) {
      reports[i].deo = e.uniform();
      deos.push_back(*reports[i].deo);
    }
  }
  const AggregateReport agg = aggregate(reports);
  double mean = 0.0;
  for (const auto& r : reports) mean += r.test_error;
  mean /= 10.0;
  double ss = 0.0;
  for (const auto& r : reports) ss += (r.test_error - mean) * (r.test_error - mean);
  EXPECT_NEAR(agg.metrics.at("test_error").mean, mean, 1e-14);
  EXPECT_NEAR(agg.metrics.at("test_error").stddev, std::sqrt(ss / 9.0), 1e-14);
  EXPECT_EQ(agg.metrics.at("deo").count, deos.size());
  EXPECT_FALSE(agg.metrics.count("detection_recall"));
}

TEST(EvalReportJson, RoundTrip) {
  EvalReport r;
  r.test_error = 0.125;
  r.deo = 0.03;
  r.dp_distance = 0.2;
  r.p_percent = 0.7;
  r.detection_recall = 0.9;
  r.group_rates.tpr_a = 0.8;
  const EvalReport back = eval_report_from_json(nlohmann::json::parse(to_json(r).dump()));
  EXPECT_EQ(back.test_error, r.test_error);
  EXPECT_EQ(back.deo, r.deo);
  EXPECT_EQ(back.detection_recall, r.detection_recall);
  EXPECT_FALSE(back.detection_precision.has_value());
  EXPECT_EQ(back.group_rates.tpr_a, r.group_rates.tpr_a);
}
