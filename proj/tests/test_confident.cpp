#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fairsel/confident.hpp"
#include "fairsel/error.hpp"
#include "support.hpp"

using namespace fairsel;

namespace {

ConfidenceMatrix conf_of(std::initializer_list<std::initializer_list<double>> rows) {
  const std::size_t k = rows.begin()->size();
  Matrix m(rows.size(), k);
  std::size_t r = 0;
  for (const auto& row : rows) {
    std::size_t c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return {m, "test"};
}

const double kInf = std::numeric_limits<double>::infinity();

}  // namespace

TEST(SelfConfidence, DirectLookup) {
  const auto c = conf_of({{0.7, 0.3}, {0.7, 0.3}});
  EXPECT_EQ(self_confidence(c, std::vector<int>{0, 1}), (std::vector<double>{0.7, 0.3}));
  const auto u = conf_of({{0.25, 0.25, 0.25, 0.25}, {0.25, 0.25, 0.25, 0.25}});
  for (double v : self_confidence(u, std::vector<int>{3, 1})) EXPECT_EQ(v, 0.25);
  EXPECT_THROW(self_confidence(c, std::vector<int>{0, 2}), Error);
}

TEST(Psi, Values) {
  EXPECT_EQ(psi(0.0), 0.0);
  EXPECT_NEAR(psi(1.0), 0.9162907318741551, 1e-15);
  EXPECT_NEAR(psi(0.5), 0.4855078157817008, 1e-15);
  EXPECT_THROW(psi(-0.1), Error);
}

TEST(Psi, BoundsAndMonotoneOnGridAndRandomPoints) {
  double previous = psi(0.0);
  for (int i = 1; i <= 100000; ++i) {
    const double x = 10.0 * i / 100000.0;
    const double v = psi(x);
    ASSERT_GE(v, previous);
    ASSERT_LE(std::log1p(x), v);
    ASSERT_LE(v, x);
    previous = v;
  }
  rng::Engine e(1);
  for (int i = 0; i < 10000; ++i) {
    const double x = e.uniform() < 0.5 ? e.uniform() : std::exp(e.uniform(-30.0, 10.0));
    const double y = x + std::abs(e.uniform(-1.0, 1.0)) * x;
    const double v = psi(x);
    ASSERT_LE(std::log1p(x), v) << x;
    ASSERT_LE(v, x) << x;
    ASSERT_LE(v, psi(y)) << x << " " << y;
  }
}

TEST(MeanThresholds, Arithmetic) {
  const auto c = conf_of({{0.8, 0.2}, {0.6, 0.4}, {0.1, 0.9}});
  const auto t = mean_thresholds(c, std::vector<int>{0, 0, 1});
  EXPECT_NEAR(t[0], 0.7, 1e-15);
  EXPECT_NEAR(t[1], 0.9, 1e-15);
}

TEST(MeanThresholds, BruteForceOracleAndEmptyClass) {
  rng::Engine e(4);
  const Matrix p = fairsel::testing::random_probs(e, 1000, 4);
  std::vector<int> y(1000);
  for (int& v : y) v = static_cast<int>(e.below(3));  // class 3 never observed
  const auto t = mean_thresholds({p, "x"}, y);
  for (int j = 0; j < 3; ++j) {
    double sum = 0.0;
    int count = 0;
    for (std::size_t n = 0; n < y.size(); ++n)
      if (y[n] == j) {
        sum += p(n, static_cast<std::size_t>(j));
        ++count;
      }
    EXPECT_NEAR(t[static_cast<std::size_t>(j)], sum / count, 1e-12);
  }
  EXPECT_EQ(t[3], kInf);
}

TEST(TruncatedThresholds, Values) {
  const auto c = conf_of({{0.8, 0.2}, {0.6, 0.4}, {1.0, 0.0}});
  const auto t = truncated_thresholds(c, std::vector<int>{0, 0, 1});
  EXPECT_NEAR(t[0], 0.6640147264939575, 1e-15);
  EXPECT_EQ(t[1], 0.0);
}

TEST(ConcentrationMargin, Values) {
  EXPECT_NEAR(concentration_margin(0.01, 100, 60.0), 0.016669445790684675, 1e-15);
  EXPECT_NEAR(concentration_margin(0.1, 1000, 600.0), 0.16669444920154866, 1e-15);
  EXPECT_NEAR(concentration_margin(1e-12, 100, 60.0), 1e-12 * 100.0 / 60.0, 1e-20);
  double previous = kInf;
  for (double nu : {1e-1, 1e-2, 1e-3, 1e-4, 1e-6}) {
    const double m = concentration_margin(nu, 100, 60.0);
    EXPECT_GT(m, 0.0);
    EXPECT_LT(m, previous);
    previous = m;
  }
}

TEST(ConcentrationMargin, DegenerateWhenSelectionNotAboveNu) {
  try {
    concentration_margin(2.0, 100, 2.0);
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::DegenerateThreshold);
  }
  EXPECT_THROW(concentration_margin(5.0, 100, 1.0), Error);
}

TEST(TruncatedMeanBound, MatchesPrintedForm) {
  // nu (N + nu log(1/eps) / N^2) / (N - nu) with nu = 1/12, N = 100, eps = 1/200.
  EXPECT_NEAR(truncated_mean_bound(1.0 / 12.0, 100, 1.0 / 200.0), 0.0834028725209714, 1e-15);
}

TEST(AdjustedThresholds, Values) {
  const double margin = 0.016669445790684675;
  const auto mu = adjusted_thresholds(std::vector<double>{0.6640147264939575, 0.5}, margin);
  EXPECT_NEAR(mu[0], 0.6473452807032729, 1e-15);
  EXPECT_NEAR(mu[1], 0.4833305542093153, 1e-15);
  const std::vector<double> tt{0.3, 0.7};
  EXPECT_EQ(adjusted_thresholds(tt, 0.0), tt);
  EXPECT_EQ(adjusted_thresholds(std::vector<double>{kInf}, 0.2)[0], kInf);
}

TEST(AdjustedThresholds, NegativeThresholdAdmitsEveryInstance) {
  const auto mu = adjusted_thresholds(std::vector<double>{0.01, kInf}, 0.16669444920154866);
  EXPECT_NEAR(mu[0], -0.15669444920154866, 1e-15);
  const auto c = conf_of({{0.0, 1.0}, {1e-9, 1.0 - 1e-9}, {0.5, 0.5}});
  const auto z = infer_true_labels(c, mu, std::vector<int>{1, 1, 1});
  for (const auto& v : z) EXPECT_EQ(v, 0);
}

TEST(ThresholdOrdering, HoldsOnRandomMatrices) {
  rng::Engine e(7);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + static_cast<int>(e.below(4));
    const std::size_t n = 1 + e.below(300);
    const Matrix p = fairsel::testing::random_probs(e, n, k);
    std::vector<int> y(n);
    for (int& v : y) v = static_cast<int>(e.below(static_cast<std::uint64_t>(k)));
    const double nu = std::pow(10.0, e.uniform(-4.0, -1.0));
    const double fraction = e.uniform(0.5, 1.0);
    if (fraction * static_cast<double>(n) <= nu) continue;
    const ThresholdSet t = compute_thresholds({p, "r"}, y, nu, fraction);
    for (int j = 0; j < k; ++j) {
      const auto i = static_cast<std::size_t>(j);
      ASSERT_LE(t.adjusted[i], t.truncated[i]);
      ASSERT_LE(t.truncated[i], t.mean[i]);
    }
    EXPECT_DOUBLE_EQ(t.epsilon, 1.0 / (2.0 * static_cast<double>(n)));
    EXPECT_DOUBLE_EQ(t.n_select, fraction * static_cast<double>(n));
  }
}

TEST(InferTrueLabels, Examples) {
  const std::vector<int> y{1};
  EXPECT_EQ(infer_true_labels(conf_of({{0.9, 0.1}}), std::vector<double>{0.5, 0.5}, y)[0], 0);
  EXPECT_FALSE(infer_true_labels(conf_of({{0.4, 0.6}}), std::vector<double>{0.5, 0.7}, y)[0].has_value());
  EXPECT_EQ(infer_true_labels(conf_of({{0.55, 0.45}}), std::vector<double>{0.5, 0.4}, y)[0], 0);
}

TEST(InferTrueLabels, RestrictedArgmaxAndTies) {
  // Class 0 is more probable but below its threshold, so class 1 wins.
  EXPECT_EQ(infer_true_labels(conf_of({{0.6, 0.4}}), std::vector<double>{0.7, 0.3}, std::vector<int>{0})[0], 1);
  // Exact tie: observed label first, then lowest index.
  const auto tie = conf_of({{0.5, 0.5}, {0.5, 0.5}});
  const auto z = infer_true_labels(tie, std::vector<double>{0.1, 0.1}, std::vector<int>{1, 0});
  EXPECT_EQ(z[0], 1);
  EXPECT_EQ(z[1], 0);
  const auto three = conf_of({{0.4, 0.4, 0.2}});
  EXPECT_EQ(infer_true_labels(three, std::vector<double>{0.1, 0.1, 0.1}, std::vector<int>{2})[0], 0);
  // Infinite threshold never admits.
  EXPECT_EQ(infer_true_labels(conf_of({{0.99, 0.01}}), std::vector<double>{kInf, 0.0}, std::vector<int>{0})[0], 1);
}

TEST(InferTrueLabels, LoweringThresholdsNeverShrinksCandidates) {
  rng::Engine e(9);
  for (int trial = 0; trial < 200; ++trial) {
    const Matrix p = fairsel::testing::random_probs(e, 200, 3);
    std::vector<int> y(200);
    for (int& v : y) v = static_cast<int>(e.below(3));
    const ThresholdSet t = compute_thresholds({p, "r"}, y, 0.01, 0.6);
    const auto with_tt = infer_true_labels({p, "r"}, t.truncated, y);
    const auto with_mu = infer_true_labels({p, "r"}, t.adjusted, y);
    for (std::size_t n = 0; n < 200; ++n) {
      if (with_tt[n]) ASSERT_TRUE(with_mu[n].has_value());
      for (std::size_t j = 0; j < 3; ++j)
        if (p(n, j) >= t.truncated[j]) ASSERT_GE(p(n, j), t.adjusted[j]);
    }
  }
}

TEST(CountMatrix, Tally) {
  const std::vector<InferredLabel> z{0, 0, 1};
  const CountMatrix c = count_matrix(std::vector<int>{1, 0, 1}, z, 2);
  EXPECT_EQ(c.counts, (std::vector<std::size_t>{1, 0, 1, 1}));
  EXPECT_EQ(c.unassigned, 0u);
  const std::vector<InferredLabel> none(3);
  const CountMatrix e = count_matrix(std::vector<int>{1, 0, 1}, none, 2);
  EXPECT_EQ(e.total(), 0u);
  EXPECT_EQ(e.unassigned, 3u);
}

TEST(CountMatrix, RowIsObservedColumnIsInferred) {
  // 40 instances labeled 1 that should have been 0 land in C[1][0].
  std::vector<int> y(40, 1);
  std::vector<InferredLabel> z(40, 0);
  const CountMatrix c = count_matrix(y, z, 2);
  EXPECT_EQ(c.at(1, 0), 40u);
  EXPECT_EQ(c.at(0, 1), 0u);
}

TEST(ConfidentJoint, HandComputation) {
  CountMatrix c{2, {30, 10, 5, 25}, 0};
  const Matrix cj = confident_joint(c, std::vector<std::size_t>{45, 35});
  EXPECT_NEAR(cj(0, 0), 33.75, 1e-12);
  EXPECT_NEAR(cj(0, 1), 11.25, 1e-12);
  EXPECT_NEAR(cj(1, 0), 5.833333333333333, 1e-12);
  EXPECT_NEAR(cj(1, 1), 29.166666666666668, 1e-12);
  const Matrix q = joint_distribution(cj);
  EXPECT_NEAR(q(0, 0), 0.421875, 1e-12);
  EXPECT_NEAR(q(0, 1), 0.140625, 1e-12);
  EXPECT_NEAR(q(1, 0), 0.07291666666666666, 1e-12);
  EXPECT_NEAR(q(1, 1), 0.36458333333333337, 1e-12);
}

TEST(ConfidentJoint, ZeroRowStaysZero) {
  CountMatrix c{2, {0, 0, 3, 1}, 0};
  const Matrix cj = confident_joint(c, std::vector<std::size_t>{12, 8});
  EXPECT_EQ(cj(0, 0), 0.0);
  EXPECT_EQ(cj(0, 1), 0.0);
  EXPECT_DOUBLE_EQ(cj(1, 0) + cj(1, 1), 8.0);
}

TEST(ConfidentJoint, CalibrationAndNormalizationOnRandomCounts) {
  rng::Engine e(2);
  for (int trial = 0; trial < 1000; ++trial) {
    const int k = 2 + static_cast<int>(e.below(4));
    CountMatrix c{k, std::vector<std::size_t>(static_cast<std::size_t>(k * k)), 0};
    for (auto& v : c.counts) v = e.below(3) == 0 ? 0 : e.below(200);
    std::vector<std::size_t> sizes(static_cast<std::size_t>(k));
    for (auto& s : sizes) s = 1 + e.below(500);
    const Matrix cj = confident_joint(c, sizes);
    double total = 0.0;
    for (int j = 0; j < k; ++j) {
      double row = 0.0, count_row = 0.0;
      for (int i = 0; i < k; ++i) {
        row += cj(static_cast<std::size_t>(j), static_cast<std::size_t>(i));
        count_row += static_cast<double>(c.at(j, i));
      }
      if (count_row > 0)
        ASSERT_NEAR(row, static_cast<double>(sizes[static_cast<std::size_t>(j)]), 1e-9);
      else
        ASSERT_EQ(row, 0.0);
      total += row;
    }
    if (total == 0.0) {
      EXPECT_THROW(joint_distribution(cj), Error);
      continue;
    }
    const Matrix q = joint_distribution(cj);
    double qsum = 0.0;
    for (double v : q.values()) qsum += v;
    ASSERT_NEAR(qsum, 1.0, 1e-9);
  }
}

TEST(JointDistribution, DiagonalStructurePreserved) {
  CountMatrix c{2, {10, 0, 0, 4}, 0};
  const Matrix q = joint_distribution(confident_joint(c, std::vector<std::size_t>{30, 10}));
  EXPECT_DOUBLE_EQ(q(0, 0), 0.75);
  EXPECT_DOUBLE_EQ(q(1, 1), 0.25);
  EXPECT_EQ(q(0, 1), 0.0);
  EXPECT_EQ(q(1, 0), 0.0);
  try {
    joint_distribution(Matrix(2, 2));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.kind(), ErrorKind::EmptyInput);
  }
}

TEST(EstimateJoint, SerializesAllParts) {
  const std::vector<InferredLabel> z{0, 0, 1, std::nullopt};
  const JointEstimate est = estimate_joint(std::vector<int>{1, 0, 1, 0}, z, 2);
  EXPECT_EQ(est.per_class_sizes, (std::vector<std::size_t>{2, 2}));
  EXPECT_EQ(est.unassigned, 1u);
  const auto j = to_json(est);
  for (const char* key : {"count", "confident_joint", "joint_distribution", "unassigned"}) EXPECT_TRUE(j.contains(key));
  const std::vector<InferredLabel> none(2);
  EXPECT_NO_THROW(estimate_joint(std::vector<int>{0, 1}, none, 2));
}

TEST(OffDiagonal, Examples) {
  const std::vector<int> y{1, 0, 1};
  const std::vector<InferredLabel> z{0, 0, 1};
  const SelectionOutcome s = off_diagonal(y, z);
  EXPECT_EQ(s.off_diagonal, (std::vector<std::size_t>{0}));
  EXPECT_EQ(s.kept, (std::vector<std::size_t>{1, 2}));
  const std::vector<InferredLabel> same{1, 0, 1};
  EXPECT_TRUE(off_diagonal(y, same).off_diagonal.empty());
  const std::vector<InferredLabel> none(3);
  const SelectionOutcome u = off_diagonal(y, none);
  EXPECT_TRUE(u.off_diagonal.empty());
  EXPECT_EQ(u.kept, (std::vector<std::size_t>{0, 1, 2}));
}

TEST(Purity, SameInputsSameOutputs) {
  rng::Engine e(5);
  const Matrix p = fairsel::testing::random_probs(e, 50, 2);
  std::vector<int> y(50);
  for (int& v : y) v = static_cast<int>(e.below(2));
  const ThresholdSet a = compute_thresholds({p, "r"}, y, 0.01, 0.6);
  const ThresholdSet b = compute_thresholds({p, "r"}, y, 0.01, 0.6);
  EXPECT_EQ(a.adjusted, b.adjusted);
  EXPECT_EQ(infer_true_labels({p, "r"}, a.adjusted, y), infer_true_labels({p, "r"}, b.adjusted, y));
}

TEST(TruncatedMean, MonteCarloBoundHoldsForBernoulliHalf) {
  // Bernoulli(1/2) on {0, 1}: mean 1/2, variance 1/4.
  constexpr std::size_t n = 100;
  constexpr int trials = 10000;
  const double eps = 1.0 / (2.0 * n);
  const double bound = truncated_mean_bound(0.25, n, eps);
  rng::Engine e(2718);
  int held = 0;
  for (int t = 0; t < trials; ++t) {
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += psi(e.uniform() < 0.5 ? 1.0 : 0.0);
    held += std::abs(sum / n - 0.5) <= bound;
  }
  EXPECT_GE(static_cast<double>(held) / trials, 1.0 - 2.0 * eps);
}
