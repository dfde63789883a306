// Copyright 2026 The milpilot Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     https://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <gtest/gtest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <set>

#include "milpilot/error.hpp"
#include "milpilot/eval/metrics.hpp"
#include "milpilot/eval/splits.hpp"
#include "milpilot/random.hpp"

namespace milpilot {
namespace {

// Pairwise oracle: fraction of (positive, negative) pairs ordered correctly, ties half.
double PairwiseAuroc(const std::vector<double>& scores, const std::vector<int>& positive) {
  double wins = 0.0;
  double pairs = 0.0;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (!positive[i]) continue;
    for (std::size_t j = 0; j < scores.size(); ++j) {
      if (positive[j]) continue;
      pairs += 1.0;
      wins += scores[i] > scores[j] ? 1.0 : (scores[i] == scores[j] ? 0.5 : 0.0);
    }
  }
  return wins / pairs;
}

// Step-sum oracle: walk distinct thresholds from high to low.
double StepSumAp(const std::vector<double>& scores, const std::vector<int>& positive) {
  std::set<double, std::greater<>> thresholds(scores.begin(), scores.end());
  double total_pos = 0.0;
  for (int p : positive) total_pos += p;
  double ap = 0.0;
  double prev_recall = 0.0;
  for (double t : thresholds) {
    double tp = 0.0, predicted = 0.0;
    for (std::size_t i = 0; i < scores.size(); ++i) {
      if (scores[i] >= t) {
        predicted += 1.0;
        tp += positive[i];
      }
    }
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / predicted);
    prev_recall = recall;
  }
  return ap;
}

ProbMatrix Probs(std::initializer_list<std::initializer_list<double>> rows) {
  ProbMatrix m(static_cast<Eigen::Index>(rows.size()),
               static_cast<Eigen::Index>(rows.begin()->size()));
  Eigen::Index r = 0;
  for (const auto& row : rows) {
    Eigen::Index c = 0;
    for (double v : row) m(r, c++) = v;
    ++r;
  }
  return m;
}

ProbMatrix BinaryProbs(const std::vector<double>& scores) {
  ProbMatrix m(static_cast<Eigen::Index>(scores.size()), 2);
  for (std::size_t i = 0; i < scores.size(); ++i) {
    m(static_cast<Eigen::Index>(i), 1) = scores[i];
    m(static_cast<Eigen::Index>(i), 0) = 1.0 - scores[i];
  }
  return m;
}

TEST(Auroc, WorkedExamples) {
  EXPECT_DOUBLE_EQ(BinaryAuroc(std::vector<double>{0.1, 0.4, 0.35, 0.8},
                               std::vector<int>{0, 0, 1, 1}),
                   0.75);
  EXPECT_DOUBLE_EQ(BinaryAuroc(std::vector<double>{0.1, 0.2, 0.8, 0.9},
                               std::vector<int>{0, 0, 1, 1}),
                   1.0);
  EXPECT_DOUBLE_EQ(BinaryAuroc(std::vector<double>(6, 0.3), std::vector<int>{0, 1, 0, 1, 1, 0}),
                   0.5);
}

TEST(Auroc, MatchesPairwiseOracleOnRandomInstances) {
  SplitMix64 rng(2024);
  for (int instance = 0; instance < 200; ++instance) {
    const std::size_t n = 2 + rng.NextBelow(29);
    const std::size_t classes = 2 + rng.NextBelow(3);
    ProbMatrix probs(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(classes));
    std::vector<int> labels(n);
    for (std::size_t i = 0; i < n; ++i) {
      labels[i] = static_cast<int>(i < classes ? i % classes : rng.NextBelow(classes));
      double total = 0.0;
      for (std::size_t c = 0; c < classes; ++c) {
        // Coarse values force ties.
        const double v = 1.0 + static_cast<double>(rng.NextBelow(5));
        probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c)) = v;
        total += v;
      }
      probs.row(static_cast<Eigen::Index>(i)) /= total;
    }
    double oracle = 0.0;
    std::size_t contributing = 0;
    for (std::size_t c = 0; c < classes; ++c) {
      std::vector<double> scores(n);
      std::vector<int> positive(n);
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = probs(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(c));
        positive[i] = labels[i] == static_cast<int>(c) ? 1 : 0;
      }
      const int pos = std::count(positive.begin(), positive.end(), 1);
      if (pos == 0 || pos == static_cast<int>(n)) continue;
      oracle += PairwiseAuroc(scores, positive);
      ++contributing;
      EXPECT_NEAR(BinaryAuroc(scores, positive), PairwiseAuroc(scores, positive), 1e-12);
    }
    if (classes == 2) {
      // Binary AUROC is reported on the positive-class column only.
      std::vector<double> scores(n);
      std::vector<int> positive(n);
      for (std::size_t i = 0; i < n; ++i) {
        scores[i] = probs(static_cast<Eigen::Index>(i), 1);
        positive[i] = labels[i] == 1;
      }
      EXPECT_NEAR(AurocMacro(probs, labels), PairwiseAuroc(scores, positive), 1e-12);
    } else {
      EXPECT_NEAR(AurocMacro(probs, labels), oracle / static_cast<double>(contributing), 1e-12);
    }
  }
}

TEST(Auroc, UndefinedWhenOnlyOneClassPresent) {
  try {
    AurocMacro(BinaryProbs({0.1, 0.7}), std::vector<int>{1, 1});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::kUndefinedMetric);
  }
}

TEST(Auroc, AbsentClassIsSkipped) {
  const ProbMatrix probs = Probs({{0.7, 0.2, 0.1}, {0.1, 0.8, 0.1}, {0.6, 0.3, 0.1}});
  const MetricSet m = ComputeMetrics(probs, std::vector<int>{0, 1, 0});
  EXPECT_EQ(m.skipped_classes, std::vector<int>{2});
  EXPECT_DOUBLE_EQ(m.auroc, 1.0);
}

TEST(AveragePrecision, WorkedExamples) {
  EXPECT_DOUBLE_EQ(BinaryAveragePrecision(std::vector<double>{0.9, 0.8, 0.2, 0.1},
                                          std::vector<int>{1, 1, 0, 0}),
                   1.0);
  EXPECT_DOUBLE_EQ(BinaryAveragePrecision(std::vector<double>{0.9, 0.8, 0.7, 0.1},
                                          std::vector<int>{0, 0, 0, 1}),
                   0.25);
}

TEST(AveragePrecision, MatchesStepSumOracle) {
  SplitMix64 rng(77);
  for (int instance = 0; instance < 200; ++instance) {
    std::vector<double> scores(20);
    std::vector<int> positive(20);
    for (std::size_t i = 0; i < 20; ++i) {
      scores[i] = static_cast<double>(rng.NextBelow(8)) / 8.0;
      positive[i] = rng.NextBernoulli(0.4) ? 1 : 0;
    }
    positive[0] = 1;
    positive[1] = 0;
    EXPECT_NEAR(BinaryAveragePrecision(scores, positive), StepSumAp(scores, positive), 1e-12);
  }
}

TEST(ArgmaxMetrics, AllCorrect) {
  const ProbMatrix probs = Probs({{0.9, 0.1}, {0.2, 0.8}, {0.6, 0.4}});
  const ArgmaxMetrics m = ComputeArgmaxMetrics(probs, std::vector<int>{0, 1, 0});
  EXPECT_EQ(m.accuracy, 1.0);
  EXPECT_EQ(m.balanced_accuracy, 1.0);
  EXPECT_EQ(m.macro_f1, 1.0);
  EXPECT_EQ(m.macro_precision, 1.0);
}

TEST(ArgmaxMetrics, DegenerateMajorityPredictor) {
  ProbMatrix probs(100, 2);
  std::vector<int> labels(100, 0);
  for (int i = 0; i < 100; ++i) {
    probs(i, 0) = 0.8;
    probs(i, 1) = 0.2;
    if (i >= 90) labels[i] = 1;
  }
  const ArgmaxMetrics m = ComputeArgmaxMetrics(probs, labels);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.9);
  EXPECT_DOUBLE_EQ(m.balanced_accuracy, 0.5);
}

TEST(ArgmaxMetrics, BinaryConfusion) {
  // TP=3, FP=1, FN=1, TN=5 for class 1.
  std::vector<int> labels{1, 1, 1, 0, 1, 0, 0, 0, 0, 0};
  std::vector<int> predicted{1, 1, 1, 1, 0, 0, 0, 0, 0, 0};
  ProbMatrix probs(10, 2);
  for (int i = 0; i < 10; ++i) {
    probs(i, 1) = predicted[i] ? 0.9 : 0.1;
    probs(i, 0) = 1.0 - probs(i, 1);
  }
  const ArgmaxMetrics m = ComputeArgmaxMetrics(probs, labels);
  // Class 0: precision 5/6, recall 5/6, F1 5/6.
  EXPECT_NEAR(m.macro_precision, (0.75 + 5.0 / 6.0) / 2.0, 1e-12);
  EXPECT_NEAR(m.balanced_accuracy, (0.75 + 5.0 / 6.0) / 2.0, 1e-12);
  EXPECT_NEAR(m.macro_f1, (0.75 + 5.0 / 6.0) / 2.0, 1e-12);
  EXPECT_DOUBLE_EQ(m.accuracy, 0.8);
}

TEST(ArgmaxMetrics, TiesGoToLowestIndex) {
  const ProbMatrix probs = Probs({{0.5, 0.5}, {0.5, 0.5}});
  const ArgmaxMetrics m = ComputeArgmaxMetrics(probs, std::vector<int>{0, 1});
  EXPECT_DOUBLE_EQ(m.accuracy, 0.5);
  EXPECT_DOUBLE_EQ(m.balanced_accuracy, 0.5);
}

TEST(ArgmaxMetrics, NeverPredictedClassHasZeroF1) {
  const ProbMatrix probs = Probs({{0.9, 0.1}, {0.8, 0.2}});
  const ArgmaxMetrics m = ComputeArgmaxMetrics(probs, std::vector<int>{0, 1});
  // Class 0: precision 0.5, recall 1, F1 2/3. Class 1: F1 0.
  EXPECT_NEAR(m.macro_f1, (2.0 / 3.0) / 2.0, 1e-12);
  EXPECT_NEAR(m.macro_precision, 0.25, 1e-12);
}

TEST(Metrics, PermutationInvariant) {
  SplitMix64 rng(5);
  ProbMatrix probs(24, 3);
  std::vector<int> labels(24);
  for (int i = 0; i < 24; ++i) {
    labels[i] = i % 3;
    for (int c = 0; c < 3; ++c) probs(i, c) = rng.NextDouble();
    probs.row(i) /= probs.row(i).sum();
  }
  const MetricSet a = ComputeMetrics(probs, labels);
  std::vector<std::size_t> order(24);
  for (std::size_t i = 0; i < 24; ++i) order[i] = i;
  Shuffle(order, rng);
  ProbMatrix shuffled(24, 3);
  std::vector<int> shuffled_labels(24);
  for (std::size_t i = 0; i < 24; ++i) {
    shuffled.row(static_cast<Eigen::Index>(i)) = probs.row(static_cast<Eigen::Index>(order[i]));
    shuffled_labels[i] = labels[order[i]];
  }
  const MetricSet b = ComputeMetrics(shuffled, shuffled_labels);
  for (const char* name : kMetricNames) EXPECT_NEAR(a.Get(name), b.Get(name), 1e-12) << name;
}

TEST(Metrics, AurocInvariantUnderClassDuplication) {
  const std::vector<double> scores{0.2, 0.6, 0.4, 0.9, 0.1, 0.6};
  const std::vector<int> positive{0, 1, 0, 1, 0, 0};
  std::vector<double> doubled = scores;
  std::vector<int> doubled_pos = positive;
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (positive[i]) {
      doubled.push_back(scores[i]);
      doubled_pos.push_back(1);
    }
  }
  EXPECT_NEAR(BinaryAuroc(scores, positive), BinaryAuroc(doubled, doubled_pos), 1e-12);
}

TEST(Metrics, JsonRoundTripAndLookup) {
  MetricSet m;
  m.auroc = 0.9;
  m.macro_f1 = 0.7;
  const MetricSet back = MetricSet::FromJson(m.ToJson());
  EXPECT_EQ(back.Get("auroc"), 0.9);
  EXPECT_EQ(back.Get("macro_f1"), 0.7);
  EXPECT_THROW(m.Get("nope"), Error);
}

TEST(Metrics, FoldSummaryUsesSampleStd) {
  const FoldSummary s = SummarizeFolds(std::vector<double>{0.8, 0.9, 0.85, 0.9, 0.8});
  EXPECT_NEAR(s.mean, 0.85, 1e-12);
  EXPECT_NEAR(s.stddev, 0.05, 1e-12);
}

// ---- splits ----

std::vector<int> Balanced(std::size_t per_class, std::size_t classes) {
  std::vector<int> labels;
  for (std::size_t i = 0; i < per_class * classes; ++i) labels.push_back(static_cast<int>(i % classes));
  return labels;
}

std::map<int, std::size_t> CountByClass(const std::vector<std::size_t>& idx,
                                        const std::vector<int>& labels) {
  std::map<int, std::size_t> counts;
  for (std::size_t i : idx) ++counts[labels[i]];
  return counts;
}

void ExpectPartition(const SplitAssignment& s, std::size_t n) {
  std::vector<std::size_t> all = s.train;
  all.insert(all.end(), s.val.begin(), s.val.end());
  all.insert(all.end(), s.test.begin(), s.test.end());
  std::sort(all.begin(), all.end());
  ASSERT_EQ(all.size(), n);
  for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(all[i], i);
}

TEST(Splits, HundredPerClassIsThreeWay) {
  const auto labels = Balanced(100, 2);
  const SplitAssignment s = StratifiedSplit(labels, 7);
  EXPECT_EQ(s.policy_applied, SplitPolicy::kThreeWay);
  EXPECT_EQ(SplitPolicyName(s.policy_applied), "three_way");
  for (int c = 0; c < 2; ++c) {
    EXPECT_EQ(CountByClass(s.test, labels)[c], 15u);
    EXPECT_EQ(CountByClass(s.val, labels)[c], 15u);
    EXPECT_EQ(CountByClass(s.train, labels)[c], 70u);
  }
  ExpectPartition(s, labels.size());
}

TEST(Splits, ThirtyPerClassFallsBack) {
  const auto labels = Balanced(30, 2);
  const SplitAssignment s = StratifiedSplit(labels, 7);
  EXPECT_EQ(s.policy_applied, SplitPolicy::kTwoWayFallback);
  EXPECT_EQ(SplitPolicyName(s.policy_applied), "two_way_fallback");
  EXPECT_TRUE(s.test.empty());
  for (int c = 0; c < 2; ++c) {
    EXPECT_EQ(CountByClass(s.train, labels)[c], 24u);
    EXPECT_EQ(CountByClass(s.val, labels)[c], 6u);
  }
  ExpectPartition(s, labels.size());
}

TEST(Splits, FallbackWhenAnyClassIsSmall) {
  std::vector<int> labels = Balanced(100, 2);
  // Class 2 with 33 members: floor(0.15 * 33) = 4.
  labels.insert(labels.end(), 33, 2);
  EXPECT_EQ(StratifiedSplit(labels, 1).policy_applied, SplitPolicy::kTwoWayFallback);
  labels.push_back(2);
  labels.push_back(2);
  labels.push_back(2);
  // 36 members: floor(5.4) = 5.
  EXPECT_EQ(StratifiedSplit(labels, 1).policy_applied, SplitPolicy::kThreeWay);
}

TEST(Splits, DeterministicPerSeed) {
  const auto labels = Balanced(40, 3);
  const auto a = StratifiedSplit(labels, 9);
  const auto b = StratifiedSplit(labels, 9);
  const auto c = StratifiedSplit(labels, 10);
  EXPECT_EQ(a.train, b.train);
  EXPECT_EQ(a.val, b.val);
  EXPECT_EQ(a.test, b.test);
  EXPECT_NE(a.val, c.val);
}

TEST(Splits, EmptyClassIsError) {
  EXPECT_THROW(StratifiedSplit(std::vector<int>{}, 1), Error);
}

TEST(KFold, TenPerClassFiveFolds) {
  const auto labels = Balanced(10, 2);
  const auto folds = StratifiedKFold(labels, 5, 3);
  ASSERT_EQ(folds.size(), 5u);
  std::vector<int> seen(labels.size(), 0);
  for (const Fold& fold : folds) {
    EXPECT_EQ(CountByClass(fold.val, labels)[0], 2u);
    EXPECT_EQ(CountByClass(fold.val, labels)[1], 2u);
    EXPECT_EQ(fold.train.size() + fold.val.size(), labels.size());
    for (std::size_t i : fold.val) ++seen[i];
  }
  for (int s : seen) EXPECT_EQ(s, 1);
}

TEST(KFold, UnevenClassesStayWithinOne) {
  std::vector<int> labels;
  labels.insert(labels.end(), 23, 0);
  labels.insert(labels.end(), 11, 1);
  labels.insert(labels.end(), 7, 2);
  const auto folds = StratifiedKFold(labels, 5, 8);
  const double n[] = {23, 11, 7};
  for (const Fold& fold : folds) {
    auto counts = CountByClass(fold.val, labels);
    for (int c = 0; c < 3; ++c) EXPECT_LE(std::abs(counts[c] - n[c] / 5.0), 1.0);
    std::set<std::size_t> train(fold.train.begin(), fold.train.end());
    for (std::size_t i : fold.val) EXPECT_EQ(train.count(i), 0u);
  }
}

TEST(KFold, ClassSmallerThanKIsError) {
  std::vector<int> labels{0, 0, 0, 0, 0, 1, 1, 1, 1};
  EXPECT_THROW(StratifiedKFold(labels, 5, 1), Error);
  EXPECT_THROW(StratifiedKFold(Balanced(10, 2), 1, 1), Error);
}

}  // namespace
}  // namespace milpilot
