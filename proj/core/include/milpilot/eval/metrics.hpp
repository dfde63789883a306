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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "milpilot/json_io.hpp"

namespace milpilot {

// Row-major N x C probability matrix.
using ProbMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

struct MetricSet {
  double auroc = 0.0;
  double pr_auc = 0.0;
  double balanced_accuracy = 0.0;
  double macro_f1 = 0.0;
  double macro_precision = 0.0;
  double accuracy = 0.0;
  // Class indices left out of macro means because the split lacks them.
  std::vector<int> skipped_classes;

  Json ToJson() const;
  static MetricSet FromJson(const Json& json);
  // Value by EpochMetrics field name ("auroc", "pr_auc", ...).
  double Get(const std::string& name) const;
};

inline constexpr const char* kMetricNames[] = {"auroc",    "pr_auc",          "balanced_accuracy",
                                               "macro_f1", "macro_precision", "accuracy"};

// One-vs-rest AUROC from mid-ranks, averaged over classes that have both
// positives and negatives. Throws kUndefinedMetric if no class qualifies.
double AurocMacro(const ProbMatrix& probs, std::span<const int> labels);

// Binary AUROC of scores against 0/1 targets (mid-rank ties).
double BinaryAuroc(std::span<const double> scores, std::span<const int> positive);

// Average precision with tied scores processed as one group.
double AveragePrecisionMacro(const ProbMatrix& probs, std::span<const int> labels);
double BinaryAveragePrecision(std::span<const double> scores, std::span<const int> positive);

struct ArgmaxMetrics {
  double balanced_accuracy = 0.0;
  double macro_f1 = 0.0;
  double macro_precision = 0.0;
  double accuracy = 0.0;
};

// Predictions by row argmax (ties to the lowest class index).
ArgmaxMetrics ComputeArgmaxMetrics(const ProbMatrix& probs, std::span<const int> labels);

MetricSet ComputeMetrics(const ProbMatrix& probs, std::span<const int> labels);

struct FoldSummary {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
};

FoldSummary SummarizeFolds(std::span<const double> values);

}  // namespace milpilot
