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

#include "milpilot/eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "milpilot/error.hpp"

namespace milpilot {

namespace {

void CheckShapes(const ProbMatrix& probs, std::span<const int> labels) {
  Require(probs.rows() >= 1, ErrorCode::kValidation, "metrics need at least one sample");
  Require(static_cast<std::size_t>(probs.rows()) == labels.size(), ErrorCode::kShape,
          "probability rows and labels differ in length");
  for (int y : labels) {
    Require(y >= 0 && y < probs.cols(), ErrorCode::kValidation, "label outside class range");
  }
}

template <typename PerClass>
double MacroOverClasses(const ProbMatrix& probs, std::span<const int> labels,
                        PerClass per_class) {
  CheckShapes(probs, labels);
  double sum = 0.0;
  int contributing = 0;
  std::vector<double> scores(labels.size());
  std::vector<int> positive(labels.size());
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    std::size_t pos = 0;
    for (std::size_t i = 0; i < labels.size(); ++i) {
      scores[i] = probs(static_cast<Eigen::Index>(i), c);
      positive[i] = labels[i] == c ? 1 : 0;
      pos += positive[i];
    }
    if (pos == 0 || pos == labels.size()) continue;
    sum += per_class(scores, positive);
    ++contributing;
  }
  Require(contributing > 0, ErrorCode::kUndefinedMetric,
          "no class has both positive and negative samples");
  return sum / contributing;
}

}  // namespace

double BinaryAuroc(std::span<const double> scores, std::span<const int> positive) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] < scores[b]; });
  double positive_rank_sum = 0.0;
  double n_pos = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    // Ranks are 1-based; a tie group shares the mean of its ranks.
    const double mid_rank = 0.5 * static_cast<double>(i + 1 + j);
    for (std::size_t t = i; t < j; ++t) {
      if (positive[order[t]]) {
        positive_rank_sum += mid_rank;
        n_pos += 1.0;
      }
    }
    i = j;
  }
  const double n_neg = static_cast<double>(n) - n_pos;
  Require(n_pos > 0 && n_neg > 0, ErrorCode::kUndefinedMetric,
          "AUROC needs positives and negatives");
  return (positive_rank_sum - n_pos * (n_pos + 1.0) / 2.0) / (n_pos * n_neg);
}

double BinaryAveragePrecision(std::span<const double> scores, std::span<const int> positive) {
  const std::size_t n = scores.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return scores[a] > scores[b]; });
  const double total_pos = static_cast<double>(std::count(positive.begin(), positive.end(), 1));
  Require(total_pos > 0, ErrorCode::kUndefinedMetric, "average precision needs positives");
  double tp = 0.0, fp = 0.0, prev_recall = 0.0, ap = 0.0;
  for (std::size_t i = 0; i < n;) {
    std::size_t j = i;
    while (j < n && scores[order[j]] == scores[order[i]]) ++j;
    for (std::size_t t = i; t < j; ++t) (positive[order[t]] ? tp : fp) += 1.0;
    const double recall = tp / total_pos;
    ap += (recall - prev_recall) * (tp / (tp + fp));
    prev_recall = recall;
    i = j;
  }
  return ap;
}

double AurocMacro(const ProbMatrix& probs, std::span<const int> labels) {
  return MacroOverClasses(probs, labels, [](const auto& s, const auto& p) {
    return BinaryAuroc(s, p);
  });
}

double AveragePrecisionMacro(const ProbMatrix& probs, std::span<const int> labels) {
  return MacroOverClasses(probs, labels, [](const auto& s, const auto& p) {
    return BinaryAveragePrecision(s, p);
  });
}

ArgmaxMetrics ComputeArgmaxMetrics(const ProbMatrix& probs, std::span<const int> labels) {
  CheckShapes(probs, labels);
  const auto classes = static_cast<std::size_t>(probs.cols());
  std::vector<double> tp(classes, 0), predicted(classes, 0), support(classes, 0);
  double correct = 0.0;
  for (std::size_t i = 0; i < labels.size(); ++i) {
    Eigen::Index pred = 0;
    for (Eigen::Index c = 1; c < probs.cols(); ++c) {
      if (probs(static_cast<Eigen::Index>(i), c) > probs(static_cast<Eigen::Index>(i), pred)) {
        pred = c;
      }
    }
    predicted[pred] += 1;
    support[labels[i]] += 1;
    if (pred == labels[i]) {
      tp[pred] += 1;
      correct += 1;
    }
  }
  ArgmaxMetrics m;
  int present = 0;
  for (std::size_t c = 0; c < classes; ++c) {
    if (support[c] == 0) continue;
    ++present;
    const double recall = tp[c] / support[c];
    const double precision = predicted[c] > 0 ? tp[c] / predicted[c] : 0.0;
    const double f1 = precision + recall > 0 ? 2 * precision * recall / (precision + recall) : 0.0;
    m.balanced_accuracy += recall;
    m.macro_precision += precision;
    m.macro_f1 += f1;
  }
  m.balanced_accuracy /= present;
  m.macro_precision /= present;
  m.macro_f1 /= present;
  m.accuracy = correct / static_cast<double>(labels.size());
  return m;
}

MetricSet ComputeMetrics(const ProbMatrix& probs, std::span<const int> labels) {
  MetricSet m;
  m.auroc = AurocMacro(probs, labels);
  m.pr_auc = AveragePrecisionMacro(probs, labels);
  const ArgmaxMetrics a = ComputeArgmaxMetrics(probs, labels);
  m.balanced_accuracy = a.balanced_accuracy;
  m.macro_f1 = a.macro_f1;
  m.macro_precision = a.macro_precision;
  m.accuracy = a.accuracy;
  for (Eigen::Index c = 0; c < probs.cols(); ++c) {
    if (std::find(labels.begin(), labels.end(), static_cast<int>(c)) == labels.end()) {
      m.skipped_classes.push_back(static_cast<int>(c));
    }
  }
  return m;
}

Json MetricSet::ToJson() const {
  Json json = {{"auroc", auroc},
               {"pr_auc", pr_auc},
               {"balanced_accuracy", balanced_accuracy},
               {"macro_f1", macro_f1},
               {"macro_precision", macro_precision},
               {"accuracy", accuracy}};
  if (!skipped_classes.empty()) json["skipped_classes"] = skipped_classes;
  return json;
}

MetricSet MetricSet::FromJson(const Json& json) {
  MetricSet m;
  m.auroc = json.at("auroc").get<double>();
  m.pr_auc = json.at("pr_auc").get<double>();
  m.balanced_accuracy = json.at("balanced_accuracy").get<double>();
  m.macro_f1 = json.at("macro_f1").get<double>();
  m.macro_precision = json.at("macro_precision").get<double>();
  m.accuracy = json.at("accuracy").get<double>();
  if (json.contains("skipped_classes")) {
    m.skipped_classes = json["skipped_classes"].get<std::vector<int>>();
  }
  return m;
}

double MetricSet::Get(const std::string& name) const {
  if (name == "auroc") return auroc;
  if (name == "pr_auc") return pr_auc;
  if (name == "balanced_accuracy") return balanced_accuracy;
  if (name == "macro_f1") return macro_f1;
  if (name == "macro_precision") return macro_precision;
  if (name == "accuracy") return accuracy;
  Fail(ErrorCode::kConfiguration, "unknown metric '" + name + "'");
}

FoldSummary SummarizeFolds(std::span<const double> values) {
  Require(!values.empty(), ErrorCode::kValidation, "no fold values to summarize");
  FoldSummary s;
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / static_cast<double>(values.size());
  if (values.size() > 1) {
    double ss = 0.0;
    for (double v : values) ss += (v - s.mean) * (v - s.mean);
    s.stddev = std::sqrt(ss / static_cast<double>(values.size() - 1));
  }
  return s;
}

}  // namespace milpilot
