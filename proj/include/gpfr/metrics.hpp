#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "gpfr/nn/tensor.hpp"

namespace gpfr::eval {

struct AccuracyReport {
  double overall = 0.0;
  std::map<int, double> per_class;          // keyed by true class
  std::map<int, std::size_t> per_class_count;
};

// UsageError on empty or unequal inputs.
AccuracyReport accuracy(std::span<const int> predicted, std::span<const int> truth);

// Item indices by descending score; equal scores keep ascending index.
std::vector<std::size_t> rank_by_score(std::span<const float> scores);

// Non-interpolated AP: mean of precision@k over the ranks k of relevant
// items. 0 when nothing is relevant.
double average_precision(std::span<const std::uint8_t> relevance) noexcept;

struct PrPoint {
  double recall = 0.0;
  double precision = 0.0;
};
// One point per rank; all-zero recall when nothing is relevant.
std::vector<PrPoint> pr_curve(std::span<const std::uint8_t> relevance);
// Trapezoids over recall from the first rank with positive recall, with the
// curve extended flat to recall 0.
double trapezoid_auc(std::span<const PrPoint> curve) noexcept;

struct ClassRetrieval {
  int label = 0;
  double ap = 0.0;
  std::size_t relevant = 0;   // 0 marks a class excluded from mAP
};

struct RetrievalReport {
  std::vector<ClassRetrieval> classes;
  double map = 0.0;                // mean AP over classes with a relevant item
  std::size_t excluded = 0;
};

// Relevance of each ranked item for column c of a score matrix.
std::vector<std::uint8_t> ranked_relevance(const nn::Tensor<float>& scores, std::size_t column,
                                           std::span<const int> truth, int label);

// Column j of scores ranks every test item for classes[j].
RetrievalReport retrieval(const nn::Tensor<float>& scores, std::span<const int> classes, std::span<const int> truth,
                          std::size_t threads = 1);

// Mean over the classes with relevant items; 0 when there are none.
double mean_average_precision(std::span<const ClassRetrieval> classes) noexcept;

// class,rank,recall,precision
std::string pr_curves_csv(const nn::Tensor<float>& scores, std::span<const int> classes, std::span<const int> truth);

// Best k item indices per column, in rank order.
std::vector<std::vector<std::size_t>> top_k(const nn::Tensor<float>& scores, std::size_t k);

}  // namespace gpfr::eval
